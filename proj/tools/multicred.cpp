#include <string>
#include <vector>

#include "multicred/cli.hpp"

int main(int argc, char** argv) {
    return multicred::cli::run(std::vector<std::string>(argv, argv + argc));
}
