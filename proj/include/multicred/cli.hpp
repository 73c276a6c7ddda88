#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace multicred::cli {

enum ExitCode : int { kOk = 0, kValidationError = 1, kIoError = 2 };

/// Every knob of every subcommand. Values come from flags first, then from the
/// `--config` JSON file (keys are the long flag names), then these defaults.
struct RunConfig {
    std::filesystem::path input;
    std::filesystem::path out;
    std::filesystem::path prepared;
    std::filesystem::path model;
    std::filesystem::path history;
    std::filesystem::path autoencoder;
    std::filesystem::path config;

    int classes = 4;
    std::uint64_t seed = 0;

    std::size_t users = 400;
    std::size_t tweets = 5;
    std::size_t comments = 5;
    double separation = 1.0;

    std::string embedder = "hash";
    std::string endpoint;
    std::uint64_t hash_seed = 0;
    std::size_t ae_epochs = 15;
    std::size_t ae_batch = 32;
    std::size_t smote_k = 5;

    std::size_t max_epochs = 2000;
    std::size_t patience = 200;
    std::size_t batch_size = 16;

    std::string split = "test";
};

/// `args[0]` is the program name. Results go to `out`, logs and errors to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Uses std::cout and std::cerr.
int run(const std::vector<std::string>& args);

}  // namespace multicred::cli
