#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "multicred/cli.hpp"
#include "multicred/csv.hpp"
#include "multicred/model_io.hpp"

namespace fs = std::filesystem;
using multicred::read_text_file;
using multicred::write_text_file;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "multicred");
    std::ostringstream out, err;
    const int code = multicred::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        root_ = fs::temp_directory_path() / ("multicred_cli_" + std::string(
                                                                   ::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(root_);
        fs::create_directories(root_);
    }
    void TearDown() override { fs::remove_all(root_); }

    std::string path(const std::string& rel) const { return (root_ / rel).string(); }

    fs::path root_;
};

}  // namespace

TEST_F(CliTest, GenerateIsDeterministic) {
    for (const char* dir : {"a", "b"}) {
        const auto r = run_cli({"generate", "--users", "30", "--seed", "5", "--out", path(dir)});
        ASSERT_EQ(r.code, 0) << r.err;
    }
    EXPECT_EQ(read_text_file(path("a/labels.csv")), read_text_file(path("b/labels.csv")));
    EXPECT_EQ(read_text_file(path("a/tweets/user0011.json")), read_text_file(path("b/tweets/user0011.json")));
}

TEST_F(CliTest, ValidationErrorsExitOne) {
    EXPECT_EQ(run_cli({"generate", "--bogus", "1", "--out", path("x")}).code, 1);
    EXPECT_EQ(run_cli({"generate", "--classes", "5", "--out", path("x")}).code, 1);
    EXPECT_EQ(run_cli({"generate", "--users", "abc", "--out", path("x")}).code, 1);
    EXPECT_EQ(run_cli({"generate"}).code, 1);
    EXPECT_EQ(run_cli({}).code, 1);
    EXPECT_EQ(run_cli({"frobnicate"}).code, 1);
    EXPECT_EQ(run_cli({"--help"}).code, 0);
}

TEST_F(CliTest, MissingInputsExitTwo) {
    EXPECT_EQ(run_cli({"prepare", "--input", path("nope"), "--out", path("prep")}).code, 2);
    EXPECT_EQ(run_cli({"train", "--prepared", path("nope")}).code, 2);
    EXPECT_EQ(run_cli({"predict", "--model", path("nope.json"), "--input", path("nope")}).code, 2);
    const auto r = run_cli({"evaluate", "--model", path("nope.json"), "--prepared", path("nope")});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("nope"), std::string::npos) << r.err;
}

TEST_F(CliTest, ConfigFileSuppliesDefaultsAndFlagsWin) {
    write_text_file(path("cfg.json"), R"({"users": 25, "seed": 3, "out": ")" + path("from_config") + R"(", "patience": 7})");
    auto r = run_cli({"generate", "--config", path("cfg.json")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(nlohmann::json::parse(r.out).at("users"), 25);
    EXPECT_TRUE(fs::exists(path("from_config/labels.csv")));

    r = run_cli({"generate", "--config", path("cfg.json"), "--users", "12"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(nlohmann::json::parse(r.out).at("users"), 12);

    write_text_file(path("bad.json"), R"({"userz": 25})");
    EXPECT_EQ(run_cli({"generate", "--config", path("bad.json"), "--out", path("y")}).code, 1);
    write_text_file(path("broken.json"), "{");
    EXPECT_EQ(run_cli({"generate", "--config", path("broken.json"), "--out", path("y")}).code, 2);
}

TEST_F(CliTest, PipelineProducesArtifactsAndPredictions) {
    ASSERT_EQ(run_cli({"generate", "--users", "80", "--seed", "1", "--out", path("data")}).code, 0);
    auto r = run_cli({"prepare", "--input", path("data"), "--out", path("prep"), "--ae-epochs", "2", "--seed", "1"});
    ASSERT_EQ(r.code, 0) << r.err;
    for (const char* f : {"autoencoder.json", "normalization.json", "feature_layout.json", "train.csv",
                          "validation.csv", "test.csv", "prepare.json"}) {
        EXPECT_TRUE(fs::exists(path(std::string("prep/") + f))) << f;
    }
    const auto prep = multicred::read_json_file(path("prep/prepare.json"));
    EXPECT_EQ(prep.at("split").at("train"), 56);
    EXPECT_EQ(prep.at("split").at("test"), 16);
    EXPECT_EQ(prep.at("split").at("validation"), 8);

    r = run_cli({"train", "--prepared", path("prep"), "--max-epochs", "6", "--patience", "3", "--seed", "1"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::exists(path("prep/model.json")));
    const auto history = read_text_file(path("prep/history.csv"));
    EXPECT_EQ(history.rfind("epoch,train_loss,val_accuracy,lr\n", 0), 0u);

    r = run_cli({"evaluate", "--model", path("prep/model.json"), "--prepared", path("prep"), "--out", path("report.json")});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto report = nlohmann::json::parse(r.out);
    EXPECT_EQ(report.at("total"), 16);
    EXPECT_EQ(report, multicred::read_json_file(path("report.json")));

    r = run_cli({"predict", "--model", path("prep/model.json"), "--input", path("data")});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = multicred::csv::lines(r.out);
    ASSERT_GE(rows.size(), 81u);
    EXPECT_EQ(rows[0], "user_id,p_class0,p_class1,p_class2,p_class3,predicted_class");
    for (std::size_t i = 1; i <= 80; ++i) {
        const auto fields = multicred::csv::split_line(rows[i]);
        ASSERT_EQ(fields.size(), 6u);
        double sum = 0;
        for (std::size_t k = 1; k <= 4; ++k) sum += *multicred::csv::parse_double(fields[k]);
        EXPECT_NEAR(sum, 1.0, 1e-9) << rows[i];
    }

    EXPECT_EQ(run_cli({"evaluate", "--model", path("prep/autoencoder.json"), "--prepared", path("prep")}).code, 2);
    EXPECT_EQ(run_cli({"evaluate", "--model", path("prep/model.json"), "--prepared", path("prep"), "--split", "dev"}).code,
              1);
}
