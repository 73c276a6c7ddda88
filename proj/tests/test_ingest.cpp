#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "multicred/embedding.hpp"
#include "multicred/features.hpp"
#include "multicred/ingest.hpp"
#include "multicred/model_io.hpp"

using namespace multicred;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    explicit TempDir(const std::string& name) : path_(fs::temp_directory_path() / ("multicred_" + name)) {
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

std::vector<UserRecord> three_users() {
    std::vector<UserRecord> out;
    for (int i = 0; i < 3; ++i) {
        UserRecord r;
        r.user_id = "u" + std::to_string(i);
        r.profile.name = "Name " + std::to_string(i);
        r.profile.screen_name = "screen" + std::to_string(i);
        if (i != 1) r.profile.location = "Town";
        if (i == 2) r.profile.description = "caf\xc3\xa9 \"quoted\" text";
        r.profile.followers_count = 10 * i;
        r.profile.friends_count = 3;
        r.profile.created_at = *parse_timestamp("2012-02-29T23:59:59Z");
        r.profile.verified = i == 0;
        for (int t = 0; t < i + 1; ++t) {
            Tweet tw;
            tw.created_at = *parse_timestamp("Wed Oct 10 20:19:24 +0000 2018");
            tw.text = "tweet " + std::to_string(t) + " #tag @who http://x.y";
            tw.hashtag_count = 1;
            tw.mention_count = 1;
            tw.url_count = 1;
            tw.retweet_count = t;
            tw.has_poll = t == 1;
            r.tweets.push_back(tw);
        }
        r.comments = {{"nice"}, {"awful, really"}};
        r.score = i == 1 ? std::optional<double>() : std::optional<double>(12.5 * (i + 1));
        out.push_back(r);
    }
    return out;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    f << text;
}

}  // namespace

TEST(Dataset, WriteThenLoadRoundTrips) {
    TempDir dir("roundtrip");
    const auto users = three_users();
    const auto manifest = write_dataset(users, dir.path());
    EXPECT_EQ(manifest.user_ids, (std::vector<std::string>{"u0", "u1", "u2"}));
    EXPECT_TRUE(manifest.labels_present);
    const auto loaded = load_dataset(dir.path());
    EXPECT_EQ(loaded.records, users);
    EXPECT_EQ(loaded.manifest, manifest);
    EXPECT_TRUE(loaded.issues.empty());
}

TEST(Dataset, WriteReplacesPreviousContents) {
    TempDir dir("replace");
    write_dataset(three_users(), dir.path());
    auto one = three_users();
    one.resize(1);
    one[0].score.reset();
    const auto manifest = write_dataset(one, dir.path());
    EXPECT_FALSE(manifest.labels_present);
    EXPECT_FALSE(fs::exists(dir.path() / "labels.csv"));
    EXPECT_EQ(load_dataset(dir.path()).records, one);
}

TEST(Dataset, MissingTweetsAndCommentsFilesMeanEmptyLists) {
    TempDir dir("absent");
    write_dataset(three_users(), dir.path());
    fs::remove(dir.path() / "comments" / "u2.json");
    fs::remove(dir.path() / "tweets" / "u2.json");
    const auto loaded = load_dataset(dir.path());
    ASSERT_EQ(loaded.records.size(), 3u);
    EXPECT_TRUE(loaded.records[2].comments.empty());
    EXPECT_TRUE(loaded.records[2].tweets.empty());
}

TEST(Dataset, TruncatedJsonNamesTheFile) {
    TempDir dir("truncated");
    write_dataset(three_users(), dir.path());
    const auto bad = dir.path() / "tweets" / "u1.json";
    const auto text = read_text_file(bad);
    write_file(bad, text.substr(0, text.size() / 2));
    try {
        load_dataset(dir.path());
        FAIL() << "expected DatasetError";
    } catch (const DatasetError& e) {
        ASSERT_EQ(e.issues().size(), 1u);
        EXPECT_EQ(e.issues()[0].kind, LoadIssue::Kind::malformed_json);
        EXPECT_EQ(e.issues()[0].user_id, "u1");
        EXPECT_NE(std::string(e.what()).find(bad.string()), std::string::npos) << e.what();
    }
    const auto lenient = load_dataset_lenient(dir.path());
    EXPECT_EQ(lenient.manifest.user_ids, (std::vector<std::string>{"u0", "u2"}));
}

TEST(Dataset, MissingProfileNamesTheUser) {
    TempDir dir("noprofile");
    write_dataset(three_users(), dir.path());
    fs::remove(dir.path() / "profiles" / "u0.json");
    try {
        load_dataset(dir.path());
        FAIL() << "expected DatasetError";
    } catch (const DatasetError& e) {
        ASSERT_EQ(e.issues().size(), 1u);
        EXPECT_EQ(e.issues()[0].kind, LoadIssue::Kind::missing_file);
        EXPECT_NE(std::string(e.what()).find("user u0"), std::string::npos) << e.what();
    }
}

TEST(Dataset, AllFailuresAreReportedTogether) {
    TempDir dir("many");
    write_dataset(three_users(), dir.path());
    write_file(dir.path() / "profiles" / "u0.json", "{");
    write_file(dir.path() / "comments" / "u2.json", "[{\"text\": 5}]");
    try {
        load_dataset(dir.path());
        FAIL() << "expected DatasetError";
    } catch (const DatasetError& e) {
        EXPECT_EQ(e.issues().size(), 2u);
        EXPECT_NE(std::string(e.what()).find("2 user(s)"), std::string::npos);
    }
}

TEST(Dataset, InvalidRecordIsReported) {
    TempDir dir("invalid");
    auto users = three_users();
    users[0].profile.followers_count = -4;
    write_dataset(users, dir.path());
    const auto r = load_dataset_lenient(dir.path());
    ASSERT_EQ(r.issues.size(), 1u);
    EXPECT_EQ(r.issues[0].kind, LoadIssue::Kind::invalid_record);
    EXPECT_NE(r.issues[0].message.find("followers_count"), std::string::npos) << r.issues[0].message;
}

TEST(Dataset, IoFailures) {
    TempDir dir("io");
    const auto file = dir.path() / "plain.txt";
    write_file(file, "x");
    EXPECT_THROW(write_dataset(three_users(), file / "sub"), IoError);
    EXPECT_THROW(load_dataset(dir.path() / "missing"), IoError);
    EXPECT_THROW(load_dataset(dir.path()), IoError);
}

TEST(Dataset, RejectsUnusableIds) {
    TempDir dir("ids");
    auto users = three_users();
    users[1].user_id = "a/b";
    EXPECT_THROW(write_dataset(users, dir.path()), DomainError);
    users[1].user_id = "u0";
    EXPECT_THROW(write_dataset(users, dir.path()), DomainError);
    EXPECT_TRUE(write_dataset({}, dir.path()).user_ids.empty());
}

TEST(Dataset, TweetReaderAcceptsEntityArraysAndFullText) {
    const auto j = nlohmann::json::parse(R"({
        "created_at": "2021-05-06T07:08:09Z", "full_text": "long text",
        "entities": {"hashtags": [{"text": "a"}, {"text": "b"}], "user_mentions": [], "urls": 3}
    })");
    const auto t = tweet_from_json(j);
    EXPECT_EQ(t.text, "long text");
    EXPECT_EQ(t.hashtag_count, 2);
    EXPECT_EQ(t.mention_count, 0);
    EXPECT_EQ(t.url_count, 3);
}

TEST(Synthetic, ClassCountsFavourCredibleClasses) {
    EXPECT_EQ(synthetic_class_counts(400, 4), (std::vector<std::size_t>{48, 64, 96, 192}));
    for (int c : {4, 6, 8, 10}) {
        const auto counts = synthetic_class_counts(1000, c);
        EXPECT_EQ(std::accumulate(counts.begin(), counts.end(), std::size_t{0}), 1000u);
        for (std::size_t i = 1; i < counts.size(); ++i) EXPECT_LE(counts[i - 1], counts[i]);
    }
}

TEST(Synthetic, ValidRecordsWithScoresInPlantedBins) {
    SyntheticConfig cfg;
    cfg.num_users = 300;
    cfg.num_classes = 6;
    cfg.seed = 4;
    const auto users = generate_synthetic(cfg);
    ASSERT_EQ(users.size(), 300u);
    const ClassificationSystem system(6);
    std::vector<std::size_t> counts(6);
    for (const auto& u : users) {
        ASSERT_TRUE(validate_record(u).empty()) << u.user_id;
        ASSERT_TRUE(u.score.has_value());
        EXPECT_EQ(u.tweets.size(), 5u);
        EXPECT_EQ(u.comments.size(), 5u);
        ++counts[static_cast<std::size_t>(bin_score(*u.score, system))];
    }
    EXPECT_EQ(counts, synthetic_class_counts(300, 6));
}

TEST(Synthetic, DeterministicBytesOnDisk) {
    SyntheticConfig cfg;
    cfg.num_users = 20;
    cfg.seed = 9;
    TempDir a("gen_a"), b("gen_b");
    write_dataset(generate_synthetic(cfg), a.path());
    write_dataset(generate_synthetic(cfg), b.path());
    for (const char* rel : {"labels.csv", "profiles/user0003.json", "tweets/user0007.json", "comments/user0019.json"}) {
        EXPECT_EQ(read_text_file(a.path() / rel), read_text_file(b.path() / rel)) << rel;
    }
    cfg.seed = 10;
    EXPECT_NE(generate_synthetic(cfg), generate_synthetic(SyntheticConfig{20, 4, 5, 5, 1.0, 9}));
}

TEST(Synthetic, ConfigValidation) {
    SyntheticConfig cfg;
    cfg.num_classes = 5;
    EXPECT_THROW(generate_synthetic(cfg), DomainError);
    cfg = {};
    cfg.class_separation = 1.5;
    EXPECT_THROW(generate_synthetic(cfg), DomainError);
    cfg = {};
    cfg.num_users = 0;
    EXPECT_THROW(generate_synthetic(cfg), DomainError);
}

TEST(Synthetic, ZeroSeparationMakesFeaturesClassIndependent) {
    SyntheticConfig cfg;
    cfg.num_users = 40000;
    cfg.tweets_per_user = 1;
    cfg.comments_per_user = 1;
    cfg.class_separation = 0.0;
    cfg.seed = 12;
    const auto users = generate_synthetic(cfg);
    const ClassificationSystem system(4);

    constexpr std::size_t dims = kScalarFeatures + kNumEmotions;
    std::vector<std::array<double, dims>> rows;
    std::vector<std::size_t> label;
    for (const auto& u : users) {
        std::array<double, dims> row{};
        const auto p = profile_features(u.profile);
        const auto t = tweet_features(u.tweets[0]);
        const auto s = analyze_sentiment(preprocess(u.comments[0].text));
        std::copy(p.begin(), p.end(), row.begin());
        std::copy(t.begin(), t.end(), row.begin() + kProfileFeatures);
        std::copy(s.begin(), s.end(), row.begin() + kScalarFeatures);
        rows.push_back(row);
        label.push_back(static_cast<std::size_t>(bin_score(*u.score, system)));
    }

    for (std::size_t f = 0; f < dims; ++f) {
        std::array<double, 4> sum{}, n{};
        double all = 0, all_sq = 0;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            sum[label[i]] += rows[i][f];
            n[label[i]] += 1;
            all += rows[i][f];
            all_sq += rows[i][f] * rows[i][f];
        }
        const double mean = all / rows.size();
        const double sd = std::sqrt(std::max(0.0, all_sq / rows.size() - mean * mean));
        if (sd == 0.0) continue;
        for (std::size_t a = 0; a < 4; ++a) {
            for (std::size_t b = a + 1; b < 4; ++b) {
                EXPECT_LT(std::abs(sum[a] / n[a] - sum[b] / n[b]), 0.1 * sd) << "feature " << f;
            }
        }
    }
}
