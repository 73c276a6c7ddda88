#include "multicred/ingest.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <numeric>
#include <set>
#include <system_error>

#include "multicred/csv.hpp"
#include "multicred/embedding.hpp"
#include "multicred/model_io.hpp"
#include "multicred/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace multicred {
namespace {

constexpr const char* kLabelsHeader = "user_id,score";

std::string summarize(const std::vector<LoadIssue>& issues) {
    std::string msg = std::to_string(issues.size()) + " user(s) failed to load:";
    for (const auto& i : issues) msg += "\n  " + i.message;
    return msg;
}

std::optional<std::string> opt_string(const json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<std::string>();
}

json opt_to_json(const std::optional<std::string>& v) { return v ? json(*v) : json(nullptr); }

template <typename T>
T value_or(const json& j, const char* key, T fallback) {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    return it->get<T>();
}

Timestamp timestamp_field(const json& j, const char* key) {
    const auto text = j.at(key).get<std::string>();
    const auto t = parse_timestamp(text);
    if (!t) throw ParseError(std::string("field '") + key + "' is not a timestamp: '" + text + "'");
    return *t;
}

// Entity counts may be stored as integers or as the raw entity arrays.
std::int64_t entity_count(const json& entities, const char* key) {
    const auto it = entities.find(key);
    if (it == entities.end() || it->is_null()) return 0;
    if (it->is_array()) return static_cast<std::int64_t>(it->size());
    return it->get<std::int64_t>();
}

bool valid_user_id(const std::string& id) {
    if (id.empty() || id.front() == '.') return false;
    return std::none_of(id.begin(), id.end(), [](char c) {
        return c == '/' || c == '\\' || c == ',' || c == '\n' || c == '\r' || c == '\0';
    });
}

std::set<std::string> json_stems(const fs::path& dir) {
    std::set<std::string> out;
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) return out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") out.insert(entry.path().stem().string());
    }
    return out;
}

struct LabelsFile {
    std::map<std::string, std::optional<double>> scores;
    std::vector<LoadIssue> issues;
};

LabelsFile read_labels(const fs::path& path) {
    LabelsFile out;
    const auto text = read_text_file(path);
    const auto rows = csv::lines(text);
    if (rows.empty() || rows.front() != kLabelsHeader) {
        throw ParseError(path.string() + ": expected header '" + kLabelsHeader + "'");
    }
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].empty()) continue;
        const auto fields = csv::split_line(rows[i]);
        const std::string line_ref = path.string() + ":" + std::to_string(i + 1);
        if (fields.size() != 2) {
            out.issues.push_back({LoadIssue::Kind::invalid_record, {}, path, line_ref + ": expected 2 fields"});
            continue;
        }
        const std::string id(fields[0]);
        if (fields[1].empty()) {
            out.scores[id] = std::nullopt;
            continue;
        }
        const auto score = csv::parse_double(fields[1]);
        if (!score) {
            out.issues.push_back({LoadIssue::Kind::invalid_record, id, path,
                                  line_ref + ": user " + id + ": score '" + std::string(fields[1]) +
                                      "' is not a number"});
            continue;
        }
        out.scores[id] = *score;
    }
    return out;
}

// Everything that can go wrong for one user, reported as a single issue.
struct UserLoad {
    std::optional<UserRecord> record;
    std::optional<LoadIssue> issue;
};

UserLoad load_user(const fs::path& root, const std::string& id, const std::optional<double>& score) {
    const fs::path profile_path = root / "profiles" / (id + ".json");
    const fs::path tweets_path = root / "tweets" / (id + ".json");
    const fs::path comments_path = root / "comments" / (id + ".json");
    std::error_code ec;
    if (!fs::is_regular_file(profile_path, ec)) {
        return {std::nullopt, LoadIssue{LoadIssue::Kind::missing_file, id, profile_path,
                                        "user " + id + ": missing profile file " + profile_path.string()}};
    }

    UserRecord r;
    r.user_id = id;
    r.score = score;
    fs::path current = profile_path;
    try {
        r.profile = profile_from_json(read_json_file(profile_path));
        if (fs::is_regular_file(tweets_path, ec)) {
            current = tweets_path;
            const auto doc = read_json_file(tweets_path);
            if (!doc.is_array()) throw ParseError("expected a JSON array of tweets");
            for (const auto& t : doc) r.tweets.push_back(tweet_from_json(t));
        }
        if (fs::is_regular_file(comments_path, ec)) {
            current = comments_path;
            const auto doc = read_json_file(comments_path);
            if (!doc.is_array()) throw ParseError("expected a JSON array of comments");
            for (const auto& c : doc) r.comments.push_back({c.at("text").get<std::string>()});
        }
    } catch (const ParseError& e) {
        std::string msg = e.what();
        if (msg.find(current.string()) == std::string::npos) msg = current.string() + ": " + msg;
        return {std::nullopt, LoadIssue{LoadIssue::Kind::malformed_json, id, current, "user " + id + ": " + msg}};
    } catch (const json::exception& e) {
        return {std::nullopt, LoadIssue{LoadIssue::Kind::malformed_json, id, current,
                                        "user " + id + ": " + current.string() + ": " + e.what()}};
    }

    const auto problems = validate_record(r);
    if (!problems.empty()) {
        std::string msg = "user " + id + ":";
        for (const auto& p : problems) msg += " " + p + ";";
        msg.pop_back();
        return {std::nullopt, LoadIssue{LoadIssue::Kind::invalid_record, id, profile_path, msg}};
    }
    return {std::move(r), std::nullopt};
}

void ensure_directory(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw IoError("cannot create directory " + dir.string() + (ec ? ": " + ec.message() : ""));
    }
}

void clear_json_files(const fs::path& dir) {
    for (const auto& stem : json_stems(dir)) {
        const auto p = dir / (stem + ".json");
        std::error_code ec;
        fs::remove(p, ec);
        if (ec) throw IoError("cannot remove " + p.string() + ": " + ec.message());
    }
}

}  // namespace

DatasetError::DatasetError(std::vector<LoadIssue> issues) : Error(summarize(issues)), issues_(std::move(issues)) {}

json profile_to_json(const UserProfile& p) {
    return {{"name", p.name},
            {"screen_name", p.screen_name},
            {"location", opt_to_json(p.location)},
            {"description", opt_to_json(p.description)},
            {"url", opt_to_json(p.url)},
            {"protected", p.protected_account},
            {"followers_count", p.followers_count},
            {"friends_count", p.friends_count},
            {"listed_count", p.listed_count},
            {"created_at", format_timestamp(p.created_at)},
            {"favourites_count", p.favourites_count},
            {"geo_enabled", p.geo_enabled},
            {"verified", p.verified},
            {"statuses_count", p.statuses_count},
            {"profile_use_background_image", p.profile_use_background_image}};
}

UserProfile profile_from_json(const json& j) {
    if (!j.is_object()) throw ParseError("profile must be a JSON object");
    UserProfile p;
    p.name = value_or<std::string>(j, "name", "");
    p.screen_name = value_or<std::string>(j, "screen_name", "");
    p.location = opt_string(j, "location");
    p.description = opt_string(j, "description");
    p.url = opt_string(j, "url");
    p.protected_account = value_or(j, "protected", false);
    p.followers_count = value_or<std::int64_t>(j, "followers_count", 0);
    p.friends_count = value_or<std::int64_t>(j, "friends_count", 0);
    p.listed_count = value_or<std::int64_t>(j, "listed_count", 0);
    p.created_at = timestamp_field(j, "created_at");
    p.favourites_count = value_or<std::int64_t>(j, "favourites_count", 0);
    p.geo_enabled = value_or(j, "geo_enabled", false);
    p.verified = value_or(j, "verified", false);
    p.statuses_count = value_or<std::int64_t>(j, "statuses_count", 0);
    p.profile_use_background_image = value_or(j, "profile_use_background_image", false);
    return p;
}

json tweet_to_json(const Tweet& t) {
    return {{"created_at", format_timestamp(t.created_at)},
            {"text", t.text},
            {"truncated", t.truncated},
            {"retweet_count", t.retweet_count},
            {"favorite_count", t.favorite_count},
            {"favorited", t.favorited},
            {"retweeted", t.retweeted},
            {"is_quote_status", t.is_quote_status},
            {"entities",
             {{"hashtags", t.hashtag_count},
              {"user_mentions", t.mention_count},
              {"urls", t.url_count},
              {"symbols", t.symbol_count},
              {"polls", t.has_poll ? 1 : 0}}}};
}

Tweet tweet_from_json(const json& j) {
    if (!j.is_object()) throw ParseError("tweet must be a JSON object");
    Tweet t;
    t.created_at = timestamp_field(j, "created_at");
    if (j.contains("full_text")) {
        t.text = j.at("full_text").get<std::string>();
    } else {
        t.text = value_or<std::string>(j, "text", "");
    }
    t.truncated = value_or(j, "truncated", false);
    t.retweet_count = value_or<std::int64_t>(j, "retweet_count", 0);
    t.favorite_count = value_or<std::int64_t>(j, "favorite_count", 0);
    t.favorited = value_or(j, "favorited", false);
    t.retweeted = value_or(j, "retweeted", false);
    t.is_quote_status = value_or(j, "is_quote_status", false);
    const auto it = j.find("entities");
    std::int64_t polls = entity_count(j, "polls");
    if (it != j.end() && !it->is_null()) {
        t.hashtag_count = entity_count(*it, "hashtags");
        t.mention_count = entity_count(*it, "user_mentions");
        t.url_count = entity_count(*it, "urls");
        t.symbol_count = entity_count(*it, "symbols");
        polls += entity_count(*it, "polls");
    }
    t.has_poll = polls > 0;
    return t;
}

LoadResult load_dataset_lenient(const fs::path& root) {
    std::error_code ec;
    if (!fs::is_directory(root, ec)) throw IoError("dataset root " + root.string() + " is not a directory");
    const fs::path profiles = root / "profiles";
    if (!fs::is_directory(profiles, ec)) throw IoError("missing directory " + profiles.string());

    LoadResult result;
    result.manifest.root = root;

    std::set<std::string> ids = json_stems(profiles);
    for (const auto& id : json_stems(root / "tweets")) ids.insert(id);
    for (const auto& id : json_stems(root / "comments")) ids.insert(id);

    LabelsFile labels;
    const fs::path labels_path = root / "labels.csv";
    if (fs::is_regular_file(labels_path, ec)) {
        labels = read_labels(labels_path);
        result.manifest.labels_present = true;
        for (const auto& [id, score] : labels.scores) ids.insert(id);
        result.issues = std::move(labels.issues);
    }

    const std::vector<std::string> order(ids.begin(), ids.end());
    std::vector<UserLoad> loads(order.size());
    std::vector<std::exception_ptr> failures(order.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(order.size()); ++i) {
        const auto& id = order[static_cast<std::size_t>(i)];
        try {
            const auto it = labels.scores.find(id);
            const std::optional<double> score = it == labels.scores.end() ? std::nullopt : it->second;
            loads[static_cast<std::size_t>(i)] = load_user(root, id, score);
        } catch (...) {
            failures[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (const auto& f : failures) {
        if (f) std::rethrow_exception(f);
    }

    for (std::size_t i = 0; i < order.size(); ++i) {
        if (loads[i].issue) {
            result.issues.push_back(std::move(*loads[i].issue));
        } else {
            result.manifest.user_ids.push_back(order[i]);
            result.records.push_back(std::move(*loads[i].record));
        }
    }
    return result;
}

LoadResult load_dataset(const fs::path& root) {
    auto result = load_dataset_lenient(root);
    if (!result.issues.empty()) throw DatasetError(std::move(result.issues));
    return result;
}

DatasetManifest write_dataset(const std::vector<UserRecord>& records, const fs::path& root) {
    std::vector<const UserRecord*> sorted;
    sorted.reserve(records.size());
    for (const auto& r : records) {
        if (!valid_user_id(r.user_id)) throw DomainError("user id '" + r.user_id + "' cannot be used as a file name");
        sorted.push_back(&r);
    }
    std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->user_id < b->user_id; });
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        if (sorted[i]->user_id == sorted[i - 1]->user_id) {
            throw DomainError("duplicate user id '" + sorted[i]->user_id + "'");
        }
    }

    const std::array<fs::path, 3> dirs = {root / "profiles", root / "tweets", root / "comments"};
    for (const auto& d : dirs) {
        ensure_directory(d);
        clear_json_files(d);
    }
    const fs::path labels_path = root / "labels.csv";
    std::error_code ec;
    fs::remove(labels_path, ec);

    DatasetManifest manifest;
    manifest.root = root;
    std::string labels = std::string(kLabelsHeader) + "\n";
    for (const auto* r : sorted) {
        manifest.user_ids.push_back(r->user_id);
        write_json_file(dirs[0] / (r->user_id + ".json"), profile_to_json(r->profile), 1);

        json tweets = json::array();
        for (const auto& t : r->tweets) tweets.push_back(tweet_to_json(t));
        write_json_file(dirs[1] / (r->user_id + ".json"), tweets, 1);

        json comments = json::array();
        for (const auto& c : r->comments) comments.push_back({{"text", c.text}});
        write_json_file(dirs[2] / (r->user_id + ".json"), comments, 1);

        if (r->score) manifest.labels_present = true;
        labels += r->user_id + "," + (r->score ? csv::format_double(*r->score) : std::string()) + "\n";
    }
    if (manifest.labels_present) write_text_file(labels_path, labels);
    return manifest;
}

// ---------------------------------------------------------------------------
// Synthetic data

namespace {

// Words that carry the tweet-level signal. Neither list overlaps the emotion
// lexicon or the stopwords.
constexpr std::array<std::string_view, 24> kSensationalWords = {
    "breaking", "exposed",  "secret",   "hoax",      "cover",   "banned",   "miracle", "insider",
    "leaked",   "rigged",   "censored", "wake",      "agenda",  "mainstream", "elites", "viral",
    "bombshell", "exclusive", "hidden", "conspiracy", "sheeple", "plandemic", "cure",   "globalists"};

constexpr std::array<std::string_view, 24> kReportingWords = {
    "report",    "according", "study",     "officials", "announced", "data",     "analysis", "research",
    "policy",    "statement", "published", "percent",   "committee", "quarterly", "survey",  "interview",
    "budget",    "council",   "election",  "ministry",  "economists", "court",   "agency",   "quarter"};

constexpr std::array<std::string_view, 16> kFillerWords = {
    "people", "today",  "city",  "week",  "news",   "story",   "time",   "government",
    "world",  "update", "video", "photo", "thread", "country", "market", "community"};

template <std::size_t N>
std::string_view pick(Rng& rng, const std::array<std::string_view, N>& words) {
    return words[rng.index(N)];
}

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

// Linear-scale count with Gaussian noise, floored at zero.
std::int64_t noisy_count(Rng& rng, double mean, double sd) {
    return static_cast<std::int64_t>(std::llround(std::max(0.0, rng.normal(mean, sd))));
}

std::string tag(std::string_view prefix, Rng& rng, std::size_t modulo) {
    return std::string(prefix) + std::to_string(rng.index(modulo));
}

Timestamp make_time(int year, unsigned month, unsigned day, unsigned h, unsigned m, unsigned s) {
    using namespace std::chrono;
    const sys_days d = year_month_day{std::chrono::year(year), std::chrono::month(month), std::chrono::day(day)};
    return d + hours(h) + minutes(m) + seconds(s);
}

Timestamp random_time_in_year(Rng& rng, int year) {
    const auto month = static_cast<unsigned>(1 + rng.index(12));
    const auto day = static_cast<unsigned>(1 + rng.index(28));
    return make_time(year, month, day, static_cast<unsigned>(rng.index(24)), static_cast<unsigned>(rng.index(60)),
                     static_cast<unsigned>(rng.index(60)));
}

struct CriteriaTable {
    std::vector<double> scores;  // indexed by subset mask
    std::vector<int> sizes;
};

const CriteriaTable& criteria_table() {
    static const CriteriaTable table = [] {
        CriteriaTable t;
        for (unsigned mask = 0; mask < (1u << kNumCriteria); ++mask) {
            CriteriaFlags flags{};
            int k = 0;
            for (std::size_t i = 0; i < kNumCriteria; ++i) {
                flags[i] = (mask >> i) & 1u;
                k += flags[i];
            }
            t.scores.push_back(newsguard_score(flags));
            t.sizes.push_back(k);
        }
        return t;
    }();
    return table;
}

// Each criterion holds with probability q; subsets outside the class bin are
// excluded.
struct ScoreSampler {
    std::vector<double> scores;
    std::vector<double> cumulative;

    ScoreSampler(int cls, ClassificationSystem system, double q) {
        const auto& t = criteria_table();
        double total = 0.0;
        for (std::size_t m = 0; m < t.scores.size(); ++m) {
            if (bin_score(t.scores[m], system) != cls) continue;
            total += std::pow(q, t.sizes[m]) * std::pow(1.0 - q, static_cast<int>(kNumCriteria) - t.sizes[m]);
            scores.push_back(t.scores[m]);
            cumulative.push_back(total);
        }
        for (auto& c : cumulative) c /= total;
    }

    double draw(Rng& rng) const {
        const double u = rng.uniform();
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        return scores[std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), scores.size() - 1)];
    }
};

std::string tweet_text(Rng& rng, double u, const Tweet& t) {
    std::string text;
    auto append = [&](std::string_view w) {
        if (!text.empty()) text += ' ';
        text += w;
    };
    const std::size_t words = 6 + rng.index(10);
    for (std::size_t i = 0; i < words; ++i) {
        const double r = rng.uniform();
        if (r < 0.35) {
            append(pick(rng, kFillerWords));
        } else if (rng.bernoulli(u)) {
            append(pick(rng, kReportingWords));
        } else {
            append(pick(rng, kSensationalWords));
        }
    }
    for (std::int64_t i = 0; i < t.mention_count; ++i) append(tag("@user", rng, 10000));
    for (std::int64_t i = 0; i < t.hashtag_count; ++i) append(tag("#topic", rng, 500));
    for (std::int64_t i = 0; i < t.url_count; ++i) append(tag("https://t.co/x", rng, 1000000));
    for (std::int64_t i = 0; i < t.symbol_count; ++i) append(tag("$SYM", rng, 100));
    return text;
}

std::string comment_text(Rng& rng, double u, const std::array<std::vector<std::string>, kNumEmotions>& lexicon) {
    // Emotion weights: sadness, joy, love, anger, fear, surprise.
    const std::array<double, kNumEmotions> weights = {0.8 * (1.0 - u), u, 0.8 * u, 1.0 - u, 0.8 * (1.0 - u), 0.3};
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    std::string text;
    const std::size_t words = 5 + rng.index(8);
    for (std::size_t i = 0; i < words; ++i) {
        if (!text.empty()) text += ' ';
        if (rng.bernoulli(0.5)) {
            text += pick(rng, kFillerWords);
            continue;
        }
        double r = rng.uniform() * total;
        std::size_t e = 0;
        while (e + 1 < kNumEmotions && r >= weights[e]) r -= weights[e++];
        const auto& words_e = lexicon[e];
        text += words_e[rng.index(words_e.size())];
    }
    return text;
}

UserProfile make_profile(Rng& rng, double u, double spread, std::size_t index) {
    UserProfile p;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04zu", index);
    p.name = std::string("User ") + buf;
    p.screen_name = std::string("user") + buf;
    if (rng.bernoulli(0.3 + 0.6 * u)) p.location = "City " + std::to_string(rng.index(200));
    if (rng.bernoulli(0.4 + 0.5 * u)) p.description = "Writes about " + std::string(pick(rng, kFillerWords));
    if (rng.bernoulli(0.2 + 0.6 * u)) p.url = "https://example.org/" + p.screen_name;
    p.protected_account = rng.bernoulli(0.15 * (1.0 - u));
    p.followers_count = noisy_count(rng, 100.0 + 4000.0 * u, 400.0 * spread);
    p.friends_count = noisy_count(rng, 1500.0 - 1000.0 * u, 150.0 * spread);
    p.listed_count = static_cast<std::int64_t>(rng.poisson(1.0 + 30.0 * u));
    const double age = std::clamp(14.0 * (1.0 - u) + rng.normal(0.0, 0.7 * spread), 0.0, 14.0);
    p.created_at = random_time_in_year(rng, 2006 + static_cast<int>(std::lround(age)));
    p.favourites_count = noisy_count(rng, 200.0 + 3000.0 * u, 300.0 * spread);
    p.geo_enabled = rng.bernoulli(0.2 + 0.4 * u);
    p.verified = rng.bernoulli(0.02 + 0.5 * u * u);
    p.statuses_count = noisy_count(rng, 500.0 + 8000.0 * u, 800.0 * spread);
    p.profile_use_background_image = rng.bernoulli(0.4 + 0.4 * u);
    return p;
}

Tweet make_tweet(Rng& rng, double u, double spread) {
    Tweet t;
    t.created_at = random_time_in_year(rng, 2020 + static_cast<int>(rng.index(3)));
    t.truncated = rng.bernoulli(0.1);
    t.retweet_count = noisy_count(rng, 2.0 + 40.0 * u, 8.0 * spread);
    t.favorite_count = noisy_count(rng, 5.0 + 80.0 * u, 15.0 * spread);
    t.favorited = rng.bernoulli(0.05);
    t.retweeted = rng.bernoulli(0.05);
    t.is_quote_status = rng.bernoulli(0.1 + 0.3 * (1.0 - u));
    t.hashtag_count = static_cast<std::int64_t>(rng.poisson(0.2 + 3.5 * (1.0 - u)));
    t.mention_count = static_cast<std::int64_t>(rng.poisson(0.3 + 1.2 * (1.0 - u)));
    t.url_count = static_cast<std::int64_t>(rng.poisson(0.2 + 1.8 * (1.0 - u)));
    t.symbol_count = static_cast<std::int64_t>(rng.poisson(0.05));
    t.has_poll = rng.bernoulli(0.02);
    t.text = tweet_text(rng, u, t);
    return t;
}

}  // namespace

void SyntheticConfig::validate() const {
    if (num_users == 0) throw DomainError("num_users must be positive");
    if (!ClassificationSystem::is_supported(num_classes)) {
        throw DomainError("unsupported number of classes " + std::to_string(num_classes) + " (expected 4, 6, 8 or 10)");
    }
    if (tweets_per_user == 0 || tweets_per_user > kMaxTweets) {
        throw DomainError("tweets_per_user must be in [1, " + std::to_string(kMaxTweets) + "]");
    }
    if (comments_per_user == 0 || comments_per_user > kMaxComments) {
        throw DomainError("comments_per_user must be in [1, " + std::to_string(kMaxComments) + "]");
    }
    if (!(class_separation >= 0.0 && class_separation <= 1.0)) {
        throw DomainError("class_separation must be in [0, 1]");
    }
}

std::vector<std::size_t> synthetic_class_counts(std::size_t num_users, int num_classes) {
    const auto c_count = static_cast<std::size_t>(num_classes);
    std::vector<double> share(c_count);
    for (std::size_t c = 0; c < c_count; ++c) share[c] = 1.0 / static_cast<double>(c_count - c);
    const double total = std::accumulate(share.begin(), share.end(), 0.0);

    std::vector<std::size_t> counts(c_count);
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < c_count; ++c) {
        const double exact = static_cast<double>(num_users) * share[c] / total;
        counts[c] = static_cast<std::size_t>(std::floor(exact));
        assigned += counts[c];
        remainders.emplace_back(exact - std::floor(exact), c);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; assigned < num_users; ++i, ++assigned) ++counts[remainders[i % c_count].second];
    return counts;
}

std::vector<UserRecord> generate_synthetic(const SyntheticConfig& config) {
    config.validate();
    const ClassificationSystem system(config.num_classes);
    const auto c_count = static_cast<std::size_t>(config.num_classes);
    Rng rng(config.seed);

    std::vector<std::size_t> classes;
    const auto counts = synthetic_class_counts(config.num_users, config.num_classes);
    for (std::size_t c = 0; c < c_count; ++c) classes.insert(classes.end(), counts[c], c);
    rng.shuffle(classes);

    std::vector<ScoreSampler> samplers;
    for (std::size_t c = 0; c < c_count; ++c) {
        samplers.emplace_back(static_cast<int>(c), system, (static_cast<double>(c) + 0.5) / static_cast<double>(c_count));
    }

    std::array<std::vector<std::string>, kNumEmotions> lexicon;
    for (std::size_t e = 0; e < kNumEmotions; ++e) lexicon[e] = EmotionLexicon::builtin().words(static_cast<Emotion>(e));

    const double s = config.class_separation;
    const double user_noise = 0.01 + 0.19 * (1.0 - s);
    const double spread = 0.15 + 0.85 * (1.0 - s);
    std::vector<UserRecord> out;
    out.reserve(config.num_users);
    for (std::size_t i = 0; i < config.num_users; ++i) {
        const std::size_t c = classes[i];
        const double q = (static_cast<double>(c) + 0.5) / static_cast<double>(c_count);
        const double u = clamp01(0.5 + s * (q - 0.5) + rng.normal(0.0, user_noise));

        UserRecord r;
        char buf[32];
        std::snprintf(buf, sizeof buf, "user%04zu", i);
        r.user_id = buf;
        r.score = samplers[c].draw(rng);
        r.profile = make_profile(rng, u, spread, i);
        for (std::size_t t = 0; t < config.tweets_per_user; ++t) r.tweets.push_back(make_tweet(rng, u, spread));
        for (std::size_t k = 0; k < config.comments_per_user; ++k) r.comments.push_back({comment_text(rng, u, lexicon)});
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace multicred
