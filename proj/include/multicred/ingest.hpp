#pragma once

// On-disk dataset layout:
//   <root>/profiles/<user_id>.json   profile object
//   <root>/tweets/<user_id>.json     array of tweet objects, entity counts under "entities"
//   <root>/comments/<user_id>.json   array of {"text": ...}
//   <root>/labels.csv                user_id,score

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "multicred/domain.hpp"
#include "multicred/errors.hpp"

namespace multicred {

struct DatasetManifest {
    std::filesystem::path root;
    std::vector<std::string> user_ids;
    bool labels_present = false;

    bool operator==(const DatasetManifest&) const = default;
};

struct LoadIssue {
    enum class Kind { missing_file, malformed_json, invalid_record };
    Kind kind;
    std::string user_id;
    std::filesystem::path path;
    std::string message;
};

/// Raised after a whole batch was read when any file failed.
class DatasetError : public Error {
public:
    explicit DatasetError(std::vector<LoadIssue> issues);
    const std::vector<LoadIssue>& issues() const { return issues_; }

private:
    std::vector<LoadIssue> issues_;
};

struct LoadResult {
    DatasetManifest manifest;
    std::vector<UserRecord> records;
    std::vector<LoadIssue> issues;
};

/// Reads every user it can and lists the ones it could not. Records come back
/// sorted by user_id. Throws IoError when the root or profiles directory is
/// missing.
LoadResult load_dataset_lenient(const std::filesystem::path& root);

/// Throws DatasetError if any user failed to load.
LoadResult load_dataset(const std::filesystem::path& root);

/// Replaces any dataset files already under `root`. labels.csv is written when
/// at least one record carries a score. Throws IoError naming the failing path.
DatasetManifest write_dataset(const std::vector<UserRecord>& records, const std::filesystem::path& root);

nlohmann::json profile_to_json(const UserProfile& p);
UserProfile profile_from_json(const nlohmann::json& j);
nlohmann::json tweet_to_json(const Tweet& t);
Tweet tweet_from_json(const nlohmann::json& j);

struct SyntheticConfig {
    std::size_t num_users = 400;
    int num_classes = 4;
    std::size_t tweets_per_user = 5;
    std::size_t comments_per_user = 5;
    /// 1 keeps classes apart, 0 makes every observable feature class-independent.
    double class_separation = 1.0;
    std::uint64_t seed = 0;

    /// Throws DomainError.
    void validate() const;
};

/// Class shares proportional to 1/(C - c): the most credible class is the
/// largest and class 0 the smallest.
std::vector<std::size_t> synthetic_class_counts(std::size_t num_users, int num_classes);

/// Labeled users whose scores come from criteria drawn per planted class.
/// Lower classes get more hashtags and links, younger accounts and angrier
/// comments. Deterministic per config.
std::vector<UserRecord> generate_synthetic(const SyntheticConfig& config);

}  // namespace multicred
