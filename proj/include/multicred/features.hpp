#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "multicred/autoencoder.hpp"
#include "multicred/domain.hpp"
#include "multicred/embedding.hpp"
#include "multicred/matrix.hpp"
#include "multicred/text.hpp"

namespace multicred {

// User vector layout: [profile | tweet scalars | tweet latent | sentiment].
inline constexpr std::size_t kProfileFeatures = 18;
inline constexpr std::size_t kTweetFeatures = 17;
inline constexpr std::size_t kScalarFeatures = kProfileFeatures + kTweetFeatures;
inline constexpr std::size_t kUserFeatures = kScalarFeatures + kLatentDim + kNumEmotions;
static_assert(kUserFeatures == 51);

inline constexpr std::size_t kTweetBlockOffset = kProfileFeatures;
inline constexpr std::size_t kLatentBlockOffset = kScalarFeatures;
inline constexpr std::size_t kSentimentBlockOffset = kScalarFeatures + kLatentDim;

/// Bumped whenever the index <-> feature mapping changes.
inline constexpr int kFeatureLayoutVersion = 1;

/// Dotted feature name per component, e.g. "profile.followers_count".
const std::array<std::string, kUserFeatures>& feature_names();
nlohmann::json feature_layout_json();

struct UserFeatureVector {
    std::string user_id;
    std::array<double, kUserFeatures> values{};
    bool no_tweets = false;
    bool no_comments = false;

    bool operator==(const UserFeatureVector&) const = default;
};

struct NormalizationStats {
    std::vector<double> min;
    std::vector<double> max;

    std::size_t dim() const { return min.size(); }
    nlohmann::json to_json() const;
    static NormalizationStats from_json(const nlohmann::json& doc);

    bool operator==(const NormalizationStats&) const = default;
};

/// Column-wise minimum and maximum. Throws DomainError for an empty matrix.
NormalizationStats fit_minmax(const Matrix& rows);

/// (x - min) / (max - min) clipped to [0,1]; constant dimensions map to 0.
std::vector<double> apply_minmax(const NormalizationStats& stats, std::span<const double> x);

struct MeanResult {
    std::vector<double> mean;
    /// Set when there was nothing to average and `mean` is all zeros.
    bool empty = false;
};

MeanResult aggregate_mean(std::span<const std::vector<double>> vectors, std::size_t dim);
/// Row mean of a matrix with `dim` columns (zero vector when it has no rows).
MeanResult aggregate_mean(const Matrix& rows, std::size_t dim);

std::array<double, kProfileFeatures> profile_features(const UserProfile& profile);
std::array<double, kTweetFeatures> tweet_features(const Tweet& tweet);

/// Read-only collaborators for feature extraction. All pointers must outlive
/// the calls that use them.
struct FeatureExtractor {
    EmbedderSpec embedder;
    const Autoencoder* autoencoder = nullptr;
    const StopwordList* stopwords = &StopwordList::english();
    const EmotionLexicon* lexicon = &EmotionLexicon::builtin();
};

/// [tweets x 768] embeddings of the preprocessed tweet texts.
Matrix tweet_embeddings(const UserRecord& record, const FeatureExtractor& fx);

/// Applies the min-max stats to the scalar block only.
void normalize_scalars(UserFeatureVector& v, const NormalizationStats& stats);

/// The 51-component user vector. `embeddings` may carry precomputed
/// tweet_embeddings for the record. Throws StateError for an untrained
/// autoencoder.
UserFeatureVector build_user_vector(const UserRecord& record, const FeatureExtractor& fx,
                                    const NormalizationStats* stats = nullptr,
                                    const Matrix* embeddings = nullptr);

/// build_user_vector over many records, distributed over OpenMP threads.
std::vector<UserFeatureVector> build_user_vectors(std::span<const UserRecord> records, const FeatureExtractor& fx,
                                                  const NormalizationStats* stats = nullptr,
                                                  std::span<const Matrix> embeddings = {});

struct LabeledSample {
    UserFeatureVector features;
    std::size_t label = 0;

    bool operator==(const LabeledSample&) const = default;
};

struct LabeledDataset {
    std::vector<LabeledSample> samples;
    std::size_t num_classes = 0;

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
    Matrix features() const;
    std::vector<std::size_t> labels() const;
    std::vector<std::size_t> class_counts() const;

    bool operator==(const LabeledDataset&) const = default;
};

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    std::vector<std::size_t> validation;
};

struct SplitDataset {
    LabeledDataset train;
    LabeledDataset test;
    LabeledDataset validation;
};

/// Seeded, class-stratified 0.7 / 0.2 / 0.1 partition of sample indices with
/// sizes floor(0.7 n), floor(0.2 n) and the remainder. Needs n >= 10 and at
/// least 3 samples in every class that occurs.
SplitIndices split_indices(std::span<const std::size_t> labels, std::size_t num_classes, std::uint64_t seed);
SplitDataset split(const LabeledDataset& dataset, std::uint64_t seed);

struct SmoteOrigin {
    std::size_t output_index;
    std::size_t base_index;
    std::size_t neighbor_index;
    double lambda;
};

struct SmoteResult {
    LabeledDataset data;
    /// Provenance of every synthetic row; indices refer to the input dataset.
    std::vector<SmoteOrigin> synthetic;
};

/// Oversamples every class to the majority count with points on segments
/// between a random member and one of its k nearest same-class neighbours.
/// Originals come first, unchanged; synthetic rows follow grouped by class.
SmoteResult smote(const LabeledDataset& train, std::size_t k, std::uint64_t seed);

/// CSV with header `user_id,f000..f050,class`.
void write_feature_csv(const std::filesystem::path& path, const LabeledDataset& dataset);
LabeledDataset read_feature_csv(const std::filesystem::path& path, std::size_t num_classes);

}  // namespace multicred
