#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "multicred/text.hpp"

namespace multicred {

inline constexpr std::size_t kEmbeddingDim = 768;
inline constexpr std::size_t kNumEmotions = 6;

using EmbeddingVector = std::array<double, kEmbeddingDim>;

enum class Emotion : std::size_t { sadness, joy, love, anger, fear, surprise };

inline constexpr std::array<std::string_view, kNumEmotions> kEmotionNames = {
    "sadness", "joy", "love", "anger", "fear", "surprise"};

/// Probabilities in kEmotionNames order.
using SentimentDistribution = std::array<double, kNumEmotions>;

enum class EmbedderKind { hash, remote };

struct EmbedderSpec {
    EmbedderKind kind = EmbedderKind::hash;
    std::optional<std::string> endpoint;
    std::uint64_t hash_seed = 0;

    /// Throws DomainError unless the endpoint is present exactly for remote.
    void validate() const;

    bool operator==(const EmbedderSpec&) const = default;
};

// Signed feature hashing over unigrams and adjacent-token bigrams.

/// Bucket and sign of a single n-gram key.
struct HashedSlot {
    std::size_t bucket;
    double sign;
};
HashedSlot hash_ngram(std::string_view key, std::uint64_t seed);

/// Accumulated signed counts before normalisation.
EmbeddingVector hash_features(std::span<const std::string> tokens, std::uint64_t seed);

/// hash_features scaled to unit L2 norm; an all-zero vector stays zero.
EmbeddingVector hash_embed(const CleanText& clean, std::uint64_t seed);

struct RemoteOptions {
    int max_retries = 3;
    std::chrono::milliseconds initial_backoff{200};
    std::chrono::seconds timeout{30};
};

/// POSTs `{"texts": [...]}` and expects `{"vectors": [[768 reals], ...]}` back.
/// Transient failures (connection errors, 5xx) are retried with doubling
/// backoff. Throws TransportError once retries are exhausted and
/// ProtocolError for malformed or mis-sized answers.
std::vector<EmbeddingVector> remote_embed_batch(const std::string& endpoint,
                                                std::span<const std::string> texts,
                                                const RemoteOptions& options = {});

EmbeddingVector embed_text(const EmbedderSpec& spec, const CleanText& clean);

/// Embeds many texts with one request for remote specs.
std::vector<EmbeddingVector> embed_batch(const EmbedderSpec& spec, std::span<const CleanText> texts);

/// Emotion word lists, stored on disk as a JSON object emotion -> [words].
class EmotionLexicon {
public:
    static const EmotionLexicon& builtin();
    static EmotionLexicon from_file(const std::filesystem::path& path);
    static EmotionLexicon parse(std::string_view json_text);

    /// Emotion a token belongs to, if listed.
    std::optional<Emotion> lookup(std::string_view token) const;
    std::vector<std::string> words(Emotion e) const;

private:
    std::unordered_map<std::string, Emotion> index_;
};

/// Lexicon hit counts with add-one smoothing; empty text gives the uniform
/// distribution.
SentimentDistribution analyze_sentiment(const CleanText& clean,
                                        const EmotionLexicon& lexicon = EmotionLexicon::builtin());

}  // namespace multicred
