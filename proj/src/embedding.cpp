#include "multicred/embedding.hpp"

#include <cmath>
#include <fstream>
#include <regex>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "multicred/errors.hpp"
#include "multicred/generated/default_data.hpp"

namespace multicred {
namespace {

using nlohmann::json;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

void accumulate(EmbeddingVector& v, std::string_view key, std::uint64_t seed) {
    const auto slot = hash_ngram(key, seed);
    v[slot.bucket] += slot.sign;
}

struct Endpoint {
    std::string scheme_host_port;
    std::string path;
};

Endpoint split_url(const std::string& url) {
    static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(url, m, re)) throw DomainError("malformed endpoint URL: " + url);
    return {m[1].str(), m[2].matched ? m[2].str() : "/"};
}

std::vector<EmbeddingVector> decode_vectors(const std::string& body, std::size_t expected) {
    json doc;
    try {
        doc = json::parse(body);
    } catch (const json::parse_error& e) {
        throw ProtocolError(std::string("embedding response is not JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("vectors") || !doc["vectors"].is_array()) {
        throw ProtocolError("embedding response lacks a \"vectors\" array");
    }
    const auto& arr = doc["vectors"];
    if (arr.size() != expected) {
        throw ProtocolError("embedding response has " + std::to_string(arr.size()) +
                            " vectors for " + std::to_string(expected) + " texts");
    }
    std::vector<EmbeddingVector> out(expected);
    for (std::size_t i = 0; i < expected; ++i) {
        const auto& v = arr[i];
        if (!v.is_array() || v.size() != kEmbeddingDim) {
            throw ProtocolError("vector at index " + std::to_string(i) + " has " +
                                std::to_string(v.is_array() ? v.size() : 0) + " components, expected " +
                                std::to_string(kEmbeddingDim));
        }
        for (std::size_t k = 0; k < kEmbeddingDim; ++k) {
            if (!v[k].is_number()) {
                throw ProtocolError("vector at index " + std::to_string(i) + " has a non-numeric component");
            }
            out[i][k] = v[k].get<double>();
            if (!std::isfinite(out[i][k])) {
                throw ProtocolError("vector at index " + std::to_string(i) + " has a non-finite component");
            }
        }
    }
    return out;
}

}  // namespace

void EmbedderSpec::validate() const {
    if (kind == EmbedderKind::remote && !endpoint) throw DomainError("remote embedder needs an endpoint");
    if (kind == EmbedderKind::hash && endpoint) throw DomainError("hash embedder takes no endpoint");
}

HashedSlot hash_ngram(std::string_view key, std::uint64_t seed) {
    const std::uint64_t h = splitmix64(fnv1a(key) ^ splitmix64(seed));
    return {static_cast<std::size_t>(h % kEmbeddingDim), (h >> 63) ? -1.0 : 1.0};
}

EmbeddingVector hash_features(std::span<const std::string> tokens, std::uint64_t seed) {
    EmbeddingVector v{};
    std::string bigram;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        accumulate(v, tokens[i], seed);
        if (i + 1 < tokens.size()) {
            // Tokens never contain spaces, so the joined key cannot collide with a unigram.
            bigram.assign(tokens[i]).append(" ").append(tokens[i + 1]);
            accumulate(v, bigram, seed);
        }
    }
    return v;
}

EmbeddingVector hash_embed(const CleanText& clean, std::uint64_t seed) {
    auto v = hash_features(clean.tokens, seed);
    double norm = 0.0;
    for (double x : v) norm += x * x;
    if (norm > 0.0) {
        norm = std::sqrt(norm);
        for (double& x : v) x /= norm;
    }
    return v;
}

std::vector<EmbeddingVector> remote_embed_batch(const std::string& endpoint,
                                                std::span<const std::string> texts,
                                                const RemoteOptions& options) {
    if (texts.empty()) return {};
    const auto ep = split_url(endpoint);
    const std::string body = json{{"texts", std::vector<std::string>(texts.begin(), texts.end())}}.dump();

    httplib::Client client(ep.scheme_host_port);
    client.set_connection_timeout(options.timeout);
    client.set_read_timeout(options.timeout);
    client.set_write_timeout(options.timeout);

    auto backoff = options.initial_backoff;
    std::string last_error;
    for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
        auto res = client.Post(ep.path, body, "application/json");
        if (!res) {
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw ProtocolError("embedding service " + endpoint + " answered HTTP " +
                                std::to_string(res->status));
        }
        return decode_vectors(res->body, texts.size());
    }
    throw TransportError("embedding service " + endpoint + " failed after " +
                         std::to_string(options.max_retries) + " retries: " + last_error);
}

EmbeddingVector embed_text(const EmbedderSpec& spec, const CleanText& clean) {
    spec.validate();
    if (spec.kind == EmbedderKind::hash) return hash_embed(clean, spec.hash_seed);
    const std::string text = clean.joined;
    return remote_embed_batch(*spec.endpoint, std::span(&text, 1)).front();
}

std::vector<EmbeddingVector> embed_batch(const EmbedderSpec& spec, std::span<const CleanText> texts) {
    spec.validate();
    if (spec.kind == EmbedderKind::hash) {
        std::vector<EmbeddingVector> out;
        out.reserve(texts.size());
        for (const auto& t : texts) out.push_back(hash_embed(t, spec.hash_seed));
        return out;
    }
    std::vector<std::string> joined;
    joined.reserve(texts.size());
    for (const auto& t : texts) joined.push_back(t.joined);
    return remote_embed_batch(*spec.endpoint, joined);
}

const EmotionLexicon& EmotionLexicon::builtin() {
    static const EmotionLexicon lex = parse(data::kDefaultLexicon);
    return lex;
}

EmotionLexicon EmotionLexicon::from_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open emotion lexicon " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

EmotionLexicon EmotionLexicon::parse(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("emotion lexicon: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("emotion lexicon must be a JSON object");
    EmotionLexicon lex;
    for (std::size_t e = 0; e < kNumEmotions; ++e) {
        const std::string name(kEmotionNames[e]);
        if (!doc.contains(name)) continue;
        for (const auto& w : doc[name]) {
            if (!w.is_string()) throw ParseError("emotion lexicon: non-string entry under " + name);
            // First listing wins when a word appears under two emotions.
            lex.index_.emplace(w.get<std::string>(), static_cast<Emotion>(e));
        }
    }
    return lex;
}

std::optional<Emotion> EmotionLexicon::lookup(std::string_view token) const {
    const auto it = index_.find(std::string(token));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::vector<std::string> EmotionLexicon::words(Emotion e) const {
    std::vector<std::string> out;
    for (const auto& [w, emo] : index_) {
        if (emo == e) out.push_back(w);
    }
    std::sort(out.begin(), out.end());
    return out;
}

SentimentDistribution analyze_sentiment(const CleanText& clean, const EmotionLexicon& lexicon) {
    std::array<double, kNumEmotions> counts{};
    counts.fill(1.0);
    for (const auto& tok : clean.tokens) {
        if (auto e = lexicon.lookup(tok)) counts[static_cast<std::size_t>(*e)] += 1.0;
    }
    double total = 0.0;
    for (double c : counts) total += c;
    SentimentDistribution out;
    for (std::size_t i = 0; i < kNumEmotions; ++i) out[i] = counts[i] / total;
    return out;
}

}  // namespace multicred
