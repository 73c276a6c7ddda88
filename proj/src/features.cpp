#include "multicred/features.hpp"

#include <algorithm>
#include <cstdio>
#include <exception>
#include <numeric>

#include "multicred/csv.hpp"
#include "multicred/errors.hpp"
#include "multicred/kernels.hpp"
#include "multicred/model_io.hpp"
#include "multicred/rng.hpp"

namespace multicred {
namespace {

double b01(bool b) { return b ? 1.0 : 0.0; }

double d(std::int64_t v) { return static_cast<double>(v); }

bool has_text(const std::optional<std::string>& s) { return s && !s->empty(); }

std::string column_name(std::size_t i) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "f%03zu", i);
    return buf;
}

std::array<std::string, kUserFeatures> make_names() {
    std::array<std::string, kUserFeatures> n;
    const char* profile[kProfileFeatures] = {
        "profile.has_location",   "profile.has_description",  "profile.has_url",
        "profile.protected",      "profile.followers_count",  "profile.friends_count",
        "profile.listed_count",   "profile.created_year",     "profile.created_month",
        "profile.created_day",    "profile.created_hour",     "profile.created_minute",
        "profile.created_second", "profile.favourites_count", "profile.geo_enabled",
        "profile.verified",       "profile.statuses_count",   "profile.profile_use_background_image",
    };
    const char* tweet[kTweetFeatures] = {
        "tweet.year",           "tweet.month",         "tweet.day",           "tweet.hour",
        "tweet.minute",         "tweet.second",        "tweet.truncated",     "tweet.retweet_count",
        "tweet.favorite_count", "tweet.favorited",     "tweet.retweeted",     "tweet.is_quote_status",
        "tweet.hashtag_count",  "tweet.mention_count", "tweet.url_count",     "tweet.symbol_count",
        "tweet.has_poll",
    };
    std::size_t i = 0;
    for (auto* s : profile) n[i++] = s;
    for (auto* s : tweet) n[i++] = s;
    for (std::size_t k = 0; k < kLatentDim; ++k) n[i++] = "latent.z" + std::to_string(k);
    for (auto e : kEmotionNames) n[i++] = "sentiment." + std::string(e);
    return n;
}

// Adds one to the classes with the largest remainders until `target` is met,
// never exceeding `capacity`.
void distribute(std::vector<std::size_t>& alloc, std::size_t target, const std::vector<std::size_t>& remainder,
                const std::vector<std::size_t>& capacity) {
    std::size_t have = std::accumulate(alloc.begin(), alloc.end(), std::size_t{0});
    std::vector<std::size_t> order(alloc.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t c : order) {
        if (have >= target) break;
        if (remainder[c] > 0 && alloc[c] < capacity[c]) {
            ++alloc[c];
            ++have;
        }
    }
    for (std::size_t c : order) {
        if (have >= target) break;
        if (alloc[c] < capacity[c]) {
            ++alloc[c];
            ++have;
        }
    }
    if (have != target) throw DomainError("cannot allocate a stratified split of the requested size");
}

LabeledDataset subset(const LabeledDataset& ds, std::span<const std::size_t> idx) {
    LabeledDataset out;
    out.num_classes = ds.num_classes;
    out.samples.reserve(idx.size());
    for (auto i : idx) out.samples.push_back(ds.samples[i]);
    return out;
}

}  // namespace

const std::array<std::string, kUserFeatures>& feature_names() {
    static const auto names = make_names();
    return names;
}

nlohmann::json feature_layout_json() {
    nlohmann::json features = nlohmann::json::array();
    const auto& names = feature_names();
    for (std::size_t i = 0; i < kUserFeatures; ++i) {
        const char* block = i < kTweetBlockOffset      ? "profile"
                            : i < kLatentBlockOffset   ? "tweet"
                            : i < kSentimentBlockOffset ? "latent"
                                                        : "sentiment";
        features.push_back({{"index", i}, {"column", column_name(i)}, {"name", names[i]}, {"block", block}});
    }
    return {{"layout_version", kFeatureLayoutVersion}, {"dimension", kUserFeatures}, {"features", features}};
}

nlohmann::json NormalizationStats::to_json() const { return {{"min", min}, {"max", max}}; }

NormalizationStats NormalizationStats::from_json(const nlohmann::json& doc) {
    NormalizationStats s;
    try {
        s.min = doc.at("min").get<std::vector<double>>();
        s.max = doc.at("max").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("normalization stats: ") + e.what());
    }
    if (s.min.size() != s.max.size()) throw ParseError("normalization stats: min and max differ in length");
    for (std::size_t i = 0; i < s.min.size(); ++i) {
        if (!(s.min[i] <= s.max[i])) throw ParseError("normalization stats: min > max in dimension " + std::to_string(i));
    }
    return s;
}

NormalizationStats fit_minmax(const Matrix& rows) {
    if (rows.rows() == 0) throw DomainError("cannot fit normalization on an empty matrix");
    NormalizationStats s;
    const auto first = rows.row(0);
    s.min.assign(first.begin(), first.end());
    s.max.assign(first.begin(), first.end());
    for (std::size_t r = 1; r < rows.rows(); ++r) {
        for (std::size_t c = 0; c < rows.cols(); ++c) {
            s.min[c] = std::min(s.min[c], rows(r, c));
            s.max[c] = std::max(s.max[c], rows(r, c));
        }
    }
    return s;
}

std::vector<double> apply_minmax(const NormalizationStats& stats, std::span<const double> x) {
    if (x.size() != stats.dim()) {
        throw ShapeError("normalization expects " + std::to_string(stats.dim()) + " components, got " +
                         std::to_string(x.size()));
    }
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double range = stats.max[i] - stats.min[i];
        out[i] = range > 0.0 ? std::clamp((x[i] - stats.min[i]) / range, 0.0, 1.0) : 0.0;
    }
    return out;
}

MeanResult aggregate_mean(std::span<const std::vector<double>> vectors, std::size_t dim) {
    MeanResult r{std::vector<double>(dim, 0.0), vectors.empty()};
    for (const auto& v : vectors) {
        if (v.size() != dim) {
            throw ShapeError("aggregate_mean: vector of dimension " + std::to_string(v.size()) + ", expected " +
                             std::to_string(dim));
        }
        for (std::size_t i = 0; i < dim; ++i) r.mean[i] += v[i];
    }
    if (!vectors.empty()) {
        for (double& m : r.mean) m /= static_cast<double>(vectors.size());
    }
    return r;
}

MeanResult aggregate_mean(const Matrix& rows, std::size_t dim) {
    if (rows.rows() > 0 && rows.cols() != dim) throw ShapeError("aggregate_mean: matrix width mismatch");
    MeanResult r{std::vector<double>(dim, 0.0), rows.rows() == 0};
    if (rows.rows() == 0) return r;
    kernels::column_sums(rows, r.mean);
    for (double& m : r.mean) m /= static_cast<double>(rows.rows());
    return r;
}

std::array<double, kProfileFeatures> profile_features(const UserProfile& p) {
    const auto t = decompose(p.created_at);
    return {b01(has_text(p.location)),
            b01(has_text(p.description)),
            b01(has_text(p.url)),
            b01(p.protected_account),
            d(p.followers_count),
            d(p.friends_count),
            d(p.listed_count),
            static_cast<double>(t.year),
            static_cast<double>(t.month),
            static_cast<double>(t.day),
            static_cast<double>(t.hour),
            static_cast<double>(t.minute),
            static_cast<double>(t.second),
            d(p.favourites_count),
            b01(p.geo_enabled),
            b01(p.verified),
            d(p.statuses_count),
            b01(p.profile_use_background_image)};
}

std::array<double, kTweetFeatures> tweet_features(const Tweet& tw) {
    const auto t = decompose(tw.created_at);
    return {static_cast<double>(t.year),
            static_cast<double>(t.month),
            static_cast<double>(t.day),
            static_cast<double>(t.hour),
            static_cast<double>(t.minute),
            static_cast<double>(t.second),
            b01(tw.truncated),
            d(tw.retweet_count),
            d(tw.favorite_count),
            b01(tw.favorited),
            b01(tw.retweeted),
            b01(tw.is_quote_status),
            d(tw.hashtag_count),
            d(tw.mention_count),
            d(tw.url_count),
            d(tw.symbol_count),
            b01(tw.has_poll)};
}

Matrix tweet_embeddings(const UserRecord& record, const FeatureExtractor& fx) {
    std::vector<CleanText> cleaned;
    cleaned.reserve(record.tweets.size());
    for (const auto& t : record.tweets) cleaned.push_back(preprocess(t.text, *fx.stopwords));
    const auto vecs = embed_batch(fx.embedder, cleaned);
    Matrix m(vecs.size(), kEmbeddingDim);
    for (std::size_t i = 0; i < vecs.size(); ++i) std::copy(vecs[i].begin(), vecs[i].end(), m.row(i).begin());
    return m;
}

void normalize_scalars(UserFeatureVector& v, const NormalizationStats& stats) {
    if (stats.dim() != kScalarFeatures) {
        throw ShapeError("normalization stats cover " + std::to_string(stats.dim()) + " dimensions, expected " +
                         std::to_string(kScalarFeatures));
    }
    const auto scaled = apply_minmax(stats, std::span<const double>(v.values.data(), kScalarFeatures));
    std::copy(scaled.begin(), scaled.end(), v.values.begin());
}

UserFeatureVector build_user_vector(const UserRecord& record, const FeatureExtractor& fx,
                                    const NormalizationStats* stats, const Matrix* embeddings) {
    if (fx.autoencoder == nullptr || !fx.autoencoder->trained()) {
        throw StateError("feature extraction needs a trained autoencoder");
    }
    UserFeatureVector v;
    v.user_id = record.user_id;
    auto out = v.values.begin();

    const auto prof = profile_features(record.profile);
    out = std::copy(prof.begin(), prof.end(), out);

    std::vector<std::vector<double>> per_tweet;
    per_tweet.reserve(record.tweets.size());
    for (const auto& t : record.tweets) {
        const auto f = tweet_features(t);
        per_tweet.emplace_back(f.begin(), f.end());
    }
    const auto tweet_mean = aggregate_mean(per_tweet, kTweetFeatures);
    out = std::copy(tweet_mean.mean.begin(), tweet_mean.mean.end(), out);
    v.no_tweets = tweet_mean.empty;

    Matrix own;
    if (embeddings == nullptr) {
        own = tweet_embeddings(record, fx);
        embeddings = &own;
    } else if (embeddings->rows() != record.tweets.size()) {
        throw ShapeError("precomputed embeddings have " + std::to_string(embeddings->rows()) + " rows for " +
                         std::to_string(record.tweets.size()) + " tweets");
    }
    Matrix latent(0, kLatentDim);
    if (embeddings->rows() > 0) latent = fx.autoencoder->encode_batch(*embeddings);
    const auto latent_mean = aggregate_mean(latent, kLatentDim);
    out = std::copy(latent_mean.mean.begin(), latent_mean.mean.end(), out);

    std::vector<std::vector<double>> sentiments;
    sentiments.reserve(record.comments.size());
    for (const auto& c : record.comments) {
        const auto s = analyze_sentiment(preprocess(c.text, *fx.stopwords), *fx.lexicon);
        sentiments.emplace_back(s.begin(), s.end());
    }
    const auto sentiment_mean = aggregate_mean(sentiments, kNumEmotions);
    std::copy(sentiment_mean.mean.begin(), sentiment_mean.mean.end(), out);
    v.no_comments = sentiment_mean.empty;

    if (stats != nullptr) normalize_scalars(v, *stats);
    return v;
}

std::vector<UserFeatureVector> build_user_vectors(std::span<const UserRecord> records, const FeatureExtractor& fx,
                                                  const NormalizationStats* stats, std::span<const Matrix> embeddings) {
    if (!embeddings.empty() && embeddings.size() != records.size()) {
        throw ShapeError("one embedding matrix per record is required");
    }
    std::vector<UserFeatureVector> out(records.size());
    std::vector<std::exception_ptr> errors(records.size());
    const auto n = static_cast<std::ptrdiff_t>(records.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        try {
            out[k] = build_user_vector(records[k], fx, stats, embeddings.empty() ? nullptr : &embeddings[k]);
        } catch (...) {
            errors[k] = std::current_exception();
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

Matrix LabeledDataset::features() const {
    Matrix m(samples.size(), kUserFeatures);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        std::copy(samples[i].features.values.begin(), samples[i].features.values.end(), m.row(i).begin());
    }
    return m;
}

std::vector<std::size_t> LabeledDataset::labels() const {
    std::vector<std::size_t> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.label);
    return out;
}

std::vector<std::size_t> LabeledDataset::class_counts() const {
    std::vector<std::size_t> counts(num_classes, 0);
    for (const auto& s : samples) {
        if (s.label >= num_classes) throw DomainError("label " + std::to_string(s.label) + " outside class range");
        ++counts[s.label];
    }
    return counts;
}

SplitIndices split_indices(std::span<const std::size_t> labels, std::size_t num_classes, std::uint64_t seed) {
    const std::size_t n = labels.size();
    if (n < 10) throw DomainError("split needs at least 10 samples, got " + std::to_string(n));

    std::vector<std::vector<std::size_t>> members(num_classes);
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] >= num_classes) throw DomainError("label " + std::to_string(labels[i]) + " outside class range");
        members[labels[i]].push_back(i);
    }
    std::string small;
    for (std::size_t c = 0; c < num_classes; ++c) {
        if (!members[c].empty() && members[c].size() < 3) {
            small += (small.empty() ? "" : ", ") + std::to_string(c) + " (" + std::to_string(members[c].size()) + ")";
        }
    }
    if (!small.empty()) throw DomainError("cannot stratify: classes with fewer than 3 samples: " + small);

    Rng rng(seed);
    for (auto& m : members) rng.shuffle(m);

    const std::size_t train_total = n * 7 / 10;
    const std::size_t test_total = n * 2 / 10;
    std::vector<std::size_t> train(num_classes), test(num_classes), rem(num_classes), cap(num_classes);
    for (std::size_t c = 0; c < num_classes; ++c) {
        const std::size_t nc = members[c].size();
        train[c] = nc * 7 / 10;
        rem[c] = nc * 7 % 10;
        cap[c] = nc;
    }
    distribute(train, train_total, rem, cap);
    for (std::size_t c = 0; c < num_classes; ++c) {
        const std::size_t nc = members[c].size();
        cap[c] = nc - train[c];
        test[c] = std::min(nc * 2 / 10, cap[c]);
        rem[c] = nc * 2 % 10;
    }
    distribute(test, test_total, rem, cap);

    SplitIndices out;
    for (std::size_t c = 0; c < num_classes; ++c) {
        const auto& m = members[c];
        out.train.insert(out.train.end(), m.begin(), m.begin() + static_cast<std::ptrdiff_t>(train[c]));
        out.test.insert(out.test.end(), m.begin() + static_cast<std::ptrdiff_t>(train[c]),
                        m.begin() + static_cast<std::ptrdiff_t>(train[c] + test[c]));
        out.validation.insert(out.validation.end(), m.begin() + static_cast<std::ptrdiff_t>(train[c] + test[c]),
                              m.end());
    }
    rng.shuffle(out.train);
    rng.shuffle(out.test);
    rng.shuffle(out.validation);
    return out;
}

SplitDataset split(const LabeledDataset& dataset, std::uint64_t seed) {
    const auto labels = dataset.labels();
    const auto idx = split_indices(labels, dataset.num_classes, seed);
    return {subset(dataset, idx.train), subset(dataset, idx.test), subset(dataset, idx.validation)};
}

SmoteResult smote(const LabeledDataset& train, std::size_t k, std::uint64_t seed) {
    if (k == 0) throw DomainError("SMOTE needs k >= 1");
    const auto counts = train.class_counts();
    SmoteResult result;
    result.data = train;
    if (train.empty()) return result;
    const std::size_t majority = *std::max_element(counts.begin(), counts.end());

    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] == 1 && majority > 1) {
            throw DomainError("SMOTE cannot oversample class " + std::to_string(c) + ": it has a single sample");
        }
    }

    Rng rng(seed);
    std::size_t synthetic_id = 0;
    for (std::size_t c = 0; c < counts.size(); ++c) {
        // Absent classes have nothing to interpolate between and stay empty.
        if (counts[c] == 0 || counts[c] == majority) continue;

        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < train.size(); ++i) {
            if (train.samples[i].label == c) members.push_back(i);
        }
        const Matrix x = gather_rows(train.features(), members);
        Matrix dist;
        kernels::pairwise_sq_dist(x, dist);

        const std::size_t m = members.size();
        const std::size_t k_eff = std::min(k, m - 1);
        std::vector<std::vector<std::size_t>> neighbors(m);
        for (std::size_t i = 0; i < m; ++i) {
            std::vector<std::size_t> order;
            order.reserve(m - 1);
            for (std::size_t j = 0; j < m; ++j) {
                if (j != i) order.push_back(j);
            }
            std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k_eff), order.end(),
                              [&](std::size_t a, std::size_t b) {
                                  return dist(i, a) < dist(i, b) || (dist(i, a) == dist(i, b) && a < b);
                              });
            order.resize(k_eff);
            neighbors[i] = std::move(order);
        }

        for (std::size_t s = counts[c]; s < majority; ++s) {
            const std::size_t base_local = rng.index(m);
            const std::size_t nn_local = neighbors[base_local][rng.index(k_eff)];
            const double lambda = rng.uniform();

            const auto& base = train.samples[members[base_local]];
            const auto& nb = train.samples[members[nn_local]];
            LabeledSample out;
            out.label = c;
            out.features.user_id = base.features.user_id + "#smote" + std::to_string(synthetic_id++);
            for (std::size_t f = 0; f < kUserFeatures; ++f) {
                const double xb = base.features.values[f];
                out.features.values[f] = xb + lambda * (nb.features.values[f] - xb);
            }
            result.synthetic.push_back({result.data.samples.size(), members[base_local], members[nn_local], lambda});
            result.data.samples.push_back(std::move(out));
        }
    }
    return result;
}

void write_feature_csv(const std::filesystem::path& path, const LabeledDataset& dataset) {
    std::string text = "user_id";
    for (std::size_t i = 0; i < kUserFeatures; ++i) text += "," + column_name(i);
    text += ",class\n";
    for (const auto& s : dataset.samples) {
        text += s.features.user_id;
        for (double v : s.features.values) {
            text.push_back(',');
            text += csv::format_double(v);
        }
        text += "," + std::to_string(s.label) + "\n";
    }
    write_text_file(path, text);
}

LabeledDataset read_feature_csv(const std::filesystem::path& path, std::size_t num_classes) {
    const std::string text = read_text_file(path);
    const auto rows = csv::lines(text);
    if (rows.empty()) throw ParseError(path.string() + ": empty feature file");
    const auto header = csv::split_line(rows[0]);
    if (header.size() != kUserFeatures + 2 || header.front() != "user_id" || header.back() != "class") {
        throw ParseError(path.string() + ": unexpected header");
    }
    LabeledDataset ds;
    ds.num_classes = num_classes;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].empty()) continue;
        const auto fields = csv::split_line(rows[r]);
        const std::string where = path.string() + ":" + std::to_string(r + 1);
        if (fields.size() != kUserFeatures + 2) throw ParseError(where + ": expected " + std::to_string(kUserFeatures + 2) + " fields");
        LabeledSample s;
        s.features.user_id = std::string(fields[0]);
        for (std::size_t i = 0; i < kUserFeatures; ++i) {
            const auto v = csv::parse_double(fields[i + 1]);
            if (!v) throw ParseError(where + ": bad number in column " + column_name(i));
            s.features.values[i] = *v;
        }
        const auto label = csv::parse_double(fields.back());
        if (!label || *label < 0 || *label != static_cast<double>(static_cast<std::size_t>(*label)) ||
            static_cast<std::size_t>(*label) >= num_classes) {
            throw ParseError(where + ": bad class label");
        }
        s.label = static_cast<std::size_t>(*label);
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

}  // namespace multicred
