#include <gtest/gtest.h>

#include <cmath>

#include "multicred/autoencoder.hpp"
#include "multicred/embedding.hpp"
#include "multicred/errors.hpp"
#include "multicred/model_io.hpp"
#include "multicred/rng.hpp"

using namespace multicred;

namespace {

Matrix gaussian_corpus(std::size_t rows, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(rows, kAutoencoderInput);
    for (auto& v : m.data()) v = rng.normal();
    return m;
}

Matrix text_corpus(std::size_t rows, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(rows, kAutoencoderInput);
    for (std::size_t r = 0; r < rows; ++r) {
        std::string text;
        for (std::size_t w = 0; w < 4 + rng.index(8); ++w) text += "word" + std::to_string(rng.index(40)) + " ";
        const auto v = embed_text({}, preprocess(text));
        std::copy(v.begin(), v.end(), m.row(r).begin());
    }
    return m;
}

// Direct mean squared Euclidean distance between rows.
double oracle_mse(const Matrix& a, const Matrix& b) {
    double total = 0;
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c) total += (a(r, c) - b(r, c)) * (a(r, c) - b(r, c));
    return total / static_cast<double>(a.rows());
}

}  // namespace

TEST(Autoencoder, ArchitectureDims) {
    const auto spec = Autoencoder::network_spec();
    EXPECT_EQ(spec.input_dim(), 768u);
    EXPECT_EQ(spec.output_dim(), 768u);
    EXPECT_EQ(spec.layers[2].output_dim, kLatentDim);
    EXPECT_EQ(kLatentDim, 10u);
}

TEST(Autoencoder, ConstantCorpusIsLearned) {
    const auto one = text_corpus(1, 1);
    Matrix corpus(64, kAutoencoderInput);
    for (std::size_t r = 0; r < 64; ++r) std::copy(one.row(0).begin(), one.row(0).end(), corpus.row(r).begin());
    AutoencoderConfig cfg;
    cfg.epochs = 200;
    cfg.seed = 3;
    const double initial = reconstruction_error(Autoencoder::untrained(cfg.seed), corpus);
    const auto trained = train_autoencoder(corpus, cfg);
    const double final_error = reconstruction_error(trained.autoencoder, corpus);
    EXPECT_LT(final_error, 0.01 * initial) << "initial " << initial << " final " << final_error;
}

TEST(Autoencoder, TrainingBeatsRandomInitOnRandomCorpus) {
    const auto corpus = gaussian_corpus(500, 4);
    AutoencoderConfig cfg;
    cfg.epochs = 10;
    cfg.seed = 5;
    const auto trained = train_autoencoder(corpus, cfg);
    EXPECT_LT(reconstruction_error(trained.autoencoder, corpus),
              reconstruction_error(Autoencoder::untrained(cfg.seed), corpus));
}

TEST(Autoencoder, ZeroCorpusReconstructsToZero) {
    const Matrix zeros(16, kAutoencoderInput, 0.0);
    AutoencoderConfig cfg;
    cfg.epochs = 5;
    const auto trained = train_autoencoder(zeros, cfg);
    EXPECT_LT(reconstruction_error(trained.autoencoder, zeros), 1e-6);
}

TEST(Autoencoder, ReconstructionErrorMatchesDirectComputation) {
    const auto corpus = text_corpus(20, 6);
    const auto ae = Autoencoder::untrained(7);
    const double err = reconstruction_error(ae, corpus);
    EXPECT_GE(err, 0.0);
    EXPECT_NEAR(err, oracle_mse(corpus, ae.reconstruct(corpus)), 1e-9 * (1.0 + err));
}

TEST(Autoencoder, DeterministicPerSeed) {
    const auto corpus = text_corpus(40, 8);
    AutoencoderConfig cfg;
    cfg.epochs = 4;
    cfg.batch_size = 8;
    cfg.seed = 9;
    const auto a = train_autoencoder(corpus, cfg);
    const auto b = train_autoencoder(corpus, cfg);
    EXPECT_EQ(a.loss_history, b.loss_history);
    EXPECT_TRUE(a.autoencoder.model().same_parameters(b.autoencoder.model()));
    cfg.seed = 10;
    EXPECT_NE(train_autoencoder(corpus, cfg).loss_history, a.loss_history);
}

TEST(Autoencoder, LossHistoryTrendsDown) {
    const auto corpus = text_corpus(64, 11);
    AutoencoderConfig cfg;
    cfg.epochs = 80;
    cfg.batch_size = 16;
    cfg.seed = 12;
    const auto h = train_autoencoder(corpus, cfg).loss_history;
    ASSERT_EQ(h.size(), 80u);
    for (double v : h) ASSERT_TRUE(std::isfinite(v));
    const std::size_t window = 20;
    double prev = -1;
    for (std::size_t start = 0; start + window <= h.size(); ++start) {
        double avg = 0;
        for (std::size_t i = start; i < start + window; ++i) avg += h[i];
        avg /= window;
        if (prev >= 0) ASSERT_LE(avg, prev * 1.05) << "window starting at " << start;
        prev = avg;
    }
}

TEST(Autoencoder, InputChecks) {
    AutoencoderConfig cfg;
    cfg.epochs = 1;
    EXPECT_THROW(train_autoencoder(Matrix(1, kAutoencoderInput), cfg), DomainError);
    EXPECT_THROW(train_autoencoder(Matrix(4, 767), cfg), ShapeError);
    auto bad = text_corpus(4, 13);
    bad(2, 100) = std::nan("");
    EXPECT_THROW(train_autoencoder(bad, cfg), NumericError);
}

TEST(Autoencoder, EncodeContract) {
    const auto corpus = text_corpus(8, 14);
    AutoencoderConfig cfg;
    cfg.epochs = 1;
    const auto ae = train_autoencoder(corpus, cfg).autoencoder;
    const auto z1 = ae.encode(corpus.row(3));
    const auto z2 = ae.encode(corpus.row(3));
    EXPECT_EQ(z1.size(), 10u);
    EXPECT_EQ(z1, z2);
    const auto batch = ae.encode_batch(corpus);
    EXPECT_EQ(batch.cols(), 10u);
    for (std::size_t k = 0; k < 10; ++k) EXPECT_EQ(batch(3, k), z1[k]);
    EXPECT_THROW(ae.encode(std::vector<double>(767, 0.0)), ShapeError);
    EXPECT_EQ(ae.reconstruct(corpus).cols(), 768u);
    EXPECT_THROW(Autoencoder::untrained(1).encode(corpus.row(0)), StateError);
}

TEST(Autoencoder, SerializationRoundTripAndKindTag) {
    const auto corpus = text_corpus(8, 15);
    AutoencoderConfig cfg;
    cfg.epochs = 2;
    const auto ae = train_autoencoder(corpus, cfg).autoencoder;
    const auto doc = nlohmann::json::parse(ae.to_json().dump());
    EXPECT_EQ(doc.at("artifact_kind"), "autoencoder");
    const auto back = Autoencoder::from_json(doc);
    EXPECT_TRUE(back.trained());
    EXPECT_EQ(back.encode_batch(corpus), ae.encode_batch(corpus));
    auto other = doc;
    other["artifact_kind"] = "multicred_classifier";
    EXPECT_THROW(Autoencoder::from_json(other), ParseError);
    EXPECT_THROW(Autoencoder::untrained(1).to_json(), StateError);
}
