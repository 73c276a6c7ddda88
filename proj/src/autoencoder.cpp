#include "multicred/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "multicred/errors.hpp"
#include "multicred/model_io.hpp"

namespace multicred {

namespace {
constexpr std::size_t kEncoderLayers = 3;
constexpr const char* kArtifactKind = "autoencoder";

void check_width(const Matrix& m) {
    if (m.cols() != kAutoencoderInput) {
        throw ShapeError("autoencoder input has " + std::to_string(m.cols()) + " components, expected " +
                         std::to_string(kAutoencoderInput));
    }
}
}  // namespace

struct AutoencoderTrainer {
    static Autoencoder wrap(nn::Model model, bool trained) {
        Autoencoder ae;
        ae.model_ = std::move(model);
        ae.model_.set_mode(nn::Mode::inference);
        if (trained) ae.mark_trained();
        return ae;
    }
    static nn::Model& model(Autoencoder& ae) { return ae.model_; }
    static void finish(Autoencoder& ae) {
        ae.model_.set_mode(nn::Mode::inference);
        ae.mark_trained();
    }
};

nn::NetworkSpec Autoencoder::network_spec() {
    using nn::LayerSpec;
    return {{
        LayerSpec::dense(kAutoencoderInput, kAutoencoderHidden, "encoder_hidden"),
        LayerSpec::relu(kAutoencoderHidden, "encoder_relu"),
        LayerSpec::dense(kAutoencoderHidden, kLatentDim, "latent"),
        LayerSpec::dense(kLatentDim, kAutoencoderHidden, "decoder_hidden"),
        LayerSpec::relu(kAutoencoderHidden, "decoder_relu"),
        LayerSpec::dense(kAutoencoderHidden, kAutoencoderInput, "reconstruction"),
    }};
}

Autoencoder Autoencoder::untrained(std::uint64_t seed) {
    Rng rng(seed);
    return AutoencoderTrainer::wrap(nn::Model::initialized(network_spec(), rng), false);
}

void Autoencoder::mark_trained() {
    nn::NetworkSpec enc;
    enc.layers.assign(model_.spec().layers.begin(), model_.spec().layers.begin() + kEncoderLayers);
    encoder_ = nn::Model(enc);
    for (std::size_t i = 0; i < kEncoderLayers; ++i) encoder_.layer(i) = model_.layer(i);
    encoder_.set_mode(nn::Mode::inference);
    trained_ = true;
}

LatentVector Autoencoder::encode(std::span<const double> vector) const {
    if (vector.size() != kAutoencoderInput) {
        throw ShapeError("autoencoder input has " + std::to_string(vector.size()) + " components, expected " +
                         std::to_string(kAutoencoderInput));
    }
    const Matrix row(1, kAutoencoderInput, std::vector<double>(vector.begin(), vector.end()));
    const Matrix z = encode_batch(row);
    LatentVector out;
    std::copy(z.data().begin(), z.data().end(), out.begin());
    return out;
}

Matrix Autoencoder::encode_batch(const Matrix& vectors) const {
    if (!trained_) throw StateError("autoencoder has not been trained");
    check_width(vectors);
    return nn::forward(encoder_, vectors).output();
}

Matrix Autoencoder::reconstruct(const Matrix& vectors) const {
    check_width(vectors);
    return nn::forward(model_, vectors).output();
}

nlohmann::json Autoencoder::to_json() const {
    if (!trained_) throw StateError("refusing to serialise an untrained autoencoder");
    return make_artifact(kArtifactKind, model_);
}

Autoencoder Autoencoder::from_json(const nlohmann::json& doc) {
    auto model = model_from_artifact(doc, kArtifactKind);
    if (!(model.spec() == network_spec())) throw ParseError("autoencoder artifact has an unexpected architecture");
    return AutoencoderTrainer::wrap(std::move(model), true);
}

AutoencoderTraining train_autoencoder(const Matrix& vectors, const AutoencoderConfig& config) {
    check_width(vectors);
    if (vectors.rows() < 2) throw DomainError("autoencoder training needs at least 2 vectors");
    if (!all_finite(vectors.data())) throw NumericError("autoencoder training corpus contains non-finite values");
    if (config.batch_size == 0) throw DomainError("batch size must be positive");

    AutoencoderTraining result{Autoencoder::untrained(config.seed), {}};
    Rng rng(config.seed ^ 0x5deece66dULL);
    auto& model = AutoencoderTrainer::model(result.autoencoder);
    model.set_mode(nn::Mode::train);
    auto adam = nn::AdamState::for_model(model);

    std::vector<std::size_t> order(vectors.rows());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        const double lr = nn::lr_at(epoch);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            const std::span<const std::size_t> idx(order.data() + start, end - start);
            const Matrix batch = gather_rows(vectors, idx);
            const auto acts = nn::forward(model, batch, &rng);
            const auto loss = nn::squared_error(acts.output(), batch);
            if (!std::isfinite(loss.value)) {
                throw NumericError("autoencoder loss became non-finite in epoch " + std::to_string(epoch));
            }
            epoch_loss += loss.value * static_cast<double>(idx.size());

            Matrix grad = acts.output();
            const double scale = 2.0 / static_cast<double>(idx.size());
            for (std::size_t k = 0; k < grad.size(); ++k) grad.data()[k] = (grad.data()[k] - batch.data()[k]) * scale;
            nn::adam_step(model, nn::backward_from_output(model, acts, grad), adam, lr);
        }
        result.loss_history.push_back(epoch_loss / static_cast<double>(order.size()));
    }
    AutoencoderTrainer::finish(result.autoencoder);
    return result;
}

double reconstruction_error(const Autoencoder& ae, const Matrix& vectors) {
    return nn::squared_error(ae.reconstruct(vectors), vectors).value;
}

}  // namespace multicred
