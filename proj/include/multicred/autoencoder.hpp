#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "multicred/matrix.hpp"
#include "multicred/nn.hpp"

namespace multicred {

inline constexpr std::size_t kAutoencoderInput = 768;
inline constexpr std::size_t kAutoencoderHidden = 128;
inline constexpr std::size_t kLatentDim = 10;

using LatentVector = std::array<double, kLatentDim>;

struct AutoencoderConfig {
    std::size_t epochs = 20;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
};

/// 768 -> 128 -> 10 encoder and 10 -> 128 -> 768 decoder. Hidden layers use
/// ReLU; the latent code and the reconstruction are linear.
class Autoencoder {
public:
    /// Randomly initialised, not yet trained.
    static Autoencoder untrained(std::uint64_t seed);

    static nn::NetworkSpec network_spec();

    bool trained() const { return trained_; }
    const nn::Model& model() const { return model_; }

    /// Throws StateError when untrained and ShapeError for a wrong width.
    LatentVector encode(std::span<const double> vector) const;
    /// Row-wise encode of an [n x 768] matrix.
    Matrix encode_batch(const Matrix& vectors) const;
    /// decode(encode(x)) for every row.
    Matrix reconstruct(const Matrix& vectors) const;

    nlohmann::json to_json() const;
    /// Expects an artifact tagged "autoencoder".
    static Autoencoder from_json(const nlohmann::json& doc);

private:
    friend struct AutoencoderTrainer;
    Autoencoder() = default;
    void mark_trained();

    nn::Model model_;
    nn::Model encoder_;
    bool trained_ = false;
};

struct AutoencoderTraining {
    Autoencoder autoencoder;
    /// Mean per-sample squared reconstruction error of each epoch's mini-batches.
    std::vector<double> loss_history;
};

/// Minimises mean squared Euclidean reconstruction error with Adam under the
/// per-epoch exponential learning-rate schedule, starting from
/// Autoencoder::untrained(config.seed). Deterministic per seed. Needs at least
/// two finite rows of width 768.
AutoencoderTraining train_autoencoder(const Matrix& vectors, const AutoencoderConfig& config);

/// Mean over rows of |x - decode(encode(x))|^2.
double reconstruction_error(const Autoencoder& ae, const Matrix& vectors);

}  // namespace multicred
