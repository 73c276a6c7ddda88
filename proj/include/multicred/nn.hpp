#pragma once

// Dense feed-forward networks trained by backpropagation.
//
// A Model is an ordered stack of layers. `forward` is const: in train mode it
// draws dropout masks and normalises with batch statistics, recording both in
// the returned Activations. Running batch-norm statistics are folded in
// separately by `update_running_statistics`, so the same forward pass can be
// replayed for finite differences without disturbing model state.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "multicred/matrix.hpp"
#include "multicred/rng.hpp"

namespace multicred::nn {

enum class LayerKind { dense, batchnorm, dropout, relu, softmax };

std::string to_string(LayerKind kind);
LayerKind layer_kind_from_string(const std::string& s);

struct LayerSpec {
    LayerKind kind = LayerKind::dense;
    std::size_t input_dim = 0;
    std::size_t output_dim = 0;
    double dropout_rate = 0.0;
    double momentum = 0.99;
    double epsilon = 1e-3;
    std::string name;

    static LayerSpec dense(std::size_t in, std::size_t out, std::string name = {});
    static LayerSpec batchnorm(std::size_t dim, std::string name = {});
    static LayerSpec dropout(std::size_t dim, double rate, std::string name = {});
    static LayerSpec relu(std::size_t dim, std::string name = {});
    static LayerSpec softmax(std::size_t dim, std::string name = {});

    bool operator==(const LayerSpec&) const = default;
};

struct NetworkSpec {
    std::vector<LayerSpec> layers;

    /// Throws DomainError when a layer is malformed or adjacent widths differ.
    void validate() const;
    std::size_t input_dim() const;
    std::size_t output_dim() const;

    bool operator==(const NetworkSpec&) const = default;
};

struct ParamCount {
    std::size_t total = 0;
    std::size_t trainable = 0;

    bool operator==(const ParamCount&) const = default;
};

/// dense: in*out + out. batchnorm: 4*dim with scale and shift trainable and the
/// running mean and variance not. Everything else: none.
ParamCount count_params(const LayerSpec& layer);
ParamCount count_params(const NetworkSpec& spec);

enum class Mode { train, inference };

struct LayerParams {
    Matrix weight;  // dense, [in x out]
    std::vector<double> bias;
    std::vector<double> gamma;  // batchnorm
    std::vector<double> beta;
    std::vector<double> running_mean;
    std::vector<double> running_var;

    bool operator==(const LayerParams&) const = default;
};

struct ParamView {
    std::string name;
    std::span<double> values;
};

struct ConstParamView {
    std::string name;
    std::span<const double> values;
};

class Model {
public:
    Model() = default;
    /// Zero weights, unit batch-norm scale. Layer names are filled in when blank.
    explicit Model(NetworkSpec spec);

    /// Weights ~ N(0, 2/fan_in), biases zero.
    static Model initialized(NetworkSpec spec, Rng& rng);

    const NetworkSpec& spec() const { return spec_; }
    Mode mode() const { return mode_; }
    void set_mode(Mode m) { mode_ = m; }

    std::size_t num_layers() const { return params_.size(); }
    LayerParams& layer(std::size_t i) { return params_.at(i); }
    const LayerParams& layer(std::size_t i) const { return params_.at(i); }

    /// Trainable tensors in a fixed order: per layer, weight then bias, or
    /// gamma then beta.
    std::vector<ParamView> trainable_parameters();
    std::vector<ConstParamView> trainable_parameters() const;

    /// Incremented whenever trainable parameters change through an optimiser.
    std::uint64_t version() const { return version_; }
    void bump_version() { ++version_; }

    /// Equal specs and bit-identical parameters and running statistics.
    bool same_parameters(const Model& other) const;

private:
    NetworkSpec spec_;
    std::vector<LayerParams> params_;
    Mode mode_ = Mode::inference;
    std::uint64_t version_ = 0;
};

struct BatchNormCache {
    std::vector<double> mean;
    std::vector<double> var;
    std::vector<double> inv_std;
    Matrix normalized;
};

struct Activations {
    /// outputs[0] is the input; outputs[i + 1] is the output of layer i.
    std::vector<Matrix> outputs;
    /// Dropout masks with the inverted-dropout scale folded in.
    std::vector<Matrix> masks;
    std::vector<BatchNormCache> batchnorm;
    Mode mode = Mode::inference;
    std::uint64_t model_version = 0;

    const Matrix& output() const { return outputs.back(); }
    std::size_t batch_size() const { return outputs.front().rows(); }
};

/// `rng` is needed only for train-mode dropout. Throws ShapeError naming the
/// layer when the input width does not fit.
Activations forward(const Model& model, const Matrix& inputs, Rng* rng = nullptr);

/// Folds the batch statistics of a train-mode pass into the running estimates.
void update_running_statistics(Model& model, const Activations& acts);

struct LossValue {
    double value = 0.0;
    std::vector<double> per_sample;
};

/// Categorical cross-entropy with probabilities clamped at 1e-12 inside the log.
LossValue cross_entropy(const Matrix& probs, const Matrix& targets);

/// Mean over rows of the squared Euclidean distance.
LossValue squared_error(const Matrix& outputs, const Matrix& targets);

Matrix one_hot(std::span<const std::size_t> labels, std::size_t num_classes);

struct Gradients {
    std::vector<std::string> names;
    std::vector<std::vector<double>> values;
};

/// Gradients of the mean cross-entropy for a network ending in softmax; the
/// softmax input receives (probs - targets) / batch directly.
Gradients backward(const Model& model, const Activations& acts, const Matrix& targets);

/// Backpropagates an arbitrary gradient w.r.t. the network output.
Gradients backward_from_output(const Model& model, const Activations& acts, const Matrix& grad_output);

struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t step = 0;
    std::vector<std::vector<double>> first_moment;
    std::vector<std::vector<double>> second_moment;

    static AdamState for_model(const Model& model);
};

/// One bias-corrected Adam update. Throws NumericError naming the parameter if
/// a gradient is not finite; nothing is modified in that case.
void adam_step(Model& model, const Gradients& grads, AdamState& state, double lr);

/// 0.01 * 0.9^epoch, applied per epoch.
double lr_at(std::size_t epoch, double initial = 0.01, double decay = 0.9);

enum class LossKind { cross_entropy, squared_error };

/// Largest relative difference between analytic gradients and central finite
/// differences over every trainable parameter. Requires eps in [1e-6, 1e-4]
/// and no active dropout.
double grad_check(const Model& model, const Matrix& inputs, const Matrix& targets, double eps,
                  LossKind loss = LossKind::cross_entropy);

}  // namespace multicred::nn
