#include "multicred/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "multicred/errors.hpp"
#include "multicred/kernels.hpp"

namespace multicred::nn {
namespace {

constexpr double kProbFloor = 1e-12;

std::string default_name(LayerKind kind, std::size_t index) {
    return to_string(kind) + "_" + std::to_string(index);
}

bool has_params(LayerKind k) { return k == LayerKind::dense || k == LayerKind::batchnorm; }

void softmax_rows(Matrix& m) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto row = m.row(r);
        const double mx = *std::max_element(row.begin(), row.end());
        double sum = 0.0;
        for (double& v : row) {
            v = std::exp(v - mx);
            sum += v;
        }
        for (double& v : row) v /= sum;
    }
}

void check_targets(const Matrix& a, const Matrix& targets, const char* what) {
    if (a.rows() != targets.rows() || a.cols() != targets.cols()) {
        throw ShapeError(std::string(what) + ": outputs are " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + ", targets " + std::to_string(targets.rows()) + "x" +
                         std::to_string(targets.cols()));
    }
}

// Walks layers from `last` down, turning `grad` (w.r.t. the output of `last`)
// into parameter gradients. Stops below the first parameterised layer.
Gradients backprop(const Model& model, const Activations& acts, Matrix grad, std::size_t last) {
    const auto& layers = model.spec().layers;
    if (acts.outputs.size() != layers.size() + 1 || acts.model_version != model.version()) {
        throw StateError("activations are stale: they were not produced by this model's current parameters");
    }

    std::size_t first_param = layers.size();
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (has_params(layers[i].kind)) {
            first_param = i;
            break;
        }
    }

    std::vector<std::vector<double>> per_layer_a(layers.size()), per_layer_b(layers.size());
    const std::size_t batch = acts.batch_size();

    for (std::size_t li = last + 1; li-- > 0;) {
        if (li < first_param) break;
        const auto& spec = layers[li];
        const auto& p = model.layer(li);
        const Matrix& in = acts.outputs[li];
        const Matrix& out = acts.outputs[li + 1];
        switch (spec.kind) {
            case LayerKind::dense: {
                Matrix dw;
                kernels::gemm_tn(in, grad, dw);
                std::vector<double> db(spec.output_dim);
                kernels::column_sums(grad, db);
                per_layer_a[li] = std::move(dw.data());
                per_layer_b[li] = std::move(db);
                if (li > first_param) {
                    Matrix dx;
                    kernels::gemm_nt(grad, p.weight, dx);
                    grad = std::move(dx);
                }
                break;
            }
            case LayerKind::batchnorm: {
                const auto& cache = acts.batchnorm[li];
                const std::size_t d = spec.output_dim;
                std::vector<double> dgamma(d, 0.0), dbeta(d, 0.0);
                for (std::size_t r = 0; r < batch; ++r) {
                    for (std::size_t j = 0; j < d; ++j) {
                        dbeta[j] += grad(r, j);
                        dgamma[j] += grad(r, j) * cache.normalized(r, j);
                    }
                }
                if (li > first_param) {
                    if (acts.mode == Mode::train) {
                        const double inv_b = 1.0 / static_cast<double>(batch);
                        for (std::size_t r = 0; r < batch; ++r) {
                            for (std::size_t j = 0; j < d; ++j) {
                                grad(r, j) = p.gamma[j] * cache.inv_std[j] * inv_b *
                                             (static_cast<double>(batch) * grad(r, j) - dbeta[j] -
                                              cache.normalized(r, j) * dgamma[j]);
                            }
                        }
                    } else {
                        for (std::size_t r = 0; r < batch; ++r) {
                            for (std::size_t j = 0; j < d; ++j) grad(r, j) *= p.gamma[j] * cache.inv_std[j];
                        }
                    }
                }
                per_layer_a[li] = std::move(dgamma);
                per_layer_b[li] = std::move(dbeta);
                break;
            }
            case LayerKind::dropout: {
                const auto& mask = acts.masks[li];
                if (!mask.empty()) {
                    for (std::size_t k = 0; k < grad.size(); ++k) grad.data()[k] *= mask.data()[k];
                }
                break;
            }
            case LayerKind::relu:
                for (std::size_t k = 0; k < grad.size(); ++k) {
                    if (!(out.data()[k] > 0.0)) grad.data()[k] = 0.0;
                }
                break;
            case LayerKind::softmax:
                for (std::size_t r = 0; r < batch; ++r) {
                    double dot = 0.0;
                    for (std::size_t j = 0; j < out.cols(); ++j) dot += grad(r, j) * out(r, j);
                    for (std::size_t j = 0; j < out.cols(); ++j) grad(r, j) = out(r, j) * (grad(r, j) - dot);
                }
                break;
        }
        (void)in;
    }

    Gradients g;
    for (std::size_t li = 0; li < layers.size(); ++li) {
        const auto& spec = layers[li];
        if (spec.kind == LayerKind::dense) {
            g.names.push_back(spec.name + ".weight");
            g.values.push_back(std::move(per_layer_a[li]));
            g.names.push_back(spec.name + ".bias");
            g.values.push_back(std::move(per_layer_b[li]));
        } else if (spec.kind == LayerKind::batchnorm) {
            g.names.push_back(spec.name + ".gamma");
            g.values.push_back(std::move(per_layer_a[li]));
            g.names.push_back(spec.name + ".beta");
            g.values.push_back(std::move(per_layer_b[li]));
        }
    }
    // Layers above `last` never saw a gradient.
    const auto views = model.trainable_parameters();
    for (std::size_t i = 0; i < g.values.size(); ++i) {
        if (g.values[i].empty()) g.values[i].assign(views[i].values.size(), 0.0);
    }
    return g;
}

double loss_of(const Model& model, const Matrix& inputs, const Matrix& targets, LossKind loss) {
    const auto acts = forward(model, inputs, nullptr);
    return loss == LossKind::cross_entropy ? cross_entropy(acts.output(), targets).value
                                           : squared_error(acts.output(), targets).value;
}

}  // namespace

std::string to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::dense: return "dense";
        case LayerKind::batchnorm: return "batchnorm";
        case LayerKind::dropout: return "dropout";
        case LayerKind::relu: return "relu";
        case LayerKind::softmax: return "softmax";
    }
    return "unknown";
}

LayerKind layer_kind_from_string(const std::string& s) {
    for (auto k : {LayerKind::dense, LayerKind::batchnorm, LayerKind::dropout, LayerKind::relu,
                   LayerKind::softmax}) {
        if (to_string(k) == s) return k;
    }
    throw ParseError("unknown layer kind \"" + s + "\"");
}

LayerSpec LayerSpec::dense(std::size_t in, std::size_t out, std::string name) {
    LayerSpec l;
    l.kind = LayerKind::dense;
    l.input_dim = in;
    l.output_dim = out;
    l.name = std::move(name);
    return l;
}

LayerSpec LayerSpec::batchnorm(std::size_t dim, std::string name) {
    LayerSpec l;
    l.kind = LayerKind::batchnorm;
    l.input_dim = l.output_dim = dim;
    l.name = std::move(name);
    return l;
}

LayerSpec LayerSpec::dropout(std::size_t dim, double rate, std::string name) {
    LayerSpec l;
    l.kind = LayerKind::dropout;
    l.input_dim = l.output_dim = dim;
    l.dropout_rate = rate;
    l.name = std::move(name);
    return l;
}

LayerSpec LayerSpec::relu(std::size_t dim, std::string name) {
    LayerSpec l;
    l.kind = LayerKind::relu;
    l.input_dim = l.output_dim = dim;
    l.name = std::move(name);
    return l;
}

LayerSpec LayerSpec::softmax(std::size_t dim, std::string name) {
    LayerSpec l;
    l.kind = LayerKind::softmax;
    l.input_dim = l.output_dim = dim;
    l.name = std::move(name);
    return l;
}

void NetworkSpec::validate() const {
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        const std::string where = "layer " + std::to_string(i) + " (" + to_string(l.kind) + ")";
        if (l.input_dim == 0 || l.output_dim == 0) throw DomainError(where + ": dimensions must be positive");
        if (l.kind != LayerKind::dense && l.input_dim != l.output_dim) {
            throw DomainError(where + ": input and output widths must agree");
        }
        if (l.kind == LayerKind::dropout && !(l.dropout_rate >= 0.0 && l.dropout_rate < 1.0)) {
            throw DomainError(where + ": dropout rate must lie in [0,1)");
        }
        if (l.kind == LayerKind::batchnorm && !(l.epsilon > 0.0 && l.momentum >= 0.0 && l.momentum < 1.0)) {
            throw DomainError(where + ": batchnorm needs epsilon > 0 and momentum in [0,1)");
        }
        if (i > 0 && layers[i - 1].output_dim != l.input_dim) {
            throw DomainError(where + ": expects width " + std::to_string(l.input_dim) + " but previous layer emits " +
                              std::to_string(layers[i - 1].output_dim));
        }
    }
}

std::size_t NetworkSpec::input_dim() const { return layers.empty() ? 0 : layers.front().input_dim; }
std::size_t NetworkSpec::output_dim() const { return layers.empty() ? 0 : layers.back().output_dim; }

ParamCount count_params(const LayerSpec& layer) {
    switch (layer.kind) {
        case LayerKind::dense: {
            const std::size_t n = layer.input_dim * layer.output_dim + layer.output_dim;
            return {n, n};
        }
        case LayerKind::batchnorm: return {4 * layer.output_dim, 2 * layer.output_dim};
        default: return {0, 0};
    }
}

ParamCount count_params(const NetworkSpec& spec) {
    ParamCount total;
    for (const auto& l : spec.layers) {
        const auto c = count_params(l);
        total.total += c.total;
        total.trainable += c.trainable;
    }
    return total;
}

Model::Model(NetworkSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    params_.resize(spec_.layers.size());
    for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
        auto& l = spec_.layers[i];
        if (l.name.empty()) l.name = default_name(l.kind, i);
        auto& p = params_[i];
        if (l.kind == LayerKind::dense) {
            p.weight = Matrix(l.input_dim, l.output_dim);
            p.bias.assign(l.output_dim, 0.0);
        } else if (l.kind == LayerKind::batchnorm) {
            p.gamma.assign(l.output_dim, 1.0);
            p.beta.assign(l.output_dim, 0.0);
            p.running_mean.assign(l.output_dim, 0.0);
            p.running_var.assign(l.output_dim, 1.0);
        }
    }
}

Model Model::initialized(NetworkSpec spec, Rng& rng) {
    Model m(std::move(spec));
    for (std::size_t i = 0; i < m.spec_.layers.size(); ++i) {
        const auto& l = m.spec_.layers[i];
        if (l.kind != LayerKind::dense) continue;
        const double stddev = std::sqrt(2.0 / static_cast<double>(l.input_dim));
        for (double& w : m.params_[i].weight.data()) w = rng.normal(0.0, stddev);
    }
    return m;
}

std::vector<ParamView> Model::trainable_parameters() {
    std::vector<ParamView> out;
    for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
        const auto& l = spec_.layers[i];
        auto& p = params_[i];
        if (l.kind == LayerKind::dense) {
            out.push_back({l.name + ".weight", p.weight.data()});
            out.push_back({l.name + ".bias", p.bias});
        } else if (l.kind == LayerKind::batchnorm) {
            out.push_back({l.name + ".gamma", p.gamma});
            out.push_back({l.name + ".beta", p.beta});
        }
    }
    return out;
}

std::vector<ConstParamView> Model::trainable_parameters() const {
    std::vector<ConstParamView> out;
    for (auto& v : const_cast<Model*>(this)->trainable_parameters()) {
        out.push_back({std::move(v.name), v.values});
    }
    return out;
}

bool Model::same_parameters(const Model& other) const {
    return spec_ == other.spec_ && params_ == other.params_;
}

Activations forward(const Model& model, const Matrix& inputs, Rng* rng) {
    const auto& layers = model.spec().layers;
    Activations acts;
    acts.mode = model.mode();
    acts.model_version = model.version();
    acts.outputs.reserve(layers.size() + 1);
    acts.masks.resize(layers.size());
    acts.batchnorm.resize(layers.size());
    acts.outputs.push_back(inputs);

    for (std::size_t li = 0; li < layers.size(); ++li) {
        const auto& spec = layers[li];
        const auto& p = model.layer(li);
        const Matrix& x = acts.outputs.back();
        if (x.cols() != spec.input_dim) {
            throw ShapeError("layer " + std::to_string(li) + " (" + spec.name + ") expects width " +
                             std::to_string(spec.input_dim) + ", got " + std::to_string(x.cols()));
        }
        Matrix y;
        switch (spec.kind) {
            case LayerKind::dense:
                kernels::gemm(x, p.weight, p.bias, y);
                break;
            case LayerKind::batchnorm: {
                const std::size_t d = spec.output_dim;
                const std::size_t b = x.rows();
                auto& cache = acts.batchnorm[li];
                if (acts.mode == Mode::train) {
                    if (b == 0) throw DomainError("batchnorm needs a non-empty batch in train mode");
                    cache.mean.assign(d, 0.0);
                    cache.var.assign(d, 0.0);
                    kernels::column_sums(x, cache.mean);
                    for (double& m : cache.mean) m /= static_cast<double>(b);
                    for (std::size_t r = 0; r < b; ++r) {
                        for (std::size_t j = 0; j < d; ++j) {
                            const double c = x(r, j) - cache.mean[j];
                            cache.var[j] += c * c;
                        }
                    }
                    for (double& v : cache.var) v /= static_cast<double>(b);
                } else {
                    cache.mean = p.running_mean;
                    cache.var = p.running_var;
                }
                cache.inv_std.resize(d);
                for (std::size_t j = 0; j < d; ++j) cache.inv_std[j] = 1.0 / std::sqrt(cache.var[j] + spec.epsilon);
                cache.normalized = Matrix(b, d);
                y = Matrix(b, d);
                for (std::size_t r = 0; r < b; ++r) {
                    for (std::size_t j = 0; j < d; ++j) {
                        const double n = (x(r, j) - cache.mean[j]) * cache.inv_std[j];
                        cache.normalized(r, j) = n;
                        y(r, j) = p.gamma[j] * n + p.beta[j];
                    }
                }
                break;
            }
            case LayerKind::dropout:
                y = x;
                if (acts.mode == Mode::train && spec.dropout_rate > 0.0) {
                    if (rng == nullptr) throw DomainError("train-mode dropout needs a random generator");
                    const double keep = 1.0 - spec.dropout_rate;
                    Matrix mask(x.rows(), x.cols());
                    for (double& m : mask.data()) m = rng->uniform() < keep ? 1.0 / keep : 0.0;
                    for (std::size_t k = 0; k < y.size(); ++k) y.data()[k] *= mask.data()[k];
                    acts.masks[li] = std::move(mask);
                }
                break;
            case LayerKind::relu:
                y = x;
                for (double& v : y.data()) v = v > 0.0 ? v : 0.0;
                break;
            case LayerKind::softmax:
                y = x;
                softmax_rows(y);
                break;
        }
        acts.outputs.push_back(std::move(y));
    }
    return acts;
}

void update_running_statistics(Model& model, const Activations& acts) {
    if (acts.mode != Mode::train) return;
    const auto& layers = model.spec().layers;
    for (std::size_t li = 0; li < layers.size(); ++li) {
        if (layers[li].kind != LayerKind::batchnorm) continue;
        const auto& cache = acts.batchnorm.at(li);
        auto& p = model.layer(li);
        const double mom = layers[li].momentum;
        for (std::size_t j = 0; j < cache.mean.size(); ++j) {
            p.running_mean[j] = mom * p.running_mean[j] + (1.0 - mom) * cache.mean[j];
            p.running_var[j] = mom * p.running_var[j] + (1.0 - mom) * cache.var[j];
        }
    }
}

LossValue cross_entropy(const Matrix& probs, const Matrix& targets) {
    check_targets(probs, targets, "cross_entropy");
    LossValue out;
    out.per_sample.resize(probs.rows());
    for (std::size_t r = 0; r < probs.rows(); ++r) {
        double l = 0.0;
        for (std::size_t c = 0; c < probs.cols(); ++c) {
            const double y = targets(r, c);
            if (y != 0.0) l -= y * std::log(std::max(probs(r, c), kProbFloor));
        }
        out.per_sample[r] = l;
        out.value += l;
    }
    if (probs.rows() > 0) out.value /= static_cast<double>(probs.rows());
    return out;
}

LossValue squared_error(const Matrix& outputs, const Matrix& targets) {
    check_targets(outputs, targets, "squared_error");
    LossValue out;
    out.per_sample.resize(outputs.rows());
    for (std::size_t r = 0; r < outputs.rows(); ++r) {
        double l = 0.0;
        for (std::size_t c = 0; c < outputs.cols(); ++c) {
            const double d = outputs(r, c) - targets(r, c);
            l += d * d;
        }
        out.per_sample[r] = l;
        out.value += l;
    }
    if (outputs.rows() > 0) out.value /= static_cast<double>(outputs.rows());
    return out;
}

Matrix one_hot(std::span<const std::size_t> labels, std::size_t num_classes) {
    Matrix m(labels.size(), num_classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= num_classes) {
            throw DomainError("label " + std::to_string(labels[i]) + " outside [0," + std::to_string(num_classes) + ")");
        }
        m(i, labels[i]) = 1.0;
    }
    return m;
}

Gradients backward(const Model& model, const Activations& acts, const Matrix& targets) {
    const auto& layers = model.spec().layers;
    if (layers.empty() || layers.back().kind != LayerKind::softmax) {
        throw DomainError("cross-entropy backward needs a network ending in softmax");
    }
    if (acts.outputs.empty() || acts.output().rows() != targets.rows()) {
        throw StateError("activations were computed for a batch of " +
                         std::to_string(acts.outputs.empty() ? 0 : acts.output().rows()) + " rows, targets have " +
                         std::to_string(targets.rows()));
    }
    check_targets(acts.output(), targets, "backward");
    Matrix grad = acts.output();
    const double inv_b = 1.0 / static_cast<double>(targets.rows());
    for (std::size_t k = 0; k < grad.size(); ++k) grad.data()[k] = (grad.data()[k] - targets.data()[k]) * inv_b;
    if (layers.size() == 1) return backprop(model, acts, std::move(grad), 0);
    // Skip the softmax Jacobian: the combined gradient is already at its input.
    auto g = backprop(model, acts, std::move(grad), layers.size() - 2);
    return g;
}

Gradients backward_from_output(const Model& model, const Activations& acts, const Matrix& grad_output) {
    if (acts.outputs.empty() || acts.output().rows() != grad_output.rows()) {
        throw StateError("activations do not match the gradient's batch");
    }
    check_targets(acts.output(), grad_output, "backward_from_output");
    if (model.spec().layers.empty()) return {};
    return backprop(model, acts, grad_output, model.spec().layers.size() - 1);
}

AdamState AdamState::for_model(const Model& model) {
    AdamState s;
    for (const auto& v : model.trainable_parameters()) {
        s.first_moment.emplace_back(v.values.size(), 0.0);
        s.second_moment.emplace_back(v.values.size(), 0.0);
    }
    return s;
}

void adam_step(Model& model, const Gradients& grads, AdamState& state, double lr) {
    if (!(lr > 0.0)) throw DomainError("learning rate must be positive");
    auto params = model.trainable_parameters();
    if (grads.values.size() != params.size() || state.first_moment.size() != params.size()) {
        throw ShapeError("gradient list does not match the model's parameters");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (grads.values[i].size() != params[i].values.size()) {
            throw ShapeError("gradient for " + params[i].name + " has the wrong size");
        }
        if (!all_finite(grads.values[i])) throw NumericError("non-finite gradient for " + params[i].name);
    }

    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(state.beta1, t);
    const double c2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto w = params[i].values;
        const auto& g = grads.values[i];
        auto& m = state.first_moment[i];
        auto& v = state.second_moment[i];
        for (std::size_t k = 0; k < w.size(); ++k) {
            m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g[k];
            v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g[k] * g[k];
            const double mhat = m[k] / c1;
            const double vhat = v[k] / c2;
            w[k] -= lr * mhat / (std::sqrt(vhat) + state.epsilon);
        }
    }
    model.bump_version();
}

double lr_at(std::size_t epoch, double initial, double decay) {
    return initial * std::pow(decay, static_cast<double>(epoch));
}

double grad_check(const Model& model, const Matrix& inputs, const Matrix& targets, double eps, LossKind loss) {
    if (!(eps >= 1e-6 && eps <= 1e-4)) throw DomainError("grad_check: eps must lie in [1e-6, 1e-4]");
    if (model.mode() == Mode::train) {
        for (const auto& l : model.spec().layers) {
            if (l.kind == LayerKind::dropout && l.dropout_rate > 0.0) {
                throw DomainError("grad_check: dropout must be disabled");
            }
        }
    }

    const auto acts = forward(model, inputs, nullptr);
    Gradients analytic;
    if (loss == LossKind::cross_entropy) {
        analytic = backward(model, acts, targets);
    } else {
        Matrix g = acts.output();
        const double scale = 2.0 / static_cast<double>(inputs.rows());
        for (std::size_t k = 0; k < g.size(); ++k) g.data()[k] = (g.data()[k] - targets.data()[k]) * scale;
        analytic = backward_from_output(model, acts, g);
    }

    Model probe = model;
    auto views = probe.trainable_parameters();
    double worst = 0.0;
    for (std::size_t i = 0; i < views.size(); ++i) {
        for (std::size_t k = 0; k < views[i].values.size(); ++k) {
            double& theta = views[i].values[k];
            const double saved = theta;
            theta = saved + eps;
            const double up = loss_of(probe, inputs, targets, loss);
            theta = saved - eps;
            const double down = loss_of(probe, inputs, targets, loss);
            theta = saved;
            const double numeric = (up - down) / (2.0 * eps);
            const double a = analytic.values[i][k];
            const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
            worst = std::max(worst, std::abs(a - numeric) / denom);
        }
    }
    return worst;
}

}  // namespace multicred::nn
