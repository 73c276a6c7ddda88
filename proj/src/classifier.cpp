#include "multicred/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "multicred/csv.hpp"
#include "multicred/domain.hpp"
#include "multicred/errors.hpp"

namespace multicred {
namespace {

double ratio(std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::vector<std::size_t> predicted_classes(const nn::Model& model, const Matrix& x) {
    const Matrix p = predict_batch(model, x);
    std::vector<std::size_t> out(p.rows());
    for (std::size_t r = 0; r < p.rows(); ++r) out[r] = argmax(p.row(r));
    return out;
}

}  // namespace

nn::NetworkSpec classifier_spec(std::size_t num_classes, double dropout_rate) {
    if (num_classes < 2) throw DomainError("a classifier needs at least 2 classes");
    using nn::LayerSpec;
    return {{
        LayerSpec::dropout(kUserFeatures, dropout_rate, "dropout"),
        LayerSpec::dense(kUserFeatures, 256, "hidden_layer_1"),
        LayerSpec::relu(256, "hidden_layer_1_relu"),
        LayerSpec::batchnorm(256, "batch_normalization"),
        LayerSpec::dropout(256, dropout_rate, "dropout_1"),
        LayerSpec::dense(256, 256, "hidden_layer_2"),
        LayerSpec::relu(256, "hidden_layer_2_relu"),
        LayerSpec::batchnorm(256, "batch_normalization_1"),
        LayerSpec::dropout(256, dropout_rate, "dropout_2"),
        LayerSpec::dense(256, 64, "hidden_layer_3"),
        LayerSpec::relu(64, "hidden_layer_3_relu"),
        LayerSpec::dense(64, num_classes, "output"),
        LayerSpec::softmax(num_classes, "output_softmax"),
    }};
}

nn::Model build_multicred(std::size_t num_classes, std::uint64_t seed, double dropout_rate) {
    if (!ClassificationSystem::is_supported(static_cast<int>(num_classes))) {
        throw DomainError("unsupported number of classes " + std::to_string(num_classes) +
                          " (expected 4, 6, 8 or 10)");
    }
    Rng rng(seed);
    return nn::Model::initialized(classifier_spec(num_classes, dropout_rate), rng);
}

void TrainConfig::validate() const {
    if (batch_size == 0) throw DomainError("batch size must be at least 1");
    if (max_epochs == 0) throw DomainError("max_epochs must be at least 1");
    if (patience > max_epochs) throw DomainError("patience cannot exceed max_epochs");
}

std::string TrainHistory::to_csv() const {
    std::string out = "epoch,train_loss,val_accuracy,lr\n";
    for (const auto& e : epochs) {
        out += std::to_string(e.epoch) + "," + csv::format_double(e.train_loss) + "," +
               csv::format_double(e.val_accuracy) + "," + csv::format_double(e.lr) + "\n";
    }
    return out;
}

TrainResult train(nn::Model model, const SplitDataset& splits, const TrainConfig& config) {
    config.validate();
    if (splits.train.empty()) throw DomainError("training split is empty");
    if (splits.validation.empty()) throw DomainError("validation split is empty");
    const std::size_t classes = model.spec().output_dim();
    if (splits.train.num_classes != classes || splits.validation.num_classes != classes) {
        throw DomainError("splits have " + std::to_string(splits.train.num_classes) + " classes but the model emits " +
                          std::to_string(classes));
    }

    const Matrix x_train = splits.train.features();
    const auto y_labels = splits.train.labels();
    const Matrix y_train = nn::one_hot(y_labels, classes);

    Rng rng(config.seed);
    auto adam = nn::AdamState::for_model(model);
    std::vector<std::size_t> order(x_train.rows());
    std::iota(order.begin(), order.end(), 0);

    TrainResult result{model, {}};
    double best_accuracy = -1.0;

    for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
        const double lr = nn::lr_at(epoch);
        model.set_mode(nn::Mode::train);
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            const std::span<const std::size_t> idx(order.data() + start, end - start);
            const Matrix xb = gather_rows(x_train, idx);
            const Matrix yb = gather_rows(y_train, idx);
            const auto acts = nn::forward(model, xb, &rng);
            const auto loss = nn::cross_entropy(acts.output(), yb);
            if (!std::isfinite(loss.value)) {
                throw NumericError("training loss became non-finite in epoch " + std::to_string(epoch));
            }
            auto grads = nn::backward(model, acts, yb);
            nn::update_running_statistics(model, acts);
            nn::adam_step(model, grads, adam, lr);
        }

        model.set_mode(nn::Mode::inference);
        const double train_loss = nn::cross_entropy(predict_batch(model, x_train), y_train).value;
        if (!std::isfinite(train_loss)) {
            throw NumericError("training loss became non-finite in epoch " + std::to_string(epoch));
        }
        const double val_accuracy = accuracy(model, splits.validation);
        result.history.epochs.push_back({epoch, train_loss, val_accuracy, lr});

        if (val_accuracy > best_accuracy) {
            best_accuracy = val_accuracy;
            result.history.best_epoch = epoch;
            result.model = model;
        } else if (epoch - result.history.best_epoch >= config.patience) {
            result.history.stopped_early = true;
            break;
        }
    }
    result.model.set_mode(nn::Mode::inference);
    return result;
}

Matrix predict_batch(const nn::Model& model, const Matrix& features) {
    if (model.mode() != nn::Mode::inference) {
        nn::Model frozen = model;
        frozen.set_mode(nn::Mode::inference);
        return nn::forward(frozen, features).output();
    }
    return nn::forward(model, features).output();
}

std::vector<double> predict(const nn::Model& model, std::span<const double> features) {
    if (features.size() != model.spec().input_dim()) {
        throw ShapeError("predict expects " + std::to_string(model.spec().input_dim()) + " features, got " +
                         std::to_string(features.size()));
    }
    const Matrix x(1, features.size(), std::vector<double>(features.begin(), features.end()));
    return predict_batch(model, x).data();
}

std::size_t argmax(std::span<const double> values) {
    return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

double accuracy(const nn::Model& model, const LabeledDataset& data) {
    if (data.empty()) throw DomainError("accuracy of an empty dataset");
    const auto pred = predicted_classes(model, data.features());
    std::size_t correct = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == data.samples[i].label;
    return ratio(correct, pred.size());
}

MetricsReport compute_metrics(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                              std::size_t num_classes) {
    if (truth.empty()) throw DomainError("cannot evaluate an empty test set");
    if (truth.size() != predicted.size()) throw ShapeError("truth and prediction lists differ in length");
    MetricsReport r;
    r.num_classes = num_classes;
    r.total = truth.size();
    r.confusion.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] >= num_classes || predicted[i] >= num_classes) throw DomainError("class index out of range");
        ++r.confusion[truth[i]][predicted[i]];
        correct += truth[i] == predicted[i];
    }
    r.accuracy = ratio(correct, r.total);

    r.per_class.resize(num_classes);
    for (std::size_t c = 0; c < num_classes; ++c) {
        auto& m = r.per_class[c];
        m.tp = r.confusion[c][c];
        for (std::size_t o = 0; o < num_classes; ++o) {
            if (o == c) continue;
            m.fn += r.confusion[c][o];
            m.fp += r.confusion[o][c];
        }
        m.tn = r.total - m.tp - m.fp - m.fn;
        m.precision = ratio(m.tp, m.tp + m.fp);
        m.recall = ratio(m.tp, m.tp + m.fn);
        const double pr = m.precision + m.recall;
        m.f1 = pr > 0.0 ? 2.0 * m.precision * m.recall / pr : 0.0;
        r.macro_precision += m.precision;
        r.macro_recall += m.recall;
        r.macro_f1 += m.f1;
    }
    const auto n = static_cast<double>(num_classes);
    r.macro_precision /= n;
    r.macro_recall /= n;
    r.macro_f1 /= n;
    return r;
}

MetricsReport evaluate(const nn::Model& model, const LabeledDataset& test) {
    if (test.empty()) throw DomainError("cannot evaluate an empty test set");
    const auto pred = predicted_classes(model, test.features());
    const auto truth = test.labels();
    return compute_metrics(truth, pred, model.spec().output_dim());
}

nlohmann::json MetricsReport::to_json() const {
    nlohmann::json classes = nlohmann::json::array();
    for (std::size_t c = 0; c < per_class.size(); ++c) {
        const auto& m = per_class[c];
        classes.push_back({{"class", c},
                           {"tp", m.tp},
                           {"fp", m.fp},
                           {"tn", m.tn},
                           {"fn", m.fn},
                           {"precision", m.precision},
                           {"recall", m.recall},
                           {"f1", m.f1}});
    }
    return {{"num_classes", num_classes},
            {"total", total},
            {"accuracy", accuracy},
            {"macro", {{"precision", macro_precision}, {"recall", macro_recall}, {"f1", macro_f1}}},
            {"per_class", classes},
            {"confusion_matrix", confusion}};
}

}  // namespace multicred
