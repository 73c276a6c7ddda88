#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "multicred/features.hpp"
#include "multicred/nn.hpp"

namespace multicred {

inline constexpr double kDefaultDropoutRate = 0.3;

/// dropout(51) -> dense 256 -> batchnorm -> dropout -> dense 256 -> batchnorm
/// -> dropout -> dense 64 -> dense C -> softmax, ReLU after each hidden dense.
/// Accepts any C >= 2; build_multicred restricts it to the supported systems.
nn::NetworkSpec classifier_spec(std::size_t num_classes, double dropout_rate = kDefaultDropoutRate);

/// Initialised classifier for 4, 6, 8 or 10 classes. Throws DomainError otherwise.
nn::Model build_multicred(std::size_t num_classes, std::uint64_t seed, double dropout_rate = kDefaultDropoutRate);

struct TrainConfig {
    std::size_t max_epochs = 2000;
    std::size_t patience = 200;
    std::size_t batch_size = 16;
    std::uint64_t seed = 0;

    void validate() const;
};

struct EpochRecord {
    std::size_t epoch = 0;
    /// Mean cross-entropy over the whole training split, evaluated in inference
    /// mode after the epoch's updates.
    double train_loss = 0.0;
    double val_accuracy = 0.0;
    double lr = 0.0;

    bool operator==(const EpochRecord&) const = default;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;
    bool stopped_early = false;

    /// `epoch,train_loss,val_accuracy,lr`
    std::string to_csv() const;

    bool operator==(const TrainHistory&) const = default;
};

struct TrainResult {
    nn::Model model;
    TrainHistory history;
};

/// Mini-batch Adam on categorical cross-entropy with the per-epoch decay
/// schedule. Stops once validation accuracy has not strictly improved for
/// `patience` epochs and returns the parameters of the best epoch.
TrainResult train(nn::Model model, const SplitDataset& splits, const TrainConfig& config);

/// Class probabilities for one 51-component user vector.
std::vector<double> predict(const nn::Model& model, std::span<const double> features);
Matrix predict_batch(const nn::Model& model, const Matrix& features);

/// Index of the largest entry, lowest index on ties.
std::size_t argmax(std::span<const double> values);

double accuracy(const nn::Model& model, const LabeledDataset& data);

struct ClassMetrics {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct MetricsReport {
    std::size_t num_classes = 0;
    std::size_t total = 0;
    /// confusion[truth][predicted]
    std::vector<std::vector<std::size_t>> confusion;
    std::vector<ClassMetrics> per_class;
    double accuracy = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;

    nlohmann::json to_json() const;
};

/// One-vs-rest counts per class, rates with 0 for empty denominators, macro
/// averages over all classes and accuracy as correct / total.
MetricsReport compute_metrics(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                              std::size_t num_classes);

MetricsReport evaluate(const nn::Model& model, const LabeledDataset& test);

}  // namespace multicred
