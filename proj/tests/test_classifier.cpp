#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "multicred/classifier.hpp"
#include "multicred/rng.hpp"

using namespace multicred;

namespace {

LabeledDataset blobs(const std::vector<std::size_t>& counts, double separation, double noise, std::uint64_t seed) {
    Rng rng(seed);
    LabeledDataset ds;
    ds.num_classes = counts.size();
    for (std::size_t c = 0; c < counts.size(); ++c) {
        for (std::size_t i = 0; i < counts[c]; ++i) {
            LabeledSample s;
            s.label = c;
            s.features.user_id = "c" + std::to_string(c) + "_" + std::to_string(i);
            for (std::size_t f = 0; f < kUserFeatures; ++f) {
                const double centre = (f % counts.size() == c) ? separation : 0.0;
                s.features.values[f] = centre + rng.normal(0.0, noise);
            }
            ds.samples.push_back(s);
        }
    }
    return ds;
}

std::vector<std::size_t> row_params(const nn::NetworkSpec& spec) {
    std::vector<std::size_t> out;
    for (const auto& l : spec.layers) {
        const auto n = nn::count_params(l).total;
        if (n > 0) out.push_back(n);
    }
    return out;
}

}  // namespace

TEST(Architecture, ParameterCountsForTenClasses) {
    const auto spec = classifier_spec(10);
    EXPECT_EQ(row_params(spec), (std::vector<std::size_t>{13312, 1024, 65792, 1024, 16448, 650}));
    const auto total = nn::count_params(spec);
    EXPECT_EQ(total.total, 98250u);
    EXPECT_EQ(total.trainable, 97226u);
    EXPECT_EQ(total.total - total.trainable, 1024u);
}

TEST(Architecture, OutputLayerScalesWithClasses) {
    for (std::size_t c : {4u, 6u, 8u, 10u}) {
        const auto spec = classifier_spec(c);
        EXPECT_EQ(row_params(spec).back(), 64 * c + c) << c;
        EXPECT_EQ(spec.input_dim(), 51u);
        EXPECT_EQ(spec.output_dim(), c);
        EXPECT_EQ(spec.layers.back().kind, nn::LayerKind::softmax);
        EXPECT_NO_THROW(build_multicred(c, 1));
    }
    EXPECT_EQ(row_params(classifier_spec(4)).back(), 260u);
}

TEST(Architecture, LayerOrderAndDropout) {
    const auto spec = classifier_spec(4, 0.3);
    std::vector<nn::LayerKind> kinds;
    for (const auto& l : spec.layers) kinds.push_back(l.kind);
    using K = nn::LayerKind;
    EXPECT_EQ(kinds, (std::vector<K>{K::dropout, K::dense, K::relu, K::batchnorm, K::dropout, K::dense, K::relu,
                                      K::batchnorm, K::dropout, K::dense, K::relu, K::dense, K::softmax}));
    for (const auto& l : spec.layers) {
        if (l.kind == K::dropout) EXPECT_EQ(l.dropout_rate, 0.3);
    }
}

TEST(Architecture, UnsupportedClassCounts) {
    for (std::size_t c : {0u, 2u, 3u, 5u, 7u, 12u}) EXPECT_THROW(build_multicred(c, 0), DomainError) << c;
}

TEST(Training, EarlyStoppingKeepsFirstBestEpoch) {
    SplitDataset splits;
    splits.train = blobs({10, 10, 10, 10}, 3.0, 1.0, 1);
    // Four identical inputs with four different labels: accuracy is 1/4 whatever the model does.
    const auto base = blobs({1}, 0.0, 1.0, 2).samples[0].features;
    splits.validation.num_classes = 4;
    for (std::size_t c = 0; c < 4; ++c) splits.validation.samples.push_back({base, c});

    TrainConfig cfg;
    cfg.max_epochs = 1000;
    cfg.patience = 200;
    cfg.seed = 3;
    const auto result = train(build_multicred(4, 4), splits, cfg);
    EXPECT_TRUE(result.history.stopped_early);
    EXPECT_EQ(result.history.best_epoch, 0u);
    EXPECT_EQ(result.history.epochs.size(), 201u);
    for (const auto& e : result.history.epochs) EXPECT_EQ(e.val_accuracy, 0.25);

    TrainConfig one = cfg;
    one.max_epochs = 1;
    one.patience = 1;
    const auto snapshot = train(build_multicred(4, 4), splits, one);
    EXPECT_TRUE(result.model.same_parameters(snapshot.model));
    EXPECT_EQ(result.model.mode(), nn::Mode::inference);
}

TEST(Training, StopsAtBestPlusPatience) {
    auto data = blobs({30, 30, 30, 30}, 1.0, 1.0, 5);
    const auto splits = split(data, 6);
    TrainConfig cfg;
    cfg.max_epochs = 400;
    cfg.patience = 30;
    cfg.seed = 7;
    const auto result = train(build_multicred(4, 8), splits, cfg);
    const auto& h = result.history;
    double best = -1;
    std::size_t first_best = 0;
    for (const auto& e : h.epochs) {
        if (e.val_accuracy > best) {
            best = e.val_accuracy;
            first_best = e.epoch;
        }
    }
    EXPECT_EQ(h.best_epoch, first_best);
    if (h.stopped_early) {
        EXPECT_EQ(h.epochs.back().epoch, first_best + cfg.patience);
    } else {
        EXPECT_EQ(h.epochs.size(), cfg.max_epochs);
    }
    EXPECT_EQ(accuracy(result.model, splits.validation), best);
    for (std::size_t i = 0; i < h.epochs.size(); ++i) {
        EXPECT_EQ(h.epochs[i].epoch, i);
        EXPECT_DOUBLE_EQ(h.epochs[i].lr, 0.01 * std::pow(0.9, static_cast<double>(i)));
    }
}

TEST(Training, DeterministicPerSeed) {
    const auto splits = split(blobs({15, 15, 15, 15}, 2.0, 1.0, 9), 10);
    TrainConfig cfg;
    cfg.max_epochs = 8;
    cfg.patience = 8;
    cfg.seed = 11;
    const auto a = train(build_multicred(4, 12), splits, cfg);
    const auto b = train(build_multicred(4, 12), splits, cfg);
    EXPECT_EQ(a.history, b.history);
    EXPECT_TRUE(a.model.same_parameters(b.model));
    cfg.seed = 13;
    EXPECT_NE(train(build_multicred(4, 12), splits, cfg).history, a.history);
}

TEST(Training, SeparableDataReachesLowLoss) {
    SplitDataset splits;
    splits.train = blobs({40, 40}, 4.0, 0.5, 14);
    splits.validation = blobs({5, 5}, 4.0, 0.5, 15);
    Rng init(16);
    TrainConfig cfg;
    cfg.max_epochs = 60;
    cfg.patience = 60;
    cfg.seed = 17;
    const auto result = train(nn::Model::initialized(classifier_spec(2), init), splits, cfg);
    EXPECT_LT(result.history.epochs.back().train_loss, 0.1);
    EXPECT_EQ(accuracy(result.model, splits.validation), 1.0);
}

TEST(Training, ConfigAndSplitChecks) {
    TrainConfig cfg;
    cfg.batch_size = 0;
    EXPECT_THROW(cfg.validate(), DomainError);
    cfg = {};
    cfg.patience = cfg.max_epochs + 1;
    EXPECT_THROW(cfg.validate(), DomainError);

    SplitDataset splits;
    splits.train = blobs({3, 3, 3, 3}, 1.0, 1.0, 18);
    splits.validation.num_classes = 4;
    EXPECT_THROW(train(build_multicred(4, 0), splits, TrainConfig{}), DomainError);
    splits.validation = blobs({1, 1, 1, 1, 1, 1}, 1.0, 1.0, 19);
    EXPECT_THROW(train(build_multicred(4, 0), splits, TrainConfig{}), DomainError);
}

TEST(TrainHistory, CsvLayout) {
    TrainHistory h;
    h.epochs = {{0, 1.5, 0.25, 0.01}, {1, 0.75, 0.5, 0.009}};
    EXPECT_EQ(h.to_csv(), "epoch,train_loss,val_accuracy,lr\n0,1.5,0.25,0.01\n1,0.75,0.5,0.009\n");
}

TEST(Predict, ProbabilitiesAndShape) {
    const auto model = build_multicred(6, 20);
    const auto data = blobs({4, 4, 4, 4, 4, 4}, 1.0, 1.0, 21);
    for (const auto& s : data.samples) {
        const auto p = predict(model, s.features.values);
        ASSERT_EQ(p.size(), 6u);
        double sum = 0;
        for (double v : p) {
            ASSERT_GE(v, 0.0);
            ASSERT_LE(v, 1.0);
            sum += v;
        }
        ASSERT_NEAR(sum, 1.0, 1e-9);
    }
    const auto batch = predict_batch(model, data.features());
    for (std::size_t k = 0; k < 6; ++k) EXPECT_EQ(batch(3, k), predict(model, data.samples[3].features.values)[k]);
    const std::vector<double> short_x(50, 0.0);
    EXPECT_THROW(predict(model, short_x), ShapeError);
}

TEST(Predict, ArgmaxTiesGoLow) {
    const std::vector<double> v = {0.1, 0.4, 0.4, 0.1};
    EXPECT_EQ(argmax(v), 1u);
}

TEST(Metrics, HandComputedExample) {
    const std::vector<std::size_t> truth = {0, 1, 1, 1};
    const std::vector<std::size_t> pred = {0, 0, 1, 1};
    const auto m = compute_metrics(truth, pred, 2);
    EXPECT_EQ(m.per_class[1].tp, 2u);
    EXPECT_EQ(m.per_class[1].fp, 0u);
    EXPECT_EQ(m.per_class[1].fn, 1u);
    EXPECT_EQ(m.per_class[1].tn, 1u);
    EXPECT_DOUBLE_EQ(m.per_class[1].precision, 1.0);
    EXPECT_DOUBLE_EQ(m.per_class[1].recall, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(m.per_class[1].f1, 0.8);
    EXPECT_DOUBLE_EQ(m.per_class[0].precision, 0.5);
    EXPECT_DOUBLE_EQ(m.per_class[0].recall, 1.0);
    EXPECT_DOUBLE_EQ(m.accuracy, 0.75);
    EXPECT_DOUBLE_EQ(m.macro_f1, (0.8 + 2.0 / 3.0) / 2.0);
    EXPECT_EQ(m.confusion, (std::vector<std::vector<std::size_t>>{{1, 0}, {1, 2}}));
    const auto j = m.to_json();
    EXPECT_EQ(j.at("total"), 4);
    EXPECT_DOUBLE_EQ(j.at("macro").at("recall").get<double>(), (1.0 + 2.0 / 3.0) / 2.0);
}

TEST(Metrics, AbsentClassScoresZero) {
    const std::vector<std::size_t> truth = {0, 0, 1, 1};
    const std::vector<std::size_t> pred = {0, 1, 1, 1};
    const auto m = compute_metrics(truth, pred, 4);
    for (std::size_t c : {2u, 3u}) {
        EXPECT_EQ(m.per_class[c].precision, 0.0);
        EXPECT_EQ(m.per_class[c].recall, 0.0);
        EXPECT_EQ(m.per_class[c].f1, 0.0);
    }
    EXPECT_THROW(compute_metrics(truth, std::vector<std::size_t>{0, 1}, 4), ShapeError);
}

TEST(Metrics, RandomPropertyChecks) {
    Rng rng(30);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t c = 2 + rng.index(9);
        const std::size_t n = 1 + rng.index(60);
        std::vector<std::size_t> truth(n), pred(n);
        for (std::size_t i = 0; i < n; ++i) {
            truth[i] = rng.index(c);
            pred[i] = rng.bernoulli(0.6) ? truth[i] : rng.index(c);
        }
        const auto m = compute_metrics(truth, pred, c);
        std::size_t correct = 0, cells = 0;
        for (std::size_t i = 0; i < n; ++i) correct += truth[i] == pred[i];
        for (const auto& row : m.confusion) cells += std::accumulate(row.begin(), row.end(), std::size_t{0});
        ASSERT_EQ(cells, n);
        ASSERT_DOUBLE_EQ(m.accuracy, static_cast<double>(correct) / static_cast<double>(n));
        for (const auto& k : m.per_class) {
            ASSERT_EQ(k.tp + k.fp + k.fn + k.tn, n);
            ASSERT_GE(k.f1, std::min(k.precision, k.recall) - 1e-12);
            ASSERT_LE(k.f1, std::max(k.precision, k.recall) + 1e-12);
        }

        // Relabelling classes permutes the per-class rows and leaves macro scores alone.
        std::vector<std::size_t> perm(c);
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(perm);
        std::vector<std::size_t> t2(n), p2(n);
        for (std::size_t i = 0; i < n; ++i) {
            t2[i] = perm[truth[i]];
            p2[i] = perm[pred[i]];
        }
        const auto m2 = compute_metrics(t2, p2, c);
        ASSERT_NEAR(m2.macro_f1, m.macro_f1, 1e-12);
        ASSERT_NEAR(m2.macro_precision, m.macro_precision, 1e-12);
        for (std::size_t k = 0; k < c; ++k) ASSERT_DOUBLE_EQ(m2.per_class[perm[k]].f1, m.per_class[k].f1);
    }
}
