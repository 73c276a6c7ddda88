#include "multicred/cli.hpp"

#include <algorithm>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "multicred/autoencoder.hpp"
#include "multicred/classifier.hpp"
#include "multicred/csv.hpp"
#include "multicred/embedding.hpp"
#include "multicred/features.hpp"
#include "multicred/ingest.hpp"
#include "multicred/model_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace multicred::cli {
namespace {

constexpr std::string_view kClassifierKind = "multicred_classifier";

// Independent streams for the stages that consume randomness.
enum class Stream : std::uint64_t { split = 1, autoencoder, smote, init, shuffle };

std::uint64_t derive_seed(std::uint64_t seed, Stream stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(stream);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

json embedder_to_json(const EmbedderSpec& spec) {
    json j = {{"kind", spec.kind == EmbedderKind::hash ? "hash" : "remote"}, {"hash_seed", spec.hash_seed}};
    if (spec.endpoint) j["endpoint"] = *spec.endpoint;
    return j;
}

EmbedderSpec embedder_from_json(const json& j) {
    EmbedderSpec spec;
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "hash") {
        spec.kind = EmbedderKind::hash;
    } else if (kind == "remote") {
        spec.kind = EmbedderKind::remote;
    } else {
        throw ParseError("unknown embedder kind '" + kind + "'");
    }
    spec.hash_seed = j.value("hash_seed", std::uint64_t{0});
    if (j.contains("endpoint")) spec.endpoint = j.at("endpoint").get<std::string>();
    spec.validate();
    return spec;
}

EmbedderSpec embedder_from_config(const RunConfig& cfg) {
    EmbedderSpec spec;
    if (cfg.embedder == "hash") {
        spec.kind = EmbedderKind::hash;
    } else if (cfg.embedder == "remote") {
        spec.kind = EmbedderKind::remote;
    } else {
        throw DomainError("--embedder must be 'hash' or 'remote', got '" + cfg.embedder + "'");
    }
    if (!cfg.endpoint.empty()) spec.endpoint = cfg.endpoint;
    spec.hash_seed = cfg.hash_seed;
    spec.validate();
    return spec;
}

void require_file(const fs::path& p) {
    std::error_code ec;
    if (!fs::is_regular_file(p, ec)) throw IoError("missing input file " + p.string());
}

void require_dir(const fs::path& p) {
    std::error_code ec;
    if (!fs::is_directory(p, ec)) throw IoError("missing input directory " + p.string());
}

void require_set(const fs::path& p, const char* flag) {
    if (p.empty()) throw DomainError(std::string(flag) + " is required");
}

void ensure_parent(const fs::path& file) {
    const auto parent = file.parent_path();
    if (parent.empty()) return;
    std::error_code ec;
    fs::create_directories(parent, ec);
    if (ec) throw IoError("cannot create directory " + parent.string() + ": " + ec.message());
}

LabeledDataset to_labeled(std::vector<UserFeatureVector> vectors, const std::vector<std::size_t>& labels,
                          std::span<const std::size_t> idx, std::size_t num_classes) {
    LabeledDataset d;
    d.num_classes = num_classes;
    for (auto i : idx) d.samples.push_back({std::move(vectors[i]), labels[i]});
    return d;
}

int cmd_generate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    require_set(cfg.out, "--out");
    SyntheticConfig sc;
    sc.num_users = cfg.users;
    sc.num_classes = cfg.classes;
    sc.tweets_per_user = cfg.tweets;
    sc.comments_per_user = cfg.comments;
    sc.class_separation = cfg.separation;
    sc.seed = cfg.seed;
    const auto records = generate_synthetic(sc);
    const auto manifest = write_dataset(records, cfg.out);
    err << "generate: wrote " << manifest.user_ids.size() << " users to " << cfg.out.string() << "\n";
    out << json{{"users", manifest.user_ids.size()}, {"root", cfg.out.string()}}.dump() << "\n";
    return kOk;
}

int cmd_prepare(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    require_set(cfg.input, "--input");
    require_set(cfg.out, "--out");
    require_dir(cfg.input);
    if (!cfg.autoencoder.empty()) require_file(cfg.autoencoder);
    const ClassificationSystem system(cfg.classes);
    const auto num_classes = static_cast<std::size_t>(cfg.classes);
    const EmbedderSpec embedder = embedder_from_config(cfg);

    const auto loaded = load_dataset(cfg.input);
    const auto& records = loaded.records;
    std::vector<std::size_t> labels;
    labels.reserve(records.size());
    for (const auto& r : records) {
        if (!r.score) throw DomainError("user " + r.user_id + " has no score; prepare needs a labeled dataset");
        labels.push_back(static_cast<std::size_t>(bin_score(*r.score, system)));
    }
    const auto parts = split_indices(labels, num_classes, derive_seed(cfg.seed, Stream::split));
    err << "prepare: " << records.size() << " users, split " << parts.train.size() << "/" << parts.validation.size()
        << "/" << parts.test.size() << " (train/validation/test)\n";

    FeatureExtractor fx;
    fx.embedder = embedder;
    std::vector<Matrix> embeddings(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) embeddings[i] = tweet_embeddings(records[i], fx);

    Autoencoder ae = Autoencoder::untrained(derive_seed(cfg.seed, Stream::autoencoder));
    if (!cfg.autoencoder.empty()) {
        ae = Autoencoder::from_json(read_json_file(cfg.autoencoder));
        if (!ae.trained()) throw StateError("autoencoder " + cfg.autoencoder.string() + " is not trained");
    } else {
        std::size_t rows = 0;
        for (auto i : parts.train) rows += embeddings[i].rows();
        if (rows < 2) throw DomainError("training users have fewer than 2 tweets; cannot fit the autoencoder");
        Matrix corpus(rows, kEmbeddingDim);
        std::size_t at = 0;
        for (auto i : parts.train) {
            const auto& e = embeddings[i];
            std::copy(e.data().begin(), e.data().end(), corpus.data().begin() + static_cast<std::ptrdiff_t>(at));
            at += e.size();
        }
        AutoencoderConfig ac;
        ac.epochs = cfg.ae_epochs;
        ac.batch_size = cfg.ae_batch;
        ac.seed = derive_seed(cfg.seed, Stream::autoencoder);
        auto trained = train_autoencoder(corpus, ac);
        err << "prepare: autoencoder on " << rows << " tweets, loss " << trained.loss_history.front() << " -> "
            << trained.loss_history.back() << "\n";
        ae = std::move(trained.autoencoder);
    }
    fx.autoencoder = &ae;

    auto vectors = build_user_vectors(records, fx, nullptr, embeddings);
    Matrix train_scalars(parts.train.size(), kScalarFeatures);
    for (std::size_t r = 0; r < parts.train.size(); ++r) {
        const auto& v = vectors[parts.train[r]].values;
        std::copy(v.begin(), v.begin() + kScalarFeatures, train_scalars.row(r).begin());
    }
    const auto stats = fit_minmax(train_scalars);
    for (auto& v : vectors) normalize_scalars(v, stats);

    auto train = to_labeled(vectors, labels, parts.train, num_classes);
    const auto validation = to_labeled(vectors, labels, parts.validation, num_classes);
    const auto test = to_labeled(vectors, labels, parts.test, num_classes);
    const auto before = train.class_counts();
    auto balanced = smote(train, cfg.smote_k, derive_seed(cfg.seed, Stream::smote));
    const auto after = balanced.data.class_counts();

    const fs::path dir = cfg.out;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
    write_json_file(dir / "autoencoder.json", ae.to_json());
    write_json_file(dir / "normalization.json", stats.to_json(), 1);
    write_json_file(dir / "feature_layout.json", feature_layout_json(), 1);
    write_feature_csv(dir / "train.csv", balanced.data);
    write_feature_csv(dir / "validation.csv", validation);
    write_feature_csv(dir / "test.csv", test);

    const json manifest = {{"num_classes", num_classes},
                           {"users", records.size()},
                           {"seed", cfg.seed},
                           {"embedder", embedder_to_json(embedder)},
                           {"smote_k", cfg.smote_k},
                           {"feature_layout_version", kFeatureLayoutVersion},
                           {"split", {{"train", parts.train.size()},
                                      {"validation", parts.validation.size()},
                                      {"test", parts.test.size()}}},
                           {"train_class_counts", before},
                           {"balanced_class_counts", after}};
    write_json_file(dir / "prepare.json", manifest, 1);
    out << manifest.dump() << "\n";
    return kOk;
}

int cmd_train(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    require_set(cfg.prepared, "--prepared");
    require_dir(cfg.prepared);
    const fs::path dir = cfg.prepared;
    for (const char* f : {"prepare.json", "train.csv", "validation.csv", "autoencoder.json", "normalization.json"}) {
        require_file(dir / f);
    }
    const auto manifest = read_json_file(dir / "prepare.json");
    const auto num_classes = manifest.at("num_classes").get<std::size_t>();
    const auto embedder = embedder_from_json(manifest.at("embedder"));

    SplitDataset splits;
    splits.train = read_feature_csv(dir / "train.csv", num_classes);
    splits.validation = read_feature_csv(dir / "validation.csv", num_classes);

    TrainConfig tc;
    tc.max_epochs = cfg.max_epochs;
    tc.patience = cfg.patience;
    tc.batch_size = cfg.batch_size;
    tc.seed = derive_seed(cfg.seed, Stream::shuffle);
    tc.validate();

    auto model = build_multicred(num_classes, derive_seed(cfg.seed, Stream::init));
    auto result = train(std::move(model), splits, tc);
    const auto& h = result.history;
    const auto& best = h.epochs.at(h.best_epoch);
    err << "train: " << h.epochs.size() << " epochs" << (h.stopped_early ? " (early stop)" : "") << ", best epoch "
        << h.best_epoch << " val_accuracy " << best.val_accuracy << " train_loss " << best.train_loss << "\n";

    const fs::path model_path = cfg.out.empty() ? dir / "model.json" : cfg.out;
    const fs::path history_path = cfg.history.empty() ? model_path.parent_path() / "history.csv" : cfg.history;

    json artifact = make_artifact(kClassifierKind, result.model);
    artifact["num_classes"] = num_classes;
    artifact["feature_layout_version"] = kFeatureLayoutVersion;
    artifact["embedder"] = embedder_to_json(embedder);
    artifact["normalization"] = read_json_file(dir / "normalization.json");
    artifact["autoencoder"] = read_json_file(dir / "autoencoder.json");
    artifact["best_epoch"] = h.best_epoch;
    ensure_parent(model_path);
    write_json_file(model_path, artifact);
    ensure_parent(history_path);
    write_text_file(history_path, h.to_csv());

    out << json{{"model", model_path.string()},
                {"history", history_path.string()},
                {"epochs", h.epochs.size()},
                {"best_epoch", h.best_epoch},
                {"stopped_early", h.stopped_early},
                {"best_val_accuracy", best.val_accuracy}}
               .dump()
        << "\n";
    return kOk;
}

struct ClassifierBundle {
    nn::Model model;
    std::size_t num_classes = 0;
    EmbedderSpec embedder;
    NormalizationStats stats;
    Autoencoder autoencoder = Autoencoder::untrained(0);
};

ClassifierBundle load_bundle(const fs::path& path) {
    require_file(path);
    const auto doc = read_json_file(path);
    ClassifierBundle b;
    try {
        b.model = model_from_artifact(doc, kClassifierKind);
        if (doc.value("feature_layout_version", 0) != kFeatureLayoutVersion) {
            throw ParseError("feature layout version mismatch");
        }
        b.num_classes = doc.at("num_classes").get<std::size_t>();
        b.embedder = embedder_from_json(doc.at("embedder"));
        b.stats = NormalizationStats::from_json(doc.at("normalization"));
        b.autoencoder = Autoencoder::from_json(doc.at("autoencoder"));
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return b;
}

int cmd_evaluate(const RunConfig& cfg, std::ostream& out, std::ostream&) {
    require_set(cfg.model, "--model");
    const fs::path features = cfg.input.empty() ? cfg.prepared / (cfg.split + ".csv") : cfg.input;
    if (cfg.input.empty()) require_set(cfg.prepared, "--prepared or --input");
    if (cfg.split != "test" && cfg.split != "validation" && cfg.split != "train") {
        throw DomainError("--split must be test, validation or train");
    }
    const auto bundle = load_bundle(cfg.model);
    require_file(features);
    const auto test = read_feature_csv(features, bundle.num_classes);
    const auto report = evaluate(bundle.model, test).to_json();
    const auto text = report.dump(2) + "\n";
    if (!cfg.out.empty()) {
        ensure_parent(cfg.out);
        write_text_file(cfg.out, text);
    }
    out << text;
    return kOk;
}

int cmd_predict(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    require_set(cfg.model, "--model");
    require_set(cfg.input, "--input");
    require_dir(cfg.input);
    const auto bundle = load_bundle(cfg.model);
    const auto loaded = load_dataset(cfg.input);

    FeatureExtractor fx;
    fx.embedder = bundle.embedder;
    fx.autoencoder = &bundle.autoencoder;
    const auto vectors = build_user_vectors(loaded.records, fx, &bundle.stats);
    Matrix x(vectors.size(), kUserFeatures);
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        std::copy(vectors[i].values.begin(), vectors[i].values.end(), x.row(i).begin());
    }
    const Matrix probs = vectors.empty() ? Matrix(0, bundle.num_classes) : predict_batch(bundle.model, x);

    std::string text = "user_id";
    for (std::size_t c = 0; c < bundle.num_classes; ++c) text += ",p_class" + std::to_string(c);
    text += ",predicted_class\n";
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        text += vectors[i].user_id;
        for (double p : probs.row(i)) text += "," + csv::format_double(p);
        text += "," + std::to_string(argmax(probs.row(i))) + "\n";
    }
    if (cfg.out.empty()) {
        out << text;
    } else {
        ensure_parent(cfg.out);
        write_text_file(cfg.out, text);
        err << "predict: " << vectors.size() << " users -> " << cfg.out.string() << "\n";
    }
    return kOk;
}

// Turns `--config` JSON entries into flags for every option the command line
// leaves unset.
std::vector<std::string> merge_config(const std::vector<std::string>& args, CLI::App& app, std::string& error) {
    std::string command;
    std::string config_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        const auto& a = args[i];
        if (command.empty() && !a.empty() && a[0] != '-') command = a;
        if (a == "--config" && i + 1 < args.size()) config_path = args[i + 1];
        if (a.rfind("--config=", 0) == 0) config_path = a.substr(9);
    }
    if (config_path.empty() || command.empty()) return args;

    CLI::App* sub = nullptr;
    try {
        sub = app.get_subcommand(command);
    } catch (const CLI::OptionNotFound&) {
        return args;
    }
    std::set<std::string> known_anywhere;
    for (auto* s : app.get_subcommands({})) {
        for (auto* o : s->get_options()) {
            for (const auto& n : o->get_lnames()) known_anywhere.insert(n);
        }
    }
    std::set<std::string> known_here;
    for (auto* o : sub->get_options()) {
        for (const auto& n : o->get_lnames()) known_here.insert(n);
    }

    const auto doc = read_json_file(config_path);
    if (!doc.is_object()) throw ParseError(config_path + ": config must be a JSON object");
    std::vector<std::string> merged = args;
    for (const auto& [key, value] : doc.items()) {
        if (key == "config") continue;
        if (!known_anywhere.contains(key)) {
            error = config_path + ": unknown config key '" + key + "'";
            return {};
        }
        if (!known_here.contains(key)) continue;
        const std::string flag = "--" + key;
        const bool given = std::any_of(args.begin(), args.end(),
                                       [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
        if (given) continue;
        merged.push_back(flag);
        merged.push_back(value.is_string() ? value.get<std::string>() : value.dump());
    }
    return merged;
}

}  // namespace

int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    CLI::App app{"Multi-class credibility classification of social media users"};
    app.name(argv.empty() ? "multicred" : fs::path(argv.front()).filename().string());
    app.require_subcommand(1);

    auto add_config = [&](CLI::App* s) { s->add_option("--config", cfg.config, "JSON file with default option values"); };
    auto add_seed = [&](CLI::App* s) { s->add_option("--seed", cfg.seed, "Seed for every random choice"); };

    auto* gen = app.add_subcommand("generate", "Write a labeled synthetic dataset");
    gen->add_option("--users", cfg.users, "Number of users")->check(CLI::PositiveNumber);
    gen->add_option("--classes", cfg.classes, "Credibility levels (4, 6, 8 or 10)");
    gen->add_option("--tweets", cfg.tweets, "Tweets per user");
    gen->add_option("--comments", cfg.comments, "Comments per user");
    gen->add_option("--separation", cfg.separation, "Class separation in [0, 1]");
    gen->add_option("--out", cfg.out, "Dataset root to write");
    add_seed(gen);
    add_config(gen);

    auto* prep = app.add_subcommand("prepare", "Extract features, fit autoencoder and normalization, split, SMOTE");
    prep->add_option("--input", cfg.input, "Dataset root");
    prep->add_option("--out", cfg.out, "Directory for prepared artifacts");
    prep->add_option("--classes", cfg.classes, "Credibility levels (4, 6, 8 or 10)");
    prep->add_option("--embedder", cfg.embedder, "hash or remote");
    prep->add_option("--endpoint", cfg.endpoint, "Embedding service URL for the remote embedder");
    prep->add_option("--hash-seed", cfg.hash_seed, "Seed of the hashing embedder");
    prep->add_option("--autoencoder", cfg.autoencoder, "Use this trained autoencoder instead of fitting one");
    prep->add_option("--ae-epochs", cfg.ae_epochs, "Autoencoder epochs")->check(CLI::PositiveNumber);
    prep->add_option("--ae-batch", cfg.ae_batch, "Autoencoder batch size")->check(CLI::PositiveNumber);
    prep->add_option("--smote-k", cfg.smote_k, "Neighbours considered by SMOTE")->check(CLI::PositiveNumber);
    add_seed(prep);
    add_config(prep);

    auto* tr = app.add_subcommand("train", "Train the classifier on prepared features");
    tr->add_option("--prepared", cfg.prepared, "Output directory of prepare");
    tr->add_option("--out", cfg.out, "Model file (default <prepared>/model.json)");
    tr->add_option("--history", cfg.history, "History CSV (default next to the model)");
    tr->add_option("--max-epochs", cfg.max_epochs, "Upper bound on epochs");
    tr->add_option("--patience", cfg.patience, "Epochs without validation improvement before stopping");
    tr->add_option("--batch-size", cfg.batch_size, "Mini-batch size");
    add_seed(tr);
    add_config(tr);

    auto* ev = app.add_subcommand("evaluate", "Report metrics on a labeled feature split");
    ev->add_option("--model", cfg.model, "Model file written by train");
    ev->add_option("--prepared", cfg.prepared, "Output directory of prepare");
    ev->add_option("--split", cfg.split, "Which prepared split to score (test, validation, train)");
    ev->add_option("--input", cfg.input, "Feature CSV to score instead of a prepared split");
    ev->add_option("--out", cfg.out, "Also write the report here");
    add_config(ev);

    auto* pr = app.add_subcommand("predict", "Class probabilities for every user of a dataset");
    pr->add_option("--model", cfg.model, "Model file written by train");
    pr->add_option("--input", cfg.input, "Dataset root");
    pr->add_option("--out", cfg.out, "CSV to write (default standard output)");
    add_config(pr);

    try {
        std::string config_error;
        auto args = merge_config(std::vector<std::string>(argv.begin() + (argv.empty() ? 0 : 1), argv.end()), app,
                                 config_error);
        if (!config_error.empty()) {
            err << config_error << "\n";
            return kValidationError;
        }
        std::reverse(args.begin(), args.end());
        try {
            app.parse(args);
        } catch (const CLI::ParseError& e) {
            const int code = app.exit(e, out, err);
            return code == 0 ? kOk : kValidationError;
        }

        if (gen->parsed()) return cmd_generate(cfg, out, err);
        if (prep->parsed()) return cmd_prepare(cfg, out, err);
        if (tr->parsed()) return cmd_train(cfg, out, err);
        if (ev->parsed()) return cmd_evaluate(cfg, out, err);
        if (pr->parsed()) return cmd_predict(cfg, out, err);
        return kValidationError;
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return kIoError;
    } catch (const DatasetError& e) {
        err << "error: " << e.what() << "\n";
        return kIoError;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kIoError;
    } catch (const TransportError& e) {
        err << "error: " << e.what() << "\n";
        return kIoError;
    } catch (const ProtocolError& e) {
        err << "error: " << e.what() << "\n";
        return kIoError;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kValidationError;
    }
}

int run(const std::vector<std::string>& args) { return run(args, std::cout, std::cerr); }

}  // namespace multicred::cli
