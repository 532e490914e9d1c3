#pragma once

// Experiment orchestration: dataset sources, method runs across seeds,
// rank aggregation, shipped hyperparameter presets and report emission.

#include "ttgan/classify.hpp"
#include "ttgan/core.hpp"
#include "ttgan/data.hpp"
#include "ttgan/gan.hpp"
#include "ttgan/metrics.hpp"
#include "ttgan/preprocess.hpp"
#include "ttgan/resample.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace ttgan::harness {

// ---------------------------------------------------------------------------
// Two moons
// ---------------------------------------------------------------------------

struct TwoMoonsSpec {
    std::size_t n_majority = 500;
    std::size_t n_minority = 50;
    double noise = 0.1;
    std::uint64_t seed = 0;
};

/// Upper arc (cos t, sin t) is the majority class, lower arc
/// (1 - cos t, 0.5 - sin t) the minority; t is evenly spaced on [0, pi] and
/// Gaussian noise is added per coordinate.
inline Dataset make_two_moons(const TwoMoonsSpec& spec) {
    if (spec.n_minority < 1 || spec.n_majority < 1) {
        throw config_error("two moons: both classes need at least one point");
    }
    if (!(spec.noise >= 0.0)) {
        throw config_error("two moons: noise must be non-negative");
    }
    Rng rng(spec.seed);
    Dataset d;
    d.name = "two_moons";
    d.class_labels = {"majority", "minority"};
    d.meta = {FeatureMeta{"x1", FeatureKind::numeric, {}, "?"}, FeatureMeta{"x2", FeatureKind::numeric, {}, "?"}};
    const std::size_t n = spec.n_majority + spec.n_minority;
    d.x.resize(static_cast<Index>(n), 2);
    d.y.resize(n);
    auto angle = [](std::size_t i, std::size_t count) {
        return count == 1 ? 0.0 : std::numbers::pi * static_cast<double>(i) / static_cast<double>(count - 1);
    };
    for (std::size_t i = 0; i < spec.n_majority; ++i) {
        const double t = angle(i, spec.n_majority);
        d.x(static_cast<Index>(i), 0) = std::cos(t);
        d.x(static_cast<Index>(i), 1) = std::sin(t);
        d.y[i] = 0;
    }
    for (std::size_t i = 0; i < spec.n_minority; ++i) {
        const double t = angle(i, spec.n_minority);
        const auto row = static_cast<Index>(spec.n_majority + i);
        d.x(row, 0) = 1.0 - std::cos(t);
        d.x(row, 1) = 0.5 - std::sin(t);
        d.y[spec.n_majority + i] = 1;
    }
    if (spec.noise > 0.0) {
        for (Index i = 0; i < d.x.rows(); ++i) {
            d.x(i, 0) += spec.noise * rng.normal();
            d.x(i, 1) += spec.noise * rng.normal();
        }
    }
    return d;
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

struct Preset {
    std::string name;
    std::size_t epochs = 0;
    double lambda_t = 0.0;
    double lambda_c = 0.0;
    double lambda_i = 0.0;
    double s = 0.0;
    double p_max = 0.0;
    std::string classifier;  // "linear_svm" or "catboost"
    bool executable = true;  // catboost rows are shipped as data only
};

inline const std::vector<Preset>& presets() {
    static const std::vector<Preset> table = {
        {"abalone9-18", 1150, 0.1, 0, 0, 4, 0.8, "linear_svm", true},
        {"abalone19", 250, 0.05, 10, 5, 16, 0.9, "linear_svm", true},
        {"glass-0-1-6_vs_2", 2500, 0.05, 15, 0, 5.5, 0.9, "linear_svm", true},
        {"glass2", 2500, 0.1, 0, 2.5, 6.5, 0.8, "linear_svm", true},
        {"glass4", 900, 0, 15, 7.5, 5.5, 0.8, "linear_svm", true},
        {"page-blocks-1-3_vs_4", 900, 0.05, 5, 5, 5.5, 0.7, "linear_svm", true},
        {"yeast-0-5-6-7-9_vs_4", 900, 0, 5, 2.5, 6.5, 0.8, "linear_svm", true},
        {"yeast-1_vs_7", 2500, 0.05, 0, 0, 1.3, 0.8, "linear_svm", true},
        {"yeast-1-2-8-9_vs_7", 1150, 0.05, 10, 5, 4, 1, "linear_svm", true},
        {"yeast-1-4-5-8_vs_7", 900, 0.1, 15, 0, 1.65, 0.7, "linear_svm", true},
        {"yeast-2_vs_4", 500, 0.1, 15, 0, 1.8, 0.6, "linear_svm", true},
        {"yeast-2_vs_8", 1300, 0.05, 10, 10, 4, 0.6, "linear_svm", true},
        {"yeast4", 1000, 0.05, 10, 0, 4, 1, "linear_svm", true},
        {"yeast5", 1450, 0.05, 0, 0, 4, 0.6, "linear_svm", true},
        {"yeast6", 2500, 0.15, 0, 5, 7.5, 0.6, "linear_svm", true},
        {"Churn", 700, 0.2, 20, 12, 0.33, 0, "catboost", false},
        {"Task 1 Return", 500, 0, 4, 6, 0.215, 0, "catboost", false},
        {"Task 1 Pay", 700, 0.05, 16, 0, 0.24, 0.85, "catboost", false},
        {"Task 2 Return", 700, 0.05, 10, 6, 0.25, 0.5, "catboost", false},
        {"Task 2 Pay", 700, 0.25, 10, 3, 0.75, 0.5, "catboost", false},
    };
    return table;
}

inline const Preset& load_preset(const std::string& name) {
    for (const auto& p : presets()) {
        if (p.name == name) {
            return p;
        }
    }
    std::string available;
    for (const auto& p : presets()) {
        available += (available.empty() ? "" : ", ") + p.name;
    }
    throw config_error("unknown preset '" + name + "'; available: " + available);
}

inline void apply_preset(const Preset& p, gan::TtganConfig& gan_cfg, resample::SelectionConfig& sel_cfg) {
    if (!p.executable) {
        throw config_error("preset '" + p.name + "' targets the " + p.classifier +
                           " classifier, which is not available");
    }
    gan_cfg.epochs = p.epochs;
    gan_cfg.coefficients = {p.lambda_t, p.lambda_c, p.lambda_i};
    sel_cfg.s = p.s;
    sel_cfg.p_max = p.p_max;
}

inline nlohmann::json to_json(const Preset& p) {
    return {{"name", p.name},         {"epochs", p.epochs}, {"lambda_T", p.lambda_t},
            {"lambda_C", p.lambda_c}, {"lambda_I", p.lambda_i}, {"s", p.s},
            {"p_max", p.p_max},       {"classifier", p.classifier}, {"executable", p.executable}};
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

enum class Method { rw, ros, smote, bsmote, vanilla_gan, ttgan };

inline Method method_from_string(const std::string& s) {
    if (s == "rw") return Method::rw;
    if (s == "ros") return Method::ros;
    if (s == "smote") return Method::smote;
    if (s == "bsmote") return Method::bsmote;
    if (s == "vanilla_gan") return Method::vanilla_gan;
    if (s == "ttgan") return Method::ttgan;
    throw config_error("unknown method '" + s + "' (expected rw, ros, smote, bsmote, vanilla_gan, ttgan)");
}

inline std::string to_string(Method m) {
    switch (m) {
        case Method::rw: return "rw";
        case Method::ros: return "ros";
        case Method::smote: return "smote";
        case Method::bsmote: return "bsmote";
        case Method::vanilla_gan: return "vanilla_gan";
        case Method::ttgan: return "ttgan";
    }
    return "rw";
}

struct DatasetSource {
    std::string format = "keel";  // keel | csv | two_moons
    std::string path;
    std::string label_column = "class";
    std::string minority_label;
    std::optional<std::string> missing_token;
    TwoMoonsSpec moons;
};

struct MethodSpec {
    std::string label;
    Method method = Method::rw;
    gan::TtganConfig gan;
    resample::SelectionConfig selection;
    classify::LinearSvmConfig svm;
    std::size_t smote_k = 5;
    std::size_t bsmote_m = 10;
};

struct ExperimentConfig {
    std::string name = "experiment";
    DatasetSource dataset;
    preprocess::PreprocessOptions preprocessing;
    SplitSpec split;
    std::vector<MethodSpec> methods;
    std::vector<std::uint64_t> seeds{0};
    std::vector<std::string> metrics{"map", "auc_roc", "precision_at_recall"};
    double recall_floor = 0.4;
    std::string output_dir;
    bool write_loss_histories = true;

    void validate() const {
        if (methods.empty()) throw config_error("experiment needs at least one method");
        if (seeds.empty()) throw config_error("experiment needs at least one seed");
        std::set<std::string> labels;
        for (const auto& m : methods) {
            if (!labels.insert(m.label).second) {
                throw config_error("duplicate method label '" + m.label + "'");
            }
        }
        for (const auto& m : metrics) {
            if (m != "map" && m != "auc_roc" && m != "precision_at_recall") {
                throw config_error("unknown metric '" + m + "'");
            }
        }
    }
};

namespace detail {

inline void apply_method_overrides(const nlohmann::json& j, MethodSpec& m) {
    if (j.contains("preset")) {
        apply_preset(load_preset(j.at("preset").get<std::string>()), m.gan, m.selection);
    }
    if (j.contains("ttgan")) m.gan = gan::ttgan_config_from_json(j.at("ttgan"), m.gan);
    if (j.contains("selection")) {
        const auto& s = j.at("selection");
        if (s.contains("p_max")) m.selection.p_max = s.at("p_max").get<double>();
        if (s.contains("s")) m.selection.s = s.at("s").get<double>();
        if (s.contains("variant")) m.selection.variant = resample::variant_from_string(s.at("variant").get<std::string>());
    }
    if (j.contains("svm")) m.svm = classify::svm_config_from_json(j.at("svm"), m.svm);
    if (j.contains("smote") && j.at("smote").contains("k")) m.smote_k = j.at("smote").at("k").get<std::size_t>();
    if (j.contains("bsmote")) {
        const auto& b = j.at("bsmote");
        if (b.contains("k")) m.smote_k = b.at("k").get<std::size_t>();
        if (b.contains("m")) m.bsmote_m = b.at("m").get<std::size_t>();
    }
}

}  // namespace detail

/// Reads the experiment document. Top-level `preset`, `ttgan`, `selection`,
/// `svm`, `smote` and `bsmote` sections are defaults that every method entry
/// may override.
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    if (j.contains("name")) c.name = j.at("name").get<std::string>();
    if (j.contains("dataset")) {
        const auto& d = j.at("dataset");
        if (d.contains("format")) c.dataset.format = d.at("format").get<std::string>();
        if (d.contains("path")) c.dataset.path = d.at("path").get<std::string>();
        if (d.contains("label_column")) c.dataset.label_column = d.at("label_column").get<std::string>();
        if (d.contains("minority_label")) c.dataset.minority_label = d.at("minority_label").get<std::string>();
        if (d.contains("missing_token")) c.dataset.missing_token = d.at("missing_token").get<std::string>();
        if (d.contains("two_moons")) {
            const auto& m = d.at("two_moons");
            if (m.contains("n_majority")) c.dataset.moons.n_majority = m.at("n_majority").get<std::size_t>();
            if (m.contains("n_minority")) c.dataset.moons.n_minority = m.at("n_minority").get<std::size_t>();
            if (m.contains("noise")) c.dataset.moons.noise = m.at("noise").get<double>();
            if (m.contains("seed")) c.dataset.moons.seed = m.at("seed").get<std::uint64_t>();
        }
    }
    if (j.contains("preprocess")) {
        const auto& p = j.at("preprocess");
        if (p.contains("impute_mode")) c.preprocessing.impute_mode = p.at("impute_mode").get<bool>();
        if (p.contains("yeo_johnson")) c.preprocessing.yeo_johnson = p.at("yeo_johnson").get<bool>();
    }
    if (j.contains("split")) {
        const auto& s = j.at("split");
        if (s.contains("train")) c.split.train_fraction = s.at("train").get<double>();
        if (s.contains("val")) c.split.val_fraction = s.at("val").get<double>();
        if (s.contains("test")) c.split.test_fraction = s.at("test").get<double>();
        if (s.contains("stratified")) c.split.stratified = s.at("stratified").get<bool>();
    }
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("metrics")) c.metrics = j.at("metrics").get<std::vector<std::string>>();
    if (j.contains("recall_floor")) c.recall_floor = j.at("recall_floor").get<double>();
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("write_loss_histories")) c.write_loss_histories = j.at("write_loss_histories").get<bool>();

    MethodSpec defaults;
    detail::apply_method_overrides(j, defaults);
    const nlohmann::json methods = j.contains("methods") ? j.at("methods") : nlohmann::json::array();
    for (const auto& entry : methods) {
        MethodSpec m = defaults;
        if (entry.is_string()) {
            m.method = method_from_string(entry.get<std::string>());
            m.label = entry.get<std::string>();
        } else {
            m.method = method_from_string(entry.at("method").get<std::string>());
            m.label = entry.contains("label") ? entry.at("label").get<std::string>() : to_string(m.method);
            detail::apply_method_overrides(entry, m);
        }
        m.gan.mode = m.method == Method::vanilla_gan ? gan::Mode::vanilla : gan::Mode::ttgan;
        c.methods.push_back(std::move(m));
    }
    c.validate();
    return c;
}

inline nlohmann::json to_json(const MethodSpec& m) {
    nlohmann::json j{{"label", m.label}, {"method", to_string(m.method)}};
    j["svm"] = classify::to_json(classify::LinearSvmModel{Vector(), 0.0, m.svm}).at("config");
    if (m.method == Method::ttgan || m.method == Method::vanilla_gan) {
        j["ttgan"] = gan::to_json(m.gan);
        j["selection"] = {{"p_max", m.selection.p_max},
                          {"s", m.selection.s},
                          {"variant", resample::to_string(m.selection.variant)}};
    }
    if (m.method == Method::smote || m.method == Method::bsmote) j["k"] = m.smote_k;
    if (m.method == Method::bsmote) j["m"] = m.bsmote_m;
    return j;
}

inline nlohmann::json to_json(const ExperimentConfig& c) {
    nlohmann::json methods = nlohmann::json::array();
    for (const auto& m : c.methods) methods.push_back(to_json(m));
    nlohmann::json dataset{{"format", c.dataset.format},
                           {"path", c.dataset.path},
                           {"label_column", c.dataset.label_column},
                           {"minority_label", c.dataset.minority_label}};
    if (c.dataset.format == "two_moons") {
        dataset["two_moons"] = {{"n_majority", c.dataset.moons.n_majority},
                                {"n_minority", c.dataset.moons.n_minority},
                                {"noise", c.dataset.moons.noise},
                                {"seed", c.dataset.moons.seed}};
    }
    return {{"name", c.name},
            {"dataset", dataset},
            {"preprocess", {{"impute_mode", c.preprocessing.impute_mode}, {"yeo_johnson", c.preprocessing.yeo_johnson}}},
            {"split",
             {{"train", c.split.train_fraction},
              {"val", c.split.val_fraction},
              {"test", c.split.test_fraction},
              {"stratified", c.split.stratified}}},
            {"methods", methods},
            {"seeds", c.seeds},
            {"metrics", c.metrics},
            {"recall_floor", c.recall_floor}};
}

inline Dataset load_dataset(const DatasetSource& src) {
    if (src.format == "keel") {
        return load_keel(src.path, src.missing_token.value_or("?"));
    }
    if (src.format == "csv") {
        return load_csv(src.path, src.label_column, src.minority_label, src.missing_token.value_or(""));
    }
    if (src.format == "two_moons") {
        return make_two_moons(src.moons);
    }
    throw config_error("unknown dataset format '" + src.format + "'");
}

// ---------------------------------------------------------------------------
// Runs
// ---------------------------------------------------------------------------

struct RunRecord {
    std::string method;
    std::uint64_t seed = 0;
    std::optional<std::string> failure;
    std::map<std::string, double> metrics;
    std::size_t synthetic_rows = 0;
    std::optional<std::size_t> generated;  // GAN methods
    std::optional<classify::ScoreSummary> generated_scores;
    std::optional<gan::LossRecord> final_losses;
    std::vector<gan::LossRecord> loss_history;
    bool smote_fallback = false;
    // Provenance, in original dataset row indices.
    std::vector<std::size_t> fit_rows;        // rows that fed preprocessing, resampling and training
    std::vector<std::size_t> test_rows;
    std::vector<std::size_t> synthetic_sources;  // source rows of translated samples
    double wall_clock_seconds = 0.0;
};

struct MethodSummary {
    std::string method;
    std::map<std::string, double> mean;
    std::map<std::string, double> stddev;
    double mean_rank = 0.0;
    std::size_t failures = 0;
};

struct RunReport {
    ExperimentConfig config;
    std::string dataset_name;
    std::size_t dataset_rows = 0;
    double imbalance_ratio = 0.0;
    std::vector<RunRecord> runs;
    std::vector<MethodSummary> summary;
    double wall_clock_seconds = 0.0;
};

/// Ranks with 1 = best (highest value); tied values share their mean rank.
inline std::vector<double> average_ranks(const std::vector<double>& values) {
    std::vector<std::size_t> order = iota_indices(values.size());
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
    std::vector<double> ranks(values.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && values[order[j]] == values[order[i]]) {
            ++j;
        }
        const double r = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
        for (std::size_t k = i; k < j; ++k) {
            ranks[order[k]] = r;
        }
        i = j;
    }
    return ranks;
}

struct PreparedSplit {
    DatasetSplit split;
    preprocess::PreprocessPipeline pipeline;
    std::shared_ptr<const TrainingSet> train;
    TrainingSet val;
    TrainingSet test;
};

inline PreparedSplit prepare(const Dataset& d, const ExperimentConfig& cfg, std::uint64_t seed) {
    SplitSpec spec = cfg.split;
    spec.seed = seed;
    PreparedSplit p;
    p.split = split(d, spec);
    p.pipeline = preprocess::fit(p.split.train, cfg.preprocessing);
    auto train = std::make_shared<TrainingSet>();
    train->x = preprocess::apply(p.pipeline, p.split.train);
    train->y = p.split.train.y;
    p.train = std::move(train);
    p.val = {preprocess::apply(p.pipeline, p.split.val), p.split.val.y};
    p.test = {preprocess::apply(p.pipeline, p.split.test), p.split.test.y};
    return p;
}

struct MethodOutcome {
    std::unique_ptr<classify::Classifier> classifier;
    std::optional<resample::AugmentedDataset> augmented;
    std::optional<classify::PipelineDiagnostics> diagnostics;
};

/// Fits one method on the training part. Seeds of every stochastic piece are
/// taken from `seed`.
inline MethodOutcome fit_method(const MethodSpec& m, std::shared_ptr<const TrainingSet> train, std::uint64_t seed) {
    MethodOutcome out;
    classify::LinearSvmConfig svm = m.svm;
    svm.seed = seed;
    const classify::LinearSvmClassifier prototype(svm);
    switch (m.method) {
        case Method::rw: {
            out.classifier = prototype.fresh();
            classify::fit_weighted(*out.classifier, *train, svm.class_weighting);
            break;
        }
        case Method::ros:
        case Method::smote:
        case Method::bsmote: {
            resample::AugmentedDataset a =
                m.method == Method::ros     ? resample::random_oversample(train, seed)
                : m.method == Method::smote ? resample::smote(train, m.smote_k, seed)
                                            : resample::borderline_smote(train, m.smote_k, m.bsmote_m, seed);
            out.classifier = prototype.fresh();
            classify::fit_weighted(*out.classifier, a.combined(), svm.class_weighting);
            out.augmented = std::move(a);
            break;
        }
        case Method::vanilla_gan:
        case Method::ttgan: {
            gan::TtganConfig g = m.gan;
            g.seed = seed;
            g.mode = m.method == Method::ttgan ? gan::Mode::ttgan : gan::Mode::vanilla;
            auto r = classify::run_algorithm_1(train, g, m.selection, prototype, svm.class_weighting);
            out.classifier = std::move(r.final);
            out.augmented = std::move(r.augmented);
            out.diagnostics = std::move(r.diagnostics);
            break;
        }
    }
    return out;
}

inline std::map<std::string, double> evaluate_scores(const std::vector<double>& scores, const std::vector<int>& labels,
                                                     const std::vector<std::string>& which, double recall_floor) {
    std::map<std::string, double> out;
    for (const auto& m : which) {
        if (m == "map") out[m] = metrics::average_precision(scores, labels);
        else if (m == "auc_roc") out[m] = metrics::auc_roc(scores, labels);
        else if (m == "precision_at_recall") out[m] = metrics::precision_at_recall(scores, labels, recall_floor);
    }
    return out;
}

inline RunRecord run_single(const Dataset& d, const ExperimentConfig& cfg, const MethodSpec& m, std::uint64_t seed) {
    const auto start = std::chrono::steady_clock::now();
    RunRecord r;
    r.method = m.label;
    r.seed = seed;
    try {
        PreparedSplit p = prepare(d, cfg, seed);
        r.fit_rows = p.split.indices.train;
        r.test_rows = p.split.indices.test;
        MethodOutcome o = fit_method(m, p.train, seed);
        r.metrics = evaluate_scores(o.classifier->score(p.test.x), p.test.y, cfg.metrics, cfg.recall_floor);
        if (o.augmented) {
            r.synthetic_rows = o.augmented->added();
            r.smote_fallback = o.augmented->fell_back_to_smote;
            for (const auto& src : o.augmented->provenance) {
                if (src) r.synthetic_sources.push_back(p.split.indices.train[*src]);
            }
        }
        if (o.diagnostics) {
            r.generated = o.diagnostics->generated;
            r.generated_scores = o.diagnostics->generated_scores;
            if (!o.diagnostics->loss_history.empty()) r.final_losses = o.diagnostics->loss_history.back();
            r.loss_history = std::move(o.diagnostics->loss_history);
        }
    } catch (const std::exception& e) {
        r.failure = e.what();
        r.metrics.clear();
    }
    r.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

inline std::vector<MethodSummary> summarize(const ExperimentConfig& cfg, const std::vector<RunRecord>& runs) {
    std::vector<MethodSummary> out;
    for (const auto& m : cfg.methods) {
        MethodSummary s;
        s.method = m.label;
        for (const auto& metric : cfg.metrics) {
            std::vector<double> v;
            for (const auto& r : runs) {
                if (r.method == m.label && !r.failure) v.push_back(r.metrics.at(metric));
            }
            if (v.empty()) continue;
            double mean = 0.0;
            for (double x : v) mean += x;
            mean /= static_cast<double>(v.size());
            double var = 0.0;
            for (double x : v) var += (x - mean) * (x - mean);
            s.mean[metric] = mean;
            s.stddev[metric] = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
        }
        for (const auto& r : runs) {
            if (r.method == m.label && r.failure) ++s.failures;
        }
        out.push_back(std::move(s));
    }
    // Mean rank over seeds on the first metric; a seed only counts when every
    // method succeeded on it.
    const std::string& rank_metric = cfg.metrics.front();
    std::vector<double> rank_sum(cfg.methods.size(), 0.0);
    std::size_t ranked = 0;
    for (std::uint64_t seed : cfg.seeds) {
        std::vector<double> values;
        for (const auto& m : cfg.methods) {
            auto it = std::find_if(runs.begin(), runs.end(),
                                   [&](const RunRecord& r) { return r.method == m.label && r.seed == seed; });
            if (it == runs.end() || it->failure) break;
            values.push_back(it->metrics.at(rank_metric));
        }
        if (values.size() != cfg.methods.size()) continue;
        const auto ranks = average_ranks(values);
        for (std::size_t k = 0; k < ranks.size(); ++k) rank_sum[k] += ranks[k];
        ++ranked;
    }
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k].mean_rank = ranked > 0 ? rank_sum[k] / static_cast<double>(ranked) : 0.0;
    }
    return out;
}

/// Every (method, seed) pair on a freshly split dataset. Failures are
/// recorded per run and do not stop the others.
inline RunReport run_experiment(const ExperimentConfig& cfg, const Dataset& d) {
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();
    RunReport report;
    report.config = cfg;
    report.dataset_name = d.name;
    report.dataset_rows = d.size();
    report.imbalance_ratio = imbalance_ratio(d);
    for (const auto& m : cfg.methods) {
        for (std::uint64_t seed : cfg.seeds) {
            report.runs.push_back(run_single(d, cfg, m, seed));
        }
    }
    report.summary = summarize(cfg, report.runs);
    report.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

inline RunReport run_experiment(const ExperimentConfig& cfg) { return run_experiment(cfg, load_dataset(cfg.dataset)); }

// ---------------------------------------------------------------------------
// Report output
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const classify::ScoreSummary& s) {
    return {{"min", s.min}, {"q1", s.q1}, {"median", s.median}, {"q3", s.q3}, {"max", s.max}, {"mean", s.mean}};
}

/// JSON report. Wall-clock fields are left out when `include_timing` is
/// false so two runs of one config compare byte for byte.
inline nlohmann::json to_json(const RunReport& r, bool include_timing = true) {
    using nlohmann::json;
    json runs = json::array();
    for (const auto& run : r.runs) {
        json j{{"method", run.method}, {"seed", run.seed}, {"synthetic_rows", run.synthetic_rows}};
        j["failure"] = run.failure ? json(*run.failure) : json(nullptr);
        j["metrics"] = run.metrics;
        if (run.generated) {
            j["generated"] = *run.generated;
            j["generated_scores"] = to_json(*run.generated_scores);
        }
        if (run.final_losses) j["final_losses"] = gan::to_json(*run.final_losses);
        if (run.smote_fallback) j["smote_fallback"] = true;
        if (include_timing) j["wall_clock_seconds"] = run.wall_clock_seconds;
        runs.push_back(j);
    }
    json summary = json::array();
    for (const auto& s : r.summary) {
        summary.push_back({{"method", s.method},
                           {"mean", s.mean},
                           {"stddev", s.stddev},
                           {"mean_rank", s.mean_rank},
                           {"failures", s.failures}});
    }
    json j{{"config", to_json(r.config)},
           {"dataset", {{"name", r.dataset_name}, {"rows", r.dataset_rows}, {"imbalance_ratio", r.imbalance_ratio}}},
           {"runs", runs},
           {"summary", summary}};
    if (include_timing) j["wall_clock_seconds"] = r.wall_clock_seconds;
    return j;
}

/// One row per (method, seed) with every metric column.
inline void write_runs_tsv(const RunReport& r, std::ostream& out) {
    out << "method\tseed";
    for (const auto& m : r.config.metrics) out << '\t' << m;
    out << "\tsynthetic_rows\tstatus\n";
    out.precision(10);
    for (const auto& run : r.runs) {
        out << run.method << '\t' << run.seed;
        for (const auto& m : r.config.metrics) {
            out << '\t';
            if (auto it = run.metrics.find(m); it != run.metrics.end()) out << it->second;
            else out << "NA";
        }
        out << '\t' << run.synthetic_rows << '\t' << (run.failure ? "failed" : "ok") << '\n';
    }
}

/// Writes report.json, runs.tsv and per-run loss histories into `dir`.
inline void write_report(const RunReport& r, const std::string& dir, bool include_timing = true) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    {
        std::ofstream out(fs::path(dir) / "report.json");
        out << to_json(r, include_timing).dump(2) << '\n';
    }
    {
        std::ofstream out(fs::path(dir) / "runs.tsv");
        write_runs_tsv(r, out);
    }
    if (r.config.write_loss_histories) {
        for (const auto& run : r.runs) {
            if (run.loss_history.empty()) continue;
            std::ofstream out(fs::path(dir) / ("losses_" + run.method + "_seed" + std::to_string(run.seed) + ".tsv"));
            gan::write_loss_history(run.loss_history, out);
        }
    }
}

// ---------------------------------------------------------------------------
// Scatter output
// ---------------------------------------------------------------------------

/// x, y, class rows for a 2-D training set plus its synthetic rows.
inline void emit_scatter(const TrainingSet& base, const Matrix& generated, std::ostream& out) {
    if (base.x.cols() != 2 || (generated.rows() > 0 && generated.cols() != 2)) {
        throw shape_error("scatter output needs exactly two feature columns");
    }
    out << "x\ty\tclass\n";
    out.precision(10);
    for (Index i = 0; i < base.x.rows(); ++i) {
        out << base.x(i, 0) << '\t' << base.x(i, 1) << '\t'
            << (base.y[static_cast<std::size_t>(i)] == 1 ? "minority" : "majority") << '\n';
    }
    for (Index i = 0; i < generated.rows(); ++i) {
        out << generated(i, 0) << '\t' << generated(i, 1) << "\tgenerated\n";
    }
}

inline void emit_scatter(const resample::AugmentedDataset& a, std::ostream& out) {
    emit_scatter(*a.base, a.synthetic, out);
}

inline void emit_scatter(const Dataset& d, std::ostream& out) {
    if (d.width() != 2 || d.meta[0].kind != FeatureKind::numeric || d.meta[1].kind != FeatureKind::numeric) {
        throw shape_error("scatter output needs exactly two numeric features");
    }
    emit_scatter(TrainingSet{d.x, d.y}, Matrix(0, 2), out);
}

inline void emit_scatter(const resample::AugmentedDataset& a, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw error("cannot write '" + path + "'");
    emit_scatter(a, out);
}

// ---------------------------------------------------------------------------
// Grid search
// ---------------------------------------------------------------------------

struct GridAxis {
    std::vector<std::size_t> epochs;
    std::vector<double> lambda_t, lambda_c, lambda_i, s, p_max;
};

struct GridPoint {
    MethodSpec method;
    double validation_map = 0.0;
    std::size_t failures = 0;
};

inline GridAxis grid_from_json(const nlohmann::json& j, const MethodSpec& base) {
    GridAxis g;
    auto list = [&](const char* key, auto fallback) {
        using T = typename decltype(fallback)::value_type;
        return j.contains(key) ? j.at(key).get<std::vector<T>>() : fallback;
    };
    g.epochs = list("epochs", std::vector<std::size_t>{base.gan.epochs});
    g.lambda_t = list("lambda_T", std::vector<double>{base.gan.coefficients.translation});
    g.lambda_c = list("lambda_C", std::vector<double>{base.gan.coefficients.cycle});
    g.lambda_i = list("lambda_I", std::vector<double>{base.gan.coefficients.identity});
    g.s = list("s", std::vector<double>{base.selection.s});
    g.p_max = list("p_max", std::vector<double>{base.selection.p_max});
    return g;
}

/// Cartesian grid over the GAN/selection hyperparameters of `base`, scored
/// by mean validation mAP over the configured seeds; best first.
inline std::vector<GridPoint> grid_search(const Dataset& d, const ExperimentConfig& cfg, const MethodSpec& base,
                                          const GridAxis& grid) {
    std::vector<PreparedSplit> splits;
    for (std::uint64_t seed : cfg.seeds) splits.push_back(prepare(d, cfg, seed));
    std::vector<GridPoint> out;
    for (auto epochs : grid.epochs)
        for (double lt : grid.lambda_t)
            for (double lc : grid.lambda_c)
                for (double li : grid.lambda_i)
                    for (double s : grid.s)
                        for (double pm : grid.p_max) {
                            GridPoint gp;
                            gp.method = base;
                            gp.method.gan.epochs = epochs;
                            gp.method.gan.coefficients = {lt, lc, li};
                            gp.method.selection.s = s;
                            gp.method.selection.p_max = pm;
                            double sum = 0.0;
                            std::size_t ok = 0;
                            for (std::size_t k = 0; k < splits.size(); ++k) {
                                try {
                                    MethodOutcome o = fit_method(gp.method, splits[k].train, cfg.seeds[k]);
                                    sum += metrics::average_precision(o.classifier->score(splits[k].val.x),
                                                                      splits[k].val.y);
                                    ++ok;
                                } catch (const std::exception&) {
                                    ++gp.failures;
                                }
                            }
                            gp.validation_map = ok > 0 ? sum / static_cast<double>(ok) : 0.0;
                            out.push_back(std::move(gp));
                        }
    std::stable_sort(out.begin(), out.end(),
                     [](const GridPoint& a, const GridPoint& b) { return a.validation_map > b.validation_map; });
    return out;
}

}  // namespace ttgan::harness
