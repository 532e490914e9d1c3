#pragma once

#include "ttgan/core.hpp"
#include "ttgan/data.hpp"
#include "ttgan/gan.hpp"
#include "ttgan/nn.hpp"
#include "ttgan/resample.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

namespace ttgan::classify {

enum class ClassWeighting { balanced, none };

struct LinearSvmConfig {
    double c = 10.0;  // objective: mean weighted hinge + ||w||^2 / (2 c)
    std::size_t epochs = 50;
    double eta0 = 0.1;  // step size eta_t = eta0 / (1 + eta0 t / c)
    ClassWeighting class_weighting = ClassWeighting::balanced;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(c > 0.0) || !std::isfinite(c)) throw config_error("svm: C must be positive");
        if (epochs < 1) throw config_error("svm: epochs must be >= 1");
        if (!(eta0 > 0.0)) throw config_error("svm: eta0 must be positive");
    }
};

struct LinearSvmModel {
    Vector w;
    double b = 0.0;
    LinearSvmConfig config;

    double margin(const Eigen::Ref<const RowVector>& row) const { return row.dot(w) + b; }
};

/// Class c gets weight N / (2 N_c) under balanced weighting, 1 otherwise.
inline std::vector<double> class_weights(const std::vector<int>& y, ClassWeighting weighting) {
    std::vector<double> out(y.size(), 1.0);
    if (weighting == ClassWeighting::none) {
        return out;
    }
    const auto n = static_cast<double>(y.size());
    const auto n_pos = static_cast<double>(std::count(y.begin(), y.end(), 1));
    const double n_neg = n - n_pos;
    for (std::size_t i = 0; i < y.size(); ++i) {
        out[i] = n / (2.0 * (y[i] == 1 ? n_pos : n_neg));
    }
    return out;
}

struct SvmObjective {
    double value = 0.0;
    Vector grad_w;
    double grad_b = 0.0;
};

/// Mean weighted hinge loss plus ||w||^2 / (2c), with a subgradient (hinge
/// kinks take the zero branch).
inline SvmObjective svm_objective(const Vector& w, double b, const Matrix& x, const std::vector<int>& y,
                                  const std::vector<double>& weights, double c) {
    SvmObjective out;
    out.grad_w = w / c;
    out.value = 0.5 * w.squaredNorm() / c;
    const double inv_n = 1.0 / static_cast<double>(x.rows());
    for (Index i = 0; i < x.rows(); ++i) {
        const double t = y[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;
        const double slack = 1.0 - t * (x.row(i).dot(w) + b);
        if (slack > 0.0) {
            const double wi = weights[static_cast<std::size_t>(i)] * inv_n;
            out.value += wi * slack;
            out.grad_w -= wi * t * x.row(i).transpose();
            out.grad_b -= wi * t;
        }
    }
    return out;
}

namespace detail {

inline void check_fit_inputs(const Matrix& x, const std::vector<int>& y) {
    if (static_cast<std::size_t>(x.rows()) != y.size() || y.empty()) {
        throw shape_error("svm: rows and labels must match and be nonempty");
    }
    const auto pos = std::count(y.begin(), y.end(), 1);
    if (pos == 0 || pos == static_cast<std::ptrdiff_t>(y.size())) {
        throw data_error("svm: both classes must be present");
    }
}

}  // namespace detail

/// Averaged stochastic subgradient descent on svm_objective. Iterates of
/// the second half of the epochs are averaged.
inline LinearSvmModel fit_svm(const Matrix& x, const std::vector<int>& y, const LinearSvmConfig& cfg,
                              std::vector<double> sample_weights = {}) {
    cfg.validate();
    detail::check_fit_inputs(x, y);
    if (sample_weights.empty()) {
        sample_weights = class_weights(y, cfg.class_weighting);
    }
    if (sample_weights.size() != y.size()) {
        throw shape_error("svm: sample weight count does not match rows");
    }
    Rng rng(cfg.seed);
    Vector w = Vector::Zero(x.cols());
    double b = 0.0;
    Vector w_avg = Vector::Zero(x.cols());
    double b_avg = 0.0;
    std::size_t averaged = 0;
    std::size_t t = 0;
    const std::size_t average_from = cfg.epochs / 2;
    std::vector<std::size_t> order = iota_indices(y.size());
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t i : order) {
            const double eta = cfg.eta0 / (1.0 + cfg.eta0 * static_cast<double>(t) / cfg.c);
            ++t;
            const auto row = x.row(static_cast<Index>(i));
            const double label = y[i] == 1 ? 1.0 : -1.0;
            const bool violated = label * (row.dot(w) + b) < 1.0;
            w *= 1.0 - eta / cfg.c;
            if (violated) {
                w += (eta * sample_weights[i] * label) * row.transpose();
                b += eta * sample_weights[i] * label;
            }
            if (epoch >= average_from) {
                ++averaged;
                const double k = 1.0 / static_cast<double>(averaged);
                w_avg += k * (w - w_avg);
                b_avg += k * (b - b_avg);
            }
        }
    }
    if (!w_avg.allFinite() || !std::isfinite(b_avg)) {
        throw divergence_error("svm: non-finite parameters");
    }
    return {w_avg, b_avg, cfg};
}

inline std::vector<double> margins(const LinearSvmModel& m, const Matrix& x) {
    if (static_cast<Index>(m.w.size()) != x.cols()) {
        throw shape_error("svm: input width " + std::to_string(x.cols()) + " does not match model width " +
                          std::to_string(m.w.size()));
    }
    std::vector<double> out(static_cast<std::size_t>(x.rows()));
    for (Index i = 0; i < x.rows(); ++i) {
        out[static_cast<std::size_t>(i)] = m.margin(x.row(i));
    }
    return out;
}

/// Probability-like minority score: sigmoid of the margin.
inline std::vector<double> score(const LinearSvmModel& m, const Matrix& x) {
    std::vector<double> out = margins(m, x);
    for (double& v : out) {
        v = nn::sigmoid(v);
    }
    return out;
}

inline nlohmann::json to_json(const LinearSvmModel& m) {
    return {{"w", std::vector<double>(m.w.data(), m.w.data() + m.w.size())},
            {"b", m.b},
            {"calibration", "sigmoid_of_margin"},
            {"config",
             {{"C", m.config.c},
              {"epochs", m.config.epochs},
              {"eta0", m.config.eta0},
              {"class_weighting", m.config.class_weighting == ClassWeighting::balanced ? "balanced" : "none"},
              {"seed", m.config.seed}}}};
}

inline LinearSvmConfig svm_config_from_json(const nlohmann::json& j, LinearSvmConfig base = {}) {
    if (j.contains("C")) base.c = j.at("C").get<double>();
    if (j.contains("epochs")) base.epochs = j.at("epochs").get<std::size_t>();
    if (j.contains("eta0")) base.eta0 = j.at("eta0").get<double>();
    if (j.contains("class_weighting")) {
        const auto s = j.at("class_weighting").get<std::string>();
        if (s == "balanced") base.class_weighting = ClassWeighting::balanced;
        else if (s == "none") base.class_weighting = ClassWeighting::none;
        else throw config_error("unknown class_weighting '" + s + "'");
    }
    if (j.contains("seed")) base.seed = j.at("seed").get<std::uint64_t>();
    return base;
}

// ---------------------------------------------------------------------------
// Classifier interface
// ---------------------------------------------------------------------------

/// Anything the oversampling pipeline can fit and score. Scores lie in
/// [0, 1] and are monotone in the model's decision value.
class Classifier {
public:
    virtual ~Classifier() = default;
    virtual void fit(const Matrix& x, const std::vector<int>& y, const std::vector<double>& weights) = 0;
    virtual std::vector<double> score(const Matrix& x) const = 0;
    /// Unfitted classifier of the same type and configuration.
    virtual std::unique_ptr<Classifier> fresh() const = 0;
    virtual std::string kind() const = 0;
    virtual nlohmann::json to_json() const = 0;
};

class LinearSvmClassifier final : public Classifier {
public:
    explicit LinearSvmClassifier(LinearSvmConfig cfg) : config_(cfg) {}

    void fit(const Matrix& x, const std::vector<int>& y, const std::vector<double>& weights) override {
        model_ = fit_svm(x, y, config_, weights);
    }

    std::vector<double> score(const Matrix& x) const override {
        if (!model_) {
            throw error("classifier used before fit");
        }
        return classify::score(*model_, x);
    }

    std::unique_ptr<Classifier> fresh() const override { return std::make_unique<LinearSvmClassifier>(config_); }
    std::string kind() const override { return "linear_svm"; }
    nlohmann::json to_json() const override {
        return model_ ? classify::to_json(*model_) : nlohmann::json(nullptr);
    }

    const LinearSvmConfig& config() const { return config_; }
    const std::optional<LinearSvmModel>& model() const { return model_; }

private:
    LinearSvmConfig config_;
    std::optional<LinearSvmModel> model_;
};

/// Fits with the weighting policy of the configuration, so a plain call is the
/// re-weighting (RW) baseline.
inline void fit_weighted(Classifier& clf, const TrainingSet& data, ClassWeighting weighting) {
    clf.fit(data.x, data.y, class_weights(data.y, weighting));
}

// ---------------------------------------------------------------------------
// Oversampling pipeline
// ---------------------------------------------------------------------------

struct ScoreSummary {
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
    double mean = 0.0;
};

inline ScoreSummary summarize(std::vector<double> v) {
    ScoreSummary s;
    if (v.empty()) {
        return s;
    }
    std::sort(v.begin(), v.end());
    auto q = [&](double f) {
        const double pos = f * static_cast<double>(v.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = std::min(lo + 1, v.size() - 1);
        return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
    };
    s.min = v.front();
    s.max = v.back();
    s.q1 = q(0.25);
    s.median = q(0.5);
    s.q3 = q(0.75);
    double sum = 0.0;
    for (double x : v) sum += x;
    s.mean = sum / static_cast<double>(v.size());
    return s;
}

struct PipelineDiagnostics {
    std::size_t generated = 0;
    std::size_t selected = 0;
    ScoreSummary generated_scores;
    std::vector<gan::LossRecord> loss_history;
};

struct PipelineResult {
    std::unique_ptr<Classifier> baseline;  // f_b
    std::unique_ptr<Classifier> final;     // f
    resample::AugmentedDataset augmented;
    PipelineDiagnostics diagnostics;
    gan::TtganBundle bundle;
};

struct Translation {
    resample::AugmentedDataset augmented;
    PipelineDiagnostics diagnostics;
};

/// Translates every majority row of `data` with a trained bundle, scores the
/// results with the fitted baseline and keeps the selected rows.
inline Translation translate_and_select(std::shared_ptr<const TrainingSet> data, const gan::TtganBundle& bundle,
                                        const resample::SelectionConfig& sel_cfg, const Classifier& baseline) {
    sel_cfg.validate();
    const Partition part = partition(*data);
    const Matrix generated = gan::generate(bundle, part.majority);
    const std::vector<double> scores = baseline.score(generated);
    const std::vector<std::size_t> picked = resample::select(scores, sel_cfg, part.minority_rows.size());

    std::vector<std::optional<std::size_t>> provenance;
    provenance.reserve(picked.size());
    for (std::size_t i : picked) {
        if (bundle.config.mode == gan::Mode::ttgan) {
            provenance.emplace_back(part.majority_rows[i]);
        } else {
            provenance.emplace_back(std::nullopt);
        }
    }
    Translation t;
    t.augmented = resample::augment(std::move(data), select_rows(generated, picked), std::move(provenance));
    t.diagnostics.generated = static_cast<std::size_t>(generated.rows());
    t.diagnostics.selected = picked.size();
    t.diagnostics.generated_scores = summarize(scores);
    t.diagnostics.loss_history = bundle.history;
    return t;
}

/// Fit f_b on D, train the GAN, translate X_gen = G(X_maj), keep the selected
/// rows, fit f on D u X_selected. f and f_b come from the same prototype.
inline PipelineResult run_algorithm_1(std::shared_ptr<const TrainingSet> data, const gan::TtganConfig& gan_cfg,
                                        const resample::SelectionConfig& sel_cfg, const Classifier& prototype,
                                        ClassWeighting weighting = ClassWeighting::balanced) {
    sel_cfg.validate();
    PipelineResult r;
    r.baseline = prototype.fresh();
    fit_weighted(*r.baseline, *data, weighting);

    const Partition part = partition(*data);
    r.bundle = gan::train(part.majority, part.minority, gan_cfg);
    Translation t = translate_and_select(data, r.bundle, sel_cfg, *r.baseline);
    r.augmented = std::move(t.augmented);
    r.diagnostics = std::move(t.diagnostics);

    r.final = prototype.fresh();
    fit_weighted(*r.final, r.augmented.combined(), weighting);
    return r;
}

inline PipelineResult run_algorithm_1(std::shared_ptr<const TrainingSet> data, const gan::TtganConfig& gan_cfg,
                                        const resample::SelectionConfig& sel_cfg, const LinearSvmConfig& svm_cfg) {
    return run_algorithm_1(std::move(data), gan_cfg, sel_cfg, LinearSvmClassifier(svm_cfg), svm_cfg.class_weighting);
}

}  // namespace ttgan::classify
