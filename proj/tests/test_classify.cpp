#include "support.hpp"

#include <algorithm>

using namespace ttgan;
using namespace ttgan::test;
using classify::ClassWeighting;
using classify::LinearSvmConfig;

namespace {

struct Labelled {
    Matrix x;
    std::vector<int> y;
};

Labelled separable_blobs(std::uint64_t seed, Index n_maj, Index n_min, Index d) {
    Rng rng(seed);
    Labelled s{random_matrix(rng, n_maj + n_min, d, 0.4), {}};
    s.x.bottomRows(n_min).array() += 2.0;
    s.y.assign(static_cast<std::size_t>(n_maj), 0);
    s.y.resize(static_cast<std::size_t>(n_maj + n_min), 1);
    return s;
}

gan::TtganConfig small_gan() {
    gan::TtganConfig g;
    g.epochs = 3;
    g.batch_size = 16;
    g.learning_rate = 1e-3;
    g.coefficients = {0.1, 0.0, 0.0};
    g.seed = 5;
    return g;
}

}  // namespace

TEST(ClassWeights, BalancedRatio) {
    std::vector<int> y(90, 0);
    y.resize(100, 1);
    const auto w = classify::class_weights(y, ClassWeighting::balanced);
    EXPECT_DOUBLE_EQ(w.back() / w.front(), 9.0);
    EXPECT_DOUBLE_EQ(w.back(), 5.0);
    EXPECT_DOUBLE_EQ(w.front(), 100.0 / 180.0);
    for (double v : classify::class_weights(y, ClassWeighting::none)) EXPECT_EQ(v, 1.0);
}

TEST(ClassWeights, ClassTotalsMatch) {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n_pos = 1 + rng.index(40);
        const std::size_t n_neg = 1 + rng.index(400);
        std::vector<int> y(n_neg, 0);
        y.resize(n_neg + n_pos, 1);
        rng.shuffle(y);
        const auto w = classify::class_weights(y, ClassWeighting::balanced);
        double pos_weight = 0.0;
        double neg_weight = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) (y[i] == 1 ? pos_weight : neg_weight) = w[i];
        EXPECT_DOUBLE_EQ(pos_weight * static_cast<double>(n_pos), neg_weight * static_cast<double>(n_neg));
    }
}

TEST(LinearSvm, SeparatesTwoPoints) {
    Matrix x(2, 2);
    x << -1, 0, 1, 0;
    const auto m = classify::fit_svm(x, {0, 1}, {});
    EXPECT_LT(m.margin(x.row(0)), 0.0);
    EXPECT_GT(m.margin(x.row(1)), 0.0);
}

TEST(LinearSvm, SeparatesBlobs) {
    const auto s = separable_blobs(1, 200, 20, 3);
    const auto m = classify::fit_svm(s.x, s.y, {});
    const auto margins = classify::margins(m, s.x);
    for (std::size_t i = 0; i < s.y.size(); ++i) EXPECT_EQ(margins[i] > 0.0, s.y[i] == 1) << i;
}

TEST(LinearSvm, ObjectiveNearGridOptimum) {
    Matrix x(6, 2);
    x << 0, 0, 0.5, 1, 1, 0, 2, 2, 2.5, 1, 1.5, 2.5;
    const std::vector<int> y{0, 0, 0, 1, 1, 0};
    LinearSvmConfig cfg;
    cfg.epochs = 1000;
    const auto m = classify::fit_svm(x, y, cfg);
    const auto w = classify::class_weights(y, cfg.class_weighting);
    const double fitted = classify::svm_objective(m.w, m.b, x, y, w, cfg.c).value;
    double best = std::numeric_limits<double>::infinity();
    Vector probe(2);
    for (double w0 = -4; w0 <= 4; w0 += 0.05)
        for (double w1 = -4; w1 <= 4; w1 += 0.05)
            for (double b = -6; b <= 6; b += 0.05) {
                probe << w0, w1;
                best = std::min(best, classify::svm_objective(probe, b, x, y, w, cfg.c).value);
            }
    EXPECT_LE(fitted, best * 1.01) << "fitted " << fitted << " grid " << best;
}

TEST(LinearSvm, ObjectiveGradientMatchesFiniteDifferences) {
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const Index d = 1 + static_cast<Index>(rng.index(5));
        const Matrix x = random_matrix(rng, 30, d);
        std::vector<int> y(30);
        for (int& v : y) v = rng.uniform() < 0.3 ? 1 : 0;
        y[0] = 1;
        y[1] = 0;
        const auto wts = classify::class_weights(y, ClassWeighting::balanced);
        Vector w = random_matrix(rng, d, 1).col(0);
        double b = rng.normal();
        const double c = 0.5 + rng.uniform();
        const auto obj = classify::svm_objective(w, b, x, y, wts, c);
        const double h = 1e-6;
        auto f = [&](const Vector& ww, double bb) { return classify::svm_objective(ww, bb, x, y, wts, c).value; };
        for (Index j = 0; j < d; ++j) {
            Vector up = w, down = w;
            up[j] += h;
            down[j] -= h;
            const double numeric = (f(up, b) - f(down, b)) / (2 * h);
            EXPECT_NEAR(numeric, obj.grad_w[j], 1e-6 * std::max(1.0, std::abs(numeric)));
        }
        const double numeric_b = (f(w, b + h) - f(w, b - h)) / (2 * h);
        EXPECT_NEAR(numeric_b, obj.grad_b, 1e-6 * std::max(1.0, std::abs(numeric_b)));
    }
}

TEST(LinearSvm, Deterministic) {
    const auto s = separable_blobs(2, 80, 10, 4);
    LinearSvmConfig cfg;
    cfg.seed = 4;
    const auto a = classify::fit_svm(s.x, s.y, cfg);
    const auto b = classify::fit_svm(s.x, s.y, cfg);
    EXPECT_EQ(a.w, b.w);
    EXPECT_EQ(a.b, b.b);
}

TEST(LinearSvm, RejectsBadInputs) {
    Matrix x = Matrix::Zero(3, 2);
    EXPECT_THROW(classify::fit_svm(x, {1, 1, 1}, {}), data_error);
    EXPECT_THROW(classify::fit_svm(x, {1, 0}, {}), shape_error);
    LinearSvmConfig bad;
    bad.c = 0.0;
    EXPECT_THROW(classify::fit_svm(x, {1, 0, 0}, bad), config_error);
    bad = {};
    bad.epochs = 0;
    EXPECT_THROW(classify::fit_svm(x, {1, 0, 0}, bad), config_error);
    const auto m = classify::fit_svm(x, {1, 0, 0}, {});
    EXPECT_THROW(classify::score(m, Matrix::Zero(2, 3)), shape_error);
    EXPECT_THROW(classify::svm_config_from_json({{"class_weighting", "odd"}}), config_error);
}

TEST(Score, SigmoidOfMargin) {
    classify::LinearSvmModel m{Vector::Zero(2), 0.0, {}};
    EXPECT_EQ(classify::score(m, Matrix::Zero(1, 2))[0], 0.5);
    m.w << 1, 0;
    Matrix far(1, 2);
    far << 60, 0;
    EXPECT_NEAR(classify::score(m, far)[0], 1.0, 1e-15);
}

TEST(Score, MonotoneAndBatchConsistent) {
    Rng rng(8);
    const auto s = separable_blobs(8, 60, 15, 3);
    const auto m = classify::fit_svm(s.x, s.y, {});
    const Matrix rows = random_matrix(rng, 200, 3, 2.0);
    const auto margins = classify::margins(m, rows);
    const auto scores = classify::score(m, rows);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        EXPECT_GE(scores[i], 0.0);
        EXPECT_LE(scores[i], 1.0);
        EXPECT_EQ(classify::score(m, rows.middleRows(static_cast<Index>(i), 1))[0], scores[i]);
        for (std::size_t j = 0; j < i; ++j) {
            if (margins[j] < margins[i]) {
                EXPECT_LE(scores[j], scores[i]);
            }
        }
    }
}

TEST(LinearSvm, JsonExport) {
    const auto s = separable_blobs(3, 30, 6, 2);
    LinearSvmConfig cfg;
    cfg.c = 2.5;
    cfg.class_weighting = ClassWeighting::none;
    const auto m = classify::fit_svm(s.x, s.y, cfg);
    const auto j = classify::to_json(m);
    EXPECT_EQ(j.at("w").size(), 2u);
    EXPECT_EQ(j.at("calibration"), "sigmoid_of_margin");
    const auto back = classify::svm_config_from_json(j.at("config"));
    EXPECT_EQ(back.c, 2.5);
    EXPECT_EQ(back.class_weighting, ClassWeighting::none);
}

TEST(Summarize, Quartiles) {
    const auto s = classify::summarize({4, 1, 3, 2, 5});
    EXPECT_EQ(s.min, 1);
    EXPECT_EQ(s.q1, 2);
    EXPECT_EQ(s.median, 3);
    EXPECT_EQ(s.q3, 4);
    EXPECT_EQ(s.max, 5);
    EXPECT_EQ(s.mean, 3);
}

TEST(OversamplingPipeline, ZeroThresholdLeavesDataUnaugmented) {
    const auto s = separable_blobs(4, 79, 12, 3);
    auto data = shared_set(s.x, s.y);
    resample::SelectionConfig sel{0.0, 4.0, resample::SelectionVariant::upper_bound};
    const auto r = classify::run_algorithm_1(data, small_gan(), sel, LinearSvmConfig{});
    EXPECT_EQ(r.diagnostics.generated, 79u);
    EXPECT_EQ(r.diagnostics.selected, 0u);
    EXPECT_EQ(r.augmented.added(), 0u);
    // With nothing added, f is fitted on exactly the data f_b saw.
    const auto& fb = dynamic_cast<const classify::LinearSvmClassifier&>(*r.baseline).model();
    const auto& f = dynamic_cast<const classify::LinearSvmClassifier&>(*r.final).model();
    EXPECT_EQ(fb->w, f->w);
    EXPECT_EQ(fb->b, f->b);
    EXPECT_EQ(r.diagnostics.loss_history.size(), 3u);
}

TEST(OversamplingPipeline, SelectionBoundsAndProvenance) {
    const auto s = separable_blobs(5, 60, 10, 2);
    auto data = shared_set(s.x, s.y);
    resample::SelectionConfig sel{1.0, 2.5, resample::SelectionVariant::upper_bound};
    const auto r = classify::run_algorithm_1(data, small_gan(), sel, LinearSvmConfig{});
    EXPECT_EQ(r.diagnostics.selected, 25u);
    ASSERT_EQ(r.augmented.provenance.size(), 25u);
    const Partition p = partition(*data);
    for (const auto& src : r.augmented.provenance) {
        ASSERT_TRUE(src.has_value());
        EXPECT_TRUE(std::find(p.majority_rows.begin(), p.majority_rows.end(), *src) != p.majority_rows.end());
    }
    EXPECT_GE(r.diagnostics.generated_scores.min, 0.0);
    EXPECT_LE(r.diagnostics.generated_scores.max, 1.0);
    EXPECT_EQ(r.baseline->kind(), r.final->kind());
    EXPECT_EQ(r.baseline->to_json().at("config"), r.final->to_json().at("config"));
}

TEST(OversamplingPipeline, Deterministic) {
    const auto s = separable_blobs(6, 50, 8, 3);
    auto data = shared_set(s.x, s.y);
    resample::SelectionConfig sel{0.9, 3.0, resample::SelectionVariant::closest_to_pmax};
    const auto a = classify::run_algorithm_1(data, small_gan(), sel, LinearSvmConfig{});
    const auto b = classify::run_algorithm_1(data, small_gan(), sel, LinearSvmConfig{});
    EXPECT_EQ(a.augmented.synthetic, b.augmented.synthetic);
    EXPECT_EQ(a.final->to_json(), b.final->to_json());
}

TEST(OversamplingPipeline, VanillaModeSharesTheBaseline) {
    const auto s = separable_blobs(7, 50, 8, 2);
    auto data = shared_set(s.x, s.y);
    resample::SelectionConfig sel{1.0, 1.0, resample::SelectionVariant::upper_bound};
    gan::TtganConfig g = small_gan();
    g.coefficients = {0.0, 0.0, 0.0};
    const auto full = classify::run_algorithm_1(data, g, sel, LinearSvmConfig{});
    g.mode = gan::Mode::vanilla;
    const auto vanilla = classify::run_algorithm_1(data, g, sel, LinearSvmConfig{});
    EXPECT_EQ(full.baseline->to_json(), vanilla.baseline->to_json());
    EXPECT_EQ(vanilla.diagnostics.generated, 50u);
    for (const auto& src : vanilla.augmented.provenance) EXPECT_FALSE(src.has_value());
}

TEST(OversamplingPipeline, TranslateAndSelectUsesGivenBundle) {
    const auto s = separable_blobs(9, 40, 8, 2);
    auto data = shared_set(s.x, s.y);
    const Partition p = partition(*data);
    const auto bundle = gan::train(p.majority, p.minority, small_gan());
    classify::LinearSvmClassifier baseline(LinearSvmConfig{});
    classify::fit_weighted(baseline, *data, ClassWeighting::balanced);
    const resample::SelectionConfig sel{1.0, 1.0, resample::SelectionVariant::upper_bound};
    const auto t = classify::translate_and_select(data, bundle, sel, baseline);
    const Matrix generated = gan::generate(bundle, p.majority);
    const auto scores = baseline.score(generated);
    const auto picked = resample::select(scores, sel, p.minority_rows.size());
    EXPECT_EQ(t.augmented.synthetic, select_rows(generated, picked));
}

TEST(Classifier, UnfittedUseThrows) {
    classify::LinearSvmClassifier c(LinearSvmConfig{});
    EXPECT_THROW(c.score(Matrix::Zero(1, 2)), error);
    EXPECT_TRUE(c.to_json().is_null());
    EXPECT_EQ(c.fresh()->kind(), "linear_svm");
}
