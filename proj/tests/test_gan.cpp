#include "support.hpp"

#include <cmath>
#include <sstream>

using namespace ttgan;
using namespace ttgan::test;
using nn::Activation;

namespace {

// Single affine layer computing x + shift.
nn::Mlp shift_net(std::size_t d, double shift) {
    Rng rng(1);
    nn::Mlp m = nn::make_mlp({d, d}, Activation::selu, Activation::identity, rng);
    m.weights[0] = Matrix::Identity(static_cast<Index>(d), static_cast<Index>(d));
    m.biases[0] = RowVector::Constant(static_cast<Index>(d), shift);
    return m;
}

nn::Mlp tiny_net(Rng& rng, std::size_t in, std::size_t out, Activation head) {
    nn::Mlp m = nn::make_mlp({in, 4, 5, out}, Activation::selu, head, rng);
    for (auto& b : m.biases) b = random_matrix(rng, 1, b.size(), 0.2);
    return m;
}

// Two well-separated Gaussian blobs in `d` dimensions.
struct Blobs {
    Matrix majority;
    Matrix minority;
};

Blobs blobs(std::uint64_t seed, Index n_maj, Index n_min, Index d) {
    Rng rng(seed);
    Blobs b{random_matrix(rng, n_maj, d, 0.5), random_matrix(rng, n_min, d, 0.5)};
    b.minority.array() += 1.5;
    return b;
}

gan::TtganConfig quick_config(gan::Mode mode, std::size_t epochs) {
    gan::TtganConfig c;
    c.epochs = epochs;
    c.batch_size = 16;
    c.learning_rate = 1e-3;
    c.coefficients = {0.5, 0.25, 0.125};
    c.seed = 21;
    c.mode = mode;
    return c;
}

}  // namespace

TEST(GanLosses, HalfProbabilities) {
    const auto l = gan::gan_losses(std::vector<double>{0.5}, std::vector<double>{0.5});
    EXPECT_DOUBLE_EQ(l.discriminator, 2 * std::log(0.5));
    EXPECT_DOUBLE_EQ(l.generator, std::log(0.5));
}

TEST(GanLosses, HandArithmetic) {
    const auto l = gan::gan_losses(std::vector<double>{0.9, 0.8}, std::vector<double>{0.1});
    EXPECT_NEAR(l.discriminator, (std::log(0.9) + std::log(0.8)) / 2 + std::log(0.9), 1e-15);
    EXPECT_NEAR(l.generator, std::log(0.9), 1e-15);
}

TEST(GanLosses, ClampKeepsSaturatedProbabilitiesFinite) {
    const auto l = gan::gan_losses(std::vector<double>{0.0}, std::vector<double>{1.0});
    EXPECT_NEAR(l.generator, std::log(1e-12), 1e-3);
    EXPECT_TRUE(std::isfinite(l.discriminator));
    EXPECT_NEAR(l.discriminator, 2 * std::log(1e-12), 1e-3);
}

TEST(GanLosses, EmptyInputRejected) {
    EXPECT_THROW(gan::gan_losses(std::vector<double>{}, std::vector<double>{0.5}), shape_error);
}

TEST(TranslationLoss, Examples) {
    Rng rng(2);
    const Matrix z = random_matrix(rng, 7, 3);
    EXPECT_EQ(gan::translation_loss(z, z), 0.0);
    Matrix a = Matrix::Zero(1, 2), b(1, 2);
    b << 1.0, -2.0;
    EXPECT_EQ(gan::translation_loss(a, b), 3.0);
    EXPECT_THROW(gan::translation_loss(a, Matrix::Zero(1, 3)), shape_error);
}

TEST(TranslationLoss, ElementwiseOracle) {
    Rng rng(3);
    const Matrix z = random_matrix(rng, 9, 4), gz = random_matrix(rng, 9, 4);
    double total = 0.0;
    for (Index i = 0; i < z.rows(); ++i) {
        double row = 0.0;
        for (Index j = 0; j < z.cols(); ++j) row += std::abs(z(i, j) - gz(i, j));
        total += row;
    }
    EXPECT_NEAR(gan::translation_loss(z, gz), total / 9.0, 1e-13);
}

TEST(CycleLoss, IdentityNetsGiveZero) {
    Rng rng(4);
    const Matrix a = random_matrix(rng, 5, 3), b = random_matrix(rng, 6, 3);
    EXPECT_EQ(gan::cycle_loss(a, b, shift_net(3, 0), shift_net(3, 0)), 0.0);
    EXPECT_EQ(gan::identity_loss(a, b, shift_net(3, 0), shift_net(3, 0)), 0.0);
}

TEST(CycleLoss, ShiftArithmetic) {
    // G adds one to each coordinate, G' is the identity: both cycle halves
    // and the G half of the identity term see the shift.
    const Matrix x_min = Matrix::Constant(1, 2, 0.3), x_maj = Matrix::Constant(1, 2, -0.4);
    const auto g = shift_net(2, 1.0), g_rev = shift_net(2, 0.0);
    EXPECT_NEAR(gan::mean_l1(nn::forward(g, nn::forward(g_rev, x_min)), x_min), 2.0, 1e-15);
    EXPECT_NEAR(gan::cycle_loss(x_min, x_maj, g, g_rev), 4.0, 1e-15);

    const Matrix m3 = Matrix::Constant(2, 3, 0.1), j3 = Matrix::Constant(4, 3, 0.2);
    EXPECT_NEAR(gan::identity_loss(m3, j3, shift_net(3, 1.0), shift_net(3, 0.0)), 3.0, 1e-15);
}

TEST(CycleLoss, ComposedForwardOracle) {
    Rng rng(5);
    const auto g = tiny_net(rng, 3, 3, Activation::identity), g_rev = tiny_net(rng, 3, 3, Activation::identity);
    const Matrix x_min = random_matrix(rng, 4, 3), x_maj = random_matrix(rng, 7, 3);
    auto l1 = [](const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().sum() / static_cast<double>(a.rows()); };
    EXPECT_NEAR(gan::cycle_loss(x_min, x_maj, g, g_rev),
                l1(nn::forward(g, nn::forward(g_rev, x_min)), x_min) + l1(nn::forward(g_rev, nn::forward(g, x_maj)), x_maj),
                1e-13);
    EXPECT_NEAR(gan::identity_loss(x_min, x_maj, g, g_rev),
                l1(nn::forward(g, x_min), x_min) + l1(nn::forward(g_rev, x_maj), x_maj), 1e-13);
}

TEST(Objective, DiscriminatorGradientMatchesFiniteDifference) {
    Rng rng(6);
    nn::Mlp d = tiny_net(rng, 3, 1, Activation::sigmoid);
    const Matrix real = random_matrix(rng, 5, 3), fake = random_matrix(rng, 4, 3);
    const auto obj = gan::discriminator_objective(d, real, fake);
    auto loss = [&] {
        const Matrix pr = nn::forward(d, real), pf = nn::forward(d, fake);
        return -gan::gan_losses(pr.col(0), pf.col(0)).discriminator;
    };
    EXPECT_LT(gradient_check(d, obj.grad, loss), 1e-4);
}

// Property: the analytic gradients of both generator objectives agree with
// central differences on random tiny networks and batches.
TEST(Objective, GeneratorGradientsMatchFiniteDifference) {
    Rng rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t w = 2 + rng.index(3);
        nn::Mlp g = tiny_net(rng, w, w, Activation::identity);
        nn::Mlp g_rev = tiny_net(rng, w, w, Activation::identity);
        const nn::Mlp d = tiny_net(rng, w, 1, Activation::sigmoid);
        const nn::Mlp d_rev = tiny_net(rng, w, 1, Activation::sigmoid);
        const auto rows = static_cast<Index>(2 + rng.index(6));
        const Matrix maj = random_matrix(rng, rows, static_cast<Index>(w));
        const Matrix min = random_matrix(rng, rows, static_cast<Index>(w));
        const gan::LossCoefficients c{rng.uniform(0.1, 2), rng.uniform(0.1, 2), rng.uniform(0.1, 2)};
        const auto obj = gan::generator_objective(g, d, g_rev, d_rev, maj, min, c);
        EXPECT_LT(gradient_check(g, obj.grad, [&] { return gan::generator_objective(g, d, g_rev, d_rev, maj, min, c).total; }),
                  1e-4)
            << "trial " << trial;
        EXPECT_LT(gradient_check(g_rev, obj.reverse_grad,
                                 [&] { return gan::generator_objective(g, d, g_rev, d_rev, maj, min, c).reverse_total; }),
                  1e-4)
            << "trial " << trial;
    }
}

TEST(Objective, TermsMatchStandaloneLosses) {
    Rng rng(8);
    const auto g = tiny_net(rng, 3, 3, Activation::identity), g_rev = tiny_net(rng, 3, 3, Activation::identity);
    const auto d = tiny_net(rng, 3, 1, Activation::sigmoid), d_rev = tiny_net(rng, 3, 1, Activation::sigmoid);
    const Matrix maj = random_matrix(rng, 6, 3), min = random_matrix(rng, 6, 3);
    const gan::LossCoefficients c{0.3, 0.7, 1.1};
    const auto obj = gan::generator_objective(g, d, g_rev, d_rev, maj, min, c);
    const Matrix fake = nn::forward(g, maj);
    EXPECT_NEAR(obj.translation, gan::translation_loss(maj, fake), 1e-14);
    EXPECT_NEAR(obj.cycle, gan::cycle_loss(min, maj, g, g_rev), 1e-13);
    EXPECT_NEAR(obj.identity, gan::identity_loss(min, maj, g, g_rev), 1e-13);
    const Matrix p = nn::forward(d, fake);
    EXPECT_NEAR(obj.adversarial, gan::gan_losses(p.col(0), p.col(0)).generator, 1e-14);
    EXPECT_NEAR(obj.total, obj.adversarial + 0.3 * obj.translation + 0.7 * obj.cycle + 1.1 * obj.identity, 1e-14);
}

TEST(Objective, ZeroWeightTermsAreSkipped) {
    Rng rng(9);
    nn::Mlp g = tiny_net(rng, 3, 3, Activation::identity);
    const auto g_rev = tiny_net(rng, 3, 3, Activation::identity);
    const auto d = tiny_net(rng, 3, 1, Activation::sigmoid), d_rev = tiny_net(rng, 3, 1, Activation::sigmoid);
    const Matrix maj = random_matrix(rng, 6, 3), min = random_matrix(rng, 6, 3);
    const gan::LossCoefficients c{0.4, 0.0, 0.0};
    const auto obj = gan::generator_objective(g, d, g_rev, d_rev, maj, min, c);
    EXPECT_TRUE(std::isnan(obj.cycle));
    EXPECT_TRUE(std::isnan(obj.identity));
    EXPECT_NEAR(obj.total, obj.adversarial + 0.4 * obj.translation, 1e-15);
    EXPECT_EQ(obj.reverse_total, obj.reverse_adversarial);
    EXPECT_LT(gradient_check(g, obj.grad, [&] { return gan::generator_objective(g, d, g_rev, d_rev, maj, min, c).total; }),
              1e-4);
}

TEST(Sampling, MinorityBatchDistinctWhenPossible) {
    Rng rng(10);
    auto rows = gan::sample_minority_batch(rng, 20, 20);
    std::sort(rows.begin(), rows.end());
    EXPECT_EQ(rows, iota_indices(20));
    const auto small = gan::sample_minority_batch(rng, 3, 50);
    EXPECT_EQ(small.size(), 50u);
    for (auto r : small) EXPECT_LT(r, 3u);
}

TEST(Train, HistoryBookkeeping) {
    const Blobs data = blobs(11, 40, 6, 3);
    const auto b = gan::train(data.majority, data.minority, quick_config(gan::Mode::ttgan, 4));
    ASSERT_EQ(b.history.size(), 4u);
    for (std::size_t e = 0; e < b.history.size(); ++e) {
        const auto& r = b.history[e];
        EXPECT_EQ(r.epoch, e + 1);
        EXPECT_NEAR(r.generator_objective, r.adversarial + 0.5 * r.translation + 0.25 * r.cycle + 0.125 * r.identity, 1e-9);
        EXPECT_NEAR(r.reverse_objective, r.reverse_adversarial + 0.25 * r.cycle + 0.125 * r.identity, 1e-9);
        EXPECT_LE(r.discriminator, 0.0);
        EXPECT_LE(r.adversarial, 0.0);
    }
    ASSERT_TRUE(b.reverse_generator.has_value());
}

TEST(Train, InactiveTermsAreNan) {
    const Blobs data = blobs(12, 30, 5, 2);
    auto cfg = quick_config(gan::Mode::ttgan, 2);
    cfg.coefficients = {0.1, 0.0, 0.0};
    const auto r = gan::train(data.majority, data.minority, cfg).history.back();
    EXPECT_TRUE(std::isnan(r.cycle));
    EXPECT_TRUE(std::isnan(r.identity));
    EXPECT_FALSE(std::isnan(r.translation));
    EXPECT_NEAR(r.generator_objective, r.adversarial + 0.1 * r.translation, 1e-12);

    const auto v = gan::train(data.majority, data.minority, quick_config(gan::Mode::vanilla, 2));
    EXPECT_FALSE(v.reverse_generator.has_value());
    EXPECT_TRUE(std::isnan(v.history[0].translation));
    EXPECT_TRUE(std::isnan(v.history[0].reverse_discriminator));
    EXPECT_EQ(v.history[0].generator_objective, v.history[0].adversarial);
}

// Replays one full-batch epoch from the documented RNG order using only the
// public building blocks.
TEST(Train, SingleEpochReplay) {
    const Blobs data = blobs(13, 24, 7, 3);
    auto cfg = quick_config(gan::Mode::ttgan, 1);
    cfg.batch_size = 64;
    const auto trained = gan::train(data.majority, data.minority, cfg);

    Rng rng(cfg.seed);
    gan::TtganBundle b = gan::init_bundle(3, cfg, rng);
    std::vector<std::size_t> order = iota_indices(24);
    rng.shuffle(order);
    const Matrix maj = select_rows(data.majority, order);
    const Matrix min = select_rows(data.minority, gan::sample_minority_batch(rng, 7, 24));

    const Matrix fake = nn::forward(b.generator, maj);
    const Matrix fake_rev = nn::forward(*b.reverse_generator, min);
    const auto d_obj = gan::discriminator_objective(b.discriminator, min, fake);
    nn::adam_step(b.discriminator, d_obj.grad, b.discriminator_adam);
    const auto dr_obj = gan::discriminator_objective(*b.reverse_discriminator, maj, fake_rev);
    nn::adam_step(*b.reverse_discriminator, dr_obj.grad, *b.reverse_discriminator_adam);
    const auto g_obj = gan::generator_objective(b.generator, b.discriminator, *b.reverse_generator,
                                                *b.reverse_discriminator, maj, min, cfg.coefficients);
    nn::adam_step(b.generator, g_obj.grad, b.generator_adam);
    nn::adam_step(*b.reverse_generator, g_obj.reverse_grad, *b.reverse_generator_adam);

    const auto& r = trained.history.at(0);
    EXPECT_EQ(r.discriminator, d_obj.losses.discriminator);
    EXPECT_EQ(r.reverse_discriminator, dr_obj.losses.discriminator);
    EXPECT_EQ(r.adversarial, g_obj.adversarial);
    EXPECT_EQ(r.reverse_adversarial, g_obj.reverse_adversarial);
    EXPECT_EQ(r.translation, g_obj.translation);
    EXPECT_EQ(r.cycle, g_obj.cycle);
    EXPECT_EQ(r.identity, g_obj.identity);
    EXPECT_TRUE(same_parameters(trained.generator, b.generator));
    EXPECT_TRUE(same_parameters(*trained.reverse_discriminator, *b.reverse_discriminator));
}

// Vanilla mode against a hand-written standard GAN step.
TEST(Train, VanillaReplayIsTheStandardGan) {
    const Blobs data = blobs(14, 20, 5, 2);
    auto cfg = quick_config(gan::Mode::vanilla, 1);
    cfg.batch_size = 64;
    cfg.coefficients = {};
    const auto trained = gan::train(data.majority, data.minority, cfg);

    Rng rng(cfg.seed);
    gan::TtganBundle b = gan::init_bundle(2, cfg, rng);
    const Matrix noise = gan::sample_prior(rng, 20, 2);
    const Matrix min = select_rows(data.minority, gan::sample_minority_batch(rng, 5, 20));
    const Matrix p_real = nn::forward(b.discriminator, min);
    const Matrix p_fake = nn::forward(b.discriminator, nn::forward(b.generator, noise));
    const double expected_d = gan::gan_losses(p_real.col(0), p_fake.col(0)).discriminator;
    nn::adam_step(b.discriminator, gan::discriminator_objective(b.discriminator, min, nn::forward(b.generator, noise)).grad,
                  b.discriminator_adam);
    const Matrix p_after = nn::forward(b.discriminator, nn::forward(b.generator, noise));
    const double expected_g = gan::gan_losses(p_after.col(0), p_after.col(0)).generator;

    EXPECT_NEAR(trained.history[0].discriminator, expected_d, 1e-14);
    EXPECT_NEAR(trained.history[0].adversarial, expected_g, 1e-14);
}

TEST(Train, DeterministicGivenSeed) {
    const Blobs data = blobs(15, 50, 8, 3);
    const auto cfg = quick_config(gan::Mode::ttgan, 3);
    const auto a = gan::train(data.majority, data.minority, cfg);
    const auto b = gan::train(data.majority, data.minority, cfg);
    EXPECT_TRUE(same_parameters(a.generator, b.generator));
    EXPECT_TRUE(same_parameters(*a.reverse_generator, *b.reverse_generator));
    EXPECT_TRUE(same_parameters(a.discriminator, b.discriminator));
    auto other = cfg;
    other.seed = 22;
    EXPECT_FALSE(same_parameters(a.generator, gan::train(data.majority, data.minority, other).generator));
}

TEST(Train, LargeTranslationWeightKeepsOutputsNearInputs) {
    const Blobs data = blobs(16, 64, 10, 4);
    auto cfg = quick_config(gan::Mode::ttgan, 15);
    cfg.coefficients = {0.0, 0.0, 0.0};
    const auto free_g = gan::train(data.majority, data.minority, cfg);
    cfg.coefficients.translation = 1e3;
    const auto tied = gan::train(data.majority, data.minority, cfg);
    EXPECT_LT(gan::translation_loss(data.majority, gan::generate(tied, data.majority)),
              gan::translation_loss(data.majority, gan::generate(free_g, data.majority)));
}

TEST(Train, RejectsBadInputs) {
    const Blobs data = blobs(17, 10, 3, 2);
    auto cfg = quick_config(gan::Mode::ttgan, 1);
    EXPECT_THROW(gan::train(Matrix(0, 2), data.minority, cfg), shape_error);
    EXPECT_THROW(gan::train(data.majority, Matrix::Zero(3, 3), cfg), shape_error);
    cfg.epochs = 0;
    EXPECT_THROW(gan::train(data.majority, data.minority, cfg), config_error);
    cfg.epochs = 1;
    cfg.coefficients.cycle = -1;
    EXPECT_THROW(gan::train(data.majority, data.minority, cfg), config_error);
}

TEST(Generate, CardinalityPurityAndIdentity) {
    const Blobs data = blobs(18, 79, 6, 3);
    for (auto mode : {gan::Mode::ttgan, gan::Mode::vanilla}) {
        const auto b = gan::train(data.majority, data.minority, quick_config(mode, 1));
        const Matrix x = gan::generate(b, data.majority);
        EXPECT_EQ(x.rows(), 79);
        EXPECT_EQ(x, gan::generate(b, data.majority));
    }
    gan::TtganBundle id;
    id.width = 3;
    id.generator = shift_net(3, 0.0);
    EXPECT_EQ(gan::generate(id, data.majority), data.majority);
}

TEST(Serialization, LossHistoryTsv) {
    const Blobs data = blobs(19, 20, 4, 2);
    auto cfg = quick_config(gan::Mode::ttgan, 3);
    cfg.coefficients.identity = 0.0;
    const auto b = gan::train(data.majority, data.minority, cfg);
    std::ostringstream out;
    gan::write_loss_history(b.history, out);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "epoch\tL_D\tL_G\tL_T\tL_C\tL_I\tL_D'\tL_G'");
    int rows = 0;
    while (std::getline(in, line)) {
        std::istringstream fields(line);
        std::vector<std::string> cells;
        for (std::string cell; std::getline(fields, cell, '\t');) cells.push_back(cell);
        ASSERT_EQ(cells.size(), 8u);
        EXPECT_EQ(cells[0], std::to_string(rows + 1));
        EXPECT_EQ(cells[5], "nan");
        EXPECT_NEAR(std::stod(cells[1]), b.history[static_cast<std::size_t>(rows)].discriminator, 1e-8);
        ++rows;
    }
    EXPECT_EQ(rows, 3);
}

TEST(Serialization, BundleRoundTrip) {
    const Blobs data = blobs(20, 20, 4, 2);
    const auto b = gan::train(data.majority, data.minority, quick_config(gan::Mode::ttgan, 1));
    const auto back = gan::bundle_from_json(nlohmann::json::parse(gan::to_json(b).dump()));
    EXPECT_EQ(back.config.seed, b.config.seed);
    EXPECT_EQ(back.config.coefficients.cycle, 0.25);
    EXPECT_EQ(gan::generate(back, data.majority), gan::generate(b, data.majority));
    EXPECT_TRUE(same_parameters(*back.reverse_discriminator, *b.reverse_discriminator));
    gan::LossRecord r;
    r.cycle = std::nan("");
    EXPECT_NE(gan::to_json(r).dump().find("\"L_C\":null"), std::string::npos);
}

TEST(Config, JsonMergeAndValidation) {
    const auto c = gan::ttgan_config_from_json(nlohmann::json::parse(R"({"epochs": 5, "lambda_T": 2.5, "mode": "vanilla"})"));
    EXPECT_EQ(c.epochs, 5u);
    EXPECT_EQ(c.batch_size, 64u);
    EXPECT_EQ(c.learning_rate, 1e-4);
    EXPECT_EQ(c.coefficients.translation, 2.5);
    EXPECT_EQ(c.mode, gan::Mode::vanilla);
    EXPECT_THROW(gan::mode_from_string("cyclegan"), config_error);
}
