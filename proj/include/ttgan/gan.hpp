#pragma once

// Tabular translation GAN: a generator G fed with real majority rows that is
// trained against a minority discriminator D, regularised by an L1 pull
// towards its input and, through a reverse pair G'/D', by cycle-consistency
// and identity penalties. The vanilla mode (noise in, adversarial loss only)
// is kept as the baseline.

#include "ttgan/core.hpp"
#include "ttgan/nn.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace ttgan::gan {

inline constexpr double probability_floor = 1e-12;

struct LossCoefficients {
    double translation = 0.0;  // weight of ||z - G(z)||_1
    double cycle = 0.0;
    double identity = 0.0;

    void validate() const {
        for (double v : {translation, cycle, identity}) {
            if (!std::isfinite(v) || v < 0.0) {
                throw config_error("loss coefficients must be finite and non-negative");
            }
        }
    }
};

enum class Mode { ttgan, vanilla };

inline std::string to_string(Mode m) { return m == Mode::ttgan ? "ttgan" : "vanilla"; }

inline Mode mode_from_string(const std::string& s) {
    if (s == "ttgan") return Mode::ttgan;
    if (s == "vanilla") return Mode::vanilla;
    throw config_error("unknown GAN mode '" + s + "'");
}

struct TtganConfig {
    std::size_t epochs = 200;
    std::size_t batch_size = 64;
    double learning_rate = 1e-4;
    LossCoefficients coefficients;
    std::uint64_t seed = 0;
    Mode mode = Mode::ttgan;

    void validate() const {
        if (epochs < 1) throw config_error("epochs must be >= 1");
        if (batch_size < 1) throw config_error("batch_size must be >= 1");
        if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
            throw config_error("learning_rate must be finite and non-negative");
        }
        coefficients.validate();
    }
};

/// Per-epoch means of the batch losses. Terms that do not exist in the
/// current mode, and cycle/identity terms with zero weight, are NaN.
struct LossRecord {
    std::size_t epoch = 0;
    double discriminator = 0.0;          // L_D = E log D(x_min) + E log(1 - D(G(z)))
    double adversarial = 0.0;            // L_G = E log(1 - D(G(z)))
    double translation = 0.0;            // L_T
    double cycle = 0.0;                  // L_C
    double identity = 0.0;               // L_I
    double reverse_discriminator = 0.0;  // L_D'
    double reverse_adversarial = 0.0;    // L_G'
    double generator_objective = 0.0;    // L_G + lT L_T + lC L_C + lI L_I
    double reverse_objective = 0.0;      // L_G' + lC L_C + lI L_I
};

struct TtganBundle {
    TtganConfig config;
    std::size_t width = 0;
    nn::Mlp generator;      // G: majority -> minority (vanilla: prior -> minority)
    nn::Mlp discriminator;  // D: minority discriminator
    std::optional<nn::Mlp> reverse_generator;      // G': minority -> majority
    std::optional<nn::Mlp> reverse_discriminator;  // D': majority discriminator
    nn::AdamState generator_adam;
    nn::AdamState discriminator_adam;
    std::optional<nn::AdamState> reverse_generator_adam;
    std::optional<nn::AdamState> reverse_discriminator_adam;
    std::vector<LossRecord> history;
};

// ---------------------------------------------------------------------------
// Loss terms
// ---------------------------------------------------------------------------

inline double clamp_probability(double p) { return std::clamp(p, probability_floor, 1.0 - probability_floor); }

// d/dp log(clamp(p)); zero where the clamp is active
inline double log_derivative(double p) {
    return p > probability_floor && p < 1.0 - probability_floor ? 1.0 / p : 0.0;
}

// d/dp log(1 - clamp(p))
inline double log_complement_derivative(double p) {
    return p > probability_floor && p < 1.0 - probability_floor ? -1.0 / (1.0 - p) : 0.0;
}

struct GanLosses {
    double discriminator = 0.0;  // maximised by D
    double generator = 0.0;      // minimised by G
};

template <typename RealProbs, typename FakeProbs>
GanLosses gan_losses(const RealProbs& real, const FakeProbs& fake) {
    const auto n_real = static_cast<Index>(real.size());
    const auto n_fake = static_cast<Index>(fake.size());
    if (n_real == 0 || n_fake == 0) {
        throw shape_error("gan_losses: empty probability vector");
    }
    double real_term = 0.0;
    for (Index i = 0; i < n_real; ++i) {
        real_term += std::log(clamp_probability(real[i]));
    }
    double fake_term = 0.0;
    for (Index i = 0; i < n_fake; ++i) {
        fake_term += std::log(1.0 - clamp_probability(fake[i]));
    }
    real_term /= static_cast<double>(n_real);
    fake_term /= static_cast<double>(n_fake);
    return {real_term + fake_term, fake_term};
}

inline GanLosses gan_losses(const std::vector<double>& real, const std::vector<double>& fake) {
    return gan_losses<std::vector<double>, std::vector<double>>(real, fake);
}

/// Batch mean of the per-row L1 distance.
inline double mean_l1(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw shape_error("L1 loss: shape mismatch");
    }
    if (a.rows() == 0) {
        throw shape_error("L1 loss: empty batch");
    }
    return (a - b).cwiseAbs().sum() / static_cast<double>(a.rows());
}

inline double translation_loss(const Matrix& z, const Matrix& gz) { return mean_l1(z, gz); }

inline double cycle_loss(const Matrix& x_min, const Matrix& x_maj, const nn::Mlp& g, const nn::Mlp& g_rev) {
    return mean_l1(nn::forward(g, nn::forward(g_rev, x_min)), x_min) +
           mean_l1(nn::forward(g_rev, nn::forward(g, x_maj)), x_maj);
}

inline double identity_loss(const Matrix& x_min, const Matrix& x_maj, const nn::Mlp& g, const nn::Mlp& g_rev) {
    return mean_l1(nn::forward(g, x_min), x_min) + mean_l1(nn::forward(g_rev, x_maj), x_maj);
}

namespace detail {

// Inactive terms carry NaN and contribute nothing.
inline double weighted(double coeff, double term) { return coeff > 0.0 ? coeff * term : 0.0; }

// Gradient of mean_l1(output, target) with respect to output, scaled.
inline Matrix l1_gradient(const Matrix& output, const Matrix& target, double scale) {
    const double k = scale / static_cast<double>(output.rows());
    return (output - target).unaryExpr([k](double v) { return v > 0.0 ? k : (v < 0.0 ? -k : 0.0); });
}

inline double mean_log_complement(const Matrix& probs) {
    double s = 0.0;
    for (Index i = 0; i < probs.rows(); ++i) {
        s += std::log(1.0 - clamp_probability(probs(i, 0)));
    }
    return s / static_cast<double>(probs.rows());
}

inline Matrix log_complement_upstream(const Matrix& probs) {
    Matrix up(probs.rows(), 1);
    const double inv = 1.0 / static_cast<double>(probs.rows());
    for (Index i = 0; i < probs.rows(); ++i) {
        up(i, 0) = inv * log_complement_derivative(probs(i, 0));
    }
    return up;
}

inline void ensure_finite(double v, const char* term) {
    if (!std::isfinite(v)) {
        throw divergence_error(std::string("non-finite loss term ") + term);
    }
}

}  // namespace detail

struct DiscriminatorObjective {
    GanLosses losses;
    nn::Grad grad;  // gradient of -L_D (the quantity the optimizer minimises)
};

/// D maximises L_D on (real, fake); the returned gradient is that of -L_D.
inline DiscriminatorObjective discriminator_objective(const nn::Mlp& d, const Matrix& real, const Matrix& fake) {
    const nn::ForwardTrace real_trace = nn::forward_trace(d, real);
    const nn::ForwardTrace fake_trace = nn::forward_trace(d, fake);
    const Matrix& p_real = real_trace.output;
    const Matrix& p_fake = fake_trace.output;
    DiscriminatorObjective out;
    out.losses = gan_losses(p_real.col(0), p_fake.col(0));
    Matrix up_real(p_real.rows(), 1);
    for (Index i = 0; i < p_real.rows(); ++i) {
        up_real(i, 0) = -log_derivative(p_real(i, 0)) / static_cast<double>(p_real.rows());
    }
    Matrix up_fake = -detail::log_complement_upstream(p_fake);
    out.grad = nn::Grad::zeros_like(d);
    nn::backward_accumulate(d, real_trace, up_real, out.grad, false);
    nn::backward_accumulate(d, fake_trace, up_fake, out.grad, false);
    return out;
}

struct GeneratorObjective {
    double adversarial = 0.0;
    double translation = 0.0;
    double cycle = 0.0;
    double identity = 0.0;
    double reverse_adversarial = 0.0;
    double total = 0.0;          // objective of G
    double reverse_total = 0.0;  // objective of G'
    nn::Grad grad;               // d total / d G
    nn::Grad reverse_grad;       // d reverse_total / d G'
};

/// Both generator objectives on one (majority, minority) batch pair. G
/// minimises L_G + lT L_T + lC L_C + lI L_I and G' minimises
/// L_G' + lC L_C + lI L_I. Cycle and identity terms with a zero weight are
/// skipped and reported as NaN.
/// `fwd` and `rev` are the traces of G(majority) and G'(minority).
inline GeneratorObjective generator_objective(const nn::Mlp& g, const nn::Mlp& d, const nn::Mlp& g_rev,
                                              const nn::Mlp& d_rev, const Matrix& majority,
                                              const Matrix& minority, const LossCoefficients& c,
                                              const nn::ForwardTrace& fwd, const nn::ForwardTrace& rev) {
    GeneratorObjective out;
    out.grad = nn::Grad::zeros_like(g);
    out.reverse_grad = nn::Grad::zeros_like(g_rev);
    Matrix up_fwd = Matrix::Zero(fwd.output.rows(), fwd.output.cols());
    Matrix up_rev = Matrix::Zero(rev.output.rows(), rev.output.cols());

    {
        const nn::ForwardTrace judged = nn::forward_trace(d, fwd.output);
        out.adversarial = detail::mean_log_complement(judged.output);
        up_fwd += nn::backward(d, judged, detail::log_complement_upstream(judged.output), false).input_grad;
    }
    {
        const nn::ForwardTrace judged = nn::forward_trace(d_rev, rev.output);
        out.reverse_adversarial = detail::mean_log_complement(judged.output);
        up_rev += nn::backward(d_rev, judged, detail::log_complement_upstream(judged.output), false).input_grad;
    }

    out.translation = mean_l1(fwd.output, majority);
    if (c.translation > 0.0) {
        up_fwd += detail::l1_gradient(fwd.output, majority, c.translation);
    }

    const double nan = std::numeric_limits<double>::quiet_NaN();
    out.cycle = nan;
    if (c.cycle > 0.0) {
        // G(G'(x_min)) - x_min
        const nn::ForwardTrace back_to_min = nn::forward_trace(g, rev.output);
        // G'(G(x_maj)) - x_maj
        const nn::ForwardTrace back_to_maj = nn::forward_trace(g_rev, fwd.output);
        out.cycle = mean_l1(back_to_min.output, minority) + mean_l1(back_to_maj.output, majority);
        up_rev += nn::backward_accumulate(g, back_to_min, detail::l1_gradient(back_to_min.output, minority, c.cycle),
                                          out.grad);
        up_fwd += nn::backward_accumulate(g_rev, back_to_maj,
                                          detail::l1_gradient(back_to_maj.output, majority, c.cycle),
                                          out.reverse_grad);
    }
    out.identity = nan;
    if (c.identity > 0.0) {
        const nn::ForwardTrace same_min = nn::forward_trace(g, minority);
        const nn::ForwardTrace same_maj = nn::forward_trace(g_rev, majority);
        out.identity = mean_l1(same_min.output, minority) + mean_l1(same_maj.output, majority);
        nn::backward_accumulate(g, same_min, detail::l1_gradient(same_min.output, minority, c.identity), out.grad,
                                false);
        nn::backward_accumulate(g_rev, same_maj, detail::l1_gradient(same_maj.output, majority, c.identity),
                                out.reverse_grad, false);
    }

    nn::backward_accumulate(g, fwd, up_fwd, out.grad, false);
    nn::backward_accumulate(g_rev, rev, up_rev, out.reverse_grad, false);
    out.total = out.adversarial + detail::weighted(c.translation, out.translation) +
                detail::weighted(c.cycle, out.cycle) + detail::weighted(c.identity, out.identity);
    out.reverse_total =
        out.reverse_adversarial + detail::weighted(c.cycle, out.cycle) + detail::weighted(c.identity, out.identity);
    return out;
}

inline GeneratorObjective generator_objective(const nn::Mlp& g, const nn::Mlp& d, const nn::Mlp& g_rev,
                                              const nn::Mlp& d_rev, const Matrix& majority,
                                              const Matrix& minority, const LossCoefficients& c) {
    return generator_objective(g, d, g_rev, d_rev, majority, minority, c, nn::forward_trace(g, majority),
                               nn::forward_trace(g_rev, minority));
}

struct VanillaGeneratorObjective {
    double adversarial = 0.0;
    nn::Grad grad;
};

/// Vanilla generator: minimise E log(1 - D(G(z))) for prior draws z.
inline VanillaGeneratorObjective vanilla_generator_objective(const nn::Mlp& g, const nn::Mlp& d,
                                                             const Matrix& noise) {
    const nn::ForwardTrace fake = nn::forward_trace(g, noise);
    const nn::ForwardTrace judged = nn::forward_trace(d, fake.output);
    VanillaGeneratorObjective out;
    out.adversarial = detail::mean_log_complement(judged.output);
    const Matrix up = nn::backward(d, judged, detail::log_complement_upstream(judged.output), false).input_grad;
    out.grad = nn::Grad::zeros_like(g);
    nn::backward_accumulate(g, fake, up, out.grad, false);
    return out;
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// Minority rows paired with a majority batch of `count` rows: distinct rows
/// (partial Fisher-Yates) when enough exist, otherwise drawn with replacement.
inline std::vector<std::size_t> sample_minority_batch(Rng& rng, std::size_t minority_size, std::size_t count) {
    std::vector<std::size_t> out;
    out.reserve(count);
    if (minority_size >= count) {
        std::vector<std::size_t> pool = iota_indices(minority_size);
        for (std::size_t i = 0; i < count; ++i) {
            const std::size_t j = i + rng.index(minority_size - i);
            std::swap(pool[i], pool[j]);
            out.push_back(pool[i]);
        }
    } else {
        for (std::size_t i = 0; i < count; ++i) {
            out.push_back(rng.index(minority_size));
        }
    }
    return out;
}

/// Standard normal prior draws, row by row.
inline Matrix sample_prior(Rng& rng, std::size_t rows, std::size_t dim) {
    Matrix z(static_cast<Index>(rows), static_cast<Index>(dim));
    for (Index i = 0; i < z.rows(); ++i) {
        for (Index j = 0; j < z.cols(); ++j) {
            z(i, j) = rng.normal();
        }
    }
    return z;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

/// Fresh networks drawn from `rng` in the order G, D, G', D' (the reverse
/// pair only in ttgan mode).
inline TtganBundle init_bundle(std::size_t width, const TtganConfig& cfg, Rng& rng) {
    TtganBundle b;
    b.config = cfg;
    b.width = width;
    const nn::AdamConfig adam{cfg.learning_rate};
    b.generator = nn::make_generator(width, width, rng);
    b.discriminator = nn::make_discriminator(width, rng);
    b.generator_adam = nn::AdamState::for_model(b.generator, adam);
    b.discriminator_adam = nn::AdamState::for_model(b.discriminator, adam);
    if (cfg.mode == Mode::ttgan) {
        b.reverse_generator = nn::make_generator(width, width, rng);
        b.reverse_discriminator = nn::make_discriminator(width, rng);
        b.reverse_generator_adam = nn::AdamState::for_model(*b.reverse_generator, adam);
        b.reverse_discriminator_adam = nn::AdamState::for_model(*b.reverse_discriminator, adam);
    }
    return b;
}

/// Trains from scratch. All randomness comes from one stream seeded with
/// cfg.seed, consumed in this order: network init (init_bundle), then per
/// epoch a shuffle of the majority rows (ttgan only), then per batch the
/// prior draws (vanilla only) followed by the minority batch indices.
///
/// Each batch runs one D step, one D' step (ttgan) and one joint generator
/// step. An epoch is one pass over the majority rows in both modes, so
/// vanilla training sees the same number of updates.
inline TtganBundle train(const Matrix& majority, const Matrix& minority, const TtganConfig& cfg) {
    cfg.validate();
    if (majority.rows() == 0 || minority.rows() == 0) {
        throw shape_error("train: both classes must be nonempty");
    }
    if (majority.cols() != minority.cols()) {
        throw shape_error("train: majority and minority widths differ");
    }
    const auto width = static_cast<std::size_t>(majority.cols());
    const auto n_maj = static_cast<std::size_t>(majority.rows());
    const auto n_min = static_cast<std::size_t>(minority.rows());
    const double nan = std::numeric_limits<double>::quiet_NaN();

    Rng rng(cfg.seed);
    TtganBundle b = init_bundle(width, cfg, rng);
    const bool translate = cfg.mode == Mode::ttgan;
    std::vector<std::size_t> order = iota_indices(n_maj);

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        LossRecord acc;
        acc.epoch = epoch;
        if (!translate) {
            acc.translation = acc.cycle = acc.identity = nan;
            acc.reverse_discriminator = acc.reverse_adversarial = acc.reverse_objective = nan;
        }
        std::size_t batches = 0;
        if (translate) {
            rng.shuffle(order);
        }
        for (std::size_t start = 0; start < n_maj; start += cfg.batch_size) {
            const std::size_t count = std::min(cfg.batch_size, n_maj - start);
            if (translate) {
                const std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(start),
                                                    order.begin() + static_cast<std::ptrdiff_t>(start + count));
                const Matrix maj_batch = select_rows(majority, rows);
                const Matrix min_batch = select_rows(minority, sample_minority_batch(rng, n_min, count));

                // the generators are untouched by the discriminator steps, so
                // their forward passes serve both
                const nn::ForwardTrace fwd = nn::forward_trace(b.generator, maj_batch);
                const nn::ForwardTrace rev = nn::forward_trace(*b.reverse_generator, min_batch);
                auto d_obj = discriminator_objective(b.discriminator, min_batch, fwd.output);
                nn::adam_step(b.discriminator, d_obj.grad, b.discriminator_adam);
                auto dr_obj = discriminator_objective(*b.reverse_discriminator, maj_batch, rev.output);
                nn::adam_step(*b.reverse_discriminator, dr_obj.grad, *b.reverse_discriminator_adam);

                auto g_obj = generator_objective(b.generator, b.discriminator, *b.reverse_generator,
                                                 *b.reverse_discriminator, maj_batch, min_batch, cfg.coefficients,
                                                 fwd, rev);
                nn::adam_step(b.generator, g_obj.grad, b.generator_adam);
                nn::adam_step(*b.reverse_generator, g_obj.reverse_grad, *b.reverse_generator_adam);

                acc.discriminator += d_obj.losses.discriminator;
                acc.reverse_discriminator += dr_obj.losses.discriminator;
                acc.adversarial += g_obj.adversarial;
                acc.translation += g_obj.translation;
                acc.cycle += g_obj.cycle;
                acc.identity += g_obj.identity;
                acc.reverse_adversarial += g_obj.reverse_adversarial;
            } else {
                const Matrix noise = sample_prior(rng, count, width);
                const Matrix min_batch = select_rows(minority, sample_minority_batch(rng, n_min, count));
                auto d_obj = discriminator_objective(b.discriminator, min_batch, nn::forward(b.generator, noise));
                nn::adam_step(b.discriminator, d_obj.grad, b.discriminator_adam);
                auto g_obj = vanilla_generator_objective(b.generator, b.discriminator, noise);
                nn::adam_step(b.generator, g_obj.grad, b.generator_adam);
                acc.discriminator += d_obj.losses.discriminator;
                acc.adversarial += g_obj.adversarial;
            }
            ++batches;
        }
        const double inv = 1.0 / static_cast<double>(batches);
        acc.discriminator *= inv;
        acc.adversarial *= inv;
        const auto& c = cfg.coefficients;
        if (translate) {
            acc.translation *= inv;
            acc.cycle *= inv;
            acc.identity *= inv;
            acc.reverse_discriminator *= inv;
            acc.reverse_adversarial *= inv;
            acc.generator_objective = acc.adversarial + detail::weighted(c.translation, acc.translation) +
                                      detail::weighted(c.cycle, acc.cycle) + detail::weighted(c.identity, acc.identity);
            acc.reverse_objective = acc.reverse_adversarial + detail::weighted(c.cycle, acc.cycle) +
                                    detail::weighted(c.identity, acc.identity);
            detail::ensure_finite(acc.translation, "L_T");
            if (c.cycle > 0.0) {
                detail::ensure_finite(acc.cycle, "L_C");
            }
            if (c.identity > 0.0) {
                detail::ensure_finite(acc.identity, "L_I");
            }
            detail::ensure_finite(acc.reverse_discriminator, "L_D'");
            detail::ensure_finite(acc.reverse_adversarial, "L_G'");
        } else {
            acc.generator_objective = acc.adversarial;
        }
        detail::ensure_finite(acc.discriminator, "L_D");
        detail::ensure_finite(acc.adversarial, "L_G");
        b.history.push_back(acc);
    }
    return b;
}

/// Seed of the prior stream used by vanilla-mode generation.
inline std::uint64_t generation_seed(const TtganConfig& cfg) { return cfg.seed ^ 0x5bd1e9955bd1e995ULL; }

/// X_gen: one translated row per majority row (ttgan), or |X_maj| generator
/// outputs on fresh prior draws (vanilla). Calling twice gives the same rows.
inline Matrix generate(const TtganBundle& b, const Matrix& majority) {
    if (b.config.mode == Mode::ttgan) {
        return nn::forward(b.generator, majority);
    }
    Rng rng(generation_seed(b.config));
    return nn::forward(b.generator, sample_prior(rng, static_cast<std::size_t>(majority.rows()), b.width));
}

// ---------------------------------------------------------------------------
// Reporting and checkpoints
// ---------------------------------------------------------------------------

inline void write_loss_history(const std::vector<LossRecord>& history, std::ostream& out) {
    out << "epoch\tL_D\tL_G\tL_T\tL_C\tL_I\tL_D'\tL_G'\n";
    out.precision(10);
    for (const auto& r : history) {
        out << r.epoch << '\t' << r.discriminator << '\t' << r.adversarial << '\t' << r.translation << '\t'
            << r.cycle << '\t' << r.identity << '\t' << r.reverse_discriminator << '\t' << r.reverse_adversarial
            << '\n';
    }
}

inline nlohmann::json to_json(const LossRecord& r) {
    return {{"epoch", r.epoch},
            {"L_D", r.discriminator},
            {"L_G", r.adversarial},
            {"L_T", r.translation},
            {"L_C", r.cycle},
            {"L_I", r.identity},
            {"L_D_reverse", r.reverse_discriminator},
            {"L_G_reverse", r.reverse_adversarial},
            {"generator_objective", r.generator_objective},
            {"reverse_objective", r.reverse_objective}};
}

inline nlohmann::json to_json(const TtganConfig& c) {
    return {{"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"learning_rate", c.learning_rate},
            {"lambda_T", c.coefficients.translation},
            {"lambda_C", c.coefficients.cycle},
            {"lambda_I", c.coefficients.identity},
            {"seed", c.seed},
            {"mode", to_string(c.mode)}};
}

/// Merges the recognised keys of `j` into `base`.
inline TtganConfig ttgan_config_from_json(const nlohmann::json& j, TtganConfig base = {}) {
    if (j.contains("epochs")) base.epochs = j.at("epochs").get<std::size_t>();
    if (j.contains("batch_size")) base.batch_size = j.at("batch_size").get<std::size_t>();
    if (j.contains("learning_rate")) base.learning_rate = j.at("learning_rate").get<double>();
    if (j.contains("lambda_T")) base.coefficients.translation = j.at("lambda_T").get<double>();
    if (j.contains("lambda_C")) base.coefficients.cycle = j.at("lambda_C").get<double>();
    if (j.contains("lambda_I")) base.coefficients.identity = j.at("lambda_I").get<double>();
    if (j.contains("seed")) base.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("mode")) base.mode = mode_from_string(j.at("mode").get<std::string>());
    return base;
}

/// Network checkpoint (optimizer state is not persisted).
inline nlohmann::json to_json(const TtganBundle& b) {
    nlohmann::json j;
    j["config"] = to_json(b.config);
    j["width"] = b.width;
    j["generator"] = nn::to_json(b.generator);
    j["discriminator"] = nn::to_json(b.discriminator);
    if (b.reverse_generator) {
        j["reverse_generator"] = nn::to_json(*b.reverse_generator);
        j["reverse_discriminator"] = nn::to_json(*b.reverse_discriminator);
    }
    return j;
}

inline TtganBundle bundle_from_json(const nlohmann::json& j) {
    TtganBundle b;
    b.config = ttgan_config_from_json(j.at("config"));
    b.width = j.at("width").get<std::size_t>();
    b.generator = nn::mlp_from_json(j.at("generator"));
    b.discriminator = nn::mlp_from_json(j.at("discriminator"));
    const nn::AdamConfig adam{b.config.learning_rate};
    b.generator_adam = nn::AdamState::for_model(b.generator, adam);
    b.discriminator_adam = nn::AdamState::for_model(b.discriminator, adam);
    if (j.contains("reverse_generator")) {
        b.reverse_generator = nn::mlp_from_json(j.at("reverse_generator"));
        b.reverse_discriminator = nn::mlp_from_json(j.at("reverse_discriminator"));
        b.reverse_generator_adam = nn::AdamState::for_model(*b.reverse_generator, adam);
        b.reverse_discriminator_adam = nn::AdamState::for_model(*b.reverse_discriminator, adam);
    }
    return b;
}

}  // namespace ttgan::gan
