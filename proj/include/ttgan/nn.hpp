#pragma once

// Dense feed-forward networks with hand-written reverse mode, plus Adam.

#include "ttgan/core.hpp"

#include <json.hpp>


#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstddef>
#include <string>
#include <vector>

namespace ttgan::nn {

inline constexpr double selu_scale = 1.0507009873554805;
inline constexpr double selu_alpha = 1.6732632423543772;

enum class Activation { identity, sigmoid, selu };

inline std::string to_string(Activation a) {
    switch (a) {
        case Activation::identity: return "identity";
        case Activation::sigmoid: return "sigmoid";
        case Activation::selu: return "selu";
    }
    return "identity";
}

inline Activation activation_from_string(const std::string& s) {
    if (s == "identity") return Activation::identity;
    if (s == "sigmoid") return Activation::sigmoid;
    if (s == "selu") return Activation::selu;
    throw config_error("unknown activation '" + s + "'");
}

inline double selu(double z) { return z >= 0.0 ? selu_scale * z : selu_scale * selu_alpha * std::expm1(z); }

// The kink at 0 takes the positive-branch slope.
inline double selu_derivative(double z) { return z >= 0.0 ? selu_scale : selu_scale * selu_alpha * std::exp(z); }

inline double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

struct Mlp {
    std::vector<std::size_t> dims;  // input, hidden..., output
    std::vector<Matrix> weights;    // weights[l] is dims[l] x dims[l+1]
    std::vector<RowVector> biases;
    Activation hidden = Activation::selu;
    Activation output = Activation::identity;

    std::size_t layers() const { return weights.size(); }
    std::size_t input_dim() const { return dims.front(); }
    std::size_t output_dim() const { return dims.back(); }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (std::size_t l = 0; l < weights.size(); ++l) {
            n += static_cast<std::size_t>(weights[l].size() + biases[l].size());
        }
        return n;
    }
};

/// Gradient tensors shaped like the parameters of one Mlp.
struct Grad {
    std::vector<Matrix> weights;
    std::vector<RowVector> biases;

    static Grad zeros_like(const Mlp& m) {
        Grad g;
        for (std::size_t l = 0; l < m.layers(); ++l) {
            g.weights.push_back(Matrix::Zero(m.weights[l].rows(), m.weights[l].cols()));
            g.biases.push_back(RowVector::Zero(m.biases[l].size()));
        }
        return g;
    }

    Grad& operator+=(const Grad& other) {
        for (std::size_t l = 0; l < weights.size(); ++l) {
            weights[l] += other.weights[l];
            biases[l] += other.biases[l];
        }
        return *this;
    }

    bool all_finite() const {
        for (std::size_t l = 0; l < weights.size(); ++l) {
            // x * 0 is 0 exactly when x is finite
            if ((weights[l].array() * 0.0).sum() != 0.0 || (biases[l].array() * 0.0).sum() != 0.0) {
                return false;
            }
        }
        return true;
    }

    bool all_zero() const {
        for (std::size_t l = 0; l < weights.size(); ++l) {
            if (!weights[l].isZero(0.0) || !biases[l].isZero(0.0)) {
                return false;
            }
        }
        return true;
    }
};

/// Builds a network with Glorot-uniform weights and zero biases.
inline Mlp make_mlp(const std::vector<std::size_t>& dims, Activation hidden, Activation output, Rng& rng) {
    if (dims.size() < 2) {
        throw config_error("an Mlp needs at least an input and an output dimension");
    }
    Mlp m;
    m.dims = dims;
    m.hidden = hidden;
    m.output = output;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        if (dims[l] == 0 || dims[l + 1] == 0) {
            throw config_error("layer dimensions must be >= 1");
        }
        const auto fan_in = static_cast<Index>(dims[l]);
        const auto fan_out = static_cast<Index>(dims[l + 1]);
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Matrix w(fan_in, fan_out);
        for (Index i = 0; i < w.rows(); ++i) {
            for (Index j = 0; j < w.cols(); ++j) {
                w(i, j) = rng.uniform(-limit, limit);
            }
        }
        m.weights.push_back(std::move(w));
        m.biases.push_back(RowVector::Zero(fan_out));
    }
    return m;
}

/// Majority-to-minority translator: hidden sizes 64, 128, 256, linear head.
inline Mlp make_generator(std::size_t input_dim, std::size_t output_dim, Rng& rng) {
    return make_mlp({input_dim, 64, 128, 256, output_dim}, Activation::selu, Activation::identity, rng);
}

/// Hidden sizes 128, 64 with a sigmoid probability head.
inline Mlp make_discriminator(std::size_t input_dim, Rng& rng) {
    return make_mlp({input_dim, 128, 64, 1}, Activation::selu, Activation::sigmoid, rng);
}

/// Activations cached for the reverse pass.
struct ForwardTrace {
    std::vector<Matrix> inputs;  // inputs[l] feeds layer l
    std::vector<Matrix> pre;     // affine output of layer l
    Matrix output;
};

namespace detail {

// 1.0 for v >= 0 (including -0.0), else 0.0, from the sign bit alone. GCC
// keeps loops containing floating-point selects scalar, so the activation
// code below blends with this instead.
inline double nonnegative_indicator(double v) {
    const auto sign = std::bit_cast<std::int64_t>(v + 0.0) >> 63;
    return std::bit_cast<double>(~sign & std::bit_cast<std::int64_t>(1.0));
}

// exp(x) for x <= 0 built from plain arithmetic, so vector lanes and scalar
// remainders of a loop round identically (library exp differs between the
// two). Results below exp(-708) flush to that value; accurate to ~2 ulp.
inline double exp_nonpositive(double x) {
    constexpr double log2e = 1.4426950408889634;
    constexpr double ln2_hi = 6.93147180369123816490e-01;
    constexpr double ln2_lo = 1.90821492927058770002e-10;
    constexpr double shifter = 0x1.8p52;
    const double in_range = nonnegative_indicator(x + 708.0);
    x = in_range * x - (1.0 - in_range) * 708.0;
    const double t = x * log2e + shifter;
    const double k = t - shifter;
    const double r = (x - k * ln2_hi) - k * ln2_lo;
    double p = 1.0 / 6227020800.0;
    p = p * r + 1.0 / 479001600.0;
    p = p * r + 1.0 / 39916800.0;
    p = p * r + 1.0 / 3628800.0;
    p = p * r + 1.0 / 362880.0;
    p = p * r + 1.0 / 40320.0;
    p = p * r + 1.0 / 5040.0;
    p = p * r + 1.0 / 720.0;
    p = p * r + 1.0 / 120.0;
    p = p * r + 1.0 / 24.0;
    p = p * r + 1.0 / 6.0;
    p = p * r + 0.5;
    p = p * r + 1.0;
    p = p * r + 1.0;
    const auto n = std::bit_cast<std::int64_t>(t) - std::bit_cast<std::int64_t>(shifter);
    return p * std::bit_cast<double>((n + 1023) << 52);
}

inline void activate(Activation a, const Matrix& z, Matrix& out) {
    switch (a) {
        case Activation::identity: out = z; break;
        case Activation::sigmoid: out = z.unaryExpr([](double v) { return sigmoid(v); }); break;
        case Activation::selu: {
            out.resize(z.rows(), z.cols());
            const double* __restrict pz = z.data();
            double* __restrict po = out.data();
            const Index n = z.size();
            for (Index i = 0; i < n; ++i) {
                const double v = pz[i];
                const double pos = nonnegative_indicator(v);
                const double above = pos * v;
                const double below = (1.0 - pos) * v;
                po[i] = selu_scale * above + selu_scale * selu_alpha * (exp_nonpositive(below) - 1.0);
            }
            break;
        }
    }
}

// Multiplies the upstream gradient by the activation derivative in place.
inline void activation_backward(Activation a, const Matrix& z, const Matrix& activated, Matrix& delta) {
    switch (a) {
        case Activation::identity: break;
        case Activation::sigmoid: delta.array() *= activated.array() * (1.0 - activated.array()); break;
        case Activation::selu:
            // below zero the slope is selu(z) + scale * alpha, so no second exp is needed
        {
            double* __restrict d = delta.data();
            const double* __restrict pz = z.data();
            const double* __restrict pa = activated.data();
            const Index n = delta.size();
            for (Index i = 0; i < n; ++i) {
                const double pos = nonnegative_indicator(pz[i]);
                d[i] *= pos * selu_scale + (1.0 - pos) * (pa[i] + selu_scale * selu_alpha);
            }
            break;
        }
    }
}

// z = x W + b, evaluated in fixed 64-row chunks (the last one zero padded).
// Eigen picks its product kernel from the operand shapes, so a row's bits
// would otherwise depend on the size of the batch it arrives in; within a
// product of fixed shape they do not depend on the row's position.
inline constexpr Index affine_chunk = 64;

inline void affine(const Matrix& x, const Matrix& w, const RowVector& b, Matrix& z) {
    const Index rows = x.rows();
    z.resize(rows, w.cols());
    Index r0 = 0;
    for (; r0 + affine_chunk <= rows; r0 += affine_chunk) {
        z.middleRows(r0, affine_chunk).noalias() = x.middleRows(r0, affine_chunk) * w;
    }
    if (r0 < rows) {
        const Index rest = rows - r0;
        Matrix padded = Matrix::Zero(affine_chunk, x.cols());
        padded.topRows(rest) = x.middleRows(r0, rest);
        Matrix out(affine_chunk, w.cols());
        out.noalias() = padded * w;
        z.middleRows(r0, rest) = out.topRows(rest);
    }
    z.rowwise() += b;
}

inline void check_input(const Mlp& m, const Matrix& x) {
    if (static_cast<std::size_t>(x.cols()) != m.input_dim()) {
        throw shape_error("Mlp input has " + std::to_string(x.cols()) + " columns, expected " +
                          std::to_string(m.input_dim()));
    }
}

}  // namespace detail

inline ForwardTrace forward_trace(const Mlp& m, const Matrix& x) {
    detail::check_input(m, x);
    ForwardTrace t;
    t.inputs.reserve(m.layers());
    t.pre.reserve(m.layers());
    Matrix a = x;
    for (std::size_t l = 0; l < m.layers(); ++l) {
        Matrix z;
        detail::affine(a, m.weights[l], m.biases[l], z);
        t.inputs.push_back(std::move(a));
        const Activation act = l + 1 == m.layers() ? m.output : m.hidden;
        Matrix next;
        detail::activate(act, z, next);
        t.pre.push_back(std::move(z));
        a = std::move(next);
    }
    t.output = std::move(a);
    return t;
}

/// Batch rows are processed independently.
inline Matrix forward(const Mlp& m, const Matrix& x) { return forward_trace(m, x).output; }

struct Backward {
    Grad grad;
    Matrix input_grad;
};

namespace detail {

inline Matrix backward_pass(const Mlp& m, const ForwardTrace& t, const Matrix& upstream, Grad* acc,
                            bool need_input_grad) {
    if (upstream.rows() != t.output.rows() || upstream.cols() != t.output.cols()) {
        throw shape_error("backward: upstream shape does not match forward output");
    }
    Matrix delta = upstream;
    for (std::size_t li = m.layers(); li-- > 0;) {
        const Activation act = li + 1 == m.layers() ? m.output : m.hidden;
        const Matrix& activated = li + 1 == m.layers() ? t.output : t.inputs[li + 1];
        activation_backward(act, t.pre[li], activated, delta);
        if (acc != nullptr) {
            acc->weights[li].noalias() += t.inputs[li].transpose() * delta;
            for (Index r = 0; r < delta.rows(); ++r) {
                acc->biases[li] += delta.row(r);
            }
        }
        if (li == 0 && !need_input_grad) {
            return Matrix();
        }
        Matrix prev(delta.rows(), m.weights[li].rows());
        prev.noalias() = delta * m.weights[li].transpose();
        delta = std::move(prev);
    }
    return delta;
}

}  // namespace detail

/// Reverse pass from `upstream` = dLoss/dOutput. Set `need_params` false when
/// only the input gradient is wanted (e.g. backpropagating through a frozen
/// discriminator) and `need_input_grad` false when the input is data.
inline Backward backward(const Mlp& m, const ForwardTrace& t, const Matrix& upstream, bool need_params = true,
                         bool need_input_grad = true) {
    Backward b;
    if (need_params) {
        b.grad = Grad::zeros_like(m);
    }
    b.input_grad = detail::backward_pass(m, t, upstream, need_params ? &b.grad : nullptr, need_input_grad);
    return b;
}

/// As backward, but adds the parameter gradient into `acc` and returns the
/// input gradient (empty when not requested).
inline Matrix backward_accumulate(const Mlp& m, const ForwardTrace& t, const Matrix& upstream, Grad& acc,
                                  bool need_input_grad = true) {
    return detail::backward_pass(m, t, upstream, &acc, need_input_grad);
}

inline Backward backward(const Mlp& m, const Matrix& x, const Matrix& upstream) {
    return backward(m, forward_trace(m, x), upstream);
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamConfig {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    AdamConfig config;
    std::size_t step_count = 0;
    Grad first_moment;
    Grad second_moment;

    static AdamState for_model(const Mlp& m, const AdamConfig& config = {}) {
        AdamState s;
        s.config = config;
        s.first_moment = Grad::zeros_like(m);
        s.second_moment = Grad::zeros_like(m);
        return s;
    }
};

/// One bias-corrected Adam update. Throws divergence_error on a non-finite
/// gradient without touching the parameters.
inline void adam_step(Mlp& m, const Grad& g, AdamState& s) {
    if (g.weights.size() != m.layers()) {
        throw shape_error("adam_step: gradient does not match model");
    }
    for (std::size_t l = 0; l < m.layers(); ++l) {
        if (g.weights[l].rows() != m.weights[l].rows() || g.weights[l].cols() != m.weights[l].cols() ||
            g.biases[l].size() != m.biases[l].size()) {
            throw shape_error("adam_step: gradient shape mismatch at layer " + std::to_string(l));
        }
    }
    if (!g.all_finite()) {
        throw divergence_error("adam_step: non-finite gradient");
    }
    ++s.step_count;
    const auto& c = s.config;
    const double t = static_cast<double>(s.step_count);
    const double correction1 = 1.0 - std::pow(c.beta1, t);
    const double correction2 = 1.0 - std::pow(c.beta2, t);
    auto update = [&](auto& param, const auto& grad, auto& m1, auto& m2) {
        m1 = c.beta1 * m1 + (1.0 - c.beta1) * grad;
        m2 = c.beta2 * m2 + (1.0 - c.beta2) * grad.cwiseAbs2();
        param.array() -= c.learning_rate * (m1.array() / correction1) /
                         ((m2.array() / correction2).sqrt() + c.epsilon);
    };
    for (std::size_t l = 0; l < m.layers(); ++l) {
        update(m.weights[l], g.weights[l], s.first_moment.weights[l], s.second_moment.weights[l]);
        update(m.biases[l], g.biases[l], s.first_moment.biases[l], s.second_moment.biases[l]);
    }
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const Mlp& m) {
    using nlohmann::json;
    json j;
    j["dims"] = m.dims;
    j["hidden_activation"] = to_string(m.hidden);
    j["output_activation"] = to_string(m.output);
    json layers = json::array();
    for (std::size_t l = 0; l < m.layers(); ++l) {
        const Matrix& w = m.weights[l];
        layers.push_back({{"weights", std::vector<double>(w.data(), w.data() + w.size())},
                          {"biases", std::vector<double>(m.biases[l].data(), m.biases[l].data() + m.biases[l].size())}});
    }
    j["layers"] = layers;
    return j;
}

inline Mlp mlp_from_json(const nlohmann::json& j) {
    Mlp m;
    m.dims = j.at("dims").get<std::vector<std::size_t>>();
    m.hidden = activation_from_string(j.at("hidden_activation").get<std::string>());
    m.output = activation_from_string(j.at("output_activation").get<std::string>());
    const auto& layers = j.at("layers");
    if (m.dims.size() < 2 || layers.size() + 1 != m.dims.size()) {
        throw shape_error("Mlp document: layer count does not match dims");
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto rows = static_cast<Index>(m.dims[l]);
        const auto cols = static_cast<Index>(m.dims[l + 1]);
        const auto w = layers[l].at("weights").get<std::vector<double>>();
        const auto b = layers[l].at("biases").get<std::vector<double>>();
        if (static_cast<Index>(w.size()) != rows * cols || static_cast<Index>(b.size()) != cols) {
            throw shape_error("Mlp document: parameter count mismatch at layer " + std::to_string(l));
        }
        m.weights.push_back(Eigen::Map<const Matrix>(w.data(), rows, cols));
        m.biases.push_back(Eigen::Map<const RowVector>(b.data(), cols));
    }
    return m;
}

}  // namespace ttgan::nn
