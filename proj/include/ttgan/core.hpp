#pragma once

// Shared vocabulary: dense matrix aliases, error types and the seeded PRNG
// used everywhere a draw must be reproducible.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace ttgan {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Index = Eigen::Index;

struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed input files or datasets that violate the class invariants.
struct data_error : error {
    using error::error;
};

/// Incompatible matrix/vector dimensions.
struct shape_error : error {
    using error::error;
};

/// Invalid configuration or preset lookup.
struct config_error : error {
    using error::error;
};

/// Non-finite values during optimization.
struct divergence_error : error {
    using error::error;
};

// The standard library distributions are implementation-defined, so draws are
// derived from the raw 64-bit engine output to stay reproducible across
// toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1) with 53 bits of resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). Rejection sampling removes modulo bias.
    std::size_t index(std::size_t n) {
        if (n <= 1) {
            return 0;
        }
        const std::uint64_t bound = static_cast<std::uint64_t>(n);
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % bound;
        std::uint64_t r = engine_();
        while (r >= limit) {
            r = engine_();
        }
        return static_cast<std::size_t>(r % bound);
    }

    /// Standard normal via Box-Muller (both variates are consumed in pairs).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) {
            u1 = uniform();
        }
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    template <typename T>
    void shuffle(std::vector<T>& values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            std::swap(values[i - 1], values[index(i)]);
        }
    }

    /// Independent child stream; used to decouple sub-steps from each other.
    Rng fork() { return Rng(engine_() ^ 0x9e3779b97f4a7c15ULL); }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

inline std::vector<std::size_t> iota_indices(std::size_t n) {
    std::vector<std::size_t> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = i;
    }
    return out;
}

inline Matrix select_rows(const Matrix& x, const std::vector<std::size_t>& rows) {
    Matrix out(static_cast<Index>(rows.size()), x.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.row(static_cast<Index>(i)) = x.row(static_cast<Index>(rows[i]));
    }
    return out;
}

inline Matrix vstack(const Matrix& top, const Matrix& bottom) {
    if (top.rows() == 0) {
        return bottom;
    }
    if (bottom.rows() == 0) {
        return top;
    }
    if (top.cols() != bottom.cols()) {
        throw shape_error("vstack: column mismatch (" + std::to_string(top.cols()) + " vs " +
                          std::to_string(bottom.cols()) + ")");
    }
    Matrix out(top.rows() + bottom.rows(), top.cols());
    out.topRows(top.rows()) = top;
    out.bottomRows(bottom.rows()) = bottom;
    return out;
}

}  // namespace ttgan
