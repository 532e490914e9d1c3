#pragma once

#include "ttgan/ttgan.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>

namespace ttgan::test {

inline std::filesystem::path scratch_dir() {
    const auto dir = std::filesystem::temp_directory_path() / "ttgan_tests";
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string write_file(const std::string& name, const std::string& contents) {
    const auto path = scratch_dir() / name;
    std::ofstream(path) << contents;
    return path.string();
}

inline std::string data_file(const std::string& name) { return std::string(TTGAN_DATA_DIR) + "/" + name; }

inline Matrix random_matrix(Rng& rng, Index rows, Index cols, double scale = 1.0) {
    Matrix m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
    return m;
}

/// A minimal Dataset over purely numeric columns.
inline Dataset numeric_dataset(const Matrix& x, const std::vector<int>& y) {
    Dataset d;
    d.x = x;
    d.y = y;
    d.name = "synthetic";
    d.class_labels = {"neg", "pos"};
    for (Index j = 0; j < x.cols(); ++j) d.meta.push_back({"f" + std::to_string(j), FeatureKind::numeric, {}, "?"});
    return d;
}

inline std::shared_ptr<const TrainingSet> shared_set(const Matrix& x, const std::vector<int>& y) {
    return std::make_shared<const TrainingSet>(TrainingSet{x, y});
}

/// Largest per-entry relative error between an analytic gradient and central
/// differences of `loss` over every parameter of `m`. Entries below `floor`
/// in magnitude are compared on an absolute scale of `floor`.
inline double gradient_check(nn::Mlp& m, const nn::Grad& analytic, const std::function<double()>& loss,
                             double h = 1e-5, double floor = 1e-6) {
    double worst = 0.0;
    auto probe = [&](double& param, double expected) {
        const double saved = param;
        param = saved + h;
        const double up = loss();
        param = saved - h;
        const double down = loss();
        param = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double scale = std::max({std::abs(numeric), std::abs(expected), floor});
        worst = std::max(worst, std::abs(numeric - expected) / scale);
    };
    for (std::size_t l = 0; l < m.layers(); ++l) {
        for (Index i = 0; i < m.weights[l].size(); ++i) probe(m.weights[l].data()[i], analytic.weights[l].data()[i]);
        for (Index i = 0; i < m.biases[l].size(); ++i) probe(m.biases[l].data()[i], analytic.biases[l].data()[i]);
    }
    return worst;
}

inline bool same_parameters(const nn::Mlp& a, const nn::Mlp& b) {
    if (a.dims != b.dims) return false;
    for (std::size_t l = 0; l < a.layers(); ++l) {
        if (a.weights[l] != b.weights[l] || a.biases[l] != b.biases[l]) return false;
    }
    return true;
}

}  // namespace ttgan::test
