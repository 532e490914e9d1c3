// Trains TTGAN and a vanilla GAN on an imbalanced two-moons set and writes
// both scatters, so the two can be plotted side by side.
//
//   two_moons_demo [output-dir]

#include "ttgan/ttgan.hpp"

#include <filesystem>
#include <iostream>

using namespace ttgan;

int main(int argc, char** argv) {
    const std::string dir = argc > 1 ? argv[1] : "moons_out";
    std::filesystem::create_directories(dir);

    const Dataset d = harness::make_two_moons({500, 50, 0.1, 7});
    const auto pipeline = preprocess::fit(d);
    auto data = std::make_shared<const TrainingSet>(TrainingSet{preprocess::apply(pipeline, d), d.y});

    resample::SelectionConfig sel;
    sel.s = 4;
    for (auto mode : {gan::Mode::ttgan, gan::Mode::vanilla}) {
        gan::TtganConfig cfg;
        cfg.epochs = 300;
        cfg.coefficients = {0.1, 0.0, 0.0};
        cfg.mode = mode;
        cfg.seed = 7;
        auto r = classify::run_algorithm_1(data, cfg, sel, classify::LinearSvmConfig{});
        const std::string path = dir + "/scatter_" + gan::to_string(mode) + ".tsv";
        harness::emit_scatter(r.augmented, path);
        std::cout << gan::to_string(mode) << ": generated " << r.diagnostics.generated << ", kept "
                  << r.diagnostics.selected << " -> " << path << '\n';
    }
}
