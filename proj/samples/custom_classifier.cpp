// The oversampling pipeline with a user-supplied classifier: a nearest-centroid
// scorer in place of the linear SVM.

#include "ttgan/ttgan.hpp"

#include <cmath>
#include <iostream>

using namespace ttgan;

class NearestCentroid final : public classify::Classifier {
public:
    void fit(const Matrix& x, const std::vector<int>& y, const std::vector<double>& weights) override {
        RowVector sums[2] = {RowVector::Zero(x.cols()), RowVector::Zero(x.cols())};
        double mass[2] = {0.0, 0.0};
        for (Index i = 0; i < x.rows(); ++i) {
            const auto c = static_cast<std::size_t>(y[static_cast<std::size_t>(i)]);
            sums[c] += weights[static_cast<std::size_t>(i)] * x.row(i);
            mass[c] += weights[static_cast<std::size_t>(i)];
        }
        centroid_[0] = sums[0] / mass[0];
        centroid_[1] = sums[1] / mass[1];
    }

    std::vector<double> score(const Matrix& x) const override {
        std::vector<double> s(static_cast<std::size_t>(x.rows()));
        for (Index i = 0; i < x.rows(); ++i) {
            const double gap = (x.row(i) - centroid_[0]).norm() - (x.row(i) - centroid_[1]).norm();
            s[static_cast<std::size_t>(i)] = nn::sigmoid(gap);
        }
        return s;
    }

    std::unique_ptr<classify::Classifier> fresh() const override { return std::make_unique<NearestCentroid>(); }
    std::string kind() const override { return "nearest_centroid"; }
    nlohmann::json to_json() const override { return {{"kind", kind()}}; }

private:
    RowVector centroid_[2];
};

int main() {
    const Dataset d = harness::make_two_moons({400, 40, 0.1, 3});
    DatasetSplit parts = split(d, SplitSpec{});
    const auto pipeline = preprocess::fit(parts.train);
    auto train = std::make_shared<const TrainingSet>(TrainingSet{preprocess::apply(pipeline, parts.train), parts.train.y});
    const Matrix test = preprocess::apply(pipeline, parts.test);

    gan::TtganConfig cfg;
    cfg.epochs = 200;
    cfg.coefficients = {0.1, 1.0, 0.0};
    resample::SelectionConfig sel;
    sel.s = 2;
    auto r = classify::run_algorithm_1(train, cfg, sel, NearestCentroid{});

    std::cout << "baseline mAP  " << metrics::average_precision(r.baseline->score(test), parts.test.y) << '\n';
    std::cout << "augmented mAP " << metrics::average_precision(r.final->score(test), parts.test.y) << '\n';
    std::cout << "synthetic rows " << r.augmented.added() << '\n';
}
