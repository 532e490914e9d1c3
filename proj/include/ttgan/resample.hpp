#pragma once

// Synthetic-sample selection for generated rows and the classical
// oversampling baselines. Everything here works in the preprocessed space.

#include "ttgan/core.hpp"
#include "ttgan/data.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace ttgan::resample {

enum class SelectionVariant { upper_bound, closest_to_pmax };

inline SelectionVariant variant_from_string(const std::string& s) {
    if (s == "upper_bound") return SelectionVariant::upper_bound;
    if (s == "closest_to_pmax") return SelectionVariant::closest_to_pmax;
    throw config_error("unknown selection variant '" + s + "'");
}

inline std::string to_string(SelectionVariant v) {
    return v == SelectionVariant::upper_bound ? "upper_bound" : "closest_to_pmax";
}

struct SelectionConfig {
    double p_max = 1.0;
    double s = 1.0;  // budget as a multiple of the minority count
    SelectionVariant variant = SelectionVariant::upper_bound;

    void validate() const {
        if (!(p_max >= 0.0 && p_max <= 1.0)) throw config_error("p_max must lie in [0, 1]");
        if (!(s > 0.0) || !std::isfinite(s)) throw config_error("s must be positive and finite");
    }
};

struct ScoredSamples {
    Matrix rows;
    std::vector<double> scores;
};

/// floor(s * minority_count). The small slack absorbs representation error in
/// products such as 0.29 * 100.
inline std::size_t selection_budget(double s, std::size_t minority_count) {
    const double budget = s * static_cast<double>(minority_count);
    return budget <= 0.0 ? 0 : static_cast<std::size_t>(std::floor(budget + 1e-9));
}

/// Indices of the accepted rows, in selection order.
///  upper_bound:     scores <= p_max, highest score first
///  closest_to_pmax: all rows, smallest |score - p_max| first
/// Both truncate to the budget; equal keys keep ascending index order.
inline std::vector<std::size_t> select(const std::vector<double>& scores, const SelectionConfig& cfg,
                                       std::size_t minority_count) {
    cfg.validate();
    if (minority_count < 1) {
        throw config_error("select: minority count must be >= 1");
    }
    std::vector<std::size_t> idx;
    if (cfg.variant == SelectionVariant::upper_bound) {
        for (std::size_t i = 0; i < scores.size(); ++i) {
            if (scores[i] <= cfg.p_max) {
                idx.push_back(i);
            }
        }
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    } else {
        idx = iota_indices(scores.size());
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            return std::abs(scores[a] - cfg.p_max) < std::abs(scores[b] - cfg.p_max);
        });
    }
    idx.resize(std::min(idx.size(), selection_budget(cfg.s, minority_count)));
    return idx;
}

inline std::vector<std::size_t> select(const ScoredSamples& c, const SelectionConfig& cfg,
                                       std::size_t minority_count) {
    if (static_cast<std::size_t>(c.rows.rows()) != c.scores.size()) {
        throw shape_error("select: row count does not match score count");
    }
    return select(c.scores, cfg, minority_count);
}

/// How a SMOTE row was built: base + gap * (partner - base).
struct Interpolation {
    std::size_t base = 0;     // row in the base set
    std::size_t partner = 0;  // row in the base set
    double gap = 0.0;
};

struct AugmentedDataset {
    std::shared_ptr<const TrainingSet> base;
    Matrix synthetic;                                   // all labelled minority
    std::vector<std::optional<std::size_t>> provenance;  // source majority row in `base`, if any
    std::vector<Interpolation> interpolations;          // SMOTE variants only
    bool fell_back_to_smote = false;                    // Borderline-SMOTE found no DANGER rows

    std::size_t added() const { return static_cast<std::size_t>(synthetic.rows()); }

    TrainingSet combined() const {
        TrainingSet t;
        t.x = vstack(base->x, synthetic);
        t.y = base->y;
        t.y.insert(t.y.end(), added(), 1);
        return t;
    }
};

inline AugmentedDataset augment(std::shared_ptr<const TrainingSet> base, Matrix selected,
                                std::vector<std::optional<std::size_t>> provenance = {}) {
    if (selected.rows() > 0 && selected.cols() != base->x.cols()) {
        throw shape_error("augment: synthetic width " + std::to_string(selected.cols()) + " does not match " +
                          std::to_string(base->x.cols()));
    }
    if (provenance.empty()) {
        provenance.assign(static_cast<std::size_t>(selected.rows()), std::nullopt);
    }
    if (provenance.size() != static_cast<std::size_t>(selected.rows())) {
        throw shape_error("augment: provenance length does not match synthetic rows");
    }
    AugmentedDataset a;
    a.base = std::move(base);
    a.synthetic = selected.rows() > 0 ? std::move(selected) : Matrix(0, a.base->x.cols());
    a.provenance = std::move(provenance);
    return a;
}

namespace detail {

inline void check_base(const TrainingSet& d) {
    if (d.minority_count() == 0 || d.majority_count() == 0) {
        throw data_error("resampling needs both classes present");
    }
}

}  // namespace detail

/// The `k` nearest rows of `candidates` to row `query` (excluding `query`
/// itself), by exact Euclidean distance; ties go to the lower row index.
inline std::vector<std::size_t> nearest_neighbors(const Matrix& x, std::size_t query,
                                                  const std::vector<std::size_t>& candidates, std::size_t k) {
    std::vector<std::pair<double, std::size_t>> dist;
    dist.reserve(candidates.size());
    const auto q = x.row(static_cast<Index>(query));
    for (std::size_t c : candidates) {
        if (c != query) {
            dist.emplace_back((x.row(static_cast<Index>(c)) - q).squaredNorm(), c);
        }
    }
    k = std::min(k, dist.size());
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    std::vector<std::size_t> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        out.push_back(dist[i].second);
    }
    return out;
}

/// Duplicates minority rows uniformly at random until the classes balance.
inline AugmentedDataset random_oversample(std::shared_ptr<const TrainingSet> base, std::uint64_t seed) {
    detail::check_base(*base);
    const Partition p = partition(*base);
    const std::size_t needed = p.majority_rows.size() - p.minority_rows.size();
    Rng rng(seed);
    Matrix out(static_cast<Index>(needed), base->x.cols());
    for (std::size_t i = 0; i < needed; ++i) {
        out.row(static_cast<Index>(i)) = base->x.row(static_cast<Index>(p.minority_rows[rng.index(p.minority_rows.size())]));
    }
    return augment(std::move(base), std::move(out));
}

namespace detail {

inline AugmentedDataset interpolate(std::shared_ptr<const TrainingSet> base,
                                    const std::vector<std::size_t>& bases,
                                    const std::vector<std::size_t>& minority, std::size_t k, std::size_t needed,
                                    Rng& rng) {
    const Matrix& x = base->x;
    std::vector<std::vector<std::size_t>> neighbors(x.rows());
    for (std::size_t b : bases) {
        if (neighbors[b].empty()) {
            neighbors[b] = nearest_neighbors(x, b, minority, k);
        }
    }
    Matrix out(static_cast<Index>(needed), x.cols());
    std::vector<Interpolation> trace;
    trace.reserve(needed);
    for (std::size_t i = 0; i < needed; ++i) {
        const std::size_t b = bases[rng.index(bases.size())];
        const auto& nn = neighbors[b];
        const std::size_t partner = nn[rng.index(nn.size())];
        const double gap = rng.uniform();
        out.row(static_cast<Index>(i)) =
            x.row(static_cast<Index>(b)) + gap * (x.row(static_cast<Index>(partner)) - x.row(static_cast<Index>(b)));
        trace.push_back({b, partner, gap});
    }
    AugmentedDataset a = augment(std::move(base), std::move(out));
    a.interpolations = std::move(trace);
    return a;
}

}  // namespace detail

/// SMOTE: interpolate between a minority row and one of its k nearest
/// minority neighbours until the classes balance.
inline AugmentedDataset smote(std::shared_ptr<const TrainingSet> base, std::size_t k, std::uint64_t seed) {
    detail::check_base(*base);
    if (k < 1) {
        throw config_error("smote: k must be >= 1");
    }
    const Partition p = partition(*base);
    if (p.minority_rows.size() < 2) {
        throw data_error("smote: needs at least two minority rows");
    }
    Rng rng(seed);
    const std::size_t needed = p.majority_rows.size() - p.minority_rows.size();
    return detail::interpolate(std::move(base), p.minority_rows, p.minority_rows, k, needed, rng);
}

/// Minority rows whose m nearest neighbours (both classes) contain at least
/// m/2 but fewer than m majority rows.
inline std::vector<std::size_t> danger_set(const TrainingSet& d, std::size_t m) {
    const std::vector<std::size_t> all = iota_indices(d.size());
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (d.y[i] != 1) {
            continue;
        }
        const auto nn = nearest_neighbors(d.x, i, all, m);
        std::size_t majority = 0;
        for (std::size_t j : nn) {
            majority += d.y[j] == 0 ? 1 : 0;
        }
        if (2 * majority >= nn.size() && majority < nn.size()) {
            out.push_back(i);
        }
    }
    return out;
}

/// Borderline-SMOTE (borderline-1): SMOTE with bases restricted to the
/// DANGER set and partners among the k nearest minority rows. Falls back to
/// plain SMOTE, flagging it, when the DANGER set is empty.
inline AugmentedDataset borderline_smote(std::shared_ptr<const TrainingSet> base, std::size_t k, std::size_t m,
                                         std::uint64_t seed) {
    detail::check_base(*base);
    if (k < 1 || m < 1) {
        throw config_error("borderline_smote: k and m must be >= 1");
    }
    const Partition p = partition(*base);
    if (p.minority_rows.size() < 2) {
        throw data_error("borderline_smote: needs at least two minority rows");
    }
    const std::vector<std::size_t> danger = danger_set(*base, m);
    if (danger.empty()) {
        AugmentedDataset a = smote(std::move(base), k, seed);
        a.fell_back_to_smote = true;
        return a;
    }
    Rng rng(seed);
    const std::size_t needed = p.majority_rows.size() - p.minority_rows.size();
    return detail::interpolate(std::move(base), danger, p.minority_rows, k, needed, rng);
}

/// Tab-separated synthetic rows with their source-majority column.
inline void write_selected(const AugmentedDataset& a, std::ostream& out) {
    out.precision(17);
    for (Index j = 0; j < a.synthetic.cols(); ++j) {
        out << 'f' << j << '\t';
    }
    out << "source_majority_row\n";
    for (Index i = 0; i < a.synthetic.rows(); ++i) {
        for (Index j = 0; j < a.synthetic.cols(); ++j) {
            out << a.synthetic(i, j) << '\t';
        }
        const auto& src = a.provenance[static_cast<std::size_t>(i)];
        if (src) {
            out << *src;
        } else {
            out << "NA";
        }
        out << '\n';
    }
}

}  // namespace ttgan::resample
