#pragma once

// Ranking metrics for the positive (minority) class. All three depend on the
// scores only through their order, with equal scores forming one threshold.

#include "ttgan/core.hpp"

#include <algorithm>
#include <span>
#include <vector>

namespace ttgan::metrics {

struct ScoredLabels {
    std::vector<double> scores;
    std::vector<int> labels;  // 1 = positive
};

namespace detail {

struct Threshold {
    std::size_t true_positives = 0;  // cumulative, at this threshold
    std::size_t predicted = 0;
};

inline void check(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size() || scores.empty()) {
        throw shape_error("metrics: scores and labels must be nonempty and equally long");
    }
}

// Cumulative counts at each distinct score, highest score first.
inline std::vector<Threshold> thresholds(std::span<const double> scores, std::span<const int> labels) {
    std::vector<std::size_t> order = iota_indices(scores.size());
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::vector<Threshold> out;
    Threshold cur;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            cur.true_positives += labels[order[j]] == 1 ? 1 : 0;
            ++cur.predicted;
            ++j;
        }
        out.push_back(cur);
        i = j;
    }
    return out;
}

inline std::size_t positives(std::span<const int> labels) {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
}

}  // namespace detail

/// Non-interpolated step sum: sum_n (R_n - R_{n-1}) P_n over thresholds.
inline double average_precision(std::span<const double> scores, std::span<const int> labels) {
    detail::check(scores, labels);
    const std::size_t pos = detail::positives(labels);
    if (pos == 0) {
        throw data_error("average_precision: no positive labels");
    }
    double ap = 0.0;
    std::size_t prev_tp = 0;
    for (const auto& t : detail::thresholds(scores, labels)) {
        if (t.true_positives != prev_tp) {
            const double precision = static_cast<double>(t.true_positives) / static_cast<double>(t.predicted);
            ap += static_cast<double>(t.true_positives - prev_tp) / static_cast<double>(pos) * precision;
            prev_tp = t.true_positives;
        }
    }
    return ap;
}

/// P(score of a random positive > score of a random negative), ties count 1/2.
inline double auc_roc(std::span<const double> scores, std::span<const int> labels) {
    detail::check(scores, labels);
    const std::size_t pos = detail::positives(labels);
    const std::size_t neg = labels.size() - pos;
    if (pos == 0 || neg == 0) {
        throw data_error("auc_roc: both classes must be present");
    }
    // Walk tie groups from the lowest score upwards, counting negatives below.
    std::vector<std::size_t> order = iota_indices(scores.size());
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double wins = 0.0;  // doubled to stay in integers until the end
    std::size_t negatives_below = 0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        std::size_t group_pos = 0;
        std::size_t group_neg = 0;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            (labels[order[j]] == 1 ? group_pos : group_neg) += 1;
            ++j;
        }
        wins += static_cast<double>(group_pos) * (2.0 * static_cast<double>(negatives_below) +
                                                  static_cast<double>(group_neg));
        negatives_below += group_neg;
        i = j;
    }
    return wins / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

/// Best precision over thresholds whose recall reaches `recall_floor`.
inline double precision_at_recall(std::span<const double> scores, std::span<const int> labels, double recall_floor) {
    detail::check(scores, labels);
    if (!(recall_floor > 0.0 && recall_floor <= 1.0)) {
        throw config_error("precision_at_recall: recall floor must lie in (0, 1]");
    }
    const std::size_t pos = detail::positives(labels);
    if (pos == 0) {
        throw data_error("precision_at_recall: no positive labels");
    }
    const double needed = recall_floor * static_cast<double>(pos) - 1e-9;
    double best = 0.0;
    for (const auto& t : detail::thresholds(scores, labels)) {
        if (static_cast<double>(t.true_positives) >= needed) {
            best = std::max(best, static_cast<double>(t.true_positives) / static_cast<double>(t.predicted));
        }
    }
    return best;
}

inline double average_precision(const ScoredLabels& s) { return average_precision(s.scores, s.labels); }
inline double auc_roc(const ScoredLabels& s) { return auc_roc(s.scores, s.labels); }
inline double precision_at_recall(const ScoredLabels& s, double floor) {
    return precision_at_recall(s.scores, s.labels, floor);
}

}  // namespace ttgan::metrics
