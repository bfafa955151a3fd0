#pragma once

// Evaluation metrics: argmax accuracy, exact ROC-AUC (tie-aware pair
// counting via a sort sweep, integer numerator), and confusion counts.

#include <algorithm>
#include <cstdint>
#include <vector>

#include "graphbridge/common.hpp"
#include "graphbridge/tensor.hpp"

namespace graphbridge {

enum class Metric { Accuracy, RocAuc };

inline std::string metric_name(Metric m) { return m == Metric::Accuracy ? "accuracy" : "roc_auc"; }

inline std::vector<std::int64_t> argmax_rows(const Tensor& logits) {
    std::vector<std::int64_t> out(logits.rows());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < logits.cols(); ++c)
            if (logits.at(i, c) > logits.at(i, best)) best = c;  // ties keep the lowest index
        out[i] = static_cast<std::int64_t>(best);
    }
    return out;
}

inline double accuracy(const Tensor& logits, const std::vector<std::int64_t>& labels) {
    if (labels.empty()) throw DataError("accuracy: empty label vector");
    if (logits.rows() != labels.size())
        throw ShapeError("accuracy: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(logits.rows()) + " rows");
    auto pred = argmax_rows(logits);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (pred[i] == labels[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

// P(score_pos > score_neg) + 0.5 P(tie). The numerator 2*wins + ties is
// computed in integers so the result is exact.
inline double roc_auc(const std::vector<double>& scores, const std::vector<std::int64_t>& labels) {
    if (scores.size() != labels.size())
        throw ShapeError("roc_auc: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(scores.size()) + " scores");
    std::uint64_t pos = 0, neg = 0;
    for (std::int64_t l : labels) {
        if (l == 1) ++pos;
        else if (l == 0) ++neg;
        else throw DataError("roc_auc: labels must be 0/1, got " + std::to_string(l));
    }
    if (pos == 0 || neg == 0) throw DataError("roc_auc: undefined for a single-class label vector");

    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    std::uint64_t numer2 = 0;  // 2*wins + ties
    std::uint64_t neg_below = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        std::uint64_t grp_pos = 0, grp_neg = 0;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            if (labels[order[j]] == 1) ++grp_pos;
            else ++grp_neg;
            ++j;
        }
        numer2 += 2 * grp_pos * neg_below + grp_pos * grp_neg;
        neg_below += grp_neg;
        i = j;
    }
    return static_cast<double>(numer2) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

inline std::vector<std::vector<std::int64_t>> confusion_matrix(const Tensor& logits,
                                                               const std::vector<std::int64_t>& labels,
                                                               std::int64_t num_classes) {
    auto pred = argmax_rows(logits);
    std::vector<std::vector<std::int64_t>> counts(static_cast<std::size_t>(num_classes),
                                                  std::vector<std::int64_t>(static_cast<std::size_t>(num_classes), 0));
    for (std::size_t i = 0; i < labels.size(); ++i)
        counts[static_cast<std::size_t>(labels[i])][static_cast<std::size_t>(pred[i])]++;
    return counts;
}

}  // namespace graphbridge
