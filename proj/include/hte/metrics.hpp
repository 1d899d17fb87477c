#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "hte/common.hpp"

namespace hte {

inline double mean_squared_error(const Vector& pred, const Vector& truth) {
    require(pred.size() == truth.size() && pred.size() > 0, "CONTRACT_SCHEMA",
            "prediction/target length mismatch");
    return (pred - truth).squaredNorm() / static_cast<double>(pred.size());
}

inline double r_squared(const Vector& pred, const Vector& truth) {
    require(pred.size() == truth.size() && pred.size() > 0, "CONTRACT_SCHEMA",
            "prediction/target length mismatch");
    const double sse = (pred - truth).squaredNorm();
    const double sst = (truth.array() - truth.mean()).square().sum();
    if (sst == 0.0) return sse == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity();
    return 1.0 - sse / sst;
}

// Mann-Whitney AUC with ties counted as half wins:
// P(score+ > score-) + P(score+ == score-)/2, computed via average ranks.
inline double auc(const Vector& scores, const Vector& labels) {
    require(scores.size() == labels.size() && scores.size() > 0, "CONTRACT_SCHEMA",
            "score/label length mismatch");
    const Index n = scores.size();
    Index n_pos = 0;
    for (Index i = 0; i < n; ++i) {
        require(labels[i] == 0.0 || labels[i] == 1.0, "CONTRACT_TARGET",
                "AUC labels must be binary 0/1");
        if (labels[i] == 1.0) ++n_pos;
    }
    const Index n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw ContractError("CONTRACT_SINGLE_CLASS", "AUC requires both classes present");

    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::sort(order.begin(), order.end(),
              [&](Index a, Index b) { return scores[a] < scores[b]; });

    double rank_sum_pos = 0;
    Index i = 0;
    while (i < n) {
        Index j = i;
        while (j < n && scores[order[static_cast<std::size_t>(j)]] ==
                            scores[order[static_cast<std::size_t>(i)]])
            ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based average
        for (Index k = i; k < j; ++k)
            if (labels[order[static_cast<std::size_t>(k)]] == 1.0) rank_sum_pos += avg_rank;
        i = j;
    }
    const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) *
                                        static_cast<double>(n_pos + 1);
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

// Negated mean binary cross-entropy, so that larger is better like the other
// scores.  Probabilities are clamped away from 0 and 1.
inline double neg_log_loss(const Vector& prob, const Vector& labels) {
    require(prob.size() == labels.size() && prob.size() > 0, "CONTRACT_SCHEMA",
            "probability/label length mismatch");
    double ll = 0;
    for (Index i = 0; i < prob.size(); ++i) {
        const double p = std::min(std::max(prob[i], 1e-15), 1.0 - 1e-15);
        ll += labels[i] == 1.0 ? std::log(p) : std::log1p(-p);
    }
    return ll / static_cast<double>(prob.size());
}

}  // namespace hte
