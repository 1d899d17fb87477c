#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "hte/common.hpp"
#include "hte/meta_learners.hpp"

namespace hte {

// Posterior effect draws shared by the Bayesian estimators: tau_draws(s, i)
// is the treatment component for unit i under posterior sample s; each ATE
// draw is literally the row mean of its CATE draws.
struct PosteriorEffect {
    Matrix tau_draws;  // S x n
    Vector ate_draws;  // S
    Vector cate_mean;  // n, posterior mean per unit
    EstimatorTag tag = EstimatorTag::BayesHlm;
    bool converged = true;
    double rhat = std::numeric_limits<double>::quiet_NaN();

    Index samples() const { return tau_draws.rows(); }

    void finalize() {
        ate_draws = tau_draws.rowwise().mean();
        cate_mean = tau_draws.colwise().mean();
        if (!tau_draws.allFinite())
            throw NumericalError("NUMERIC_POSTERIOR", "non-finite posterior draw");
    }

    double ate() const { return ate_draws.mean(); }
    double ate_std() const {
        const double m = ate_draws.mean();
        return std::sqrt((ate_draws.array() - m).square().sum() /
                         std::max<Index>(ate_draws.size() - 1, 1));
    }
};

struct Interval {
    double low = 0, high = 0;
};

// Percentile interval via order statistics at ranks ceil(S alpha/2) and
// ceil(S (1 - alpha/2)), 1-based, clamped into [1, S].
inline Interval percentile_interval(Vector draws, double level) {
    require(level > 0 && level < 1, "CONTRACT_CI", "interval level must be in (0,1)");
    require(draws.size() >= 1, "CONTRACT_CI", "no draws given");
    std::sort(draws.data(), draws.data() + draws.size());
    const double s = static_cast<double>(draws.size());
    const double alpha = 1.0 - level;
    auto rank = [&](double p) {
        const auto r = static_cast<Index>(std::ceil(s * p));
        return draws[std::clamp<Index>(r, 1, draws.size()) - 1];
    };
    return {rank(alpha / 2), rank(1.0 - alpha / 2)};
}

// Split-chain potential scale reduction on one scalar chain: the kept draws
// are halved and compared (Gelman-Rubin on the two halves).
inline double split_rhat(const Vector& chain) {
    const Index m = chain.size() / 2;
    if (m < 2) return std::numeric_limits<double>::quiet_NaN();
    auto moments = [&](Index start) {
        const double mean = chain.segment(start, m).mean();
        const double var =
            (chain.segment(start, m).array() - mean).square().sum() / (m - 1);
        return std::pair(mean, var);
    };
    auto [m1, v1] = moments(0);
    auto [m2, v2] = moments(chain.size() - m);
    const double w = 0.5 * (v1 + v2);
    const double grand = 0.5 * (m1 + m2);
    const double b = static_cast<double>(m) *
                     ((m1 - grand) * (m1 - grand) + (m2 - grand) * (m2 - grand));
    if (w <= 0) return 1.0;
    const double var_plus = (static_cast<double>(m - 1) / m) * w + b / m;
    return std::sqrt(var_plus / w);
}

}  // namespace hte
