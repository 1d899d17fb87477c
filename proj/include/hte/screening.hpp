#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "hte/common.hpp"
#include "hte/dataset.hpp"
#include "hte/linear_models.hpp"

namespace hte {

struct ScreeningResult {
    std::vector<Index> selected;  // ordered by |coefficient|, largest first
    Vector coefficients;          // matching `selected`
    double lambda_used = 0;
    Index target_k = 0;
    Index achieved_k = 0;
    std::vector<Index> path_active_sizes;  // active-set size per path point
};

// Walks the lasso path over 100 log-spaced penalties from lambda_max down to
// 1e-4 lambda_max (warm-started) and keeps the path point whose active set is
// the largest one not exceeding target_k; among equal sizes the largest
// penalty wins.  The achieved size can undershoot the target when active-set
// sizes jump across it, so achieved_k is reported alongside.  Features are
// ranked by absolute coefficient at the chosen penalty.
inline ScreeningResult screen_top_k(const Matrix& features, const Vector& target,
                                    Index target_k, int path_points = 100) {
    const Index n = features.rows(), d = features.cols();
    require(target_k >= 1, "CONTRACT_SCREEN", "target K must be >= 1");
    if (target_k > d)
        throw ContractError("CONTRACT_SCREEN", "target K exceeds the feature count");
    require(target.size() == n, "CONTRACT_SCHEMA", "target length mismatch");
    const double target_var = (target.array() - target.mean()).square().sum();
    if (target_var <= 0.0)
        throw ContractError("CONTRACT_SCREEN", "screening target has zero variance");

    // standardize internally (empirical divide-by-n convention) so the
    // penalty treats all columns on a common scale
    Matrix z = features;
    for (Index j = 0; j < d; ++j) {
        const double mean = z.col(j).mean();
        const double sd =
            std::sqrt((z.col(j).array() - mean).square().sum() / static_cast<double>(n));
        z.col(j).array() -= mean;
        if (sd > 0) z.col(j) /= sd;
    }

    const double lmax = std::max(lasso_max_lambda(z, target), 1e-12);
    ScreeningResult result;
    result.target_k = target_k;

    LinearModel warm;
    LinearModel best_model;
    double best_lambda = lmax;
    Index best_size = 0;
    bool have_best = false;

    for (int p = 0; p < path_points; ++p) {
        const double lambda =
            lmax * std::pow(1e-4, static_cast<double>(p) / (path_points - 1));
        warm = fit_lasso(z, target, lambda, 1e-9, 20000, p == 0 ? nullptr : &warm);
        Index active = 0;
        for (Index j = 0; j < d; ++j)
            if (warm.weights[j] != 0.0) ++active;
        result.path_active_sizes.push_back(active);
        if (active <= target_k && active > best_size) {
            best_size = active;
            best_lambda = lambda;
            best_model = warm;
            have_best = true;
            if (active == target_k) break;
        }
    }
    if (!have_best) {
        // every path point overshot; keep the all-zero solution at lambda_max
        best_model = fit_lasso(z, target, lmax);
        best_lambda = lmax;
    }

    std::vector<Index> active;
    for (Index j = 0; j < d; ++j)
        if (best_model.weights[j] != 0.0) active.push_back(j);
    std::stable_sort(active.begin(), active.end(), [&](Index a, Index b) {
        return std::abs(best_model.weights[a]) > std::abs(best_model.weights[b]);
    });
    result.selected = active;
    result.coefficients.resize(static_cast<Index>(active.size()));
    for (std::size_t i = 0; i < active.size(); ++i)
        result.coefficients[static_cast<Index>(i)] = best_model.weights[active[i]];
    result.lambda_used = best_lambda;
    result.achieved_k = static_cast<Index>(active.size());
    return result;
}

inline ScreeningResult screen_top_k(const Dataset& ds, const Vector& auxiliary_target,
                                    Index target_k) {
    return screen_top_k(ds.x, auxiliary_target, target_k);
}

}  // namespace hte
