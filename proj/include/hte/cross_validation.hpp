#pragma once

#include <numeric>
#include <vector>

#include "hte/common.hpp"
#include "hte/metrics.hpp"
#include "hte/parallel.hpp"
#include "hte/rng.hpp"

namespace hte {

// All scores are oriented so that larger is better: LogLoss enters negated.
enum class Scoring { NegMse, R2, LogLoss, Auc };

inline bool is_classifier_scoring(Scoring s) {
    return s == Scoring::LogLoss || s == Scoring::Auc;
}

inline double score_predictions(Scoring scoring, const Vector& pred, const Vector& truth) {
    switch (scoring) {
        case Scoring::NegMse: return -mean_squared_error(pred, truth);
        case Scoring::R2: return r_squared(pred, truth);
        case Scoring::LogLoss: return neg_log_loss(pred, truth);
        case Scoring::Auc: return auc(pred, truth);
    }
    return 0;
}

struct CvPlan {
    int k = 5;
    std::vector<int> assignment;  // fold id per row, 0..k-1
    Scoring scoring = Scoring::NegMse;

    void validate() const {
        require(k >= 2, "CONTRACT_CV", "cross-validation needs k >= 2");
        std::vector<Index> counts(static_cast<std::size_t>(k), 0);
        for (int f : assignment) {
            require(f >= 0 && f < k, "CONTRACT_CV", "fold assignment out of range");
            ++counts[static_cast<std::size_t>(f)];
        }
        for (Index c : counts)
            if (c == 0) throw ContractError("CONTRACT_CV_FOLD", "empty cross-validation fold");
    }
};

inline CvPlan make_cv_plan(Index n, int k, std::uint64_t seed,
                           Scoring scoring = Scoring::NegMse) {
    require(k >= 2, "CONTRACT_CV", "cross-validation needs k >= 2");
    require(n >= k, "CONTRACT_CV", "fewer rows than folds");
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    Rng rng(derive_seed(seed, "cv-plan"));
    rng.shuffle(order);
    CvPlan plan;
    plan.k = k;
    plan.scoring = scoring;
    plan.assignment.resize(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < order.size(); ++i)
        plan.assignment[static_cast<std::size_t>(order[i])] = static_cast<int>(i % k);
    plan.validate();
    return plan;
}

template <typename Setting>
struct CvResult {
    Setting best{};
    std::size_t best_index = 0;
    std::vector<double> mean_score;  // per grid setting
    std::vector<double> std_score;   // sample std over folds
};

// Grid search by k-fold cross-validation.
//   fit(x_train, y_train, setting, seed) -> model
//   predict(model, x_test) -> predictions / probabilities
//   simpler(a, b) -> true if setting a is the simpler model
// Exact ties on the mean score go to the simpler setting, then to grid
// order.  Per-fit seeds depend only on (setting, fold), so a consistent row
// permutation selects the same setting.
template <typename Setting, typename FitFn, typename PredictFn, typename SimplerFn>
CvResult<Setting> cross_validate(const Matrix& x, const Vector& y,
                                 const std::vector<Setting>& grid, const CvPlan& plan,
                                 std::uint64_t seed, FitFn&& fit, PredictFn&& predict,
                                 SimplerFn&& simpler, unsigned threads = 1) {
    require(!grid.empty(), "CONTRACT_CV", "empty hyperparameter grid");
    require(static_cast<Index>(plan.assignment.size()) == x.rows(), "CONTRACT_CV",
            "plan assignment length does not match data");
    plan.validate();
    const Index n = x.rows();
    const int k = plan.k;

    // materialize fold membership once
    std::vector<std::vector<Index>> train_rows(static_cast<std::size_t>(k)),
        test_rows(static_cast<std::size_t>(k));
    for (Index i = 0; i < n; ++i) {
        const int f = plan.assignment[static_cast<std::size_t>(i)];
        for (int g = 0; g < k; ++g)
            (g == f ? test_rows : train_rows)[static_cast<std::size_t>(g)].push_back(i);
    }
    if (is_classifier_scoring(plan.scoring)) {
        for (int f = 0; f < k; ++f) {
            auto both = [&](const std::vector<Index>& rows) {
                bool c0 = false, c1 = false;
                for (Index i : rows) (y[i] == 1.0 ? c1 : c0) = true;
                return c0 && c1;
            };
            if (!both(train_rows[static_cast<std::size_t>(f)]) ||
                !both(test_rows[static_cast<std::size_t>(f)]))
                throw ContractError("CONTRACT_CV_CLASS",
                                    "a fold is missing a class; cannot score classifier");
        }
    }

    auto gather = [&](const std::vector<Index>& rows, Matrix& gx, Vector& gy) {
        gx.resize(static_cast<Index>(rows.size()), x.cols());
        gy.resize(static_cast<Index>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            gx.row(static_cast<Index>(i)) = x.row(rows[i]);
            gy[static_cast<Index>(i)] = y[rows[i]];
        }
    };

    const std::size_t n_tasks = grid.size() * static_cast<std::size_t>(k);
    std::vector<double> fold_scores(n_tasks, 0.0);
    parallel_for(n_tasks, threads, [&](std::size_t task) {
        const std::size_t s = task / static_cast<std::size_t>(k);
        const int f = static_cast<int>(task % static_cast<std::size_t>(k));
        Matrix xtr, xte;
        Vector ytr, yte;
        gather(train_rows[static_cast<std::size_t>(f)], xtr, ytr);
        gather(test_rows[static_cast<std::size_t>(f)], xte, yte);
        auto model = fit(xtr, ytr, grid[s], derive_seed(seed, "cv-fit", task));
        fold_scores[task] = score_predictions(plan.scoring, predict(model, xte), yte);
    });

    CvResult<Setting> result;
    result.mean_score.resize(grid.size());
    result.std_score.resize(grid.size());
    for (std::size_t s = 0; s < grid.size(); ++s) {
        double mean = 0;
        for (int f = 0; f < k; ++f) mean += fold_scores[s * k + static_cast<std::size_t>(f)];
        mean /= k;
        double ss = 0;
        for (int f = 0; f < k; ++f) {
            const double dev = fold_scores[s * k + static_cast<std::size_t>(f)] - mean;
            ss += dev * dev;
        }
        result.mean_score[s] = mean;
        result.std_score[s] = std::sqrt(ss / (k - 1));
    }

    std::size_t best = 0;
    for (std::size_t s = 1; s < grid.size(); ++s) {
        if (result.mean_score[s] > result.mean_score[best])
            best = s;
        else if (result.mean_score[s] == result.mean_score[best] && simpler(grid[s], grid[best]))
            best = s;
    }
    result.best = grid[best];
    result.best_index = best;
    return result;
}

// Simplicity orderings for tie-breaking: larger penalty is simpler; fewer
// trees, then shallower depth, then larger leaves is simpler.
inline bool simpler_penalty(double a, double b) { return a > b; }

}  // namespace hte
