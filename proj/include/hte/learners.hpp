#pragma once

#include <string>
#include <variant>
#include <vector>

#include "hte/boosting.hpp"
#include "hte/cross_validation.hpp"
#include "hte/linear_models.hpp"

namespace hte {

enum class LearnerClass { Lasso, Ridge, Gbr };

inline const char* to_string(LearnerClass c) {
    switch (c) {
        case LearnerClass::Lasso: return "lasso";
        case LearnerClass::Ridge: return "ridge";
        case LearnerClass::Gbr: return "gbr";
    }
    return "?";
}

// Value-semantic wrapper over the supervised learners so outcome surfaces of
// any class share one interface.
struct Regressor {
    std::variant<LinearModel, BoostedTreeModel> model;

    Vector predict(const Matrix& x) const {
        return std::visit([&](const auto& m) { return m.predict(x); }, model);
    }
    double predict_one(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
        if (const auto* lin = std::get_if<LinearModel>(&model))
            return lin->predict_one(x.transpose());
        return std::get<BoostedTreeModel>(model).predict_one(x);
    }
};

// Hyperparameter grids per learner class.  Empty vectors mean "use the
// defaults": a 20-point log-spaced penalty grid on [1e-4 lambda_max,
// lambda_max] computed from the training data, and the stock GBR grid below.
struct LearnerGrid {
    std::vector<double> penalties;
    std::vector<GbrConfig> gbr;
};

inline std::vector<GbrConfig> default_gbr_grid() {
    std::vector<GbrConfig> grid;
    for (int trees : {100, 300})
        for (int depth : {2, 3, 4})
            for (double eta : {0.05, 0.1})
                for (int min_leaf : {5, 20})
                    grid.push_back({trees, eta, depth, min_leaf, 1.0});
    return grid;
}

// Tie-break ordering between GBR settings: fewer trees, then shallower
// depth, then larger leaves, then smaller learning rate is "simpler".
inline bool simpler_gbr(const GbrConfig& a, const GbrConfig& b) {
    if (a.trees != b.trees) return a.trees < b.trees;
    if (a.max_depth != b.max_depth) return a.max_depth < b.max_depth;
    if (a.min_leaf != b.min_leaf) return a.min_leaf > b.min_leaf;
    return a.learning_rate < b.learning_rate;
}

struct FittedLearner {
    Regressor regressor;
    LearnerClass cls = LearnerClass::Ridge;
    std::string selected;   // human-readable chosen setting
    double cv_score = 0;    // mean CV score of the chosen setting
};

// Selects hyperparameters by k-fold CV on (x, y), then refits on all rows.
inline FittedLearner fit_learner_cv(const Matrix& x, const Vector& y, LearnerClass cls,
                                    const LearnerGrid& grid, const CvPlan& plan,
                                    std::uint64_t seed, unsigned threads = 1) {
    FittedLearner out;
    out.cls = cls;
    if (cls == LearnerClass::Gbr) {
        const auto gbr_grid = grid.gbr.empty() ? default_gbr_grid() : grid.gbr;
        auto cv = cross_validate(
            x, y, gbr_grid, plan, seed,
            [](const Matrix& xt, const Vector& yt, const GbrConfig& c, std::uint64_t s) {
                return fit_gbr(xt, yt, c, s);
            },
            [](const BoostedTreeModel& m, const Matrix& xt) { return m.predict(xt); },
            simpler_gbr, threads);
        out.regressor.model = fit_gbr(x, y, cv.best, derive_seed(seed, "final-fit"));
        out.cv_score = cv.mean_score[cv.best_index];
        out.selected = "trees=" + std::to_string(cv.best.trees) +
                       ",depth=" + std::to_string(cv.best.max_depth) +
                       ",eta=" + std::to_string(cv.best.learning_rate) +
                       ",min_leaf=" + std::to_string(cv.best.min_leaf);
        return out;
    }
    const auto lambdas = grid.penalties.empty() ? default_lambda_grid(x, y) : grid.penalties;
    auto fit_one = [cls](const Matrix& xt, const Vector& yt, double lambda, std::uint64_t) {
        return cls == LearnerClass::Lasso ? fit_lasso(xt, yt, lambda)
                                          : fit_ridge(xt, yt, lambda);
    };
    auto cv = cross_validate(
        x, y, lambdas, plan, seed, fit_one,
        [](const LinearModel& m, const Matrix& xt) { return m.predict(xt); },
        simpler_penalty, threads);
    out.regressor.model = fit_one(x, y, cv.best, 0);
    out.cv_score = cv.mean_score[cv.best_index];
    out.selected = "lambda=" + std::to_string(cv.best);
    return out;
}

}  // namespace hte
