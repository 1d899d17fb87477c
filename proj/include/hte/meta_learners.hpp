#pragma once

#include <string>

#include "hte/dataset.hpp"
#include "hte/learners.hpp"
#include "hte/logistic.hpp"

namespace hte {

enum class EstimatorTag { TLearner, Dr, BayesHlm, BayesGp, BayesBcf };

inline const char* to_string(EstimatorTag t) {
    switch (t) {
        case EstimatorTag::TLearner: return "T-learner";
        case EstimatorTag::Dr: return "DR";
        case EstimatorTag::BayesHlm: return "Bayes-HLM";
        case EstimatorTag::BayesGp: return "Bayes-GP";
        case EstimatorTag::BayesBcf: return "BCF";
    }
    return "?";
}

struct CateVector {
    Vector tau;
    EstimatorTag tag = EstimatorTag::TLearner;

    void validate() const {
        if (!tau.allFinite())
            throw NumericalError("NUMERIC_CATE", "CATE vector contains non-finite values");
    }
};

inline double ate_from_cate(const CateVector& cate) { return cate.tau.mean(); }

// Arm-specific outcome surfaces: mu0 trained only on control rows, mu1 only
// on treated rows, hyperparameters selected per arm.
struct OutcomeSurfacePair {
    Regressor mu0, mu1;
    LearnerClass cls = LearnerClass::Ridge;
    std::string selected_mu0, selected_mu1;
    Index dim = 0;
};

struct PropensityModel {
    LogisticModel model;
    double epsilon = 0.01;  // clip bounds [eps, 1-eps]
    double holdout_auc = std::numeric_limits<double>::quiet_NaN();

    Index dim() const { return model.dim(); }
    Vector predict_raw(const Matrix& x) const { return model.predict(x); }
    Vector predict(const Matrix& x) const {
        Vector p = model.predict(x);
        for (Index i = 0; i < p.size(); ++i)
            p[i] = std::min(std::max(p[i], epsilon), 1.0 - epsilon);
        return p;
    }
};

// Constant hyperparameter spec handed to the meta-learners; the realized
// per-arm CvPlan (with fold assignments) is built inside each fit.
struct CvSpec {
    int k = 5;
    LearnerGrid grid;
    std::uint64_t seed = 0;
};

inline constexpr Index kMinArmRows = 20;

namespace detail {

inline void gather_rows(const Dataset& ds, const std::vector<Index>& rows, Matrix& x,
                        Vector& y) {
    x.resize(static_cast<Index>(rows.size()), ds.x.cols());
    y.resize(static_cast<Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        x.row(static_cast<Index>(i)) = ds.x.row(rows[i]);
        y[static_cast<Index>(i)] = ds.y[rows[i]];
    }
}

}  // namespace detail

// T-learner with caller-supplied per-arm fold plans (the bootstrap machinery
// uses this to enforce its modified fold construction).  plan0/plan1 index
// into the control/treated row lists of ds in order.
inline OutcomeSurfacePair fit_t_learner_with_plans(const Dataset& ds, LearnerClass cls,
                                                   const LearnerGrid& grid,
                                                   const CvPlan& plan0, const CvPlan& plan1,
                                                   std::uint64_t seed, unsigned threads = 1) {
    const auto rows0 = ds.arm(0), rows1 = ds.arm(1);
    if (rows0.empty() || rows1.empty())
        throw ContractError("CONTRACT_ARM", "both treatment arms must be non-empty");
    const Index min_rows = std::max<Index>(kMinArmRows, plan0.k);
    if (static_cast<Index>(rows0.size()) < min_rows ||
        static_cast<Index>(rows1.size()) < min_rows)
        throw ContractError("CONTRACT_ARM", "each arm needs at least max(20, k) rows");

    OutcomeSurfacePair pair;
    pair.cls = cls;
    pair.dim = ds.dim();
    Matrix x0, x1;
    Vector y0, y1;
    detail::gather_rows(ds, rows0, x0, y0);
    detail::gather_rows(ds, rows1, x1, y1);
    auto fit0 = fit_learner_cv(x0, y0, cls, grid, plan0, derive_seed(seed, "surface", 0),
                               threads);
    auto fit1 = fit_learner_cv(x1, y1, cls, grid, plan1, derive_seed(seed, "surface", 1),
                               threads);
    pair.mu0 = fit0.regressor;
    pair.mu1 = fit1.regressor;
    pair.selected_mu0 = fit0.selected;
    pair.selected_mu1 = fit1.selected;
    return pair;
}

inline OutcomeSurfacePair fit_t_learner(const Dataset& ds, LearnerClass cls,
                                        const CvSpec& cv, unsigned threads = 1) {
    const auto rows0 = ds.arm(0), rows1 = ds.arm(1);
    const Index min_rows = std::max<Index>(kMinArmRows, cv.k);
    if (static_cast<Index>(rows0.size()) < min_rows ||
        static_cast<Index>(rows1.size()) < min_rows)
        throw ContractError("CONTRACT_ARM", "each arm needs at least max(20, k) rows");
    const auto plan0 = make_cv_plan(static_cast<Index>(rows0.size()), cv.k,
                                    derive_seed(cv.seed, "t-plan", 0));
    const auto plan1 = make_cv_plan(static_cast<Index>(rows1.size()), cv.k,
                                    derive_seed(cv.seed, "t-plan", 1));
    return fit_t_learner_with_plans(ds, cls, cv.grid, plan0, plan1, cv.seed, threads);
}

// tau(x_i) = mu1(x_i) - mu0(x_i) for every unit, both arms included.
inline CateVector cate_t_learner(const OutcomeSurfacePair& pair, const Dataset& ds) {
    require(pair.dim == ds.dim(), "CONTRACT_SCHEMA",
            "surface pair was fitted on a different feature dimension");
    CateVector cate;
    cate.tag = EstimatorTag::TLearner;
    cate.tau = pair.mu1.predict(ds.x) - pair.mu0.predict(ds.x);
    cate.validate();
    return cate;
}

// Regularized logistic propensity: penalty chosen by CV log-loss, holdout
// AUC reported as the mean per-fold AUC at the chosen penalty, outputs
// clipped to [eps, 1-eps].  Default grid: 20 log-spaced penalties in
// [1e-4, 10].
inline PropensityModel fit_propensity(const Dataset& ds, std::vector<double> lambda_grid,
                                      int k, std::uint64_t seed, double epsilon = 0.01,
                                      unsigned threads = 1) {
    require(epsilon > 0 && epsilon < 0.5, "CONTRACT_EPSILON", "epsilon must be in (0, 0.5)");
    if (lambda_grid.empty()) {
        for (int i = 0; i < 20; ++i)
            lambda_grid.push_back(10.0 * std::pow(1e-5, static_cast<double>(i) / 19));
    }
    const auto plan = make_cv_plan(ds.n(), k, derive_seed(seed, "propensity-plan"),
                                   Scoring::LogLoss);
    auto fit_one = [](const Matrix& xt, const Vector& yt, double lambda, std::uint64_t) {
        return fit_logistic(xt, yt, lambda);
    };
    auto predict_one = [](const LogisticModel& m, const Matrix& xt) { return m.predict(xt); };
    auto cv = cross_validate(ds.x, ds.t, lambda_grid, plan, seed, fit_one, predict_one,
                             simpler_penalty, threads);

    // per-fold holdout AUC at the selected penalty
    double auc_sum = 0;
    for (int f = 0; f < plan.k; ++f) {
        std::vector<Index> train, test;
        for (Index i = 0; i < ds.n(); ++i)
            (plan.assignment[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
        auto gather = [&](const std::vector<Index>& rows, Matrix& gx, Vector& gt) {
            gx.resize(static_cast<Index>(rows.size()), ds.x.cols());
            gt.resize(static_cast<Index>(rows.size()));
            for (std::size_t i = 0; i < rows.size(); ++i) {
                gx.row(static_cast<Index>(i)) = ds.x.row(rows[i]);
                gt[static_cast<Index>(i)] = ds.t[rows[i]];
            }
        };
        Matrix xtr, xte;
        Vector ttr, tte;
        gather(train, xtr, ttr);
        gather(test, xte, tte);
        auto m = fit_logistic(xtr, ttr, cv.best);
        auc_sum += auc(m.predict(xte), tte);
    }

    PropensityModel rho;
    rho.model = fit_logistic(ds.x, ds.t, cv.best);
    rho.epsilon = epsilon;
    rho.holdout_auc = auc_sum / plan.k;
    return rho;
}

// Per-unit doubly robust pseudo-outcome (the unaveraged summand of the DR
// ATE): phi_i = [t_i (y_i - mu1_i)/p_i + mu1_i] - [(1-t_i)(y_i - mu0_i)/(1-p_i) + mu0_i].
inline Vector dr_pseudo_outcomes(const Vector& y, const Vector& t, const Vector& mu1,
                                 const Vector& mu0, const Vector& p) {
    const Index n = y.size();
    require(t.size() == n && mu1.size() == n && mu0.size() == n && p.size() == n,
            "CONTRACT_SCHEMA", "DR inputs must share one length");
    Vector phi(n);
    for (Index i = 0; i < n; ++i) {
        if (!(p[i] > 0.0 && p[i] < 1.0))
            throw NumericalError("NUMERIC_INVARIANT",
                                 "propensity outside (0,1) after clipping");
        const double treated = t[i] * (y[i] - mu1[i]) / p[i] + mu1[i];
        const double control = (1.0 - t[i]) * (y[i] - mu0[i]) / (1.0 - p[i]) + mu0[i];
        phi[i] = treated - control;
    }
    return phi;
}

struct DrEstimate {
    double ate = 0;
    Vector influence;  // per-unit pseudo-outcomes; mean(influence) == ate exactly
};

inline DrEstimate ate_doubly_robust(const Dataset& ds, const OutcomeSurfacePair& pair,
                                    const PropensityModel& rho) {
    require(pair.dim == ds.dim() && rho.dim() == ds.dim(), "CONTRACT_SCHEMA",
            "fitted inputs do not match the dataset schema");
    DrEstimate est;
    est.influence = dr_pseudo_outcomes(ds.y, ds.t, pair.mu1.predict(ds.x),
                                       pair.mu0.predict(ds.x), rho.predict(ds.x));
    est.ate = est.influence.mean();
    return est;
}

inline CateVector cate_doubly_robust(const Dataset& ds, const OutcomeSurfacePair& pair,
                                     const PropensityModel& rho) {
    CateVector cate;
    cate.tag = EstimatorTag::Dr;
    cate.tau = ate_doubly_robust(ds, pair, rho).influence;
    cate.validate();
    return cate;
}

}  // namespace hte
