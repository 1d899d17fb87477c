#pragma once

#include <array>
#include <cmath>

#include "hte/dataset.hpp"
#include "hte/meta_learners.hpp"
#include "hte/posterior.hpp"
#include "hte/rng.hpp"

namespace hte {

// Hierarchical linear causal model
//   y ~ N(w0 + wx'x + wr rho(x) + (wt + wtx'x) t, sigma^2)
// with zero-mean normal weight priors whose scales carry truncated-uniform
// hyperpriors: {l0, lx, lr} ~ U(0,100), {lt, ltx} ~ U(0,1000), and
// sigma ~ HalfCauchy(25).  Outcomes are centered and scaled to unit variance
// inside the fit (the priors assume standardized scales); tau draws are
// un-scaled on output.
struct HlmParams {
    double w0 = 0;
    Vector w_x;
    double w_rho = 0;
    double w_t = 0;
    Vector w_tx;
    double sigma = 1;
    double l0 = 10, lx = 10, lrho = 10, lt = 10, ltx = 10;
};

struct McmcConfig {
    int burn_in = 2000;
    int kept = 1000;
    std::uint64_t seed = 0;
};

inline McmcConfig paper_faithful_mcmc() { return {30000, 1000, 0}; }

// Truncation bounds of the uniform scale hyperpriors and the half-Cauchy
// noise scale; the defaults are the stated priors.
struct HlmPriors {
    double scale_bound_prognostic = 100.0;   // l0, lx, lrho ~ U(0, .)
    double scale_bound_treatment = 1000.0;   // lt, ltx ~ U(0, .)
    double sigma_cauchy_scale = 25.0;
};

namespace detail {

// Neal's univariate slice sampler (stepping out + shrinkage) on a bounded
// support.
template <typename LogDensity>
double slice_sample(LogDensity&& logf, double x0, double width, double lo, double hi,
                    Rng& rng) {
    const double logy = logf(x0) + std::log(rng.uniform() + 1e-300);
    double left = x0 - width * rng.uniform();
    double right = left + width;
    left = std::max(left, lo);
    right = std::min(right, hi);
    for (int i = 0; i < 50 && left > lo && logf(left) > logy; ++i)
        left = std::max(left - width, lo);
    for (int i = 0; i < 50 && right < hi && logf(right) > logy; ++i)
        right = std::min(right + width, hi);
    for (int i = 0; i < 100; ++i) {
        const double x1 = left + (right - left) * rng.uniform();
        if (logf(x1) > logy) return x1;
        (x1 < x0 ? left : right) = x1;
    }
    return x0;
}

}  // namespace detail

// Gibbs over the weight block (exact multivariate-normal conditional) with
// slice-sampled scale hyperparameters and noise.  Convergence is reported as
// the split-chain potential scale reduction on w_t; a value above 1.1 flags
// the result as non-converged rather than failing.
inline PosteriorEffect fit_hlm(const Dataset& ds, const PropensityModel& rho,
                               const McmcConfig& config = {},
                               const HlmPriors& priors = {}) {
    require(config.burn_in >= 0 && config.kept >= 2, "CONTRACT_MCMC",
            "MCMC needs kept >= 2 draws");
    require(rho.dim() == ds.dim(), "CONTRACT_SCHEMA", "propensity/dataset dimension mismatch");
    const Index n = ds.n(), d = ds.dim();
    const Index p = 2 * d + 3;

    // standardized outcome scale
    const double y_mean = ds.y.mean();
    double y_sd = std::sqrt((ds.y.array() - y_mean).square().sum() / static_cast<double>(n));
    if (y_sd <= 0) y_sd = 1.0;
    const Vector ys = (ds.y.array() - y_mean) / y_sd;

    // design: [1 | x | rho | t | t*x]; weight layout (w0, w_x, w_rho, w_t, w_tx)
    Matrix z(n, p);
    z.col(0).setOnes();
    z.middleCols(1, d) = ds.x;
    z.col(d + 1) = rho.predict(ds.x);
    z.col(d + 2) = ds.t;
    z.rightCols(d) = ds.x.array().colwise() * ds.t.array();

    const Matrix ztz = z.transpose() * z;
    const Vector zty = z.transpose() * ys;

    HlmParams params;
    params.w_x = Vector::Zero(d);
    params.w_tx = Vector::Zero(d);
    Vector beta = Vector::Zero(p);

    Rng rng(derive_seed(config.seed, "hlm"));
    const int total = config.burn_in + config.kept;
    PosteriorEffect effect;
    effect.tag = EstimatorTag::BayesHlm;
    effect.tau_draws.resize(config.kept, n);
    Vector wt_chain(config.kept);

    // scale group -> (weight-vector slice, uniform prior bound)
    struct ScaleGroup {
        Index offset, size;
        double bound;
        double* value;
    };
    const double b_p = priors.scale_bound_prognostic;
    const double b_t = priors.scale_bound_treatment;
    const std::array<ScaleGroup, 5> groups = {{{0, 1, b_p, &params.l0},
                                               {1, d, b_p, &params.lx},
                                               {d + 1, 1, b_p, &params.lrho},
                                               {d + 2, 1, b_t, &params.lt},
                                               {d + 3, d, b_t, &params.ltx}}};

    for (int sweep = 0; sweep < total; ++sweep) {
        // 1. weights | scales, sigma: Gaussian with precision Z'Z/s^2 + diag(1/l^2)
        const double inv_s2 = 1.0 / (params.sigma * params.sigma);
        Matrix precision = ztz * inv_s2;
        for (const auto& g : groups)
            precision.diagonal().segment(g.offset, g.size).array() +=
                1.0 / (*g.value * *g.value);
        Eigen::LLT<Matrix> llt(precision);
        if (llt.info() != Eigen::Success)
            throw NumericalError("NUMERIC_HLM", "weight conditional is not positive definite");
        const Vector mean = llt.solve(zty * inv_s2);
        Vector shock(p);
        for (Index j = 0; j < p; ++j) shock[j] = rng.normal();
        beta = mean + llt.matrixU().solve(shock);

        // 2. scale hyperparameters | their weights (slice on log lambda);
        //    p(log l) propto exp((1-k) log l - S/(2 l^2)) on (0, bound)
        for (const auto& g : groups) {
            const double ss = beta.segment(g.offset, g.size).squaredNorm();
            const double k = static_cast<double>(g.size);
            auto logf = [&](double u) {
                return (1.0 - k) * u - 0.5 * ss * std::exp(-2.0 * u);
            };
            const double u = detail::slice_sample(logf, std::log(*g.value), 1.0, -12.0,
                                                  std::log(g.bound), rng);
            *g.value = std::exp(u);
        }

        // 3. sigma | weights (slice on log sigma with half-Cauchy(25) prior)
        const double sse = (ys - z * beta).squaredNorm();
        const double cauchy_s2 = priors.sigma_cauchy_scale * priors.sigma_cauchy_scale;
        auto logf_sigma = [&](double v) {
            const double s2 = std::exp(2.0 * v);
            return -static_cast<double>(n) * v - 0.5 * sse / s2 -
                   std::log1p(s2 / cauchy_s2) + v;
        };
        const double v = detail::slice_sample(logf_sigma, std::log(params.sigma), 0.5,
                                              -12.0, 12.0, rng);
        params.sigma = std::exp(v);

        if (sweep >= config.burn_in) {
            const int s = sweep - config.burn_in;
            const double w_t = beta[d + 2];
            // tau(x) = (w_t + w_tx' x) on the standardized scale
            effect.tau_draws.row(s) =
                (((ds.x * beta.tail(d)).array() + w_t) * y_sd).matrix().transpose();
            wt_chain[s] = w_t;
        }
    }

    params.w0 = beta[0];
    params.w_x = beta.segment(1, d);
    params.w_rho = beta[d + 1];
    params.w_t = beta[d + 2];
    params.w_tx = beta.tail(d);

    effect.rhat = split_rhat(wt_chain);
    effect.converged = !(effect.rhat >= 1.1);  // NaN (tiny chains) counts as converged
    effect.finalize();
    return effect;
}

}  // namespace hte
