#pragma once

#include <array>
#include <cmath>

#include <lapacke.h>

#include "hte/dataset.hpp"
#include "hte/meta_learners.hpp"
#include "hte/posterior.hpp"
#include "hte/rng.hpp"

namespace hte {

// Matern 3/2: k(r) = (1 + sqrt(3) r / l) exp(-sqrt(3) r / l)
inline double matern32(double r, double length_scale) {
    const double a = std::sqrt(3.0) * r / length_scale;
    return (1.0 + a) * std::exp(-a);
}

// Composite causal kernel over <x, t> pairs:
//   k(<xi,ti>, <xj,tj>) = s2_mu0 * m32(|ai - aj| / l_mu0)
//                       + ti tj * (s2_tau * m32(|xi - xj| / l_tau) + tau0)
// where ai = (xi, rho(xi)) are the prognostic inputs.  The training
// covariance adds s2_noise on the diagonal.
struct CompositeKernel {
    double l_mu0 = 10.0;
    double s2_mu0 = 1.0;
    double l_tau = 50.0;
    double s2_tau = 0.1;
    double tau0 = 0.001;
    double s2_noise = 1.0;

    void validate() const {
        require(l_mu0 > 0 && s2_mu0 > 0 && l_tau > 0 && s2_tau > 0, "CONTRACT_KERNEL",
                "kernel length-scales and amplitudes must be positive");
        require(tau0 >= 0, "CONTRACT_KERNEL", "constant treatment offset must be >= 0");
        require(s2_noise >= 0, "CONTRACT_KERNEL", "noise variance must be >= 0");
    }
};

namespace gpdetail {

// pairwise Euclidean distances, exactly symmetric with a zero diagonal
inline Matrix distance_matrix(const Matrix& a) {
    const Index n = a.rows();
    Matrix d(n, n);
    for (Index i = 0; i < n; ++i) {
        d(i, i) = 0;
        for (Index j = i + 1; j < n; ++j) {
            const double r = (a.row(i) - a.row(j)).norm();
            d(i, j) = r;
            d(j, i) = r;
        }
    }
    return d;
}

inline Matrix matern32_matrix(const Matrix& dist, double length_scale) {
    const double c = std::sqrt(3.0) / length_scale;
    return ((dist.array() * c + 1.0) * (-dist.array() * c).exp()).matrix();
}

}  // namespace gpdetail

// Training covariance assembled entry-wise from the composite kernel; not
// finite inputs are rejected.  prog_inputs carries (x, rho(x)) rows and
// treat_inputs the raw x rows.
inline Matrix assemble_gp_covariance(const Matrix& prog_inputs, const Matrix& treat_inputs,
                                     const Vector& t, const CompositeKernel& kernel,
                                     bool add_noise = true) {
    kernel.validate();
    const Index n = prog_inputs.rows();
    require(n >= 1, "CONTRACT_KERNEL", "no inputs given");
    require(treat_inputs.rows() == n && t.size() == n, "CONTRACT_SCHEMA",
            "kernel input row mismatch");
    if (!prog_inputs.allFinite() || !treat_inputs.allFinite())
        throw ContractError("CONTRACT_NONFINITE", "kernel inputs contain non-finite values");

    Matrix k(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = i; j < n; ++j) {
            const double r_mu = (prog_inputs.row(i) - prog_inputs.row(j)).norm();
            double v = kernel.s2_mu0 * matern32(r_mu, kernel.l_mu0);
            if (t[i] == 1.0 && t[j] == 1.0) {
                const double r_tau = (treat_inputs.row(i) - treat_inputs.row(j)).norm();
                v += kernel.s2_tau * matern32(r_tau, kernel.l_tau) + kernel.tau0;
            }
            k(i, j) = v;
            k(j, i) = v;
        }
        if (add_noise) k(i, i) += kernel.s2_noise;
    }
    return k;
}

struct GpOptions {
    int starts = 3;           // paper init, x0.1 and x10 on the length-scales
    int max_iterations = 20;  // BFGS iterations per start
    double grad_tol = 1e-5;   // per-datum gradient tolerance
    int posterior_draws = 100;
    double noise_floor = 1e-6;
    std::uint64_t seed = 0;
    Index max_n = 10000;  // dense factorization guard
};

struct GpFit {
    CompositeKernel kernel;
    double log_marginal_init = 0;
    double log_marginal = 0;
    PosteriorEffect effect;
};

namespace gpdetail {

constexpr int kNumParams = 6;  // log(l_mu0, s2_mu0, l_tau, s2_tau, tau0, s2_noise - floor)

struct MarginalWorkspace {
    Matrix dist_mu, dist_tau;  // pairwise distances
    Matrix tt;                 // t_i t_j mask
    Vector y;
    double noise_floor = 1e-6;

    // per-evaluation caches (reused across line-search trials)
    Matrix k_mu, m_tau, cov, scratch;
    Eigen::LLT<Matrix> llt;
    Vector alpha;

    CompositeKernel kernel_at(const Eigen::Matrix<double, kNumParams, 1>& theta) const {
        CompositeKernel k;
        k.l_mu0 = std::exp(theta[0]);
        k.s2_mu0 = std::exp(theta[1]);
        k.l_tau = std::exp(theta[2]);
        k.s2_tau = std::exp(theta[3]);
        k.tau0 = std::exp(theta[4]);
        k.s2_noise = noise_floor + std::exp(theta[5]);
        return k;
    }

    // negative log marginal likelihood; +inf when the factorization fails
    double value(const Eigen::Matrix<double, kNumParams, 1>& theta) {
        const CompositeKernel k = kernel_at(theta);
        const Index n = y.size();
        k_mu = matern32_matrix(dist_mu, k.l_mu0);
        m_tau = matern32_matrix(dist_tau, k.l_tau);  // unmasked treatment Matern
        cov = k.s2_mu0 * k_mu +
              (tt.array() * (k.s2_tau * m_tau.array() + k.tau0)).matrix();
        cov.diagonal().array() += k.s2_noise;
        llt.compute(cov);
        if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
        alpha = llt.solve(y);
        double logdet = 0;
        for (Index i = 0; i < n; ++i) logdet += std::log(llt.matrixLLT()(i, i));
        return 0.5 * y.dot(alpha) + logdet +
               0.5 * static_cast<double>(n) * std::log(2.0 * M_PI);
    }

    // Gradient of the negative log marginal likelihood w.r.t. theta; call
    // only straight after value() so the caches are in place.
    //   dL/dtheta = 1/2 sum_ij M_ij dK_ij,   M = K^-1 - alpha alpha'
    // K^-1 comes from the Cholesky factor via LAPACK dpotri; the dK terms
    // reuse the cached Matern matrices: with m32 = (1+cr)e^{-cr},
    // d(m32)/d(log l) = (cr)^2 e^{-cr} = (cr)^2 m32 / (1+cr).
    Eigen::Matrix<double, kNumParams, 1> gradient(
        const Eigen::Matrix<double, kNumParams, 1>& theta) {
        const CompositeKernel k = kernel_at(theta);
        const auto n = static_cast<lapack_int>(y.size());
        scratch = llt.matrixLLT();
        const lapack_int info =
            LAPACKE_dpotri(LAPACK_COL_MAJOR, 'L', n, scratch.data(), n);
        if (info != 0)
            throw NumericalError("NUMERIC_GP_FACTORIZATION", "dpotri failed");
        scratch.triangularView<Eigen::StrictlyUpper>() = scratch.transpose();
        const Matrix m = scratch - alpha * alpha.transpose();

        const double c_mu = std::sqrt(3.0) / k.l_mu0;
        const double c_tau = std::sqrt(3.0) / k.l_tau;
        const auto cr_mu = dist_mu.array() * c_mu;
        const auto cr_tau = dist_tau.array() * c_tau;

        Eigen::Matrix<double, kNumParams, 1> grad;
        grad[0] = 0.5 * k.s2_mu0 *
                  (m.array() * (cr_mu.square() * k_mu.array() / (1.0 + cr_mu))).sum();
        grad[1] = 0.5 * k.s2_mu0 * (m.array() * k_mu.array()).sum();
        grad[2] = 0.5 * k.s2_tau *
                  (m.array() * tt.array() *
                   (cr_tau.square() * m_tau.array() / (1.0 + cr_tau)))
                      .sum();
        grad[3] = 0.5 * k.s2_tau * (m.array() * tt.array() * m_tau.array()).sum();
        grad[4] = 0.5 * k.tau0 * (m.array() * tt.array()).sum();
        grad[5] = 0.5 * std::exp(theta[5]) * m.trace();
        return grad;
    }
};

// Dense BFGS with backtracking Armijo line search; enough for six smooth
// hyperparameters.  Returns the best visited point.
template <typename Value, typename Grad>
std::pair<Eigen::Matrix<double, kNumParams, 1>, double> bfgs_minimize(
    Eigen::Matrix<double, kNumParams, 1> theta, Value&& value, Grad&& gradient,
    int max_iterations, double grad_tol) {
    using Vec = Eigen::Matrix<double, kNumParams, 1>;
    using Mat = Eigen::Matrix<double, kNumParams, kNumParams>;

    double f = value(theta);
    if (!std::isfinite(f)) return {theta, f};
    Vec g = gradient(theta);
    Mat h = Mat::Identity();  // inverse Hessian approximation

    for (int it = 0; it < max_iterations; ++it) {
        if (g.lpNorm<Eigen::Infinity>() < grad_tol) break;
        const double f_before = f;
        Vec dir = -h * g;
        if (dir.dot(g) >= 0) {  // safeguard: reset to steepest descent
            h = Mat::Identity();
            dir = -g;
        }
        double step = 1.0;
        const double slope = g.dot(dir);
        Vec theta_new = theta;
        double f_new = f;
        bool accepted = false;
        for (int bt = 0; bt < 30; ++bt) {
            theta_new = theta + step * dir;
            // keep log-parameters inside a sane box to avoid overflow
            theta_new = theta_new.cwiseMax(-18.0).cwiseMin(15.0);
            f_new = value(theta_new);
            if (std::isfinite(f_new) && f_new <= f + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
        Vec g_new = gradient(theta_new);
        const Vec s = theta_new - theta;
        const Vec yv = g_new - g;
        const double sy = s.dot(yv);
        if (sy > 1e-12) {
            const Mat outer = s * yv.transpose() / sy;
            h = (Mat::Identity() - outer) * h * (Mat::Identity() - outer.transpose()) +
                s * s.transpose() / sy;
        }
        theta = theta_new;
        f = f_new;
        g = g_new;
        if (f_before - f < 1e-9 * (1.0 + std::abs(f))) break;  // plateau
    }
    return {theta, f};
}

// Jitter ladder for a posterior covariance factorization: 1e-8 * mean(diag),
// escalating x10 up to 1e-2 * mean(diag) before failing.
inline Eigen::LLT<Matrix> chol_with_jitter(Matrix& m) {
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() == Eigen::Success) return llt;
    const double base = m.diagonal().mean();
    for (double scale = 1e-8; scale <= 1e-2 + 1e-15; scale *= 10) {
        Matrix jittered = m;
        jittered.diagonal().array() += scale * base;
        llt.compute(jittered);
        if (llt.info() == Eigen::Success) return llt;
    }
    throw NumericalError("NUMERIC_GP_FACTORIZATION",
                         "covariance factorization failed after jitter escalation");
}

}  // namespace gpdetail

// Posterior draws of the per-unit treatment component tau(x_i) = f(x_i, 1) -
// f(x_i, 0) at the training inputs, for a fixed kernel.  The prognostic part
// is common to both counterfactuals and cancels exactly, so tau has prior
// covariance s2_tau k_tau + tau0 and cross-covariance t_j * (same) with the
// observations.
inline PosteriorEffect gp_posterior_effect(const Dataset& ds, const PropensityModel& rho,
                                           const CompositeKernel& kernel, int draws,
                                           std::uint64_t seed) {
    kernel.validate();
    const Index n = ds.n();
    const double y_mean = ds.y.mean();
    double y_sd = std::sqrt((ds.y.array() - y_mean).square().sum() / static_cast<double>(n));
    if (y_sd <= 0) y_sd = 1.0;
    const Vector ys = (ds.y.array() - y_mean) / y_sd;

    Matrix prog(n, ds.dim() + 1);
    prog.leftCols(ds.dim()) = ds.x;
    prog.col(ds.dim()) = rho.predict(ds.x);

    Matrix cov = assemble_gp_covariance(prog, ds.x, ds.t, kernel, true);
    Eigen::LLT<Matrix> llt = gpdetail::chol_with_jitter(cov);
    const Vector alpha = llt.solve(ys);

    // treatment-component kernel blocks
    const Matrix dist_tau = gpdetail::distance_matrix(ds.x);
    const Matrix k_tau_unit = gpdetail::matern32_matrix(dist_tau, kernel.l_tau);
    Matrix k_dd = kernel.s2_tau * k_tau_unit;
    k_dd.array() += kernel.tau0;
    Matrix k_dy = k_dd * ds.t.asDiagonal();  // cross terms vanish for control rows

    const Vector mean = k_dy * alpha;
    Matrix post_cov = k_dd - k_dy * llt.solve(k_dy.transpose());
    post_cov = 0.5 * (post_cov + post_cov.transpose()).eval();
    Eigen::LLT<Matrix> post_llt = gpdetail::chol_with_jitter(post_cov);

    PosteriorEffect effect;
    effect.tag = EstimatorTag::BayesGp;
    effect.tau_draws.resize(draws, n);
    Rng rng(derive_seed(seed, "gp-draws"));
    Vector shock(n);
    for (int s = 0; s < draws; ++s) {
        for (Index i = 0; i < n; ++i) shock[i] = rng.normal();
        effect.tau_draws.row(s) =
            ((mean + post_llt.matrixL() * shock) * y_sd).transpose();
    }
    effect.finalize();
    return effect;
}

// Type-II maximum likelihood over the kernel parameters (log
// reparameterization, multi-start BFGS with analytic gradients), then
// posterior treatment-effect draws under the optimized kernel.  Outcomes are
// centered and scaled internally; the noise variance is floored at
// options.noise_floor.
inline GpFit fit_gp(const Dataset& ds, const PropensityModel& rho,
                    const CompositeKernel& init = {}, const GpOptions& options = {}) {
    init.validate();
    require(ds.n() <= options.max_n, "CONTRACT_GP_SIZE",
            "dense GP guard: n exceeds the configured maximum");
    require(ds.n() >= 2, "CONTRACT_GP_SIZE", "GP needs at least two rows");
    const Index n = ds.n();

    const double y_mean = ds.y.mean();
    double y_sd = std::sqrt((ds.y.array() - y_mean).square().sum() / static_cast<double>(n));
    if (y_sd <= 0) y_sd = 1.0;

    gpdetail::MarginalWorkspace ws;
    ws.y = (ds.y.array() - y_mean) / y_sd;
    ws.noise_floor = options.noise_floor;
    Matrix prog(n, ds.dim() + 1);
    prog.leftCols(ds.dim()) = ds.x;
    prog.col(ds.dim()) = rho.predict(ds.x);
    ws.dist_mu = gpdetail::distance_matrix(prog);
    ws.dist_tau = gpdetail::distance_matrix(ds.x);
    ws.tt = ds.t * ds.t.transpose();

    using Vec = Eigen::Matrix<double, gpdetail::kNumParams, 1>;
    auto pack = [&](const CompositeKernel& k) {
        Vec theta;
        theta << std::log(k.l_mu0), std::log(k.s2_mu0), std::log(k.l_tau),
            std::log(k.s2_tau), std::log(std::max(k.tau0, 1e-18)),
            std::log(std::max(k.s2_noise - options.noise_floor, 1e-18));
        return theta;
    };

    const Vec theta0 = pack(init);
    std::vector<Vec> starts = {theta0};
    if (options.starts >= 2) {
        Vec t_small = theta0;
        t_small[0] += std::log(0.1);
        t_small[2] += std::log(0.1);
        starts.push_back(t_small);
    }
    if (options.starts >= 3) {
        Vec t_large = theta0;
        t_large[0] += std::log(10.0);
        t_large[2] += std::log(10.0);
        starts.push_back(t_large);
    }

    auto value = [&](const Vec& th) { return ws.value(th); };
    auto grad = [&](const Vec& th) { return ws.gradient(th); };

    GpFit fit;
    fit.log_marginal_init = -ws.value(theta0);

    Vec best_theta = theta0;
    double best_value = std::numeric_limits<double>::infinity();
    for (const Vec& start : starts) {
        auto [theta, f] = gpdetail::bfgs_minimize(
            start, value, grad, options.max_iterations,
            options.grad_tol * static_cast<double>(std::max<Index>(n, 100)));
        if (std::isfinite(f) && f < best_value) {
            best_value = f;
            best_theta = theta;
        }
    }
    fit.kernel = ws.kernel_at(best_theta);
    fit.log_marginal = -best_value;
    fit.effect =
        gp_posterior_effect(ds, rho, fit.kernel, options.posterior_draws, options.seed);
    return fit;
}

}  // namespace hte
