#include <catch2/catch_amalgamated.hpp>

#include "hte/gp.hpp"
#include "hte/synthetic.hpp"

using namespace hte;

namespace {

PropensityModel flat_propensity(Index d) {
    PropensityModel rho;
    rho.model.weights = Vector::Zero(d);
    rho.model.intercept = 0.0;
    rho.epsilon = 0.01;
    return rho;
}

}  // namespace

TEST_CASE("Matern 3/2 values match hand evaluations", "[gp]") {
    REQUIRE(matern32(0.0, 1.0) == 1.0);
    // r = l: (1 + sqrt(3)) exp(-sqrt(3)) = 0.4833577245965...
    const double at_length_scale = (1.0 + std::sqrt(3.0)) / std::exp(std::sqrt(3.0));
    REQUIRE(at_length_scale == Catch::Approx(0.4833577).margin(1e-6));
    REQUIRE(matern32(1.0, 1.0) == Catch::Approx(at_length_scale).margin(1e-5));
    REQUIRE(matern32(2.5, 2.5) == Catch::Approx(at_length_scale).margin(1e-5));
    // bounded in (0, 1] and decreasing
    double prev = 1.0;
    for (double r = 0.1; r < 10.0; r += 0.1) {
        const double v = matern32(r, 1.5);
        REQUIRE(v > 0.0);
        REQUIRE(v < prev);
        prev = v;
    }
}

TEST_CASE("composite covariance diagonal and control pairs", "[gp]") {
    CompositeKernel kernel;
    kernel.l_mu0 = 2.0;
    kernel.s2_mu0 = 1.5;
    kernel.l_tau = 3.0;
    kernel.s2_tau = 0.4;
    kernel.tau0 = 0.2;
    kernel.s2_noise = 0.1;

    Matrix x(3, 2);
    x << 0, 0, 1, 1, 2, 0;
    Vector t(3);
    t << 1, 0, 0;
    Matrix prog(3, 3);
    prog.leftCols(2) = x;
    prog.col(2) = Vector::Constant(3, 0.5);

    Matrix k = assemble_gp_covariance(prog, x, t, kernel, true);
    // diagonal: s2_mu0 + t_i (s2_tau + tau0) + noise
    REQUIRE(k(0, 0) == Catch::Approx(1.5 + 0.4 + 0.2 + 0.1).margin(1e-12));
    REQUIRE(k(1, 1) == Catch::Approx(1.5 + 0.1).margin(1e-12));
    // both control: treatment kernel contributes exactly zero
    const double r_mu = (prog.row(1) - prog.row(2)).norm();
    REQUIRE(k(1, 2) == Catch::Approx(1.5 * matern32(r_mu, 2.0)).margin(1e-14));
    // symmetry is exact by construction
    REQUIRE((k - k.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("assembled covariance is PSD before jitter", "[gp]") {
    auto data = generate({Dgp::Conf, 120, 3, 1.0, 1.0, 41});
    auto rho = flat_propensity(3);
    Matrix prog(120, 4);
    prog.leftCols(3) = data.dataset.x;
    prog.col(3) = rho.predict(data.dataset.x);
    CompositeKernel kernel;  // paper init
    Matrix k = assemble_gp_covariance(prog, data.dataset.x, data.dataset.t, kernel, false);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(k);
    REQUIRE(eig.eigenvalues().minCoeff() > -1e-8);
}

TEST_CASE("noise-free GP posterior mean interpolates the data", "[gp]") {
    // linear truth, 50 points, sigma^2 floored at 1e-6
    Rng rng(42);
    const Index n = 50;
    Dataset ds;
    ds.x.resize(n, 2);
    ds.y.resize(n);
    ds.t.resize(n);
    for (Index i = 0; i < n; ++i) {
        ds.x(i, 0) = rng.normal();
        ds.x(i, 1) = rng.normal();
        ds.t[i] = i % 2 == 0 ? 1.0 : 0.0;
        ds.y[i] = ds.x(i, 0) + 0.5 * ds.x(i, 1) + 2.0 * ds.t[i];
    }
    ds.schema = {{"a", ColumnKind::Continuous}, {"b", ColumnKind::Continuous}};
    auto rho = flat_propensity(2);

    CompositeKernel kernel;
    kernel.l_mu0 = 3.0;
    kernel.s2_mu0 = 1.0;
    kernel.l_tau = 10.0;
    kernel.s2_tau = 0.5;
    kernel.tau0 = 0.5;
    kernel.s2_noise = 1e-6;

    // posterior mean of f at the training inputs: K_noise-free rows times alpha
    const double y_mean = ds.y.mean();
    const double y_sd =
        std::sqrt((ds.y.array() - y_mean).square().sum() / static_cast<double>(n));
    const Vector ys = (ds.y.array() - y_mean) / y_sd;
    Matrix prog(n, 3);
    prog.leftCols(2) = ds.x;
    prog.col(2) = rho.predict(ds.x);
    Matrix k_train = assemble_gp_covariance(prog, ds.x, ds.t, kernel, true);
    Matrix k_clean = assemble_gp_covariance(prog, ds.x, ds.t, kernel, false);
    Vector alpha = k_train.llt().solve(ys);
    Vector fitted = (k_clean * alpha) * y_sd + Vector::Constant(n, y_mean);
    const double rmse = std::sqrt((fitted - ds.y).squaredNorm() / static_cast<double>(n));
    REQUIRE(rmse < 1e-3);
}

TEST_CASE("vanishing treatment kernel collapses the effect draws", "[gp]") {
    auto data = generate({Dgp::Const, 200, 2, 1.0, 1.0, 43});
    auto rho = flat_propensity(2);
    CompositeKernel kernel;
    kernel.s2_tau = 1e-10;
    kernel.tau0 = 0.0;
    auto effect = gp_posterior_effect(data.dataset, rho, kernel, 50, 1);
    const double sd_y = std::sqrt((data.dataset.y.array() - data.dataset.y.mean())
                                      .square()
                                      .mean());
    REQUIRE(std::abs(effect.ate()) < 0.05 * sd_y);
}

TEST_CASE("type-II ML never degrades the marginal likelihood", "[gp][slow]") {
    auto data = generate({Dgp::Het, 500, 3, 1.0, 1.0, 44});
    auto rho = flat_propensity(3);
    GpOptions options;
    options.max_iterations = 12;
    auto fit = fit_gp(data.dataset, rho, {}, options);
    REQUIRE(fit.log_marginal >= fit.log_marginal_init);
    REQUIRE(fit.effect.samples() == 100);
    // internal consistency of the posterior draws
    for (Index s = 0; s < 5; ++s)
        REQUIRE(std::abs(fit.effect.ate_draws[s] - fit.effect.tau_draws.row(s).mean()) <
                1e-12);
}

TEST_CASE("GP recovers a constant effect on randomized data", "[gp][slow]") {
    auto data = generate({Dgp::Const, 400, 2, 1.0, 1.0, 45});
    auto rho = flat_propensity(2);
    GpOptions options;
    options.max_iterations = 12;
    auto fit = fit_gp(data.dataset, rho, {}, options);
    REQUIRE(std::abs(fit.effect.ate() - 5.0) < 0.6);
}

TEST_CASE("the dense-size guard rejects oversized problems", "[gp]") {
    auto data = generate({Dgp::Const, 120, 2, 1.0, 1.0, 46});
    GpOptions options;
    options.max_n = 100;
    REQUIRE_THROWS_AS(fit_gp(data.dataset, flat_propensity(2), {}, options), ContractError);
}
