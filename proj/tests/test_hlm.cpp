#include <catch2/catch_amalgamated.hpp>

#include "hte/hlm.hpp"
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

TEST_CASE("HLM recovers a constant effect within posterior uncertainty", "[hlm]") {
    auto data = generate({Dgp::Const, 1000, 3, 1.0, 1.0, 31});
    auto effect = fit_hlm(data.dataset, flat_propensity(3), {1000, 600, 31});
    REQUIRE(effect.converged);
    REQUIRE(std::abs(effect.ate() - 5.0) < 3.0 * effect.ate_std());
    REQUIRE(std::abs(effect.ate() - 5.0) < 0.5);
}

TEST_CASE("every ATE draw is the row mean of its CATE draws", "[hlm]") {
    auto data = generate({Dgp::Het, 300, 3, 1.0, 1.0, 32});
    auto effect = fit_hlm(data.dataset, flat_propensity(3), {200, 100, 32});
    for (Index s = 0; s < effect.samples(); ++s)
        REQUIRE(std::abs(effect.ate_draws[s] - effect.tau_draws.row(s).mean()) < 1e-12);
}

TEST_CASE("HLM credible intervals cover zero on the null DGP", "[hlm][slow]") {
    int covered = 0;
    const int runs = 100;
    for (int r = 0; r < runs; ++r) {
        auto data =
            generate({Dgp::Null, 400, 2, 1.0, 1.0, 1000 + static_cast<std::uint64_t>(r)});
        auto effect = fit_hlm(data.dataset, flat_propensity(2),
                              {400, 300, static_cast<std::uint64_t>(r)});
        auto ci = percentile_interval(effect.ate_draws, 0.95);
        if (ci.low <= 0.0 && 0.0 <= ci.high) ++covered;
    }
    REQUIRE(covered >= 90);
}

TEST_CASE("widening the priors barely moves the posterior mean", "[hlm][slow]") {
    auto data = generate({Dgp::Const, 1000, 3, 1.0, 1.0, 33});
    auto rho = flat_propensity(3);
    auto base = fit_hlm(data.dataset, rho, {800, 500, 7});
    HlmPriors wide;
    wide.scale_bound_prognostic = 1000.0;
    wide.scale_bound_treatment = 10000.0;
    wide.sigma_cauchy_scale = 250.0;
    auto widened = fit_hlm(data.dataset, rho, {800, 500, 7}, wide);
    REQUIRE(std::abs(widened.ate() - base.ate()) < base.ate_std());
}

TEST_CASE("heterogeneous effects flow into the CATE draws", "[hlm]") {
    auto data = generate({Dgp::Het, 1500, 3, 0.5, 1.0, 34});
    auto effect = fit_hlm(data.dataset, flat_propensity(3), {800, 500, 34});
    // tau*(x) = 2 + x1: the posterior mean CATE should track x1
    const Vector& x1 = data.dataset.x.col(0);
    const Vector cd = effect.cate_mean.array() - effect.cate_mean.mean();
    const Vector xd = x1.array() - x1.mean();
    const double corr = cd.dot(xd) / (cd.norm() * xd.norm());
    REQUIRE(corr > 0.8);
    REQUIRE(std::abs(effect.ate() - data.truth.ate) < 0.5);
}
