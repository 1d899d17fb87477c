#include <catch2/catch_amalgamated.hpp>

#include "hte/cross_validation.hpp"
#include "hte/learners.hpp"
#include "hte/logistic.hpp"
#include "hte/synthetic.hpp"

using namespace hte;

TEST_CASE("auc matches the worked example and a pairwise oracle", "[auc]") {
    Vector scores(4), labels(4);
    scores << 0.1, 0.4, 0.35, 0.8;
    labels << 0, 0, 1, 1;
    REQUIRE(auc(scores, labels) == Catch::Approx(0.75).margin(1e-12));

    Vector perfect(4), reversed(4);
    perfect << 0.1, 0.2, 0.8, 0.9;
    REQUIRE(auc(perfect, labels) == 1.0);
    reversed << 0.9, 0.8, 0.2, 0.1;
    REQUIRE(auc(reversed, labels) == 0.0);

    REQUIRE_THROWS_AS(auc(scores, Vector::Ones(4)), ContractError);

    // ties and duplicates against brute-force pair enumeration
    Rng rng(11);
    const Index n = 101;
    Vector s(n), l(n);
    for (Index i = 0; i < n; ++i) {
        s[i] = std::round(rng.uniform() * 10) / 10.0;
        l[i] = rng.bernoulli(0.4) ? 1.0 : 0.0;
    }
    if (l.maxCoeff() == 0.0) l[0] = 1.0;
    if (l.minCoeff() == 1.0) l[0] = 0.0;
    double wins = 0, ties = 0, pairs = 0;
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j)
            if (l[i] == 1.0 && l[j] == 0.0) {
                pairs += 1;
                if (s[i] > s[j]) wins += 1;
                if (s[i] == s[j]) ties += 1;
            }
    REQUIRE(auc(s, l) == Catch::Approx((wins + 0.5 * ties) / pairs).margin(1e-12));
}

TEST_CASE("a single-setting grid returns that setting", "[cv]") {
    Rng rng(1);
    Matrix x(60, 2);
    Vector y(60);
    for (Index i = 0; i < 60; ++i) {
        x(i, 0) = rng.normal();
        x(i, 1) = rng.normal();
        y[i] = x(i, 0) + rng.normal();
    }
    auto plan = make_cv_plan(60, 5, 0);
    auto cv = cross_validate(
        x, y, std::vector<double>{0.37}, plan, 0,
        [](const Matrix& xt, const Vector& yt, double l, std::uint64_t) {
            return fit_ridge(xt, yt, l);
        },
        [](const LinearModel& m, const Matrix& xt) { return m.predict(xt); },
        simpler_penalty);
    REQUIRE(cv.best == 0.37);
}

TEST_CASE("a huge ridge penalty loses to the unpenalized fit", "[cv]") {
    Rng rng(2);
    const Index n = 100;
    Matrix x(n, 2);
    Vector y(n);
    for (Index i = 0; i < n; ++i) {
        x(i, 0) = rng.normal();
        x(i, 1) = rng.normal();
        y[i] = 2 * x(i, 0) - x(i, 1) + 0.1 * rng.normal();
    }
    auto plan = make_cv_plan(n, 5, 3);
    auto cv = cross_validate(
        x, y, std::vector<double>{0.0, 1e6}, plan, 0,
        [](const Matrix& xt, const Vector& yt, double l, std::uint64_t) {
            return fit_ridge(xt, yt, l);
        },
        [](const LinearModel& m, const Matrix& xt) { return m.predict(xt); },
        simpler_penalty);
    REQUIRE(cv.best == 0.0);
}

TEST_CASE("GBR beats lasso on a nonlinear surface", "[cv][slow]") {
    auto data = generate({Dgp::Nl, 600, 3, 0.5, 1.0, 17});
    const Matrix& x = data.dataset.x;
    // control-arm outcome: sin(2 x1) + x2^2 + noise
    std::vector<Index> rows = data.dataset.arm(0);
    Matrix xc(static_cast<Index>(rows.size()), x.cols());
    Vector yc(static_cast<Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        xc.row(static_cast<Index>(i)) = x.row(rows[i]);
        yc[static_cast<Index>(i)] = data.dataset.y[rows[i]];
    }
    auto plan = make_cv_plan(xc.rows(), 5, 7);

    auto gbr_cv = cross_validate(
        xc, yc, std::vector<GbrConfig>{{200, 0.1, 3, 5, 1.0}}, plan, 1,
        [](const Matrix& xt, const Vector& yt, const GbrConfig& c, std::uint64_t s) {
            return fit_gbr(xt, yt, c, s);
        },
        [](const BoostedTreeModel& m, const Matrix& xt) { return m.predict(xt); },
        simpler_gbr);
    auto lasso_cv = cross_validate(
        xc, yc, default_lambda_grid(xc, yc), plan, 1,
        [](const Matrix& xt, const Vector& yt, double l, std::uint64_t) {
            return fit_lasso(xt, yt, l);
        },
        [](const LinearModel& m, const Matrix& xt) { return m.predict(xt); },
        simpler_penalty);
    REQUIRE(gbr_cv.mean_score[gbr_cv.best_index] >
            lasso_cv.mean_score[lasso_cv.best_index]);
}

TEST_CASE("consistent row permutation selects the same setting", "[cv]") {
    Rng rng(4);
    const Index n = 90;
    Matrix x(n, 2);
    Vector y(n);
    for (Index i = 0; i < n; ++i) {
        x(i, 0) = rng.normal();
        x(i, 1) = rng.normal();
        y[i] = x(i, 0) + 0.3 * rng.normal();
    }
    auto plan = make_cv_plan(n, 4, 9);
    std::vector<double> grid = {1e-4, 1e-2, 1.0};
    auto fit = [](const Matrix& xt, const Vector& yt, double l, std::uint64_t) {
        return fit_ridge(xt, yt, l);
    };
    auto predict = [](const LinearModel& m, const Matrix& xt) { return m.predict(xt); };
    auto base = cross_validate(x, y, grid, plan, 0, fit, predict, simpler_penalty);

    std::vector<Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Index{0});
    Rng prng(5);
    prng.shuffle(perm);
    Matrix xp(n, 2);
    Vector yp(n);
    CvPlan planp = plan;
    for (Index i = 0; i < n; ++i) {
        xp.row(i) = x.row(perm[static_cast<std::size_t>(i)]);
        yp[i] = y[perm[static_cast<std::size_t>(i)]];
        planp.assignment[static_cast<std::size_t>(i)] =
            plan.assignment[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
    }
    auto permuted = cross_validate(xp, yp, grid, planp, 0, fit, predict, simpler_penalty);
    REQUIRE(base.best == permuted.best);
}

TEST_CASE("classifier scoring rejects folds missing a class", "[cv]") {
    const Index n = 40;
    Matrix x(n, 1);
    Vector y(n);
    for (Index i = 0; i < n; ++i) {
        x(i, 0) = static_cast<double>(i);
        y[i] = i < 4 ? 1.0 : 0.0;  // rare class: some fold will miss it
    }
    CvPlan plan;
    plan.k = 5;
    plan.scoring = Scoring::LogLoss;
    plan.assignment.resize(n);
    for (Index i = 0; i < n; ++i) plan.assignment[static_cast<std::size_t>(i)] =
        static_cast<int>(i % 5);  // folds 4+ never see label 1 in test part
    auto fit = [](const Matrix& xt, const Vector& yt, double l, std::uint64_t) {
        return fit_logistic(xt, yt, l);
    };
    auto predict = [](const LogisticModel& m, const Matrix& xt) { return m.predict(xt); };
    REQUIRE_THROWS_AS(
        cross_validate(x, y, std::vector<double>{0.1}, plan, 0, fit, predict, simpler_penalty),
        ContractError);
}

TEST_CASE("exact score ties break toward the simpler setting then grid order", "[cv]") {
    // constant target: every penalty fits identically, so the largest penalty wins
    Matrix x(30, 1);
    x.col(0).setLinSpaced(30, -1, 1);
    Vector y = Vector::Constant(30, 2.0);
    auto plan = make_cv_plan(30, 3, 1);
    auto cv = cross_validate(
        x, y, std::vector<double>{0.1, 10.0, 10.0, 1.0}, plan, 0,
        [](const Matrix& xt, const Vector& yt, double l, std::uint64_t) {
            return fit_ridge(xt, yt, l);
        },
        [](const LinearModel& m, const Matrix& xt) { return m.predict(xt); },
        simpler_penalty);
    REQUIRE(cv.best == 10.0);
    REQUIRE(cv.best_index == 1);  // first of the tied pair in grid order
}
