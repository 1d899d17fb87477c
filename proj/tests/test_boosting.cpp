#include <catch2/catch_amalgamated.hpp>

#include "hte/boosting.hpp"
#include "hte/rng.hpp"

using namespace hte;

TEST_CASE("constant target needs zero trees beyond the initial prediction", "[gbr]") {
    Matrix x(40, 2);
    x.setRandom();
    Vector y = Vector::Constant(40, 3.5);
    auto model = fit_gbr(x, y, {50, 0.1, 3, 5, 1.0});
    REQUIRE(model.trees.empty());
    REQUIRE(model.initial == 3.5);
    Vector pred = model.predict(x);
    for (Index i = 0; i < 40; ++i) REQUIRE(pred[i] == 3.5);
}

TEST_CASE("depth-1 boosting drives a step function's training MSE below 1e-3", "[gbr]") {
    const Index n = 200;
    Matrix x(n, 1);
    Vector y(n);
    for (Index i = 0; i < n; ++i) {
        x(i, 0) = -1.0 + 2.0 * static_cast<double>(i) / (n - 1);
        y[i] = x(i, 0) > 0 ? 1.0 : 0.0;
    }
    auto model = fit_gbr(x, y, {50, 0.5, 1, 1, 1.0});
    REQUIRE(model.train_mse.back() < 1e-3);
}

TEST_CASE("training MSE is non-increasing at full subsample", "[gbr]") {
    Rng rng(3);
    const Index n = 300;
    Matrix x(n, 3);
    Vector y(n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < 3; ++j) x(i, j) = rng.normal();
        y[i] = std::sin(x(i, 0)) + 0.5 * x(i, 1) * x(i, 1) + 0.3 * rng.normal();
    }
    auto model = fit_gbr(x, y, {120, 0.1, 3, 5, 1.0}, 9);
    for (std::size_t m = 1; m < model.train_mse.size(); ++m)
        REQUIRE(model.train_mse[m] <= model.train_mse[m - 1] + 1e-12);
}

TEST_CASE("split thresholds stay inside each feature's training range", "[gbr]") {
    Rng rng(4);
    const Index n = 150;
    Matrix x(n, 2);
    Vector y(n);
    for (Index i = 0; i < n; ++i) {
        x(i, 0) = rng.uniform(-2, 2);
        x(i, 1) = rng.uniform(5, 9);
        y[i] = x(i, 0) * x(i, 1) + 0.1 * rng.normal();
    }
    auto model = fit_gbr(x, y, {30, 0.2, 3, 5, 0.7}, 5);
    for (const auto& tree : model.trees)
        for (const auto& node : tree.nodes)
            if (node.feature >= 0) {
                REQUIRE(node.threshold >= x.col(node.feature).minCoeff());
                REQUIRE(node.threshold <= x.col(node.feature).maxCoeff());
            }
    // ensemble identity: prediction = initial + eta * sum of tree outputs
    for (Index i = 0; i < 5; ++i) {
        double sum = 0;
        for (const auto& tree : model.trees) sum += tree.predict_one(x.row(i));
        REQUIRE(model.predict_one(x.row(i)) == model.initial + 0.2 * sum);
    }
}

TEST_CASE("invalid configurations are rejected", "[gbr]") {
    Matrix x(30, 1);
    x.setRandom();
    Vector y = x.col(0);
    REQUIRE_THROWS_AS(fit_gbr(x, y, {10, 0.1, 0, 5, 1.0}), ContractError);  // depth 0
    REQUIRE_THROWS_AS(fit_gbr(x, y, {10, 0.1, 3, 50, 1.0}), ContractError); // min_leaf > n
    REQUIRE_THROWS_AS(fit_gbr(x, y, {0, 0.1, 3, 5, 1.0}), ContractError);
    REQUIRE_THROWS_AS(fit_gbr(x, y, {10, 1.5, 3, 5, 1.0}), ContractError);
}

TEST_CASE("same seed reproduces subsampled boosting exactly", "[gbr]") {
    Rng rng(6);
    const Index n = 200;
    Matrix x(n, 2);
    Vector y(n);
    for (Index i = 0; i < n; ++i) {
        x(i, 0) = rng.normal();
        x(i, 1) = rng.normal();
        y[i] = x(i, 0) - x(i, 1) + 0.2 * rng.normal();
    }
    auto a = fit_gbr(x, y, {40, 0.1, 2, 5, 0.5}, 77);
    auto b = fit_gbr(x, y, {40, 0.1, 2, 5, 0.5}, 77);
    REQUIRE(a.predict(x) == b.predict(x));
}
