#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "hte/common.hpp"
#include "hte/rng.hpp"

namespace hte {

// Axis-aligned regression tree, stored as a flat node array.  Rows with
// x[feature] <= threshold go left.  Leaves have feature == -1.
struct TreeNode {
    int feature = -1;
    double threshold = 0;
    int left = -1;
    int right = -1;
    double value = 0;
};

struct RegressionTree {
    std::vector<TreeNode> nodes;

    double predict_one(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
        int node = 0;
        while (nodes[static_cast<std::size_t>(node)].feature >= 0) {
            const TreeNode& nd = nodes[static_cast<std::size_t>(node)];
            node = x[nd.feature] <= nd.threshold ? nd.left : nd.right;
        }
        return nodes[static_cast<std::size_t>(node)].value;
    }
    bool is_stump() const { return nodes.size() == 1; }
};

namespace detail {

struct SplitChoice {
    bool found = false;
    int feature = -1;
    double threshold = 0;
    double gain = 0;
};

// Exact variance-reduction scan over the sorted unique values of each
// feature.  Deterministic tie-breaking: higher gain, then lower feature
// index, then smaller threshold.
inline SplitChoice best_split(const Matrix& x, const Vector& target,
                              const std::vector<int>& rows, int min_leaf,
                              std::vector<std::pair<double, double>>& scratch) {
    SplitChoice best;
    const auto n = rows.size();
    if (n < 2 * static_cast<std::size_t>(min_leaf)) return best;
    double total_sum = 0;
    for (int r : rows) total_sum += target[r];

    for (int j = 0; j < x.cols(); ++j) {
        scratch.clear();
        for (int r : rows) scratch.emplace_back(x(r, j), target[r]);
        std::sort(scratch.begin(), scratch.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        if (scratch.front().first == scratch.back().first) continue;

        double left_sum = 0;
        std::size_t left_n = 0;
        std::size_t i = 0;
        while (i < n) {
            // absorb the whole group of equal values
            const double v = scratch[i].first;
            while (i < n && scratch[i].first == v) {
                left_sum += scratch[i].second;
                ++left_n;
                ++i;
            }
            if (i == n) break;  // no right side
            const std::size_t right_n = n - left_n;
            if (left_n < static_cast<std::size_t>(min_leaf) ||
                right_n < static_cast<std::size_t>(min_leaf))
                continue;
            const double right_sum = total_sum - left_sum;
            const double gain = left_sum * left_sum / static_cast<double>(left_n) +
                                right_sum * right_sum / static_cast<double>(right_n) -
                                total_sum * total_sum / static_cast<double>(n);
            if (!best.found || gain > best.gain) {
                best = {true, j, v, gain};
            }
        }
    }
    return best;
}

inline int grow_tree(RegressionTree& tree, const Matrix& x, const Vector& target,
                     std::vector<int>&& rows, int depth, int max_depth, int min_leaf,
                     std::vector<std::pair<double, double>>& scratch) {
    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();

    double sum = 0;
    for (int r : rows) sum += target[r];
    tree.nodes[static_cast<std::size_t>(node_id)].value = sum / static_cast<double>(rows.size());

    if (depth >= max_depth) return node_id;
    const SplitChoice split = best_split(x, target, rows, min_leaf, scratch);
    if (!split.found || split.gain <= 0) return node_id;

    std::vector<int> left_rows, right_rows;
    left_rows.reserve(rows.size());
    right_rows.reserve(rows.size());
    for (int r : rows)
        (x(r, split.feature) <= split.threshold ? left_rows : right_rows).push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    const int left = grow_tree(tree, x, target, std::move(left_rows), depth + 1, max_depth,
                               min_leaf, scratch);
    const int right = grow_tree(tree, x, target, std::move(right_rows), depth + 1, max_depth,
                                min_leaf, scratch);
    TreeNode& nd = tree.nodes[static_cast<std::size_t>(node_id)];
    nd.feature = split.feature;
    nd.threshold = split.threshold;
    nd.left = left;
    nd.right = right;
    return node_id;
}

}  // namespace detail

inline RegressionTree fit_regression_tree(const Matrix& x, const Vector& target,
                                          const std::vector<int>& rows, int max_depth,
                                          int min_leaf) {
    RegressionTree tree;
    std::vector<std::pair<double, double>> scratch;
    scratch.reserve(rows.size());
    std::vector<int> r = rows;
    detail::grow_tree(tree, x, target, std::move(r), 0, max_depth, min_leaf, scratch);
    return tree;
}

struct GbrConfig {
    int trees = 100;
    double learning_rate = 0.1;
    int max_depth = 3;
    int min_leaf = 5;
    double subsample = 1.0;

    bool operator==(const GbrConfig&) const = default;
};

struct BoostedTreeModel {
    double initial = 0;  // training mean of the target
    std::vector<RegressionTree> trees;
    GbrConfig config;
    std::vector<double> train_mse;  // after each stage; non-increasing at subsample=1

    // prediction is literally initial + eta * sum of tree outputs
    double predict_one(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
        double sum = 0;
        for (const auto& tree : trees) sum += tree.predict_one(x);
        return initial + config.learning_rate * sum;
    }
    Vector predict(const Matrix& x) const {
        Vector out(x.rows());
        for (Index i = 0; i < x.rows(); ++i) out[i] = predict_one(x.row(i));
        return out;
    }
};

// Stagewise least-squares boosting: tree m fits the residuals of the current
// ensemble on a (possibly subsampled) row set; leaf values are residual
// means.  Stops early once the residuals are exactly zero, so a constant
// target yields zero trees beyond the initial prediction.
inline BoostedTreeModel fit_gbr(const Matrix& x, const Vector& y, const GbrConfig& config,
                                std::uint64_t seed = 0) {
    require(config.trees >= 1, "CONTRACT_GBR", "tree count must be >= 1");
    require(config.learning_rate > 0 && config.learning_rate <= 1, "CONTRACT_GBR",
            "learning rate must be in (0,1]");
    require(config.max_depth >= 1, "CONTRACT_GBR", "max depth must be >= 1");
    require(config.min_leaf >= 1, "CONTRACT_GBR", "min leaf must be >= 1");
    require(config.subsample > 0 && config.subsample <= 1, "CONTRACT_GBR",
            "subsample fraction must be in (0,1]");
    require(x.rows() == y.size(), "CONTRACT_SCHEMA", "row mismatch between X and y");
    require(x.rows() >= config.min_leaf, "CONTRACT_GBR", "fewer rows than min leaf size");

    const Index n = x.rows();
    BoostedTreeModel model;
    model.config = config;
    model.initial = y.mean();

    Vector residual = y.array() - model.initial;
    std::vector<int> all_rows(static_cast<std::size_t>(n));
    std::iota(all_rows.begin(), all_rows.end(), 0);
    Rng rng(derive_seed(seed, "gbr"));

    const auto subsample_size =
        static_cast<std::size_t>(std::max(1.0, std::floor(config.subsample * n)));
    model.train_mse.reserve(static_cast<std::size_t>(config.trees));

    for (int m = 0; m < config.trees; ++m) {
        if (residual.cwiseAbs().maxCoeff() == 0.0) break;
        std::vector<int> rows = all_rows;
        if (subsample_size < rows.size()) {
            for (std::size_t i = 0; i < subsample_size; ++i)
                std::swap(rows[i], rows[i + rng.index(rows.size() - i)]);
            rows.resize(subsample_size);
        }
        RegressionTree tree = fit_regression_tree(x, residual, rows, config.max_depth,
                                                  std::min<int>(config.min_leaf, static_cast<int>(rows.size())));
        for (Index i = 0; i < n; ++i)
            residual[i] -= config.learning_rate * tree.predict_one(x.row(i));
        model.trees.push_back(std::move(tree));
        model.train_mse.push_back(residual.squaredNorm() / static_cast<double>(n));
    }
    return model;
}

}  // namespace hte
