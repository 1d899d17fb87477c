#pragma once

#include <cmath>
#include <vector>

#include "hte/dataset.hpp"
#include "hte/meta_learners.hpp"
#include "hte/posterior.hpp"
#include "hte/rng.hpp"

namespace hte {

// Node at depth q is nonterminal with probability alpha (1+q)^(-beta).
struct TreePrior {
    double alpha = 0.95;
    double beta = 2.0;

    double nonterminal_prob(int depth) const {
        return alpha * std::pow(1.0 + static_cast<double>(depth), -beta);
    }
};

// Draws the depth of splits of a tree skeleton from the prior; returns true
// when the root splits.  Used by the prior-calibration tests.
inline bool sample_prior_root_split(const TreePrior& prior, Rng& rng) {
    return rng.uniform() < prior.nonterminal_prob(0);
}

struct BcfForestConfig {
    int trees = 200;
    TreePrior prior;
};

struct BcfConfig {
    BcfForestConfig prognostic{200, {0.95, 2.0}};
    BcfForestConfig treatment{50, {0.25, 3.0}};
    int burn_in = 500;
    int kept = 2000;
    int cutpoints = 30;  // quantile grid per feature
    double nu = 3.0;     // sigma^2 ~ IG(nu/2, nu lambda/2)

    void validate() const {
        for (const auto& f : {prognostic, treatment}) {
            require(f.trees >= 1, "CONTRACT_BCF", "tree count must be >= 1");
            require(f.prior.alpha > 0 && f.prior.alpha < 1, "CONTRACT_BCF",
                    "branching prior alpha must be in (0,1)");
            require(f.prior.beta > 0, "CONTRACT_BCF", "depth penalty beta must be > 0");
        }
        require(burn_in >= 1 && kept >= 1, "CONTRACT_BCF", "sweep counts must be >= 1");
        require(cutpoints >= 1, "CONTRACT_BCF", "cutpoint grid must be non-empty");
    }
};

namespace bcfdetail {

struct Node {
    int feature = -1;  // -1 marks a leaf
    double cut = 0;
    int left = -1, right = -1;
    int parent = -1;
    int depth = 0;
    double value = 0;
};

struct Tree {
    std::vector<Node> nodes{Node{}};
    std::vector<std::vector<int>> rows{{}};  // per-node row lists (valid at leaves)
    std::vector<int> free_list;

    bool is_leaf(int id) const { return nodes[static_cast<std::size_t>(id)].feature < 0; }
    bool root_only() const { return is_leaf(0); }

    void collect_leaves(std::vector<int>& out) const {
        out.clear();
        for (int id = 0; id < static_cast<int>(nodes.size()); ++id)
            if (alive(id) && is_leaf(id)) out.push_back(id);
    }
    // a node is live when it is the root or referenced by its parent
    bool alive(int id) const {
        if (id == 0) return true;
        const int p = nodes[static_cast<std::size_t>(id)].parent;
        if (p < 0) return false;
        const Node& pn = nodes[static_cast<std::size_t>(p)];
        return pn.feature >= 0 && (pn.left == id || pn.right == id);
    }
    // nog = internal node whose children are both leaves
    void collect_nogs(std::vector<int>& out) const {
        out.clear();
        for (int id = 0; id < static_cast<int>(nodes.size()); ++id) {
            if (!alive(id) || is_leaf(id)) continue;
            const Node& nd = nodes[static_cast<std::size_t>(id)];
            if (is_leaf(nd.left) && is_leaf(nd.right)) out.push_back(id);
        }
    }

    int allocate() {
        if (!free_list.empty()) {
            const int id = free_list.back();
            free_list.pop_back();
            nodes[static_cast<std::size_t>(id)] = Node{};
            rows[static_cast<std::size_t>(id)].clear();
            return id;
        }
        nodes.emplace_back();
        rows.emplace_back();
        return static_cast<int>(nodes.size()) - 1;
    }
};

// integrated leaf likelihood terms that depend on the partition only:
// 1/2 log(s2/(s2 + n_w s2_leaf)) + s2_leaf s_w^2 / (2 s2 (s2 + n_w s2_leaf))
inline double leaf_log_ml(double n_w, double s_w, double s2, double s2_leaf) {
    const double denom = s2 + n_w * s2_leaf;
    return 0.5 * std::log(s2 / denom) + s2_leaf * s_w * s_w / (2.0 * s2 * denom);
}

struct Forest {
    std::vector<Tree> trees;
    std::vector<Vector> fits;  // raw per-row tree output g_j(x_i)
    TreePrior prior;
    double s2_leaf = 1.0;
    const Matrix* x = nullptr;
    const std::vector<std::vector<double>>* cuts = nullptr;
    const Vector* weights = nullptr;  // 1 for prognostic rows, t_i for treatment

    void init(int n_trees, const TreePrior& p, double leaf_sd, const Matrix& features,
              const std::vector<std::vector<double>>& cut_grid, const Vector& w) {
        prior = p;
        s2_leaf = leaf_sd * leaf_sd;
        x = &features;
        cuts = &cut_grid;
        weights = &w;
        const Index n = features.rows();
        trees.assign(static_cast<std::size_t>(n_trees), Tree{});
        fits.assign(static_cast<std::size_t>(n_trees), Vector::Zero(n));
        for (auto& tree : trees) {
            tree.rows[0].resize(static_cast<std::size_t>(n));
            std::iota(tree.rows[0].begin(), tree.rows[0].end(), 0);
        }
    }

    int features_with_cuts() const {
        int c = 0;
        for (const auto& g : *cuts)
            if (!g.empty()) ++c;
        return c;
    }
};

// One Metropolis-Hastings structure move (grow or prune) followed by a Gibbs
// draw of every leaf value, computed against the partial residual r.
inline void update_tree(Forest& forest, std::size_t j, const Vector& r, double s2,
                        Rng& rng, std::vector<int>& leaves, std::vector<int>& nogs) {
    Tree& tree = forest.trees[j];
    const Vector& w = *forest.weights;
    const Matrix& x = *forest.x;

    auto stats = [&](const std::vector<int>& rows, double& n_w, double& s_w) {
        n_w = 0;
        s_w = 0;
        for (int i : rows) {
            n_w += w[i];
            s_w += w[i] * r[i];
        }
    };

    tree.collect_leaves(leaves);
    tree.collect_nogs(nogs);
    const double p_grow = tree.root_only() ? 1.0 : 0.5;
    const bool grow = rng.uniform() < p_grow;
    const int n_feat = forest.features_with_cuts();

    if (grow && n_feat > 0) {
        const int leaf = leaves[rng.index(leaves.size())];
        int feature = -1;
        {  // uniform over features that have cutpoints
            int pick = static_cast<int>(rng.index(static_cast<std::size_t>(n_feat)));
            for (int f = 0; f < static_cast<int>(forest.cuts->size()); ++f) {
                if ((*forest.cuts)[static_cast<std::size_t>(f)].empty()) continue;
                if (pick-- == 0) {
                    feature = f;
                    break;
                }
            }
        }
        const auto& grid = (*forest.cuts)[static_cast<std::size_t>(feature)];
        const double cut = grid[rng.index(grid.size())];

        auto& rows = tree.rows[static_cast<std::size_t>(leaf)];
        std::vector<int> left_rows, right_rows;
        left_rows.reserve(rows.size());
        right_rows.reserve(rows.size());
        for (int i : rows) (x(i, feature) <= cut ? left_rows : right_rows).push_back(i);
        if (left_rows.empty() || right_rows.empty()) return;  // empty cell: reject

        const Node& nd = tree.nodes[static_cast<std::size_t>(leaf)];
        const int depth = nd.depth;
        const double p_nt = forest.prior.nonterminal_prob(depth);
        const double p_nt_child = forest.prior.nonterminal_prob(depth + 1);
        double log_accept =
            std::log(p_nt) + 2.0 * std::log1p(-p_nt_child) - std::log1p(-p_nt);

        double n_p, s_p, n_l, s_l, n_r, s_r;
        stats(rows, n_p, s_p);
        stats(left_rows, n_l, s_l);
        stats(right_rows, n_r, s_r);
        log_accept += leaf_log_ml(n_l, s_l, s2, forest.s2_leaf) +
                      leaf_log_ml(n_r, s_r, s2, forest.s2_leaf) -
                      leaf_log_ml(n_p, s_p, s2, forest.s2_leaf);

        // reverse move: prune the new nog in T'
        const int parent = nd.parent;
        const bool parent_was_nog =
            parent >= 0 && tree.is_leaf(tree.nodes[static_cast<std::size_t>(parent)].left ==
                                                leaf
                                            ? tree.nodes[static_cast<std::size_t>(parent)].right
                                            : tree.nodes[static_cast<std::size_t>(parent)].left);
        const double n_nog_new = static_cast<double>(nogs.size()) + 1.0 -
                                 (parent_was_nog ? 1.0 : 0.0);
        log_accept += std::log(0.5) - std::log(n_nog_new);
        log_accept -= std::log(p_grow) - std::log(static_cast<double>(leaves.size())) -
                      std::log(static_cast<double>(n_feat)) -
                      std::log(static_cast<double>(grid.size()));

        if (std::log(rng.uniform() + 1e-300) < log_accept) {
            const int left_id = tree.allocate();
            const int right_id = tree.allocate();
            Node& p_nd = tree.nodes[static_cast<std::size_t>(leaf)];
            p_nd.feature = feature;
            p_nd.cut = cut;
            p_nd.left = left_id;
            p_nd.right = right_id;
            Node& l_nd = tree.nodes[static_cast<std::size_t>(left_id)];
            Node& r_nd = tree.nodes[static_cast<std::size_t>(right_id)];
            l_nd.parent = leaf;
            r_nd.parent = leaf;
            l_nd.depth = p_nd.depth + 1;
            r_nd.depth = p_nd.depth + 1;
            tree.rows[static_cast<std::size_t>(left_id)] = std::move(left_rows);
            tree.rows[static_cast<std::size_t>(right_id)] = std::move(right_rows);
            tree.rows[static_cast<std::size_t>(leaf)].clear();
            tree.collect_leaves(leaves);
        }
    } else if (!grow && !nogs.empty()) {
        const int nog = nogs[rng.index(nogs.size())];
        Node& nd = tree.nodes[static_cast<std::size_t>(nog)];
        const auto& left_rows = tree.rows[static_cast<std::size_t>(nd.left)];
        const auto& right_rows = tree.rows[static_cast<std::size_t>(nd.right)];

        const double p_nt = forest.prior.nonterminal_prob(nd.depth);
        const double p_nt_child = forest.prior.nonterminal_prob(nd.depth + 1);
        double log_accept =
            -(std::log(p_nt) + 2.0 * std::log1p(-p_nt_child) - std::log1p(-p_nt));

        double n_l, s_l, n_r, s_r;
        stats(left_rows, n_l, s_l);
        stats(right_rows, n_r, s_r);
        const double n_p = n_l + n_r, s_p = s_l + s_r;
        log_accept += leaf_log_ml(n_p, s_p, s2, forest.s2_leaf) -
                      leaf_log_ml(n_l, s_l, s2, forest.s2_leaf) -
                      leaf_log_ml(n_r, s_r, s2, forest.s2_leaf);

        // reverse move: grow back at the merged leaf in T'
        const double n_leaves_pruned = static_cast<double>(leaves.size()) - 1.0;
        const auto& grid = (*forest.cuts)[static_cast<std::size_t>(nd.feature)];
        const bool pruned_root_only = nog == 0;
        const double p_grow_pruned = pruned_root_only ? 1.0 : 0.5;
        log_accept += std::log(p_grow_pruned) - std::log(n_leaves_pruned) -
                      std::log(static_cast<double>(n_feat)) -
                      std::log(static_cast<double>(grid.size()));
        log_accept -= std::log(0.5) - std::log(static_cast<double>(nogs.size()));

        if (std::log(rng.uniform() + 1e-300) < log_accept) {
            auto& merged = tree.rows[static_cast<std::size_t>(nog)];
            merged.clear();
            merged.insert(merged.end(), left_rows.begin(), left_rows.end());
            merged.insert(merged.end(), right_rows.begin(), right_rows.end());
            tree.rows[static_cast<std::size_t>(nd.left)].clear();
            tree.rows[static_cast<std::size_t>(nd.right)].clear();
            tree.free_list.push_back(nd.left);
            tree.free_list.push_back(nd.right);
            nd.feature = -1;
            nd.left = -1;
            nd.right = -1;
            tree.collect_leaves(leaves);
        }
    }

    // Gibbs draw of every leaf value and refresh of the tree's fitted vector
    Vector& fit = forest.fits[j];
    for (int leaf : leaves) {
        double n_w, s_w;
        stats(tree.rows[static_cast<std::size_t>(leaf)], n_w, s_w);
        const double var = 1.0 / (n_w / s2 + 1.0 / forest.s2_leaf);
        double value = rng.normal(var * s_w / s2, std::sqrt(var));
        for (int attempt = 0; attempt < 3 && !std::isfinite(value); ++attempt)
            value = rng.normal(var * s_w / s2, std::sqrt(var));
        if (!std::isfinite(value))
            throw NumericalError("NUMERIC_BCF", "persistent non-finite leaf value");
        tree.nodes[static_cast<std::size_t>(leaf)].value = value;
        for (int i : tree.rows[static_cast<std::size_t>(leaf)]) fit[i] = value;
    }
}

inline std::vector<std::vector<double>> quantile_cutpoints(const Matrix& x, int m) {
    std::vector<std::vector<double>> grids(static_cast<std::size_t>(x.cols()));
    const Index n = x.rows();
    for (Index f = 0; f < x.cols(); ++f) {
        std::vector<double> v(x.col(f).data(), x.col(f).data() + n);
        std::sort(v.begin(), v.end());
        auto& grid = grids[static_cast<std::size_t>(f)];
        for (int i = 1; i <= m; ++i) {
            const auto idx = static_cast<std::size_t>(
                static_cast<double>(i) / (m + 1) * static_cast<double>(n - 1));
            const double c = v[idx];
            if (c >= v.back()) continue;  // cut at the max sends nothing right
            if (grid.empty() || c > grid.back()) grid.push_back(c);
        }
    }
    return grids;
}

}  // namespace bcfdetail

// Bayesian causal forest: y ~ N(prognostic_forest(x, rho(x)) +
// treatment_forest(x) * t, sigma^2), fitted by Bayesian backfitting.  The
// prognostic forest sees rho(x) as an extra feature; the treatment forest's
// contribution is multiplied by t so only treated rows inform it (leaves
// without treated rows draw from their prior).  Outcomes are centered and
// scaled internally; leaf prior sd = range(y_scaled) / (4 sqrt(trees)),
// sigma^2 gets a conjugate inverse-gamma step with nu = 3 and 90% prior mass
// below the scaled outcome variance.
inline PosteriorEffect fit_bcf(const Dataset& ds, const PropensityModel& rho,
                               const BcfConfig& config = {}, std::uint64_t seed = 0) {
    config.validate();
    require(rho.dim() == ds.dim(), "CONTRACT_SCHEMA", "propensity/dataset dimension mismatch");
    const auto arm0 = ds.arm(0), arm1 = ds.arm(1);
    require(static_cast<Index>(arm0.size()) >= kMinArmRows &&
                static_cast<Index>(arm1.size()) >= kMinArmRows,
            "CONTRACT_ARM", "both arms need at least 20 rows");

    const Index n = ds.n();
    const double y_mean = ds.y.mean();
    double y_sd = std::sqrt((ds.y.array() - y_mean).square().sum() / static_cast<double>(n));
    if (y_sd <= 0) y_sd = 1.0;
    const Vector ys = (ds.y.array() - y_mean) / y_sd;
    const double y_range = ys.maxCoeff() - ys.minCoeff();

    Matrix prog_x(n, ds.dim() + 1);
    prog_x.leftCols(ds.dim()) = ds.x;
    prog_x.col(ds.dim()) = rho.predict(ds.x);
    const auto prog_cuts = bcfdetail::quantile_cutpoints(prog_x, config.cutpoints);
    const auto treat_cuts = bcfdetail::quantile_cutpoints(ds.x, config.cutpoints);

    const Vector ones = Vector::Ones(n);
    bcfdetail::Forest prog, treat;
    prog.init(config.prognostic.trees, config.prognostic.prior,
              y_range / (4.0 * std::sqrt(static_cast<double>(config.prognostic.trees))),
              prog_x, prog_cuts, ones);
    treat.init(config.treatment.trees, config.treatment.prior,
               y_range / (4.0 * std::sqrt(static_cast<double>(config.treatment.trees))),
               ds.x, treat_cuts, ds.t);

    // sigma^2 ~ IG(nu/2, nu lambda/2) with P(sigma^2 <= 1) = 0.9 on the
    // scaled outcome: nu lambda = lower 10% quantile of chi^2_nu (0.584374
    // for nu = 3)
    const double nu = config.nu;
    const double nu_lambda = 0.584374;
    double s2 = 1.0;

    Rng rng(derive_seed(seed, "bcf"));
    Vector resid = ys;
    Vector treat_total = Vector::Zero(n);
    Vector r_partial(n);

    PosteriorEffect effect;
    effect.tag = EstimatorTag::BayesBcf;
    effect.tau_draws.resize(config.kept, n);

    std::vector<int> leaves, nogs;
    const int total_sweeps = config.burn_in + config.kept;
    for (int sweep = 0; sweep < total_sweeps; ++sweep) {
        for (std::size_t j = 0; j < prog.trees.size(); ++j) {
            r_partial = resid + prog.fits[j];
            bcfdetail::update_tree(prog, j, r_partial, s2, rng, leaves, nogs);
            resid = r_partial - prog.fits[j];
        }
        for (std::size_t j = 0; j < treat.trees.size(); ++j) {
            const Vector old_fit = treat.fits[j];
            r_partial = resid.array() + ds.t.array() * old_fit.array();
            bcfdetail::update_tree(treat, j, r_partial, s2, rng, leaves, nogs);
            resid = r_partial.array() - ds.t.array() * treat.fits[j].array();
            treat_total += treat.fits[j] - old_fit;
        }
        const double a = 0.5 * (nu + static_cast<double>(n));
        const double b = 0.5 * (nu_lambda + resid.squaredNorm());
        s2 = b / rng.gamma(a, 1.0);

        if (sweep >= config.burn_in)
            effect.tau_draws.row(sweep - config.burn_in) = (treat_total * y_sd).transpose();
    }
    effect.finalize();
    return effect;
}

}  // namespace hte
