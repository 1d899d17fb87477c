#pragma once

#include <cmath>
#include <vector>

#include "hte/common.hpp"

namespace hte {

enum class PenaltyKind { L1, L2 };

struct LinearModel {
    double intercept = 0;
    Vector weights;
    PenaltyKind penalty = PenaltyKind::L2;
    double lambda = 0;
    bool converged = true;
    int iterations = 0;

    Index dim() const { return weights.size(); }
    double predict_one(const Eigen::Ref<const Vector>& x) const {
        return intercept + weights.dot(x);
    }
    Vector predict(const Matrix& x) const {
        require(x.cols() == weights.size(), "CONTRACT_SCHEMA",
                "feature dimension mismatch in LinearModel::predict");
        return (x * weights).array() + intercept;
    }
};

inline double soft_threshold(double z, double lambda) {
    if (z > lambda) return z - lambda;
    if (z < -lambda) return z + lambda;
    return 0.0;
}

// Smallest penalty at which the lasso solution is all-zero:
// max_j |X_j' (y - ybar)| / n.  Uses the same per-column dot products as the
// coordinate-descent sweep, so fitting exactly at lambda_max yields exact zeros.
inline double lasso_max_lambda(const Matrix& x, const Vector& y) {
    const Vector yc = y.array() - y.mean();
    double lmax = 0;
    for (Index j = 0; j < x.cols(); ++j)
        lmax = std::max(lmax, std::abs(x.col(j).dot(yc)));
    return lmax / static_cast<double>(x.rows());
}

// Coordinate descent for (1/2n)||y - Xw - b||^2 + lambda ||w||_1 with an
// unpenalized intercept.  Converged when the largest single-coordinate change
// in a full sweep falls below `tolerance`; otherwise the result comes back
// with converged=false and the caller decides.  Warm start via `init`.
inline LinearModel fit_lasso(const Matrix& x, const Vector& y, double lambda,
                             double tolerance = 1e-8, int max_iterations = 10000,
                             const LinearModel* init = nullptr) {
    require(lambda >= 0, "CONTRACT_PENALTY", "lasso penalty must be >= 0");
    require(tolerance > 0, "CONTRACT_TOLERANCE", "tolerance must be > 0");
    require(x.rows() == y.size(), "CONTRACT_SCHEMA", "row mismatch between X and y");
    if (!y.allFinite()) throw ContractError("CONTRACT_NONFINITE", "lasso target contains NaN");

    const Index n = x.rows(), d = x.cols();
    const double inv_n = 1.0 / static_cast<double>(n);
    const Vector col_sq_norm = x.colwise().squaredNorm() * inv_n;

    LinearModel model;
    model.penalty = PenaltyKind::L1;
    model.lambda = lambda;
    model.weights = (init && init->weights.size() == d) ? init->weights : Vector::Zero(d);
    model.intercept = (y - x * model.weights).mean();

    Vector residual = y - x * model.weights;
    residual.array() -= model.intercept;

    model.converged = false;
    for (int it = 0; it < max_iterations; ++it) {
        double max_delta = 0;
        for (Index j = 0; j < d; ++j) {
            if (col_sq_norm[j] == 0.0) continue;  // constant-zero column stays at weight 0
            const double w_old = model.weights[j];
            const double rho = inv_n * x.col(j).dot(residual) + col_sq_norm[j] * w_old;
            const double w_new = soft_threshold(rho, lambda) / col_sq_norm[j];
            if (w_new != w_old) {
                residual -= (w_new - w_old) * x.col(j);
                model.weights[j] = w_new;
                max_delta = std::max(max_delta, std::abs(w_new - w_old));
            }
        }
        const double b_new = residual.mean() + model.intercept;
        if (b_new != model.intercept) {
            residual.array() -= b_new - model.intercept;
            max_delta = std::max(max_delta, std::abs(b_new - model.intercept));
            model.intercept = b_new;
        }
        model.iterations = it + 1;
        if (max_delta < tolerance) {
            model.converged = true;
            break;
        }
    }
    return model;
}

// Exact ridge solution of the penalized normal equations
//   (Xc' Xc + n lambda I) w = Xc' (y - ybar),  b = ybar - xbar' w,
// where Xc is the column-centered design (for standardized features this is
// exactly (X'X + n lambda I) w = X'(y - ybar)).  Solved by LDLT.
inline LinearModel fit_ridge(const Matrix& x, const Vector& y, double lambda) {
    require(lambda >= 0, "CONTRACT_PENALTY", "ridge penalty must be >= 0");
    require(x.rows() == y.size(), "CONTRACT_SCHEMA", "row mismatch between X and y");
    if (!y.allFinite()) throw ContractError("CONTRACT_NONFINITE", "ridge target contains NaN");

    const Index n = x.rows(), d = x.cols();
    const Vector xbar = x.colwise().mean();
    const double ybar = y.mean();
    const Matrix xc = x.rowwise() - xbar.transpose();
    const Vector yc = y.array() - ybar;

    Matrix gram = xc.transpose() * xc;
    gram.diagonal().array() += static_cast<double>(n) * lambda;
    const Vector rhs = xc.transpose() * yc;

    if (lambda == 0.0) {
        Eigen::FullPivLU<Matrix> lu(gram);
        if (!lu.isInvertible())
            throw NumericalError("NUMERIC_SINGULAR",
                                 "ridge system is singular at lambda=0; use lambda > 0");
    }
    Eigen::LDLT<Matrix> ldlt(gram);
    Vector w = ldlt.solve(rhs);
    // one refinement step keeps the normal-equation residual near machine precision
    w += ldlt.solve(rhs - gram * w);

    LinearModel model;
    model.penalty = PenaltyKind::L2;
    model.lambda = lambda;
    model.weights = w;
    model.intercept = ybar - xbar.dot(w);
    model.converged = true;
    return model;
}

// 20-point log-spaced penalty grid on [1e-4 lambda_max, lambda_max], largest first.
inline std::vector<double> default_lambda_grid(const Matrix& x, const Vector& y,
                                               int points = 20, double min_ratio = 1e-4) {
    const double lmax = std::max(lasso_max_lambda(x, y), 1e-12);
    std::vector<double> grid(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i)
        grid[static_cast<std::size_t>(i)] =
            lmax * std::pow(min_ratio, static_cast<double>(i) / (points - 1));
    return grid;
}

}  // namespace hte
