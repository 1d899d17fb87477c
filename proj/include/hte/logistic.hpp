#pragma once

#include <cmath>

#include "hte/common.hpp"

namespace hte {

struct LogisticModel {
    double intercept = 0;
    Vector weights;
    double lambda = 0;  // L2 penalty on weights (intercept unpenalized)
    int iterations = 0;

    Index dim() const { return weights.size(); }

    // Probabilities are clamped to keep outputs strictly inside (0,1) even
    // when the linear predictor saturates the exponential.
    static double squash(double z) {
        const double p = 1.0 / (1.0 + std::exp(-z));
        return std::min(std::max(p, 1e-15), 1.0 - 1e-15);
    }
    double predict_one(const Eigen::Ref<const Vector>& x) const {
        return squash(intercept + weights.dot(x));
    }
    Vector predict(const Matrix& x) const {
        require(x.cols() == weights.size(), "CONTRACT_SCHEMA",
                "feature dimension mismatch in LogisticModel::predict");
        Vector z = (x * weights).array() + intercept;
        for (Index i = 0; i < z.size(); ++i) z[i] = squash(z[i]);
        return z;
    }
};

// Average penalized log-likelihood; larger is better.
inline double logistic_objective(const Matrix& x, const Vector& y, const Vector& w,
                                 double b, double lambda) {
    const Index n = x.rows();
    Vector z = (x * w).array() + b;
    double ll = 0;
    for (Index i = 0; i < n; ++i) {
        // log(1+exp(.)) evaluated stably
        const double zi = z[i];
        const double log1pe = zi > 0 ? zi + std::log1p(std::exp(-zi)) : std::log1p(std::exp(zi));
        ll += y[i] * zi - log1pe;
    }
    return ll / static_cast<double>(n) - 0.5 * lambda * w.squaredNorm();
}

// Newton (IRLS) ascent of the L2-penalized average log-likelihood
//   (1/n) sum_i [y_i z_i - log(1+e^{z_i})] - (lambda/2)||w||^2
// with step halving; converged when the gradient norm drops below `tol`.
// Perfectly separable data with lambda=0 cannot converge and raises a
// NumericalError advising lambda > 0.
inline LogisticModel fit_logistic(const Matrix& x, const Vector& y, double lambda,
                                  double tol = 1e-6, int max_iterations = 200) {
    require(x.rows() == y.size(), "CONTRACT_SCHEMA", "row mismatch between X and y");
    require(lambda >= 0, "CONTRACT_PENALTY", "L2 penalty must be >= 0");
    const Index n = x.rows(), d = x.cols();
    bool has0 = false, has1 = false;
    for (Index i = 0; i < n; ++i) {
        require(y[i] == 0.0 || y[i] == 1.0, "CONTRACT_TARGET",
                "logistic target must be binary 0/1");
        (y[i] == 1.0 ? has1 : has0) = true;
    }
    if (!has0 || !has1)
        throw ContractError("CONTRACT_SINGLE_CLASS",
                            "logistic target contains a single class");

    LogisticModel model;
    model.lambda = lambda;
    model.weights = Vector::Zero(d);
    const double inv_n = 1.0 / static_cast<double>(n);

    double objective = logistic_objective(x, y, model.weights, model.intercept, lambda);
    for (int it = 0; it < max_iterations; ++it) {
        model.iterations = it + 1;
        Vector z = (x * model.weights).array() + model.intercept;
        if (lambda == 0.0 && it > 0) {
            // an iterate separating the classes proves the unpenalized
            // likelihood is unbounded (Albert & Anderson, 1984)
            bool separated = true;
            for (Index i = 0; i < n && separated; ++i)
                separated = (y[i] == 1.0 ? z[i] : -z[i]) > 0.0;
            if (separated)
                throw NumericalError("NUMERIC_SEPARATION",
                                     "classes are perfectly separable; the unpenalized "
                                     "logistic fit diverges, use lambda > 0");
        }
        Vector p(n), wdiag(n);
        for (Index i = 0; i < n; ++i) {
            p[i] = 1.0 / (1.0 + std::exp(-z[i]));
            wdiag[i] = std::max(p[i] * (1.0 - p[i]), 1e-10);
        }
        // gradient of the average objective over (b, w)
        Vector resid = y - p;
        Vector grad(d + 1);
        grad[0] = resid.sum() * inv_n;
        grad.tail(d) = x.transpose() * resid * inv_n - lambda * model.weights;
        if (grad.lpNorm<Eigen::Infinity>() < tol) return model;

        Matrix hess(d + 1, d + 1);
        const Matrix xw = x.array().colwise() * wdiag.array();
        hess(0, 0) = wdiag.sum() * inv_n;
        hess.block(0, 1, 1, d) = xw.colwise().sum() * inv_n;
        hess.block(1, 0, d, 1) = hess.block(0, 1, 1, d).transpose();
        hess.block(1, 1, d, d) = x.transpose() * xw * inv_n;
        hess.block(1, 1, d, d).diagonal().array() += lambda;

        Vector step = hess.ldlt().solve(grad);
        double scale = 1.0;
        for (int half = 0; half < 40; ++half) {
            const Vector w_try = model.weights + scale * step.tail(d);
            const double b_try = model.intercept + scale * step[0];
            const double obj_try = logistic_objective(x, y, w_try, b_try, lambda);
            if (obj_try >= objective || scale < 1e-12) {
                model.weights = w_try;
                model.intercept = b_try;
                objective = obj_try;
                break;
            }
            scale *= 0.5;
        }
    }
    throw NumericalError("NUMERIC_LOGISTIC",
                         lambda == 0.0
                             ? "logistic regression did not converge (likely separation); "
                               "use lambda > 0"
                             : "logistic regression did not converge");
}

}  // namespace hte
