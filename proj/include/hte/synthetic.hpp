#pragma once

#include <cmath>
#include <string>

#include "hte/common.hpp"
#include "hte/dataset.hpp"
#include "hte/rng.hpp"

namespace hte {

// Data-generating processes with analytically known effects, used as the
// verification oracle throughout the test suites.
//
//   DGP-NULL      randomized t, y = x1 + x2 + e,                tau* = 0
//   DGP-CONST     randomized t, y = x1 + x2 + 5 t + e,          tau* = 5
//   DGP-CONF      rho* = logistic(s * x1), y = 3 x1 + x2 + 5 t + e
//   DGP-NL        randomized t, y = sin(2 x1) + x2^2 + 5 t + e, tau* = 5
//   DGP-HET       randomized t, y = x2 + (2 + x1) t + e,        tau*(x) = 2 + x1
//   DGP-CONF-DYN  last feature z is a pre-period trend; selection
//                 rho* = logistic(s * (x1 - z)), y = 3 x1 + x2 + 2 z + 5 t + e
//
// Features are i.i.d. standard normal, e ~ N(0, noise_sd^2), s is the
// selection strength.  Randomized designs use P(t=1) = 1/2.
enum class Dgp { Null, Const, Conf, Nl, Het, ConfDyn };

inline const char* to_string(Dgp d) {
    switch (d) {
        case Dgp::Null: return "DGP-NULL";
        case Dgp::Const: return "DGP-CONST";
        case Dgp::Conf: return "DGP-CONF";
        case Dgp::Nl: return "DGP-NL";
        case Dgp::Het: return "DGP-HET";
        case Dgp::ConfDyn: return "DGP-CONF-DYN";
    }
    return "?";
}

inline Dgp dgp_from_string(const std::string& s) {
    if (s == "DGP-NULL") return Dgp::Null;
    if (s == "DGP-CONST") return Dgp::Const;
    if (s == "DGP-CONF") return Dgp::Conf;
    if (s == "DGP-NL") return Dgp::Nl;
    if (s == "DGP-HET") return Dgp::Het;
    if (s == "DGP-CONF-DYN") return Dgp::ConfDyn;
    throw ContractError("CONTRACT_DGP", "unknown DGP name: " + s);
}

struct DgpSpec {
    Dgp name = Dgp::Const;
    Index n = 1000;
    Index d = 5;
    double noise_sd = 1.0;
    double selection_strength = 1.0;
    std::uint64_t seed = 0;
};

// Ground truth carried alongside the generated sample.  ate is the sample
// mean of tau, so on DGP-HET it equals 2 + mean(x1).
struct DgpTruth {
    double ate = 0;
    Vector tau;  // tau*(x_i)
    Vector rho;  // rho*(x_i); 0.5 under randomization
};

struct SyntheticData {
    Dataset dataset;
    DgpTruth truth;
};

inline double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline SyntheticData generate(const DgpSpec& spec) {
    require(spec.n >= 50, "CONTRACT_DGP", "generate requires n >= 50");
    require(spec.d >= 2, "CONTRACT_DGP", "generate requires d >= 2");
    require(spec.noise_sd >= 0, "CONTRACT_DGP", "noise sd must be >= 0");
    if (spec.name == Dgp::ConfDyn)
        require(spec.d >= 3, "CONTRACT_DGP", "DGP-CONF-DYN requires d >= 3 (trend column)");

    const Index n = spec.n, d = spec.d;
    Rng rng(derive_seed(spec.seed, "synthetic"));

    SyntheticData out;
    out.dataset.x.resize(n, d);
    out.dataset.y.resize(n);
    out.dataset.t.resize(n);
    out.truth.tau.resize(n);
    out.truth.rho.resize(n);

    const double s = spec.selection_strength;
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < d; ++j) out.dataset.x(i, j) = rng.normal();
        const double x1 = out.dataset.x(i, 0);
        const double x2 = out.dataset.x(i, 1);
        const double z = out.dataset.x(i, d - 1);

        double mu0 = 0, tau = 0, rho = 0.5;
        switch (spec.name) {
            case Dgp::Null: mu0 = x1 + x2; tau = 0; break;
            case Dgp::Const: mu0 = x1 + x2; tau = 5; break;
            case Dgp::Conf: mu0 = 3 * x1 + x2; tau = 5; rho = logistic(s * x1); break;
            case Dgp::Nl: mu0 = std::sin(2 * x1) + x2 * x2; tau = 5; break;
            case Dgp::Het: mu0 = x2; tau = 2 + x1; break;
            case Dgp::ConfDyn:
                mu0 = 3 * x1 + x2 + 2 * z;
                tau = 5;
                rho = logistic(s * (x1 - z));
                break;
        }
        const double t = rng.uniform() < rho ? 1.0 : 0.0;
        out.dataset.t[i] = t;
        out.dataset.y[i] = mu0 + t * tau + spec.noise_sd * rng.normal();
        out.truth.tau[i] = tau;
        out.truth.rho[i] = rho;
    }
    out.truth.ate = out.truth.tau.mean();

    out.dataset.schema.resize(static_cast<std::size_t>(d));
    for (Index j = 0; j < d; ++j)
        out.dataset.schema[static_cast<std::size_t>(j)] = {"x" + std::to_string(j + 1),
                                                           ColumnKind::Continuous};
    if (spec.name == Dgp::ConfDyn)
        out.dataset.schema.back().name = "trend";
    out.dataset.validate();
    return out;
}

struct MonteCarloBias {
    double bias = 0;    // E[mu0* | t=1] - E[mu0* | t=0]
    double mc_std = 0;  // std of the batch-mean estimate
};

// Brute-force oracle for the naive difference-in-means bias of a confounded
// DGP, estimated from fresh draws in 100 batches; the reported mc_std is the
// standard error of the batch-mean estimate.
inline MonteCarloBias mc_naive_bias(const DgpSpec& spec, std::int64_t draws,
                                    std::uint64_t seed) {
    require(spec.name == Dgp::Conf || spec.name == Dgp::ConfDyn, "CONTRACT_DGP",
            "naive-bias oracle applies to confounded DGPs");
    const int batches = 100;
    const std::int64_t per_batch = std::max<std::int64_t>(draws / batches, 1);
    Rng rng(derive_seed(seed, "mc-naive-bias"));
    const double s = spec.selection_strength;
    std::vector<double> batch_bias;
    batch_bias.reserve(batches);
    for (int b = 0; b < batches; ++b) {
        double sum1 = 0, n1 = 0, sum0 = 0, n0 = 0;
        for (std::int64_t k = 0; k < per_batch; ++k) {
            const double x1 = rng.normal();
            const double x2 = rng.normal();
            double mu0, rho;
            if (spec.name == Dgp::Conf) {
                mu0 = 3 * x1 + x2;
                rho = logistic(s * x1);
            } else {
                const double z = rng.normal();
                mu0 = 3 * x1 + x2 + 2 * z;
                rho = logistic(s * (x1 - z));
            }
            if (rng.uniform() < rho) {
                sum1 += mu0;
                n1 += 1;
            } else {
                sum0 += mu0;
                n0 += 1;
            }
        }
        batch_bias.push_back(sum1 / n1 - sum0 / n0);
    }
    MonteCarloBias out;
    for (double b : batch_bias) out.bias += b;
    out.bias /= batches;
    double ss = 0;
    for (double b : batch_bias) ss += (b - out.bias) * (b - out.bias);
    out.mc_std = std::sqrt(ss / (batches - 1) / batches);
    return out;
}

}  // namespace hte
