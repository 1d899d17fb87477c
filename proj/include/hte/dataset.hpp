#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "hte/common.hpp"
#include "hte/csv.hpp"

namespace hte {

enum class ColumnKind { Continuous, Binary, CategoricalEncoded, MissingIndicator };

inline const char* to_string(ColumnKind k) {
    switch (k) {
        case ColumnKind::Continuous: return "continuous";
        case ColumnKind::Binary: return "binary";
        case ColumnKind::CategoricalEncoded: return "categorical-encoded";
        case ColumnKind::MissingIndicator: return "missing-indicator";
    }
    return "?";
}

struct ColumnInfo {
    std::string name;
    ColumnKind kind = ColumnKind::Continuous;
};

// Immutable after construction; safe to share across parallel workers.
struct Dataset {
    Vector y;                        // outcome, length n
    Vector t;                        // treatment, entries exactly 0 or 1
    Matrix x;                        // features, n x d
    std::vector<ColumnInfo> schema;  // one entry per feature column

    Index n() const { return y.size(); }
    Index dim() const { return x.cols(); }

    std::vector<Index> arm(int treated) const {
        std::vector<Index> idx;
        for (Index i = 0; i < n(); ++i)
            if (static_cast<int>(t[i]) == treated) idx.push_back(i);
        return idx;
    }

    Dataset subset(const std::vector<Index>& rows) const {
        Dataset out;
        out.y.resize(static_cast<Index>(rows.size()));
        out.t.resize(static_cast<Index>(rows.size()));
        out.x.resize(static_cast<Index>(rows.size()), x.cols());
        for (std::size_t k = 0; k < rows.size(); ++k) {
            out.y[static_cast<Index>(k)] = y[rows[k]];
            out.t[static_cast<Index>(k)] = t[rows[k]];
            out.x.row(static_cast<Index>(k)) = x.row(rows[k]);
        }
        out.schema = schema;
        return out;
    }

    void validate() const {
        if (n() < 1) throw SchemaError("SCHEMA_EMPTY", "dataset has no rows");
        if (t.size() != n() || x.rows() != n())
            throw SchemaError("SCHEMA_LENGTH", "y, t, x row counts differ");
        if (static_cast<Index>(schema.size()) != x.cols())
            throw SchemaError("SCHEMA_LENGTH", "schema size does not match feature count");
        for (Index i = 0; i < n(); ++i)
            if (t[i] != 0.0 && t[i] != 1.0)
                throw SchemaError("SCHEMA_TREATMENT",
                                  "treatment contains non-binary value " + std::to_string(t[i]));
        if (!x.allFinite())
            throw SchemaError("SCHEMA_NONFINITE", "feature matrix contains non-finite values");
        if (!y.allFinite())
            throw SchemaError("SCHEMA_NONFINITE", "outcome contains non-finite values");
    }
};

// Column-role mapping for ingestion.  `features` empty means "every column
// that is not the outcome or treatment".  `categorical` names columns that
// are already numerically encoded categories.
struct IngestConfig {
    std::string outcome;
    std::string treatment;
    std::vector<std::string> features;
    std::set<std::string> categorical;
};

namespace detail {

inline Index find_column(const CsvTable& table, const std::string& name,
                         const char* role, const char* tag) {
    for (std::size_t c = 0; c < table.header.size(); ++c)
        if (table.header[c] == name) return static_cast<Index>(c);
    throw SchemaError(tag, std::string(role) + " column '" + name + "' not found in header");
}

}  // namespace detail

// Missing feature cells are imputed to 0 and a paired binary indicator column
// (<name>_missing) is appended, so the row count never changes.
inline Dataset ingest_csv(const std::string& path, const IngestConfig& config) {
    if (config.outcome.empty() || config.treatment.empty())
        throw SchemaError("SCHEMA_CONFIG", "config must name an outcome and a treatment column");
    const CsvTable table = read_csv(path);
    const Index n = static_cast<Index>(table.rows());

    const Index y_col = detail::find_column(table, config.outcome, "outcome", "SCHEMA_OUTCOME");
    const Index t_col =
        detail::find_column(table, config.treatment, "treatment", "SCHEMA_TREATMENT");

    std::vector<Index> feat_cols;
    if (config.features.empty()) {
        for (std::size_t c = 0; c < table.header.size(); ++c)
            if (static_cast<Index>(c) != y_col && static_cast<Index>(c) != t_col)
                feat_cols.push_back(static_cast<Index>(c));
    } else {
        for (const auto& name : config.features)
            feat_cols.push_back(detail::find_column(table, name, "feature", "SCHEMA_FEATURE"));
    }
    if (feat_cols.empty())
        throw SchemaError("SCHEMA_FEATURE", "config selects no feature columns");

    Dataset ds;
    ds.y.resize(n);
    ds.t.resize(n);
    for (Index i = 0; i < n; ++i) {
        const auto& yc = table.cells[i][y_col];
        const auto& tc = table.cells[i][t_col];
        if (!yc)
            throw SchemaError("SCHEMA_OUTCOME",
                              "outcome column has a missing value at row " + std::to_string(i + 1));
        if (!tc)
            throw SchemaError("SCHEMA_TREATMENT", "treatment column has a missing value at row " +
                                                      std::to_string(i + 1));
        if (*tc != 0.0 && *tc != 1.0)
            throw SchemaError("SCHEMA_TREATMENT",
                              "treatment column '" + config.treatment +
                                  "' contains non-binary value " + std::to_string(*tc));
        ds.y[i] = *yc;
        ds.t[i] = *tc;
    }

    std::vector<Vector> columns;
    std::vector<ColumnInfo> schema;
    std::vector<Vector> indicators;
    std::vector<ColumnInfo> indicator_schema;
    for (Index c : feat_cols) {
        const std::string& name = table.header[c];
        Vector col(n), miss(n);
        Index n_missing = 0;
        bool binary = true;
        for (Index i = 0; i < n; ++i) {
            const auto& cell = table.cells[i][c];
            miss[i] = cell ? 0.0 : 1.0;
            col[i] = cell.value_or(0.0);
            if (!cell) ++n_missing;
            if (col[i] != 0.0 && col[i] != 1.0) binary = false;
        }
        if (n_missing == n)
            throw SchemaError("SCHEMA_EMPTY_COLUMN",
                              "feature column '" + name + "' is entirely missing");
        ColumnKind kind = config.categorical.count(name)
                              ? ColumnKind::CategoricalEncoded
                              : (binary ? ColumnKind::Binary : ColumnKind::Continuous);
        columns.push_back(col);
        schema.push_back({name, kind});
        if (n_missing > 0) {
            indicators.push_back(miss);
            indicator_schema.push_back({name + "_missing", ColumnKind::MissingIndicator});
        }
    }

    const Index d = static_cast<Index>(columns.size() + indicators.size());
    ds.x.resize(n, d);
    for (std::size_t j = 0; j < columns.size(); ++j) ds.x.col(static_cast<Index>(j)) = columns[j];
    for (std::size_t j = 0; j < indicators.size(); ++j)
        ds.x.col(static_cast<Index>(columns.size() + j)) = indicators[j];
    ds.schema = schema;
    ds.schema.insert(ds.schema.end(), indicator_schema.begin(), indicator_schema.end());
    ds.validate();
    return ds;
}

// Per-column affine transform fitted on the full dataset; reused at predict
// time so train and predict scales never drift.
struct StandardizationParams {
    Vector mean;   // 0 for untouched columns
    Vector scale;  // 1 for untouched columns; always > 0
    std::vector<Index> zero_variance_columns;

    Matrix apply(const Matrix& x) const {
        return (x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
    }
    Matrix invert(const Matrix& z) const {
        return (z.array().rowwise() * scale.transpose().array()).matrix().rowwise() +
               mean.transpose();
    }
};

struct StandardizeResult {
    Dataset dataset;
    StandardizationParams params;
};

// Scales continuous feature columns to mean 0, variance 1.  Convention: the
// divisor is the empirical (divide-by-n) standard deviation of the sample,
// so the column (1,2,3) maps to (-1.2247, 0, 1.2247).  Binary, indicator and
// categorical-encoded columns pass through untouched, as do y and t.
// Zero-variance continuous columns are left unchanged (mean 0, scale 1) and
// recorded as warnings: dropping them would desynchronize schemas.
inline StandardizeResult standardize(const Dataset& ds) {
    require(ds.n() >= 2, "CONTRACT_STANDARDIZE", "standardize requires n >= 2");
    const Index n = ds.n(), d = ds.dim();
    StandardizationParams params;
    params.mean = Vector::Zero(d);
    params.scale = Vector::Ones(d);
    for (Index j = 0; j < d; ++j) {
        if (ds.schema[static_cast<std::size_t>(j)].kind != ColumnKind::Continuous) continue;
        const double mean = ds.x.col(j).mean();
        const double var = (ds.x.col(j).array() - mean).square().sum() / static_cast<double>(n);
        if (var <= 0.0) {
            params.zero_variance_columns.push_back(j);
            continue;
        }
        params.mean[j] = mean;
        params.scale[j] = std::sqrt(var);
    }
    StandardizeResult out;
    out.dataset = ds;
    out.dataset.x = params.apply(ds.x);
    out.params = params;
    return out;
}

struct OverlapReport {
    double min = 0, q01 = 0, median = 0, q99 = 0, max = 0;
    Index outside_count = 0;  // units with raw propensity < eps or > 1 - eps
    double epsilon = 0;
    bool violated = false;
};

// Quantiles use the nearest-rank convention: q(p) = sorted[ceil(p*n) - 1].
inline OverlapReport compute_overlap(const Vector& propensities, double epsilon) {
    require(epsilon > 0.0 && epsilon < 0.5, "CONTRACT_EPSILON", "epsilon must be in (0, 0.5)");
    require(propensities.size() >= 1, "CONTRACT_EMPTY", "no propensities given");
    std::vector<double> sorted(propensities.data(), propensities.data() + propensities.size());
    std::sort(sorted.begin(), sorted.end());
    const auto n = sorted.size();
    auto rank = [&](double p) {
        std::size_t r = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n)));
        return sorted[std::clamp<std::size_t>(r, 1, n) - 1];
    };
    OverlapReport rep;
    rep.min = sorted.front();
    rep.q01 = rank(0.01);
    rep.median = rank(0.50);
    rep.q99 = rank(0.99);
    rep.max = sorted.back();
    rep.epsilon = epsilon;
    for (double p : sorted)
        if (p < epsilon || p > 1.0 - epsilon) ++rep.outside_count;
    rep.violated = rep.outside_count > 0;
    return rep;
}

// Overlap diagnostic against any fitted propensity model exposing
// dim() and predict_raw(Matrix) -> Vector of unclipped probabilities.
template <typename PropensityLike>
OverlapReport overlap_diagnostic(const Dataset& ds, const PropensityLike& rho, double epsilon) {
    if (rho.dim() != ds.dim())
        throw ContractError("CONTRACT_SCHEMA",
                            "propensity model dimension does not match dataset");
    return compute_overlap(rho.predict_raw(ds.x), epsilon);
}

}  // namespace hte
