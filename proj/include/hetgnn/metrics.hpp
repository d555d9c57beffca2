// Scale-free forecast accuracy measures over a set of samples:
// RSE and RAE normalize by the deviation of truth from its grand mean;
// CORR averages per-variable Pearson correlation across samples.
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "hetgnn/common.hpp"
#include "hetgnn/dataset.hpp"

namespace hetgnn {

struct ForecastReport {
    std::size_t horizon = 0;
    double rse = 0.0;
    double rae = 0.0;
    double corr = 0.0;
    std::vector<double> per_variable_corr;  // NaN marks excluded (zero-variance) variables
    std::size_t n_samples = 0;
};

namespace detail {

inline void check_metric_shapes(const Matrix& pred, const Matrix& truth) {
    if (!pred.same_shape(truth))
        throw DimensionError("metric: prediction " + std::to_string(pred.rows) + "x" + std::to_string(pred.cols) +
                             " and truth " + std::to_string(truth.rows) + "x" + std::to_string(truth.cols) +
                             " differ");
    if (pred.rows < 2) throw DimensionError("metric: need at least 2 samples");
}

inline double grand_mean(const Matrix& m) {
    double s = 0.0;
    for (double x : m.v) s += x;
    return s / static_cast<double>(m.v.size());
}

}  // namespace detail

// sqrt(sum (y - yhat)^2) / sqrt(sum (y - ybar)^2), ybar = grand mean of truth.
inline double metric_rse(const Matrix& pred, const Matrix& truth) {
    detail::check_metric_shapes(pred, truth);
    const double ybar = detail::grand_mean(truth);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < truth.v.size(); ++i) {
        const double e = truth.v[i] - pred.v[i];
        const double d = truth.v[i] - ybar;
        num += e * e;
        den += d * d;
    }
    if (den <= 0.0) throw MetricError("rse undefined: truth is constant");
    return std::sqrt(num) / std::sqrt(den);
}

// sum |y - yhat| / sum |y - ybar|
inline double metric_rae(const Matrix& pred, const Matrix& truth) {
    detail::check_metric_shapes(pred, truth);
    const double ybar = detail::grand_mean(truth);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < truth.v.size(); ++i) {
        num += std::fabs(truth.v[i] - pred.v[i]);
        den += std::fabs(truth.v[i] - ybar);
    }
    if (den <= 0.0) throw MetricError("rae undefined: truth is constant");
    return num / den;
}

// Mean over variables of Pearson(pred_j, truth_j) across samples (matrix
// rows). Variables where either side has zero variance are excluded from
// the mean and reported as NaN per-variable.
inline std::pair<double, std::vector<double>> metric_corr(const Matrix& pred, const Matrix& truth) {
    detail::check_metric_shapes(pred, truth);
    const std::size_t S = truth.rows, n = truth.cols;
    std::vector<double> per(n, std::nan(""));
    double acc = 0.0;
    std::size_t used = 0;
    for (std::size_t j = 0; j < n; ++j) {
        double mp = 0.0, mt = 0.0;
        for (std::size_t s = 0; s < S; ++s) {
            mp += pred(s, j);
            mt += truth(s, j);
        }
        mp /= static_cast<double>(S);
        mt /= static_cast<double>(S);
        double cov = 0.0, vp = 0.0, vt = 0.0;
        for (std::size_t s = 0; s < S; ++s) {
            const double dp = pred(s, j) - mp;
            const double dt = truth(s, j) - mt;
            cov += dp * dt;
            vp += dp * dp;
            vt += dt * dt;
        }
        if (vp <= 0.0 || vt <= 0.0) continue;
        per[j] = cov / std::sqrt(vp * vt);
        acc += per[j];
        ++used;
    }
    if (used == 0) throw MetricError("corr undefined: all variables have zero variance");
    return {acc / static_cast<double>(used), per};
}

inline ForecastReport make_report(const Matrix& pred, const Matrix& truth, std::size_t horizon) {
    ForecastReport rep;
    rep.horizon = horizon;
    rep.n_samples = pred.rows;
    rep.rse = metric_rse(pred, truth);
    rep.rae = metric_rae(pred, truth);
    auto [corr, per] = metric_corr(pred, truth);
    rep.corr = corr;
    rep.per_variable_corr = std::move(per);
    return rep;
}

// Naive yardstick: predict x_{t+h} = x_t (the window's last value).
inline ForecastReport persistence_baseline(const SeriesMatrix& m, IndexRange range, const DatasetConfig& cfg) {
    const auto samples = make_samples(m, range, cfg);
    if (samples.empty()) throw DimensionError("persistence_baseline: range yields no samples");
    const std::size_t S = samples.size(), n = m.n();
    Matrix pred(S, n), truth(S, n);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t j = 0; j < n; ++j) {
            pred(s, j) = samples[s].input(j, cfg.window_T - 1);
            truth(s, j) = samples[s].target[j];
        }
    return make_report(pred, truth, cfg.horizon_h);
}

}  // namespace hetgnn
