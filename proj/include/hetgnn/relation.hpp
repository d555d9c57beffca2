// Relation extraction: pairwise similarity (absolute Pearson correlation),
// directed causality from plug-in transfer entropy over histogram symbols,
// and the per-window distance base for the dynamic adjacency. Sparsify and
// row-normalize turn the raw scores into propagation-ready matrices.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "hetgnn/common.hpp"
#include "hetgnn/dataset.hpp"

namespace hetgnn {

enum class AdjacencyNorm { row, none };

inline const char* to_string(AdjacencyNorm m) { return m == AdjacencyNorm::row ? "row" : "none"; }

inline AdjacencyNorm adjacency_norm_from_string(const std::string& s) {
    if (s == "row") return AdjacencyNorm::row;
    if (s == "none") return AdjacencyNorm::none;
    throw ConfigError("unknown adjacency norm: " + s);
}

struct RelationConfig {
    std::size_t te_history_k = 1;
    std::size_t te_bins = 8;
    double threshold = 0.1;
    AdjacencyNorm adjacency_norm = AdjacencyNorm::row;

    void validate() const {
        if (te_bins < 2) throw ConfigError("te_bins must be >= 2");
        if (te_history_k < 1) throw ConfigError("te_history_k must be >= 1");
        if (threshold < 0.0 || threshold >= 1.0) throw ConfigError("threshold must lie in [0, 1)");
    }
};

// Ordered adjacency matrices with provenance tags, in the fixed order
// sim, cas, dyn-base.
struct RelationStack {
    std::vector<Matrix> matrices;
    std::vector<std::string> tags;
    std::size_t n = 0;

    const Matrix& by_tag(const std::string& tag) const {
        for (std::size_t i = 0; i < tags.size(); ++i)
            if (tags[i] == tag) return matrices[i];
        throw ContractError("relation stack has no matrix tagged '" + tag + "'");
    }
};

// |Pearson r| over the given range; zero-variance pairs score 0 and the
// diagonal is 0 (the self term is carried by the propagation's W0 path).
inline Matrix similarity_adjacency(const SeriesMatrix& m, IndexRange range) {
    if (range.len() < 2 || range.end > m.L())
        throw DimensionError("similarity_adjacency: range must hold >= 2 points");
    const std::size_t n = m.n();
    const double len = static_cast<double>(range.len());
    std::vector<double> mean(n, 0.0), var(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t t = range.begin; t < range.end; ++t) s += m.values(i, t);
        mean[i] = s / len;
        double v = 0.0;
        for (std::size_t t = range.begin; t < range.end; ++t) {
            const double d = m.values(i, t) - mean[i];
            v += d * d;
        }
        var[i] = v;
    }
    Matrix a(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (var[i] <= 0.0 || var[j] <= 0.0) continue;
            double cov = 0.0;
            for (std::size_t t = range.begin; t < range.end; ++t)
                cov += (m.values(i, t) - mean[i]) * (m.values(j, t) - mean[j]);
            double r = std::fabs(cov / std::sqrt(var[i] * var[j]));
            r = std::min(r, 1.0);
            a(i, j) = r;
            a(j, i) = r;
        }
    }
    return a;
}

namespace detail {

// Equal-width binning fitted on the series itself; a constant series maps
// to symbol 0 everywhere.
inline std::vector<int> discretize(const double* x, std::size_t len, std::size_t bins) {
    double lo = x[0], hi = x[0];
    for (std::size_t t = 1; t < len; ++t) {
        lo = std::min(lo, x[t]);
        hi = std::max(hi, x[t]);
    }
    std::vector<int> sym(len, 0);
    if (hi <= lo) return sym;
    const double width = (hi - lo) / static_cast<double>(bins);
    for (std::size_t t = 0; t < len; ++t) {
        int b = static_cast<int>(std::floor((x[t] - lo) / width));
        if (b < 0) b = 0;
        if (b >= static_cast<int>(bins)) b = static_cast<int>(bins) - 1;
        sym[t] = b;
    }
    return sym;
}

// Conditional entropy H(next | ctx) in bits from joint counts keyed by
// (next, ctx) and marginal counts keyed by ctx. 0 log 0 terms vanish.
inline double conditional_entropy(const std::unordered_map<std::uint64_t, std::uint32_t>& joint,
                                  const std::unordered_map<std::uint64_t, std::uint32_t>& ctx,
                                  std::uint64_t ctx_radix, double total) {
    double h = 0.0;
    for (const auto& [key, cnt] : joint) {
        const std::uint64_t ctx_key = key / ctx_radix;
        const double p_joint = static_cast<double>(cnt) / total;
        const double p_cond = static_cast<double>(cnt) / static_cast<double>(ctx.at(ctx_key));
        h -= p_joint * std::log2(p_cond);
    }
    return h;
}

}  // namespace detail

// Plug-in transfer entropy source -> target in bits:
//   H(target_{t+1} | target_t^{(k)}) - H(target_{t+1} | target_t^{(k)}, source_t^{(k)})
// with probabilities from joint symbol counts over te_bins equal-width bins
// fitted per series. Tiny negative float residue clamps to 0.
inline double transfer_entropy(const std::vector<double>& source, const std::vector<double>& target,
                               const RelationConfig& cfg) {
    cfg.validate();
    if (source.size() != target.size())
        throw DimensionError("transfer_entropy: series lengths differ");
    const std::size_t len = target.size();
    const std::size_t k = cfg.te_history_k;
    if (len < k + 2)
        throw DimensionError("transfer_entropy: need length >= " + std::to_string(k + 2) + ", got " +
                             std::to_string(len));
    if (static_cast<double>(2 * k + 1) * std::log2(static_cast<double>(cfg.te_bins)) > 63.0)
        throw ConfigError("transfer_entropy: te_bins^(2k+1) exceeds the 64-bit key space");

    const std::vector<int> s = detail::discretize(source.data(), len, cfg.te_bins);
    const std::vector<int> q = detail::discretize(target.data(), len, cfg.te_bins);

    const std::uint64_t B = cfg.te_bins;
    // keys are little-endian base-B digits: next is the lowest digit, then
    // target history, then source history
    std::unordered_map<std::uint64_t, std::uint32_t> n_y_yk, n_yk, n_y_yk_xk, n_yk_xk;
    std::size_t steps = 0;
    for (std::size_t t = k - 1; t + 1 < len; ++t) {
        std::uint64_t ypast = 0, xpast = 0;
        std::uint64_t radix = 1;
        for (std::size_t j = 0; j < k; ++j) {
            ypast += static_cast<std::uint64_t>(q[t - j]) * radix;
            xpast += static_cast<std::uint64_t>(s[t - j]) * radix;
            radix *= B;
        }
        const std::uint64_t ynext = static_cast<std::uint64_t>(q[t + 1]);
        const std::uint64_t yk = ypast;
        const std::uint64_t yk_xk = ypast + xpast * radix;
        ++n_y_yk[ynext + yk * B];
        ++n_yk[yk];
        ++n_y_yk_xk[ynext + yk_xk * B];
        ++n_yk_xk[yk_xk];
        ++steps;
    }
    const double total = static_cast<double>(steps);
    const double h_self = detail::conditional_entropy(n_y_yk, n_yk, B, total);
    const double h_joint = detail::conditional_entropy(n_y_yk_xk, n_yk_xk, B, total);
    double te = h_self - h_joint;
    if (te < 0.0) te = 0.0;
    return te;
}

// Positive part of the antisymmetric net transfer-entropy matrix:
// entry (i, j) = max(T_{i->j} - T_{j->i}, 0), diagonal 0.
inline Matrix causality_adjacency(const SeriesMatrix& m, IndexRange range, const RelationConfig& cfg) {
    if (range.end > m.L()) throw DimensionError("causality_adjacency: range exceeds series length");
    const std::size_t n = m.n();
    std::vector<std::vector<double>> series(n);
    for (std::size_t i = 0; i < n; ++i)
        series[i].assign(m.values.row(i) + range.begin, m.values.row(i) + range.end);
    Matrix a(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double tij = transfer_entropy(series[i], series[j], cfg);
            const double tji = transfer_entropy(series[j], series[i], cfg);
            const double net = tij - tji;
            if (net > 0.0)
                a(i, j) = net;
            else
                a(j, i) = -net;
        }
    }
    return a;
}

// Row-wise softmax of negative Euclidean distances between window rows.
// Rows sum to 1 and the diagonal (distance 0) is each row's largest entry.
inline Matrix distance_base(const Matrix& window) {
    if (!all_finite(window)) throw DimensionError("distance_base: window has non-finite entries");
    const std::size_t n = window.rows, T = window.cols;
    Matrix d(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double sq = 0.0;
            for (std::size_t t = 0; t < T; ++t) {
                const double diff = window(i, t) - window(j, t);
                sq += diff * diff;
            }
            const double dist = std::sqrt(sq);
            d(i, j) = dist;
            d(j, i) = dist;
        }
    Matrix out(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double denom = 0.0;
        for (std::size_t j = 0; j < n; ++j) denom += std::exp(-d(i, j));
        for (std::size_t j = 0; j < n; ++j) out(i, j) = std::exp(-d(i, j)) / denom;
    }
    return out;
}

// Entries below threshold drop to zero; idempotent.
inline Matrix sparsify(const Matrix& a, double threshold) {
    Matrix out = a;
    for (double& x : out.v)
        if (x < threshold) x = 0.0;
    return out;
}

// Each nonzero row divided by its sum; zero rows stay zero.
inline Matrix row_normalize(const Matrix& a) {
    Matrix out = a;
    for (std::size_t i = 0; i < a.rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols; ++j) s += a(i, j);
        if (s != 0.0)
            for (std::size_t j = 0; j < a.cols; ++j) out(i, j) = a(i, j) / s;
    }
    return out;
}

inline Matrix postprocess_adjacency(const Matrix& a, const RelationConfig& cfg) {
    Matrix out = sparsify(a, cfg.threshold);
    if (cfg.adjacency_norm == AdjacencyNorm::row) out = row_normalize(out);
    return out;
}

// Builds the offline stack from the training range: processed similarity
// and causality adjacencies plus the distance base of the final training
// window (a snapshot of the dynamic relation; forward recomputes it per
// window).
inline RelationStack build_relation_stack(const SeriesMatrix& m, IndexRange train_range, std::size_t window_T,
                                          const RelationConfig& cfg) {
    cfg.validate();
    if (train_range.len() < window_T)
        throw DimensionError("build_relation_stack: training range shorter than one window");
    RelationStack stack;
    stack.n = m.n();
    stack.matrices.push_back(postprocess_adjacency(similarity_adjacency(m, train_range), cfg));
    stack.tags.push_back("sim");
    stack.matrices.push_back(postprocess_adjacency(causality_adjacency(m, train_range, cfg), cfg));
    stack.tags.push_back("cas");
    Matrix last_window(m.n(), window_T);
    for (std::size_t i = 0; i < m.n(); ++i)
        for (std::size_t t = 0; t < window_T; ++t)
            last_window(i, t) = m.values(i, train_range.end - window_T + t);
    stack.matrices.push_back(distance_base(last_window));
    stack.tags.push_back("dyn");
    return stack;
}

}  // namespace hetgnn
