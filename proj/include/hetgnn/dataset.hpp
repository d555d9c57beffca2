// Benchmark-format series loading, normalization, chronological splitting
// and supervised window/target sample generation.
//
// Input files: plain text, one timestamp per row, variables as delimited
// columns (default comma), optional single header row.
#pragma once

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hetgnn/common.hpp"

namespace hetgnn {

struct SeriesMatrix {
    Matrix values;                          // n x L, values(i, t)
    std::vector<std::string> variable_ids;  // "v0..v{n-1}" when the file has none

    std::size_t n() const { return values.rows; }
    std::size_t L() const { return values.cols; }
};

enum class Normalization { max_abs, none };

inline const char* to_string(Normalization m) { return m == Normalization::max_abs ? "max_abs" : "none"; }

inline Normalization normalization_from_string(const std::string& s) {
    if (s == "max_abs") return Normalization::max_abs;
    if (s == "none") return Normalization::none;
    throw ConfigError("unknown normalization mode: " + s);
}

struct DatasetConfig {
    std::size_t window_T = 32;
    std::size_t horizon_h = 3;
    double split_ratios[3] = {0.6, 0.2, 0.2};
    Normalization normalization = Normalization::max_abs;

    void validate() const {
        if (window_T == 0) throw ConfigError("window_T must be >= 1");
        if (horizon_h == 0) throw ConfigError("horizon_h must be >= 1");
        double s = split_ratios[0] + split_ratios[1] + split_ratios[2];
        if (split_ratios[0] <= 0 || split_ratios[1] <= 0 || split_ratios[2] <= 0 || std::fabs(s - 1.0) > 1e-9)
            throw ConfigError("split ratios must be positive and sum to 1");
    }
};

// One training instance: the n x T input window and the n-vector target
// h steps past the window end.
struct WindowSample {
    Matrix input;               // n x T
    std::vector<double> target; // length n
    std::size_t origin_index;   // timestamp of the window's last column
};

namespace detail {

inline bool parse_double_strict(const std::string& field, double& out) {
    if (field.empty()) return false;
    const char* begin = field.c_str();
    char* end = nullptr;
    out = std::strtod(begin, &end);
    if (end != begin + field.size()) return false;
    if (!std::isfinite(out)) return false;
    return true;
}

inline void split_fields(const std::string& line, char delim, std::vector<std::string>& out) {
    out.clear();
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == delim) {
            out.emplace_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
}

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace detail

// Rows become timestamps, columns become variables. Row/column positions in
// error messages are 1-based file coordinates.
inline SeriesMatrix load_series(const std::string& path, char delimiter = ',', bool skip_header = false) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open data file: " + path);

    std::vector<std::vector<double>> rows;  // per timestamp
    std::string line;
    std::vector<std::string> fields;
    std::size_t line_no = 0;
    std::size_t ncols = 0;
    bool skipped = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (detail::trim(line).empty()) continue;
        if (skip_header && !skipped) {
            skipped = true;
            continue;
        }
        detail::split_fields(line, delimiter, fields);
        if (ncols == 0) {
            ncols = fields.size();
        } else if (fields.size() != ncols) {
            throw FormatError("ragged row at line " + std::to_string(line_no) + ": expected " +
                              std::to_string(ncols) + " columns, got " + std::to_string(fields.size()));
        }
        std::vector<double> row(ncols);
        for (std::size_t j = 0; j < ncols; ++j) {
            double x;
            if (!detail::parse_double_strict(detail::trim(fields[j]), x))
                throw ParseError("cannot parse value at row " + std::to_string(line_no) + ", column " +
                                 std::to_string(j + 1) + ": '" + fields[j] + "'");
            row[j] = x;
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw FormatError("no data rows in " + path);
    if (ncols < 2) throw DimensionError("need at least 2 variables, file has " + std::to_string(ncols));

    SeriesMatrix m;
    m.values = Matrix(ncols, rows.size());
    for (std::size_t t = 0; t < rows.size(); ++t)
        for (std::size_t i = 0; i < ncols; ++i) m.values(i, t) = rows[t][i];
    m.variable_ids.resize(ncols);
    for (std::size_t i = 0; i < ncols; ++i) m.variable_ids[i] = "v" + std::to_string(i);
    return m;
}

// Per-variable max-abs scaling with the scale fitted on fit_range only.
// Variables whose fit-range max is zero keep scale 1.
inline std::pair<SeriesMatrix, std::vector<double>> normalize(const SeriesMatrix& m, Normalization mode,
                                                              IndexRange fit_range) {
    if (fit_range.len() == 0 || fit_range.end > m.L())
        throw DimensionError("normalize: fit range [" + std::to_string(fit_range.begin) + ", " +
                             std::to_string(fit_range.end) + ") invalid for L=" + std::to_string(m.L()));
    std::vector<double> scales(m.n(), 1.0);
    SeriesMatrix out = m;
    if (mode == Normalization::none) return {out, scales};
    for (std::size_t i = 0; i < m.n(); ++i) {
        double mx = 0.0;
        for (std::size_t t = fit_range.begin; t < fit_range.end; ++t)
            mx = std::max(mx, std::fabs(m.values(i, t)));
        scales[i] = mx > 0.0 ? mx : 1.0;
        for (std::size_t t = 0; t < m.L(); ++t) out.values(i, t) = m.values(i, t) / scales[i];
    }
    return {out, scales};
}

inline SeriesMatrix apply_scales(const SeriesMatrix& m, const std::vector<double>& scales) {
    if (scales.size() != m.n()) throw DimensionError("apply_scales: scale vector length mismatch");
    SeriesMatrix out = m;
    for (std::size_t i = 0; i < m.n(); ++i)
        for (std::size_t t = 0; t < m.L(); ++t) out.values(i, t) = m.values(i, t) / scales[i];
    return out;
}

inline SeriesMatrix denormalize(const SeriesMatrix& m, const std::vector<double>& scales) {
    if (scales.size() != m.n()) throw DimensionError("denormalize: scale vector length mismatch");
    SeriesMatrix out = m;
    for (std::size_t i = 0; i < m.n(); ++i)
        for (std::size_t t = 0; t < m.L(); ++t) out.values(i, t) = m.values(i, t) * scales[i];
    return out;
}

struct SplitRanges {
    IndexRange train, valid, test;
};

// Contiguous chronological split with boundaries at floor(r0*L) and
// floor((r0+r1)*L). Every range must admit at least one sample.
inline SplitRanges chronological_split(const SeriesMatrix& m, const DatasetConfig& cfg) {
    cfg.validate();
    const std::size_t L = m.L();
    const std::size_t b1 = static_cast<std::size_t>(std::floor(cfg.split_ratios[0] * static_cast<double>(L)));
    const std::size_t b2 = static_cast<std::size_t>(
        std::floor((cfg.split_ratios[0] + cfg.split_ratios[1]) * static_cast<double>(L)));
    SplitRanges r{{0, b1}, {b1, b2}, {b2, L}};
    const std::size_t need = cfg.window_T + cfg.horizon_h;
    if (r.train.len() < need || r.valid.len() < need || r.test.len() < need) {
        // smallest L for which all three ranges admit a sample
        std::size_t Lmin = L;
        for (;;) {
            ++Lmin;
            std::size_t c1 = static_cast<std::size_t>(std::floor(cfg.split_ratios[0] * static_cast<double>(Lmin)));
            std::size_t c2 = static_cast<std::size_t>(
                std::floor((cfg.split_ratios[0] + cfg.split_ratios[1]) * static_cast<double>(Lmin)));
            if (c1 >= need && (c2 - c1) >= need && (Lmin - c2) >= need) break;
        }
        throw DimensionError("series too short for split: L=" + std::to_string(L) + ", need at least L=" +
                             std::to_string(Lmin) + " for window_T=" + std::to_string(cfg.window_T) +
                             ", horizon_h=" + std::to_string(cfg.horizon_h));
    }
    return r;
}

// One sample per position where both the T-window and the t+h target fall
// inside the range: count = len - T - h + 1 when positive.
inline std::vector<WindowSample> make_samples(const SeriesMatrix& m, IndexRange range, const DatasetConfig& cfg) {
    if (range.end > m.L())
        throw DimensionError("make_samples: range end " + std::to_string(range.end) + " exceeds L=" +
                             std::to_string(m.L()));
    std::vector<WindowSample> out;
    const std::size_t T = cfg.window_T, h = cfg.horizon_h;
    if (range.len() < T + h) return out;
    out.reserve(range.len() - T - h + 1);
    for (std::size_t end = range.begin + T - 1; end + h < range.end; ++end) {
        WindowSample s;
        s.origin_index = end;
        s.input = Matrix(m.n(), T);
        for (std::size_t i = 0; i < m.n(); ++i)
            for (std::size_t t = 0; t < T; ++t) s.input(i, t) = m.values(i, end - T + 1 + t);
        s.target.resize(m.n());
        for (std::size_t i = 0; i < m.n(); ++i) s.target[i] = m.values(i, end + h);
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace hetgnn
