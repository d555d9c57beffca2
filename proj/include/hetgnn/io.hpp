// Text artifacts shared between subcommands: the prepare manifest,
// delimited matrix files, the training log and evaluation reports.
#pragma once

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "hetgnn/common.hpp"
#include "hetgnn/dataset.hpp"
#include "hetgnn/metrics.hpp"
#include "hetgnn/relation.hpp"
#include "hetgnn/training.hpp"

namespace hetgnn {

// Full round-trip double formatting.
inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline double parse_double_or_throw(const std::string& s, const std::string& what) {
    double x;
    if (!detail::parse_double_strict(s, x)) throw ParseError("cannot parse " + what + ": '" + s + "'");
    return x;
}

// Dataset manifest written by `prepare`. The config hash covers the
// semantic fields (shape, split boundaries, normalization, scales) but not
// the data path, so a relocated workdir still matches its checkpoints.
struct Manifest {
    std::string data_path;
    char delimiter = ',';
    bool skip_header = false;
    Normalization normalization = Normalization::max_abs;
    std::size_t window_T = 32;
    std::size_t n = 0;
    std::size_t L = 0;
    SplitRanges splits;
    std::vector<double> scales;

    std::string semantic_text() const {
        std::ostringstream os;
        os << "delimiter " << delimiter << '\n';
        os << "skip_header " << (skip_header ? 1 : 0) << '\n';
        os << "normalization " << to_string(normalization) << '\n';
        os << "window_T " << window_T << '\n';
        os << "n " << n << '\n';
        os << "L " << L << '\n';
        os << "train_end " << splits.train.end << '\n';
        os << "valid_end " << splits.valid.end << '\n';
        for (std::size_t i = 0; i < scales.size(); ++i)
            os << "scale " << i << ' ' << format_double(scales[i]) << '\n';
        return os.str();
    }

    std::uint64_t config_hash() const { return fnv1a64(semantic_text()); }

    void save(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw IoError("cannot write manifest: " + path);
        out << "# dataset manifest\n";
        out << "version 1\n";
        out << "data " << data_path << '\n';
        out << semantic_text();
        if (!out) throw IoError("failed writing manifest: " + path);
    }

    static Manifest load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open manifest: " + path);
        Manifest m;
        std::string line;
        bool have_version = false;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            std::istringstream is(line);
            std::string key;
            is >> key;
            if (key == "version") {
                std::size_t v;
                is >> v;
                if (v != 1) throw FormatError("unsupported manifest version in " + path);
                have_version = true;
            } else if (key == "data") {
                std::string rest;
                std::getline(is, rest);
                m.data_path = detail::trim(rest);
            } else if (key == "delimiter") {
                std::string d;
                is >> d;
                if (d.size() != 1) throw FormatError("manifest delimiter must be one character");
                m.delimiter = d[0];
            } else if (key == "skip_header") {
                int v;
                is >> v;
                m.skip_header = v != 0;
            } else if (key == "normalization") {
                std::string s;
                is >> s;
                m.normalization = normalization_from_string(s);
            } else if (key == "window_T") {
                is >> m.window_T;
            } else if (key == "n") {
                is >> m.n;
            } else if (key == "L") {
                is >> m.L;
            } else if (key == "train_end") {
                is >> m.splits.train.end;
            } else if (key == "valid_end") {
                is >> m.splits.valid.end;
            } else if (key == "scale") {
                std::size_t idx;
                std::string val;
                is >> idx >> val;
                if (m.scales.size() <= idx) m.scales.resize(idx + 1, 1.0);
                m.scales[idx] = parse_double_or_throw(val, "manifest scale");
            } else {
                throw FormatError("unknown manifest key '" + key + "' in " + path);
            }
        }
        if (!have_version || m.n == 0 || m.L == 0) throw FormatError("incomplete manifest: " + path);
        m.splits.train.begin = 0;
        m.splits.valid.begin = m.splits.train.end;
        m.splits.test.begin = m.splits.valid.end;
        m.splits.test.end = m.L;
        if (m.scales.size() != m.n) throw FormatError("manifest scale count != n in " + path);
        return m;
    }

    IndexRange range_for(const std::string& split) const {
        if (split == "train") return splits.train;
        if (split == "valid") return splits.valid;
        if (split == "test") return splits.test;
        throw ConfigError("unknown split: " + split + " (expected train, valid or test)");
    }
};

inline void write_matrix(const std::string& path, const Matrix& m, char delimiter = ',') {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write matrix file: " + path);
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t j = 0; j < m.cols; ++j) {
            if (j) out << delimiter;
            out << format_double(m(i, j));
        }
        out << '\n';
    }
    if (!out) throw IoError("failed writing matrix file: " + path);
}

inline Matrix read_matrix(const std::string& path, char delimiter = ',') {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open matrix file: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::vector<std::string> fields;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (detail::trim(line).empty()) continue;
        detail::split_fields(line, delimiter, fields);
        std::vector<double> row(fields.size());
        for (std::size_t j = 0; j < fields.size(); ++j)
            row[j] = parse_double_or_throw(detail::trim(fields[j]), "matrix entry in " + path);
        if (!rows.empty() && row.size() != rows[0].size())
            throw FormatError("ragged matrix file: " + path);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw FormatError("empty matrix file: " + path);
    Matrix m(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) m(i, j) = rows[i][j];
    return m;
}

struct MatrixSummary {
    std::string tag;
    double density = 0.0;  // fraction of nonzero entries
    double min_nonzero = 0.0;
    double max = 0.0;
};

inline MatrixSummary summarize_matrix(const std::string& tag, const Matrix& m) {
    MatrixSummary s;
    s.tag = tag;
    std::size_t nz = 0;
    double mn = 0.0, mx = 0.0;
    bool first_nz = true;
    for (double x : m.v) {
        if (x != 0.0) {
            ++nz;
            if (first_nz || x < mn) mn = x;
            first_nz = false;
        }
        mx = std::max(mx, x);
    }
    s.density = m.v.empty() ? 0.0 : static_cast<double>(nz) / static_cast<double>(m.v.size());
    s.min_nonzero = nz ? mn : 0.0;
    s.max = mx;
    return s;
}

// Line-oriented training log: one header comment, then one line per epoch.
inline void write_training_log(const std::string& path, const std::vector<EpochLog>& log) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write training log: " + path);
    out << "# epoch train_loss val_rse val_rae val_corr wall_ms\n";
    for (const EpochLog& e : log)
        out << e.epoch << ' ' << format_double(e.train_loss) << ' ' << format_double(e.val_rse) << ' '
            << format_double(e.val_rae) << ' ' << format_double(e.val_corr) << ' ' << e.wall_ms << '\n';
    if (!out) throw IoError("failed writing training log: " + path);
}

inline std::string report_text(const ForecastReport& rep, const std::string& dataset, const std::string& split,
                               const std::vector<std::string>& variable_ids) {
    std::ostringstream os;
    os << "dataset " << dataset << '\n';
    os << "split " << split << '\n';
    os << "horizon " << rep.horizon << '\n';
    os << "n_samples " << rep.n_samples << '\n';
    os << "rse " << format_double(rep.rse) << '\n';
    os << "rae " << format_double(rep.rae) << '\n';
    os << "corr " << format_double(rep.corr) << '\n';
    for (std::size_t j = 0; j < rep.per_variable_corr.size(); ++j) {
        const std::string id = j < variable_ids.size() ? variable_ids[j] : "v" + std::to_string(j);
        os << "corr_" << id << ' ';
        if (std::isnan(rep.per_variable_corr[j]))
            os << "excluded";
        else
            os << format_double(rep.per_variable_corr[j]);
        os << '\n';
    }
    return os.str();
}

// One appendable results-table row: dataset,horizon,rse,rae,corr
inline std::string report_csv_row(const ForecastReport& rep, const std::string& dataset) {
    std::ostringstream os;
    os << dataset << ',' << rep.horizon << ',' << format_double(rep.rse) << ',' << format_double(rep.rae) << ','
       << format_double(rep.corr);
    return os.str();
}

}  // namespace hetgnn
