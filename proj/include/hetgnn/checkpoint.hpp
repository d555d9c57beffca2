// Self-contained model checkpoint. Little-endian binary layout (see
// README for the byte-level description):
//
//   magic "HGNNCKPT" | u32 version | u32 reserved | u64 manifest hash
//   u64 config length | config text (key=value lines, sorted keys)
//   u64 n_scales | f64 scales...
//   u64 n_relations | per relation: u64 tag len, tag, u64 n, f64 n*n values
//   u64 n_params | per param: u64 name len, name, u64 ndim, u64 dims..., f64 values
#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "hetgnn/io.hpp"
#include "hetgnn/model.hpp"
#include "hetgnn/optim.hpp"
#include "hetgnn/relation.hpp"

namespace hetgnn {

namespace detail {

constexpr char kCheckpointMagic[8] = {'H', 'G', 'N', 'N', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kCheckpointVersion = 1;

inline void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 4);
}
inline void put_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
}
inline void put_f64(std::ostream& os, double x) {
    std::uint64_t v;
    std::memcpy(&v, &x, 8);
    put_u64(os, v);
}

inline std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw FormatError("checkpoint truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}
inline std::uint64_t get_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) throw FormatError("checkpoint truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}
inline double get_f64(std::istream& is) {
    std::uint64_t v = get_u64(is);
    double x;
    std::memcpy(&x, &v, 8);
    return x;
}

inline void put_string(std::ostream& os, const std::string& s) {
    put_u64(os, s.size());
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}
inline std::string get_string(std::istream& is, std::size_t max_len = 1u << 20) {
    const std::uint64_t len = get_u64(is);
    if (len > max_len) throw FormatError("checkpoint string field too long");
    std::string s(len, '\0');
    is.read(s.data(), static_cast<std::streamsize>(len));
    if (!is) throw FormatError("checkpoint truncated");
    return s;
}

}  // namespace detail

struct Checkpoint {
    std::uint64_t manifest_hash = 0;
    std::map<std::string, std::string> config;  // sorted keys give a canonical byte layout
    std::vector<double> scales;
    RelationStack stack;
    ParameterStore params;

    std::string config_text() const {
        std::string out;
        for (const auto& [k, v] : config) out += k + "=" + v + "\n";
        return out;
    }

    const std::string& cfg(const std::string& key) const {
        auto it = config.find(key);
        if (it == config.end()) throw FormatError("checkpoint config missing key: " + key);
        return it->second;
    }
    std::size_t cfg_size(const std::string& key) const {
        return static_cast<std::size_t>(std::stoull(cfg(key)));
    }
    double cfg_double(const std::string& key) const { return parse_double_or_throw(cfg(key), "checkpoint " + key); }

    void save(const std::string& path) const {
        std::ofstream os(path, std::ios::binary);
        if (!os) throw IoError("cannot write checkpoint: " + path);
        os.write(detail::kCheckpointMagic, 8);
        detail::put_u32(os, detail::kCheckpointVersion);
        detail::put_u32(os, 0);
        detail::put_u64(os, manifest_hash);
        detail::put_string(os, config_text());
        detail::put_u64(os, scales.size());
        for (double s : scales) detail::put_f64(os, s);
        detail::put_u64(os, stack.matrices.size());
        for (std::size_t r = 0; r < stack.matrices.size(); ++r) {
            detail::put_string(os, stack.tags[r]);
            detail::put_u64(os, stack.matrices[r].rows);
            for (double x : stack.matrices[r].v) detail::put_f64(os, x);
        }
        detail::put_u64(os, params.count());
        for (const std::string& name : params.names()) {
            const Tensor& t = params.get(name);
            detail::put_string(os, name);
            detail::put_u64(os, t.ndim());
            for (std::size_t d : t.shape()) detail::put_u64(os, d);
            for (std::size_t i = 0; i < t.size(); ++i) detail::put_f64(os, t.data()[i]);
        }
        if (!os) throw IoError("failed writing checkpoint: " + path);
    }

    static Checkpoint load(const std::string& path) {
        std::ifstream is(path, std::ios::binary);
        if (!is) throw IoError("cannot open checkpoint: " + path);
        char magic[8];
        is.read(magic, 8);
        if (!is || std::memcmp(magic, detail::kCheckpointMagic, 8) != 0)
            throw FormatError("not a checkpoint file (bad magic): " + path);
        const std::uint32_t version = detail::get_u32(is);
        if (version != detail::kCheckpointVersion)
            throw FormatError("unsupported checkpoint version " + std::to_string(version) + " in " + path);
        detail::get_u32(is);  // reserved

        Checkpoint c;
        c.manifest_hash = detail::get_u64(is);
        const std::string cfg_text = detail::get_string(is);
        std::size_t pos = 0;
        while (pos < cfg_text.size()) {
            std::size_t nl = cfg_text.find('\n', pos);
            if (nl == std::string::npos) nl = cfg_text.size();
            const std::string line = cfg_text.substr(pos, nl - pos);
            pos = nl + 1;
            if (line.empty()) continue;
            const std::size_t eq = line.find('=');
            if (eq == std::string::npos) throw FormatError("malformed checkpoint config line: " + line);
            c.config[line.substr(0, eq)] = line.substr(eq + 1);
        }

        const std::uint64_t n_scales = detail::get_u64(is);
        c.scales.resize(n_scales);
        for (std::uint64_t i = 0; i < n_scales; ++i) c.scales[i] = detail::get_f64(is);

        const std::uint64_t n_rel = detail::get_u64(is);
        for (std::uint64_t r = 0; r < n_rel; ++r) {
            std::string tag = detail::get_string(is);
            const std::uint64_t n = detail::get_u64(is);
            Matrix m(n, n);
            for (double& x : m.v) x = detail::get_f64(is);
            c.stack.matrices.push_back(std::move(m));
            c.stack.tags.push_back(std::move(tag));
            c.stack.n = n;
        }

        const std::uint64_t n_params = detail::get_u64(is);
        for (std::uint64_t p = 0; p < n_params; ++p) {
            const std::string name = detail::get_string(is);
            const std::uint64_t ndim = detail::get_u64(is);
            if (ndim > 8) throw FormatError("checkpoint parameter rank too large: " + name);
            std::vector<std::size_t> shape(ndim);
            for (std::uint64_t d = 0; d < ndim; ++d) shape[d] = detail::get_u64(is);
            Tensor& t = c.params.create(name, shape);
            for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] = detail::get_f64(is);
        }
        return c;
    }
};

// Rebuilds the Model description stored in a checkpoint's config block.
inline Model model_from_checkpoint(const Checkpoint& c) {
    Model m;
    m.n = c.cfg_size("n");
    m.window_T = c.cfg_size("window_T");
    m.temporal.channels_per_branch = c.cfg_size("channels");
    m.temporal.kernel_sizes.clear();
    {
        std::string ks = c.cfg("kernel_sizes");
        std::size_t pos = 0;
        while (pos < ks.size()) {
            std::size_t comma = ks.find(',', pos);
            if (comma == std::string::npos) comma = ks.size();
            m.temporal.kernel_sizes.push_back(std::stoull(ks.substr(pos, comma - pos)));
            pos = comma + 1;
        }
    }
    m.cfg.gnn_layers = c.cfg_size("gnn_layers");
    m.cfg.hidden_size = c.cfg_size("hidden_size");
    m.cfg.attention_enabled = c.cfg("attention") == "1";
    m.cfg.relations.clear();
    {
        std::string rs = c.cfg("relations");
        std::size_t pos = 0;
        while (pos < rs.size()) {
            std::size_t comma = rs.find(',', pos);
            if (comma == std::string::npos) comma = rs.size();
            m.cfg.relations.push_back(relation_from_string(rs.substr(pos, comma - pos)));
            pos = comma + 1;
        }
    }
    m.rel_cfg.te_bins = c.cfg_size("te_bins");
    m.rel_cfg.te_history_k = c.cfg_size("te_history_k");
    m.rel_cfg.threshold = c.cfg_double("threshold");
    m.rel_cfg.adjacency_norm = adjacency_norm_from_string(c.cfg("adjacency_norm"));
    m.validate();
    return m;
}

}  // namespace hetgnn
