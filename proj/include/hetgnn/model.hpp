// Heterogeneous graph embedding model: per-window dynamic adjacency,
// attention-fused multi-relation propagation and a shared linear readout
// mapping node embeddings to one forecast per variable.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hetgnn/autodiff.hpp"
#include "hetgnn/optim.hpp"
#include "hetgnn/relation.hpp"
#include "hetgnn/temporal.hpp"

namespace hetgnn {

enum class Relation { sim, cas, dyn };

inline const char* to_string(Relation r) {
    switch (r) {
        case Relation::sim: return "sim";
        case Relation::cas: return "cas";
        default: return "dyn";
    }
}

inline Relation relation_from_string(const std::string& s) {
    if (s == "sim") return Relation::sim;
    if (s == "cas") return Relation::cas;
    if (s == "dyn") return Relation::dyn;
    throw ConfigError("unknown relation: " + s + " (expected sim, cas or dyn)");
}

struct ModelConfig {
    std::size_t gnn_layers = 2;
    std::size_t hidden_size = 50;
    std::vector<Relation> relations = {Relation::sim, Relation::cas, Relation::dyn};
    bool attention_enabled = true;

    void validate() const {
        if (gnn_layers < 1) throw ConfigError("gnn_layers must be >= 1");
        if (hidden_size < 1) throw ConfigError("hidden_size must be >= 1");
        if (relations.empty()) throw ConfigError("at least one relation must be enabled");
        for (std::size_t i = 0; i < relations.size(); ++i)
            for (std::size_t j = i + 1; j < relations.size(); ++j)
                if (relations[i] == relations[j]) throw ConfigError("duplicate relation enabled");
    }

    bool has(Relation r) const {
        for (Relation x : relations)
            if (x == r) return true;
        return false;
    }
};

// One propagation layer:
//   H' = act( H W0 + sum_r softmax(alpha)_r * A_r H Wr )
// with act = relu on hidden layers and identity on the final layer. When
// alpha is absent each relation term enters with fixed weight 1/|R|.
inline Tensor propagate(Tape* tape, const Tensor& H, const std::vector<Tensor>& adjacencies, const Tensor& W0,
                        const std::vector<Tensor>& Wr, const Tensor* alpha, bool final_layer,
                        std::size_t layer_index = 0) {
    if (adjacencies.size() != Wr.size())
        throw DimensionError("propagate: layer " + std::to_string(layer_index) + " has " +
                             std::to_string(adjacencies.size()) + " relations but " + std::to_string(Wr.size()) +
                             " weight matrices");
    if (H.ndim() != 2 || W0.ndim() != 2 || H.cols() != W0.rows())
        throw DimensionError("propagate: layer " + std::to_string(layer_index) + " self term shapes " +
                             H.shape_str() + " x " + W0.shape_str());
    if (alpha && alpha->size() != adjacencies.size())
        throw DimensionError("propagate: attention logits length " + std::to_string(alpha->size()) +
                             " != relation count " + std::to_string(adjacencies.size()));

    Tensor acc = matmul(tape, H, W0);
    std::optional<Tensor> weights;
    if (alpha) weights = softmax(tape, *alpha, 0);
    const double fixed_w = adjacencies.size() ? 1.0 / static_cast<double>(adjacencies.size()) : 0.0;
    for (std::size_t r = 0; r < adjacencies.size(); ++r) {
        if (adjacencies[r].cols() != H.rows() || Wr[r].rows() != H.cols())
            throw DimensionError("propagate: layer " + std::to_string(layer_index) + ", relation " +
                                 std::to_string(r) + ": shapes " + adjacencies[r].shape_str() + ", " +
                                 H.shape_str() + ", " + Wr[r].shape_str());
        Tensor term = matmul(tape, adjacencies[r], matmul(tape, H, Wr[r]));
        if (weights)
            term = mul(tape, term, slice(tape, *weights, 0, r, 1));
        else if (adjacencies.size() > 1)
            term = scale(tape, term, fixed_w);
        acc = add(tape, acc, term);
    }
    return final_layer ? acc : relu(tape, acc);
}

struct Model {
    std::size_t n = 0;
    std::size_t window_T = 32;
    TemporalConfig temporal;
    ModelConfig cfg;
    RelationConfig rel_cfg;  // threshold + norm applied to the dynamic adjacency

    static std::string w0_name(std::size_t layer) { return "gnn.layer" + std::to_string(layer) + ".W0"; }
    static std::string wr_name(std::size_t layer, Relation r) {
        return "gnn.layer" + std::to_string(layer) + ".W." + to_string(r);
    }
    static std::string wr_avg_name(std::size_t layer) { return "gnn.layer" + std::to_string(layer) + ".W.avg"; }

    std::size_t input_dim() const { return temporal_output_dim(temporal, window_T); }

    void validate() const {
        cfg.validate();
        rel_cfg.validate();
        temporal.validate(window_T);
        if (n < 2) throw ConfigError("model needs n >= 2 variables");
    }

    void init_params(ParameterStore& params, Rng& rng) const {
        validate();
        init_temporal_params(params, temporal, rng);
        if (cfg.has(Relation::dyn)) {
            Tensor& wdyn = params.create("dyn.W", {n, n});
            glorot_init(wdyn, n, n, rng);
        }
        const std::size_t d0 = input_dim();
        for (std::size_t l = 0; l < cfg.gnn_layers; ++l) {
            const std::size_t din = l == 0 ? d0 : cfg.hidden_size;
            const std::size_t dout = cfg.hidden_size;
            Tensor& w0 = params.create(w0_name(l), {din, dout});
            glorot_init(w0, din, dout, rng);
            if (cfg.attention_enabled) {
                for (Relation r : cfg.relations) {
                    Tensor& wr = params.create(wr_name(l, r), {din, dout});
                    glorot_init(wr, din, dout, rng);
                }
            } else {
                Tensor& wr = params.create(wr_avg_name(l), {din, dout});
                glorot_init(wr, din, dout, rng);
            }
        }
        if (cfg.attention_enabled) params.create("gnn.alpha", {cfg.relations.size()});  // zero logits
        Tensor& ro = params.create("readout.weight", {cfg.hidden_size, 1});
        glorot_init(ro, cfg.hidden_size, 1, rng);
        params.create("readout.bias", {1});
    }

    // A_dy = row_normalize(mask(relu(D W_dyn))). The threshold acts as a
    // multiply-by-mask built from forward values, so gradients flow through
    // the surviving entries into W_dyn.
    Tensor dynamic_adjacency(Tape* tape, const Tensor& dist_base, ParameterStore& params) const {
        Tensor a = relu(tape, matmul(tape, dist_base, params.get("dyn.W")));
        if (rel_cfg.threshold > 0.0) {
            Tensor mask(a.shape());
            const double* av = a.data();
            double* mv = mask.data();
            for (std::size_t i = 0; i < a.size(); ++i) mv[i] = av[i] >= rel_cfg.threshold ? 1.0 : 0.0;
            a = mul(tape, a, mask);
        }
        if (rel_cfg.adjacency_norm == AdjacencyNorm::row) a = row_normalize_op(tape, a);
        return a;
    }

    // window: n x T tensor (normalized space); static_stack supplies the
    // sim/cas matrices. Returns the n x 1 forecast.
    Tensor forward(Tape* tape, const Tensor& window, const RelationStack& static_stack,
                   ParameterStore& params) const {
        if (window.ndim() != 2 || window.rows() != n || window.cols() != window_T)
            throw DimensionError("forward: window shape " + window.shape_str() + " does not match n=" +
                                 std::to_string(n) + ", T=" + std::to_string(window_T));

        Tensor h = temporal_embed(tape, window, temporal, params);

        std::vector<Tensor> adjs;
        adjs.reserve(cfg.relations.size());
        for (Relation r : cfg.relations) {
            if (r == Relation::dyn) {
                Matrix base = distance_base(window.to_matrix());
                adjs.push_back(dynamic_adjacency(tape, Tensor::from_matrix(base), params));
            } else {
                adjs.push_back(Tensor::from_matrix(static_stack.by_tag(to_string(r))));
            }
        }

        if (!cfg.attention_enabled && adjs.size() >= 1) {
            // relations averaged to a single matrix, one weight matrix per layer
            Tensor avg = adjs[0];
            for (std::size_t r = 1; r < adjs.size(); ++r) avg = add(tape, avg, adjs[r]);
            avg = scale(tape, avg, 1.0 / static_cast<double>(adjs.size()));
            adjs.assign(1, avg);
        }

        const Tensor* alpha = cfg.attention_enabled ? &params.get("gnn.alpha") : nullptr;
        for (std::size_t l = 0; l < cfg.gnn_layers; ++l) {
            std::vector<Tensor> wr;
            if (cfg.attention_enabled) {
                for (Relation r : cfg.relations) wr.push_back(params.get(wr_name(l, r)));
            } else {
                wr.push_back(params.get(wr_avg_name(l)));
            }
            h = propagate(tape, h, adjs, params.get(w0_name(l)), wr, alpha, l + 1 == cfg.gnn_layers, l);
        }

        Tensor out = matmul(tape, h, params.get("readout.weight"));
        return add(tape, out, params.get("readout.bias"));
    }
};

}  // namespace hetgnn
