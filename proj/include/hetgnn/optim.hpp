// Named trainable tensors plus the Adam optimizer state that updates them.
#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "hetgnn/tensor.hpp"

namespace hetgnn {

// Ordered name -> tensor map. Insertion order is the canonical iteration
// order for optimizer updates and checkpoint layout, so runs are
// reproducible.
class ParameterStore {
public:
    Tensor& create(const std::string& name, std::vector<std::size_t> shape) {
        if (params_.count(name)) throw ContractError("parameter already exists: " + name);
        Tensor t(std::move(shape), 0.0, /*requires_grad=*/true);
        order_.push_back(name);
        return params_.emplace(name, std::move(t)).first->second;
    }

    Tensor& get(const std::string& name) {
        auto it = params_.find(name);
        if (it == params_.end()) throw ContractError("unknown parameter: " + name);
        return it->second;
    }
    const Tensor& get(const std::string& name) const {
        auto it = params_.find(name);
        if (it == params_.end()) throw ContractError("unknown parameter: " + name);
        return it->second;
    }

    bool contains(const std::string& name) const { return params_.count(name) != 0; }
    const std::vector<std::string>& names() const { return order_; }
    std::size_t count() const { return order_.size(); }

    std::size_t total_size() const {
        std::size_t s = 0;
        for (const auto& n : order_) s += params_.at(n).size();
        return s;
    }

    void zero_grads() {
        for (const auto& n : order_) params_.at(n).zero_grad();
    }

    // Deep copy of values (fresh grad-free tensors).
    ParameterStore snapshot() const {
        ParameterStore out;
        for (const auto& n : order_) {
            Tensor& t = out.create(n, params_.at(n).shape());
            std::copy(params_.at(n).data(), params_.at(n).data() + t.size(), t.data());
        }
        return out;
    }

    void load_values(const ParameterStore& other) {
        for (const auto& n : order_) {
            const Tensor& src = other.get(n);
            Tensor& dst = params_.at(n);
            if (src.shape() != dst.shape())
                throw DimensionError("parameter shape mismatch for " + n + ": " + src.shape_str() + " vs " +
                                     dst.shape_str());
            std::copy(src.data(), src.data() + src.size(), dst.data());
        }
    }

private:
    std::vector<std::string> order_;
    std::unordered_map<std::string, Tensor> params_;
};

struct AdamState {
    std::size_t step = 0;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::unordered_map<std::string, std::vector<double>> m;
    std::unordered_map<std::string, std::vector<double>> v;
};

// One bias-corrected Adam update over every parameter, then grads are
// cleared. A parameter whose gradient buffer was never touched by backward
// indicates a wiring bug and trips a contract error.
inline void adam_step(ParameterStore& params, AdamState& state) {
    ++state.step;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (const std::string& name : params.names()) {
        Tensor& p = params.get(name);
        if (!p.has_grad()) throw ContractError("adam_step: no gradient for parameter '" + name + "'");
        auto& m = state.m[name];
        auto& v = state.v[name];
        if (m.empty()) m.assign(p.size(), 0.0);
        if (v.empty()) v.assign(p.size(), 0.0);
        if (m.size() != p.size())
            throw ContractError("adam_step: moment buffer size mismatch for '" + name + "'");
        double* x = p.data();
        const double* g = p.grad();
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            x[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
        }
        p.zero_grad();
    }
}

// Rescale all gradients so their joint L2 norm is at most max_norm.
inline double clip_grad_norm(ParameterStore& params, double max_norm) {
    double sq = 0.0;
    for (const std::string& name : params.names()) {
        Tensor& p = params.get(name);
        if (!p.has_grad()) continue;
        const double* g = p.grad();
        for (std::size_t i = 0; i < p.size(); ++i) sq += g[i] * g[i];
    }
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        const double f = max_norm / norm;
        for (const std::string& name : params.names()) {
            Tensor& p = params.get(name);
            if (!p.has_grad()) continue;
            double* g = p.grad();
            for (std::size_t i = 0; i < p.size(); ++i) g[i] *= f;
        }
    }
    return norm;
}

// Glorot-uniform fill: U(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
inline void glorot_init(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    double* x = t.data();
    for (std::size_t i = 0; i < t.size(); ++i) x[i] = rng.uniform(-a, a);
}

}  // namespace hetgnn
