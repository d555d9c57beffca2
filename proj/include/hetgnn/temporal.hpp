// Multi-scale temporal embedding: parallel valid 1-D convolution branches
// with different kernel sizes, shared across variables, flattened and
// concatenated into one feature vector per variable.
#pragma once

#include <string>
#include <vector>

#include "hetgnn/autodiff.hpp"
#include "hetgnn/optim.hpp"

namespace hetgnn {

struct TemporalConfig {
    std::vector<std::size_t> kernel_sizes = {3, 5, 7};
    std::size_t channels_per_branch = 8;

    void validate(std::size_t window_T) const {
        if (kernel_sizes.empty()) throw ConfigError("temporal: need at least one kernel size");
        if (channels_per_branch < 1) throw ConfigError("temporal: channels_per_branch must be >= 1");
        for (std::size_t k : kernel_sizes)
            if (k == 0 || k > window_T)
                throw DimensionError("temporal: kernel size " + std::to_string(k) +
                                     " invalid for window_T=" + std::to_string(window_T));
    }
};

// d0 = sum_i C * (T - k_i + 1)
inline std::size_t temporal_output_dim(const TemporalConfig& cfg, std::size_t window_T) {
    std::size_t d = 0;
    for (std::size_t k : cfg.kernel_sizes) d += cfg.channels_per_branch * (window_T - k + 1);
    return d;
}

inline std::string temporal_kernel_name(std::size_t branch) {
    return "temporal.branch" + std::to_string(branch) + ".kernel";
}
inline std::string temporal_bias_name(std::size_t branch) {
    return "temporal.branch" + std::to_string(branch) + ".bias";
}

inline void init_temporal_params(ParameterStore& params, const TemporalConfig& cfg, Rng& rng) {
    for (std::size_t b = 0; b < cfg.kernel_sizes.size(); ++b) {
        const std::size_t k = cfg.kernel_sizes[b];
        const std::size_t C = cfg.channels_per_branch;
        Tensor& kern = params.create(temporal_kernel_name(b), {C, k});
        glorot_init(kern, k, C * k, rng);
        params.create(temporal_bias_name(b), {C});  // zero bias
    }
}

// window: n x T  ->  n x d0
inline Tensor temporal_embed(Tape* tape, const Tensor& window, const TemporalConfig& cfg, ParameterStore& params) {
    cfg.validate(window.cols());
    std::vector<Tensor> branches;
    branches.reserve(cfg.kernel_sizes.size());
    for (std::size_t b = 0; b < cfg.kernel_sizes.size(); ++b) {
        Tensor conv = conv1d(tape, window, params.get(temporal_kernel_name(b)), params.get(temporal_bias_name(b)));
        branches.push_back(relu(tape, conv));
    }
    return branches.size() == 1 ? branches[0] : concat(tape, branches, 1);
}

}  // namespace hetgnn
