#include "doctest.h"

#include <cmath>

#include "hetgnn/temporal.hpp"
#include "oracles.hpp"

using namespace hetgnn;

namespace {

Tensor random_window(std::size_t n, std::size_t T, oracle::TestRng& rng) {
    Tensor w(std::vector<std::size_t>{n, T});
    for (std::size_t i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-1.0, 1.0);
    return w;
}

}  // namespace

TEST_SUITE("temporal") {

TEST_CASE("default configuration maps T=32 windows to 672 features") {
    TemporalConfig cfg;
    CHECK(temporal_output_dim(cfg, 32) == 672);  // 8 * (30 + 28 + 26)

    ParameterStore params;
    Rng rng(1);
    init_temporal_params(params, cfg, rng);
    oracle::TestRng trng(2);
    Tensor w = random_window(5, 32, trng);
    Tensor h = temporal_embed(nullptr, w, cfg, params);
    CHECK(h.rows() == 5);
    CHECK(h.cols() == 672);
}

TEST_CASE("output width follows the formula for arbitrary shapes") {
    oracle::TestRng rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        TemporalConfig cfg;
        cfg.kernel_sizes = {1 + static_cast<std::size_t>(rng.below(4)),
                            1 + static_cast<std::size_t>(rng.below(9))};
        cfg.channels_per_branch = 1 + rng.below(5);
        const std::size_t T = 9 + rng.below(8);
        ParameterStore params;
        Rng prng(trial + 10);
        init_temporal_params(params, cfg, prng);
        Tensor w = random_window(3, T, rng);
        Tensor h = temporal_embed(nullptr, w, cfg, params);
        CHECK(h.cols() == temporal_output_dim(cfg, T));
    }
}

TEST_CASE("all-ones kernel the size of the window sums each variable") {
    TemporalConfig cfg;
    cfg.kernel_sizes = {6};
    cfg.channels_per_branch = 1;
    ParameterStore params;
    Tensor& kern = params.create(temporal_kernel_name(0), {1, 6});
    for (std::size_t i = 0; i < 6; ++i) kern.data()[i] = 1.0;
    params.create(temporal_bias_name(0), {1});

    Tensor w(std::vector<std::size_t>{2, 6});
    double sums[2] = {0.0, 0.0};
    oracle::TestRng rng(5);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t t = 0; t < 6; ++t) {
            w.data()[i * 6 + t] = rng.uniform(0.1, 1.0);  // positive so relu is inert
            sums[i] += w.data()[i * 6 + t];
        }
    Tensor h = temporal_embed(nullptr, w, cfg, params);
    REQUIRE(h.cols() == 1);
    CHECK(h.data()[0] == doctest::Approx(sums[0]).epsilon(1e-12));
    CHECK(h.data()[1] == doctest::Approx(sums[1]).epsilon(1e-12));
}

TEST_CASE("delta kernel reproduces the window suffix") {
    TemporalConfig cfg;
    cfg.kernel_sizes = {4};
    cfg.channels_per_branch = 1;
    ParameterStore params;
    Tensor& kern = params.create(temporal_kernel_name(0), {1, 4});
    kern.data()[3] = 1.0;  // picks out the last tap
    params.create(temporal_bias_name(0), {1});

    Tensor w(std::vector<std::size_t>{1, 10});
    oracle::TestRng rng(7);
    for (std::size_t t = 0; t < 10; ++t) w.data()[t] = rng.uniform(0.1, 1.0);
    // n >= 2 not required at this level; single row keeps the check tight
    Tensor h = temporal_embed(nullptr, w, cfg, params);
    REQUIRE(h.cols() == 7);
    for (std::size_t p = 0; p < 7; ++p) CHECK(h.data()[p] == doctest::Approx(w.data()[p + 3]).epsilon(1e-12));
}

TEST_CASE("kernel larger than the window is a dimension error") {
    TemporalConfig cfg;
    cfg.kernel_sizes = {9};
    ParameterStore params;
    Rng rng(1);
    init_temporal_params(params, cfg, rng);
    oracle::TestRng trng(9);
    Tensor w = random_window(2, 8, trng);
    CHECK_THROWS_AS(temporal_embed(nullptr, w, cfg, params), DimensionError);
}

TEST_CASE("permuting window rows permutes output rows identically") {
    TemporalConfig cfg;
    ParameterStore params;
    Rng prng(11);
    init_temporal_params(params, cfg, prng);
    oracle::TestRng rng(13);
    const std::size_t n = 6, T = 32;
    Tensor w = random_window(n, T, rng);
    const std::size_t perm[6] = {4, 0, 5, 2, 1, 3};
    Tensor wp(std::vector<std::size_t>{n, T});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t t = 0; t < T; ++t) wp.data()[i * T + t] = w.data()[perm[i] * T + t];
    Tensor h = temporal_embed(nullptr, w, cfg, params);
    Tensor hp = temporal_embed(nullptr, wp, cfg, params);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < h.cols(); ++c)
            CHECK(hp.data()[i * h.cols() + c] == h.data()[perm[i] * h.cols() + c]);
}

TEST_CASE("kernel gradients pass the finite-difference check") {
    TemporalConfig cfg;
    cfg.kernel_sizes = {3, 5};
    cfg.channels_per_branch = 2;
    ParameterStore params;
    Rng prng(17);
    init_temporal_params(params, cfg, prng);
    oracle::TestRng rng(19);
    Tensor w = random_window(3, 12, rng);

    auto loss_value = [&]() {
        Tensor h = temporal_embed(nullptr, w, cfg, params);
        double acc = 0.0;
        for (std::size_t i = 0; i < h.size(); ++i) acc += h.data()[i] * h.data()[i];
        return acc;
    };

    Tape tape;
    Tensor h = temporal_embed(&tape, w, cfg, params);
    Tensor loss = sum(&tape, mul(&tape, h, h));
    tape.backward(loss);

    for (std::size_t b = 0; b < 2; ++b) {
        Tensor& kern = params.get(temporal_kernel_name(b));
        Tensor& bias = params.get(temporal_bias_name(b));
        for (std::size_t i = 0; i < kern.size(); ++i) {
            const double fd = oracle::central_diff(loss_value, kern.data() + i);
            CHECK(oracle::rel_err(kern.grad()[i], fd) < 1e-6);
        }
        for (std::size_t i = 0; i < bias.size(); ++i) {
            const double fd = oracle::central_diff(loss_value, bias.data() + i);
            CHECK(oracle::rel_err(bias.grad()[i], fd) < 1e-6);
        }
    }
}

}  // TEST_SUITE
