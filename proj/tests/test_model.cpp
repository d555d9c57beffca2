#include "doctest.h"

#include <cmath>
#include <vector>

#include "hetgnn/model.hpp"
#include "oracles.hpp"

using namespace hetgnn;

namespace {

Tensor tensor_from(const oracle::Mat& m) {
    Tensor t(std::vector<std::size_t>{m.size(), m[0].size()});
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < m[0].size(); ++j) t.data()[i * m[0].size() + j] = m[i][j];
    return t;
}

oracle::Mat random_mat(std::size_t r, std::size_t c, oracle::TestRng& rng, double lo = -1.0, double hi = 1.0) {
    oracle::Mat m = oracle::zeros(r, c);
    for (auto& row : m)
        for (double& x : row) x = rng.uniform(lo, hi);
    return m;
}

Model small_model(std::size_t n, std::size_t T = 12) {
    Model m;
    m.n = n;
    m.window_T = T;
    m.temporal.kernel_sizes = {3, 5};
    m.temporal.channels_per_branch = 2;
    m.cfg.hidden_size = 6;
    m.cfg.gnn_layers = 2;
    return m;
}

RelationStack stack_for(const Model& model, oracle::TestRng& rng) {
    RelationStack stack;
    stack.n = model.n;
    for (const char* tag : {"sim", "cas", "dyn"}) {
        Matrix a(model.n, model.n);
        for (double& x : a.v) x = rng.uniform(0.0, 1.0);
        stack.matrices.push_back(row_normalize(sparsify(a, 0.1)));
        stack.tags.push_back(tag);
    }
    return stack;
}

Tensor random_window_t(std::size_t n, std::size_t T, oracle::TestRng& rng) {
    Tensor w(std::vector<std::size_t>{n, T});
    for (std::size_t i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-1.0, 1.0);
    return w;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("propagate: single identity relation with zero W0 passes H through") {
    oracle::TestRng rng(1);
    const std::size_t n = 4, d = 3;
    oracle::Mat H = random_mat(n, d, rng);
    Tensor Ht = tensor_from(H);
    Tensor eye(std::vector<std::size_t>{n, n});
    for (std::size_t i = 0; i < n; ++i) eye.data()[i * n + i] = 1.0;
    Tensor W0(std::vector<std::size_t>{d, d});
    Tensor Wr(std::vector<std::size_t>{d, d});
    for (std::size_t i = 0; i < d; ++i) Wr.data()[i * d + i] = 1.0;
    Tensor alpha(std::vector<std::size_t>{1});
    alpha.data()[0] = -1.7;  // softmax of a singleton is 1 regardless
    Tensor out = propagate(nullptr, Ht, {eye}, W0, {Wr}, &alpha, /*final=*/true);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out.data()[i] == doctest::Approx(Ht.data()[i]).epsilon(1e-15));
}

TEST_CASE("propagate: equal logits weight three relations by exactly 1/3") {
    oracle::TestRng rng(2);
    const std::size_t n = 3, d = 2;
    Tensor H = tensor_from(random_mat(n, d, rng));
    Tensor W0(std::vector<std::size_t>{d, d});
    std::vector<Tensor> adjs, wr;
    for (int r = 0; r < 3; ++r) {
        adjs.push_back(tensor_from(random_mat(n, n, rng, 0.0, 1.0)));
        Tensor w(std::vector<std::size_t>{d, d});
        for (std::size_t i = 0; i < d; ++i) w.data()[i * d + i] = 1.0;
        wr.push_back(w);
    }
    Tensor alpha(std::vector<std::size_t>{3}, 0.8);  // equal
    Tensor out = propagate(nullptr, H, adjs, W0, wr, &alpha, true);

    // sum of one-relation outputs, each scaled by 1/3
    Tensor acc(std::vector<std::size_t>{n, d});
    for (int r = 0; r < 3; ++r) {
        Tensor one = propagate(nullptr, H, {adjs[r]}, W0, {wr[r]}, nullptr, true);
        for (std::size_t i = 0; i < acc.size(); ++i) acc.data()[i] += one.data()[i] / 3.0;
    }
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out.data()[i] == doctest::Approx(acc.data()[i]).epsilon(1e-12));
}

TEST_CASE("propagate matches the straight-line oracle on random instances") {
    oracle::TestRng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 4 + rng.below(5);
        const std::size_t din = 3 + rng.below(4);
        const std::size_t dout = 3 + rng.below(4);
        const std::size_t R = 1 + rng.below(3);
        const bool final_layer = rng.below(2) == 0;

        oracle::Mat H = random_mat(n, din, rng);
        oracle::Mat W0 = random_mat(din, dout, rng);
        std::vector<oracle::Mat> adjs, wrs;
        oracle::Vec alpha;
        for (std::size_t r = 0; r < R; ++r) {
            adjs.push_back(random_mat(n, n, rng, 0.0, 1.0));
            wrs.push_back(random_mat(din, dout, rng));
            alpha.push_back(rng.uniform(-1.0, 1.0));
        }

        oracle::Mat expected = oracle::propagate_dense(H, adjs, W0, wrs, alpha, final_layer);

        Tensor Ht = tensor_from(H), W0t = tensor_from(W0);
        std::vector<Tensor> adjt, wrt;
        for (std::size_t r = 0; r < R; ++r) {
            adjt.push_back(tensor_from(adjs[r]));
            wrt.push_back(tensor_from(wrs[r]));
        }
        Tensor at(std::vector<std::size_t>{R});
        for (std::size_t r = 0; r < R; ++r) at.data()[r] = alpha[r];

        Tensor out = propagate(nullptr, Ht, adjt, W0t, wrt, &at, final_layer);
        REQUIRE(out.rows() == n);
        REQUIRE(out.cols() == dout);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < dout; ++j) {
                const double got = out.data()[i * dout + j];
                const double want = expected[i][j];
                CHECK(std::fabs(got - want) <= 1e-12 * std::max(1.0, std::fabs(want)));
            }
    }
}

TEST_CASE("propagate reports mismatched shapes naming the layer and relation") {
    Tensor H(std::vector<std::size_t>{3, 4});
    Tensor W0(std::vector<std::size_t>{4, 2});
    Tensor badA(std::vector<std::size_t>{2, 2});
    Tensor Wr(std::vector<std::size_t>{4, 2});
    CHECK_THROWS_WITH_AS(propagate(nullptr, H, {badA}, W0, {Wr}, nullptr, false, 1),
                         doctest::Contains("layer 1"), DimensionError);
}

TEST_CASE("dynamic adjacency: identity weight and zero threshold reproduce the distance base") {
    Model model = small_model(4);
    model.rel_cfg.threshold = 0.0;
    ParameterStore params;
    Tensor& wdyn = params.create("dyn.W", {4, 4});
    for (std::size_t i = 0; i < 4; ++i) wdyn.data()[i * 4 + i] = 1.0;
    oracle::TestRng rng(5);
    Matrix base = distance_base(random_window_t(4, 12, rng).to_matrix());
    Tensor a = model.dynamic_adjacency(nullptr, Tensor::from_matrix(base), params);
    for (std::size_t i = 0; i < 16; ++i) CHECK(a.data()[i] == doctest::Approx(base.v[i]).epsilon(1e-12));
    for (std::size_t i = 0; i < 4; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < 4; ++j) s += a.data()[i * 4 + j];
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("dynamic adjacency: zero weight matrix collapses to zero") {
    Model model = small_model(3);
    ParameterStore params;
    params.create("dyn.W", {3, 3});
    oracle::TestRng rng(6);
    Matrix base = distance_base(random_window_t(3, 12, rng).to_matrix());
    Tensor a = model.dynamic_adjacency(nullptr, Tensor::from_matrix(base), params);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.data()[i] == 0.0);
}

TEST_CASE("gradient reaches W_dyn when the dynamic relation is enabled") {
    Model model = small_model(4);
    ParameterStore params;
    Rng rng(21);
    model.init_params(params, rng);
    oracle::TestRng trng(22);
    Tensor window = random_window_t(4, 12, trng);
    RelationStack stack = stack_for(model, trng);

    Tensor& wdyn = params.get("dyn.W");
    auto loss_value = [&]() {
        Tensor out = model.forward(nullptr, window, stack, params);
        double acc = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) acc += out.data()[i] * out.data()[i];
        return acc;
    };

    Tape tape;
    Tensor out = model.forward(&tape, window, stack, params);
    Tensor loss = sum(&tape, mul(&tape, out, out));
    tape.backward(loss);

    double grad_norm = 0.0;
    bool fd_matches = true;
    for (std::size_t i = 0; i < wdyn.size(); ++i) {
        grad_norm += wdyn.grad()[i] * wdyn.grad()[i];
        const double fd = oracle::central_diff(loss_value, wdyn.data() + i);
        if (oracle::rel_err(wdyn.grad()[i], fd) > 1e-5) fd_matches = false;
    }
    CHECK(grad_norm > 0.0);
    CHECK(fd_matches);
}

TEST_CASE("forward: zero window with zero biases forecasts zero") {
    Model model = small_model(4);
    ParameterStore params;
    Rng rng(31);
    model.init_params(params, rng);  // biases init to zero
    Tensor window(std::vector<std::size_t>{4, 12});
    oracle::TestRng trng(32);
    RelationStack stack = stack_for(model, trng);
    Tensor out = model.forward(nullptr, window, stack, params);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out.data()[i] == 0.0);
}

TEST_CASE("attention weights are positive, sum to 1, and shift invariance holds bit-exactly") {
    Model model = small_model(5);
    ParameterStore params;
    Rng rng(41);
    model.init_params(params, rng);
    Tensor& alpha = params.get("gnn.alpha");
    // dyadic logits keep the shifted additions exact, so the max-subtracted
    // softmax is reproduced bit for bit
    alpha.data()[0] = 0.25;
    alpha.data()[1] = -0.75;
    alpha.data()[2] = 1.5;

    Tensor w = softmax(nullptr, alpha, 0);
    double s = 0.0;
    for (std::size_t r = 0; r < 3; ++r) {
        CHECK(w.data()[r] > 0.0);
        s += w.data()[r];
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-15));

    oracle::TestRng trng(42);
    Tensor window = random_window_t(5, 12, trng);
    RelationStack stack = stack_for(model, trng);
    Tensor base = model.forward(nullptr, window, stack, params);
    for (std::size_t r = 0; r < 3; ++r) alpha.data()[r] += 2.0;
    Tensor shifted = model.forward(nullptr, window, stack, params);
    for (std::size_t i = 0; i < base.size(); ++i) CHECK(shifted.data()[i] == base.data()[i]);
}

TEST_CASE("zeroed adjacencies isolate variables from each other") {
    Model model = small_model(4);
    ParameterStore params;
    Rng rng(51);
    model.init_params(params, rng);
    // zero the dynamic weights so the dynamic adjacency vanishes too
    Tensor& wdyn = params.get("dyn.W");
    std::fill(wdyn.data(), wdyn.data() + wdyn.size(), 0.0);

    RelationStack stack;
    stack.n = 4;
    stack.matrices = {Matrix(4, 4, 0.0), Matrix(4, 4, 0.0), Matrix(4, 4, 0.0)};
    stack.tags = {"sim", "cas", "dyn"};

    oracle::TestRng trng(52);
    Tensor w1 = random_window_t(4, 12, trng);
    Tensor w2 = w1.clone();
    // perturb variable 2's window only
    for (std::size_t t = 0; t < 12; ++t) w2.data()[2 * 12 + t] += trng.uniform(0.5, 1.0);

    Tensor o1 = model.forward(nullptr, w1, stack, params);
    Tensor o2 = model.forward(nullptr, w2, stack, params);
    for (std::size_t i = 0; i < 4; ++i) {
        if (i == 2) continue;
        CHECK(o1.data()[i] == o2.data()[i]);
    }
}

TEST_CASE("joint node permutation equivariance") {
    Model model = small_model(5);
    ParameterStore params;
    Rng rng(61);
    model.init_params(params, rng);
    oracle::TestRng trng(62);
    Tensor window = random_window_t(5, 12, trng);
    RelationStack stack = stack_for(model, trng);

    const std::size_t n = 5;
    const std::size_t perm[5] = {3, 0, 4, 1, 2};  // row i of permuted = row perm[i] of original

    Tensor out = model.forward(nullptr, window, stack, params);

    Tensor pwindow(std::vector<std::size_t>{n, 12});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t t = 0; t < 12; ++t) pwindow.data()[i * 12 + t] = window.data()[perm[i] * 12 + t];

    RelationStack pstack = stack;
    for (Matrix& mat : pstack.matrices) {
        Matrix c(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) c(i, j) = mat(perm[i], perm[j]);
        mat = c;
    }
    // conjugate the learned node-space operator as well
    ParameterStore pparams = params.snapshot();
    Tensor& wd = params.get("dyn.W");
    Tensor& pwd = pparams.get("dyn.W");
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) pwd.data()[i * n + j] = wd.data()[perm[i] * n + perm[j]];

    Tensor pout = model.forward(nullptr, pwindow, pstack, pparams);
    for (std::size_t i = 0; i < n; ++i)
        CHECK(pout.data()[i] == doctest::Approx(out.data()[perm[i]]).epsilon(1e-12));
}

TEST_CASE("single-relation ablation ignores the other adjacencies bit-exactly") {
    Model model = small_model(4);
    model.cfg.relations = {Relation::cas};  // type 1
    ParameterStore params;
    Rng rng(71);
    model.init_params(params, rng);
    CHECK_FALSE(params.contains("dyn.W"));  // dynamic path not built

    oracle::TestRng trng(72);
    Tensor window = random_window_t(4, 12, trng);
    RelationStack stack = stack_for(model, trng);
    Tensor base = model.forward(nullptr, window, stack, params);

    // perturbing the similarity matrix must not change anything
    RelationStack tampered = stack;
    for (double& x : tampered.matrices[0].v) x = trng.uniform(0.0, 1.0);
    Tensor out = model.forward(nullptr, window, tampered, params);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out.data()[i] == base.data()[i]);
}

TEST_CASE("disabling attention averages relations and changes the parameter set") {
    Model model = small_model(4);
    model.cfg.attention_enabled = false;
    ParameterStore params;
    Rng rng(81);
    model.init_params(params, rng);
    CHECK_FALSE(params.contains("gnn.alpha"));
    CHECK(params.contains(Model::wr_avg_name(0)));
    CHECK_FALSE(params.contains(Model::wr_name(0, Relation::sim)));

    oracle::TestRng trng(82);
    Tensor window = random_window_t(4, 12, trng);
    RelationStack stack = stack_for(model, trng);
    Tensor out = model.forward(nullptr, window, stack, params);
    CHECK(out.rows() == 4);
    CHECK(out.cols() == 1);

    // equivalent single-relation model fed the pre-averaged adjacency agrees
    Matrix avg(4, 4, 0.0);
    Matrix dyn_base = distance_base(window.to_matrix());
    Tensor dyn_t = [&] {
        Model dm = model;
        ParameterStore tmp;
        Tensor& w = tmp.create("dyn.W", {4, 4});
        std::copy(params.get("dyn.W").data(), params.get("dyn.W").data() + 16, w.data());
        return dm.dynamic_adjacency(nullptr, Tensor::from_matrix(dyn_base), tmp);
    }();
    for (std::size_t i = 0; i < 16; ++i)
        avg.v[i] = (stack.matrices[0].v[i] + stack.matrices[1].v[i] + dyn_t.data()[i]) / 3.0;

    Model ref = model;
    ref.cfg.relations = {Relation::sim};  // any single tag; adjacency comes from the stack
    RelationStack ref_stack;
    ref_stack.n = 4;
    ref_stack.matrices = {avg, Matrix(4, 4, 0.0), Matrix(4, 4, 0.0)};
    ref_stack.tags = {"sim", "cas", "dyn"};
    ParameterStore ref_params;
    Rng rng2(81);
    ref.init_params(ref_params, rng2);
    // wire identical weights: temporal + layer weights + readout
    for (const std::string& name : ref_params.names()) {
        if (params.contains(name)) {
            Tensor& dst = ref_params.get(name);
            const Tensor& src = params.get(name);
            std::copy(src.data(), src.data() + src.size(), dst.data());
        }
    }
    Tensor ref_out = ref.forward(nullptr, window, ref_stack, ref_params);
    for (std::size_t i = 0; i < out.size(); ++i)
        CHECK(ref_out.data()[i] == doctest::Approx(out.data()[i]).epsilon(1e-12));
}

TEST_CASE("full-model gradients pass the finite-difference check across parameter groups") {
    Model model = small_model(4);
    ParameterStore params;
    Rng rng(91);
    model.init_params(params, rng);
    oracle::TestRng trng(92);
    Tensor window = random_window_t(4, 12, trng);
    RelationStack stack = stack_for(model, trng);
    Tensor target(std::vector<std::size_t>{4, 1});
    for (std::size_t i = 0; i < 4; ++i) target.data()[i] = trng.uniform(-1.0, 1.0);

    auto loss_value = [&]() {
        Tensor out = model.forward(nullptr, window, stack, params);
        double acc = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double d = out.data()[i] - target.data()[i];
            acc += d * d;
        }
        return acc;
    };

    Tape tape;
    Tensor out = model.forward(&tape, window, stack, params);
    Tensor diff = sub(&tape, out, target);
    Tensor loss = sum(&tape, mul(&tape, diff, diff));
    tape.backward(loss);

    oracle::TestRng pick(93);
    for (const std::string& name : params.names()) {
        Tensor& p = params.get(name);
        // probe up to 4 coordinates per parameter
        for (int probe = 0; probe < 4; ++probe) {
            const std::size_t i = pick.below(static_cast<int>(p.size()));
            const double fd = oracle::central_diff(loss_value, p.data() + i);
            CAPTURE(name);
            CHECK(oracle::rel_err(p.grad()[i], fd) < 1e-4);
        }
    }
}

}  // TEST_SUITE
