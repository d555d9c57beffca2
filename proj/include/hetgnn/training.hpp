// Mini-batch training: seeded shuffling, L1/L2 objectives with
// validation-based selection, gradient clipping, early stopping and
// best-checkpoint tracking.
#pragma once

#include <chrono>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "hetgnn/dataset.hpp"
#include "hetgnn/metrics.hpp"
#include "hetgnn/model.hpp"

namespace hetgnn {

enum class LossKind { l1, l2, auto_select };

inline const char* to_string(LossKind k) {
    switch (k) {
        case LossKind::l1: return "l1";
        case LossKind::l2: return "l2";
        default: return "auto";
    }
}

inline LossKind loss_from_string(const std::string& s) {
    if (s == "l1") return LossKind::l1;
    if (s == "l2") return LossKind::l2;
    if (s == "auto") return LossKind::auto_select;
    throw ConfigError("unknown loss: " + s + " (expected l1, l2 or auto)");
}

struct TrainConfig {
    LossKind loss = LossKind::auto_select;
    std::size_t batch_size = 32;
    std::size_t epochs = 100;
    double lr = 1e-3;
    std::uint64_t seed = 1;
    std::size_t early_stop_patience = 15;
    double clip_norm = 5.0;

    void validate() const {
        if (epochs < 1) throw ConfigError("epochs must be >= 1");
        if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
        if (!(lr >= 0.0)) throw ConfigError("lr must be >= 0");
    }
};

// (1/k) sum_i sum_j (y_ij - yhat_ij)^2, k = batch size (rows).
inline Tensor loss_l2(Tape* tape, const Tensor& pred, const Tensor& truth) {
    if (pred.shape() != truth.shape())
        throw DimensionError("loss_l2: shapes " + pred.shape_str() + " and " + truth.shape_str() + " differ");
    Tensor diff = sub(tape, pred, truth);
    return scale(tape, sum(tape, mul(tape, diff, diff)), 1.0 / static_cast<double>(pred.rows()));
}

// (1/k) sum_i sum_j |y_ij - yhat_ij|
inline Tensor loss_l1(Tape* tape, const Tensor& pred, const Tensor& truth) {
    if (pred.shape() != truth.shape())
        throw DimensionError("loss_l1: shapes " + pred.shape_str() + " and " + truth.shape_str() + " differ");
    return scale(tape, sum(tape, abs(tape, sub(tape, pred, truth))), 1.0 / static_cast<double>(pred.rows()));
}

struct EpochLog {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_rse = 0.0;
    double val_rae = 0.0;
    double val_corr = 0.0;
    long long wall_ms = 0;
};

struct TrainResult {
    ParameterStore params;  // best-validation snapshot
    LossKind chosen_loss = LossKind::l2;
    std::size_t best_epoch = 0;
    double best_val_rse = 0.0;
    double best_val_rae = 0.0;
    double best_val_corr = 0.0;
    std::vector<EpochLog> log;
};

// Forward every sample without recording and stack predictions/targets as
// S x n matrices.
inline std::pair<Matrix, Matrix> predict_samples(const Model& model, ParameterStore& params,
                                                 const RelationStack& stack,
                                                 const std::vector<WindowSample>& samples) {
    const std::size_t S = samples.size(), n = model.n;
    Matrix pred(S, n), truth(S, n);
    for (std::size_t s = 0; s < S; ++s) {
        Tensor out = model.forward(nullptr, Tensor::from_matrix(samples[s].input), stack, params);
        for (std::size_t j = 0; j < n; ++j) {
            pred(s, j) = out.data()[j];
            truth(s, j) = samples[s].target[j];
        }
    }
    return {pred, truth};
}

inline ForecastReport evaluate_samples(const Model& model, ParameterStore& params, const RelationStack& stack,
                                       const std::vector<WindowSample>& samples, std::size_t horizon) {
    auto [pred, truth] = predict_samples(model, params, stack, samples);
    return make_report(pred, truth, horizon);
}

namespace detail {

inline TrainResult train_single(const Model& model, const RelationStack& stack,
                                const std::vector<WindowSample>& train_samples,
                                const std::vector<WindowSample>& valid_samples, const TrainConfig& cfg,
                                LossKind loss_kind, std::size_t horizon) {
    ParameterStore params;
    Rng rng(cfg.seed);
    model.init_params(params, rng);

    AdamState adam;
    adam.lr = cfg.lr;

    TrainResult result;
    result.chosen_loss = loss_kind;
    result.params = params.snapshot();
    double best = std::numeric_limits<double>::infinity();
    std::size_t since_best = 0;

    std::vector<std::size_t> order(train_samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    const std::size_t n = model.n;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        rng.shuffle(order);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t k = std::min(cfg.batch_size, order.size() - start);
            Tape tape;
            std::vector<Tensor> rows;
            rows.reserve(k);
            Tensor truth(std::vector<std::size_t>{k, n});
            for (std::size_t b = 0; b < k; ++b) {
                const WindowSample& s = train_samples[order[start + b]];
                Tensor out = model.forward(&tape, Tensor::from_matrix(s.input), stack, params);
                rows.push_back(reshape(&tape, out, {1, n}));
                for (std::size_t j = 0; j < n; ++j) truth.data()[b * n + j] = s.target[j];
            }
            Tensor pred = k == 1 ? rows[0] : concat(&tape, rows, 0);
            Tensor loss =
                loss_kind == LossKind::l1 ? loss_l1(&tape, pred, truth) : loss_l2(&tape, pred, truth);
            if (!std::isfinite(loss.item()))
                throw TrainingError("training diverged: non-finite loss at epoch " + std::to_string(epoch) +
                                    " (lr=" + std::to_string(cfg.lr) + ")");
            tape.backward(loss);
            clip_grad_norm(params, cfg.clip_norm);
            adam_step(params, adam);
            loss_sum += loss.item() * static_cast<double>(k);
        }

        ForecastReport val = evaluate_samples(model, params, stack, valid_samples, horizon);
        const auto t1 = std::chrono::steady_clock::now();

        EpochLog log;
        log.epoch = epoch;
        log.train_loss = loss_sum / static_cast<double>(train_samples.size());
        log.val_rse = val.rse;
        log.val_rae = val.rae;
        log.val_corr = val.corr;
        log.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
        result.log.push_back(log);

        if (val.rse < best) {
            best = val.rse;
            result.params = params.snapshot();
            result.best_epoch = epoch;
            result.best_val_rse = val.rse;
            result.best_val_rae = val.rae;
            result.best_val_corr = val.corr;
            since_best = 0;
        } else if (++since_best >= cfg.early_stop_patience) {
            break;
        }
    }
    return result;
}

}  // namespace detail

// Trains with the configured loss; loss=auto trains one model per loss
// (identical seeds) and keeps the validation winner (L2 on ties).
inline TrainResult train(const Model& model, const RelationStack& stack,
                         const std::vector<WindowSample>& train_samples,
                         const std::vector<WindowSample>& valid_samples, const TrainConfig& cfg,
                         std::size_t horizon) {
    cfg.validate();
    model.validate();
    if (train_samples.empty()) throw DimensionError("train: no training samples");
    if (valid_samples.empty()) throw DimensionError("train: no validation samples");

    if (cfg.loss != LossKind::auto_select)
        return detail::train_single(model, stack, train_samples, valid_samples, cfg, cfg.loss, horizon);

    TrainResult l2 = detail::train_single(model, stack, train_samples, valid_samples, cfg, LossKind::l2, horizon);
    TrainResult l1 = detail::train_single(model, stack, train_samples, valid_samples, cfg, LossKind::l1, horizon);
    return l1.best_val_rse < l2.best_val_rse ? std::move(l1) : std::move(l2);
}

}  // namespace hetgnn
