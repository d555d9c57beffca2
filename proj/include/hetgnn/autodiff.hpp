// Reverse-mode differentiation over a recorded tape of primitive ops.
//
// Every primitive computes its forward value eagerly and, when a tape is
// supplied and some input carries requires_grad, pushes one backward
// closure. Tape::backward replays the closures in reverse creation order,
// which is a valid topological order by construction, visiting each node
// exactly once. Passing tape == nullptr runs the same math in inference
// mode with no recording.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "hetgnn/tensor.hpp"

namespace hetgnn {

class Tape {
public:
    void record(std::function<void()> backward_fn) { ops_.push_back(std::move(backward_fn)); }

    std::size_t size() const { return ops_.size(); }

    // Seeds d(loss)/d(loss) = 1 and propagates to every recorded input.
    void backward(Tensor& loss) {
        if (loss.size() != 1) throw ContractError("backward: loss must be scalar, got " + loss.shape_str());
        if (ops_.empty()) throw ContractError("backward: tape is empty");
        if (ran_) throw ContractError("backward: tape already replayed");
        ran_ = true;
        loss.grad()[0] += 1.0;
        for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
    }

private:
    std::vector<std::function<void()>> ops_;
    bool ran_ = false;
};

namespace detail {

inline bool track(const Tape* tape, const Tensor& a) { return tape && a.requires_grad(); }
inline bool track(const Tape* tape, const Tensor& a, const Tensor& b) {
    return tape && (a.requires_grad() || b.requires_grad());
}

[[noreturn]] inline void shape_fail(const char* prim, const Tensor& a) {
    throw DimensionError(std::string(prim) + ": bad shape " + a.shape_str());
}
[[noreturn]] inline void shape_fail(const char* prim, const Tensor& a, const Tensor& b) {
    throw DimensionError(std::string(prim) + ": incompatible shapes " + a.shape_str() + " and " + b.shape_str());
}

}  // namespace detail

inline Tensor matmul(Tape* tape, const Tensor& a, const Tensor& b) {
    if (a.ndim() != 2 || b.ndim() != 2 || a.cols() != b.rows()) detail::shape_fail("matmul", a, b);
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    Tensor out(std::vector<std::size_t>{m, n});
    const double* pa = a.data();
    const double* pb = b.data();
    double* pc = out.data();
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = pa + i * k;
        double* ci = pc + i * n;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double av = ai[kk];
            if (av == 0.0) continue;
            const double* bk = pb + kk * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bk[j];
        }
    }
    if (detail::track(tape, a, b)) {
        out.set_requires_grad(true);
        Tensor ta = a, tb = b, to = out;
        tape->record([ta, tb, to]() mutable {
            const std::size_t m = ta.rows(), k = ta.cols(), n = tb.cols();
            const double* go = to.grad();
            if (ta.requires_grad()) {
                double* ga = ta.grad();
                const double* pb = tb.data();
                // dA = dC * B^T; transpose B once so the inner loop is a
                // contiguous axpy instead of a scalar dot reduction
                std::vector<double> bt(k * n);
                for (std::size_t kk = 0; kk < k; ++kk)
                    for (std::size_t j = 0; j < n; ++j) bt[j * k + kk] = pb[kk * n + j];
                for (std::size_t i = 0; i < m; ++i) {
                    const double* goi = go + i * n;
                    double* gai = ga + i * k;
                    for (std::size_t j = 0; j < n; ++j) {
                        const double g = goi[j];
                        if (g == 0.0) continue;
                        const double* btj = bt.data() + j * k;
                        for (std::size_t kk = 0; kk < k; ++kk) gai[kk] += g * btj[kk];
                    }
                }
            }
            if (tb.requires_grad()) {
                double* gb = tb.grad();
                const double* pa = ta.data();
                // dB = A^T * dC
                for (std::size_t i = 0; i < m; ++i) {
                    const double* goi = go + i * n;
                    for (std::size_t kk = 0; kk < k; ++kk) {
                        const double av = pa[i * k + kk];
                        if (av == 0.0) continue;
                        double* gbk = gb + kk * n;
                        for (std::size_t j = 0; j < n; ++j) gbk[j] += av * goi[j];
                    }
                }
            }
        });
    }
    return out;
}

// add/sub/mul accept equal shapes, or a single-element right operand that
// broadcasts over the left.
inline Tensor add(Tape* tape, const Tensor& a, const Tensor& b) {
    const bool bcast = b.size() == 1 && a.size() != 1;
    if (!bcast && a.shape() != b.shape()) detail::shape_fail("add", a, b);
    Tensor out(a.shape());
    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out.data();
    for (std::size_t i = 0; i < a.size(); ++i) po[i] = pa[i] + (bcast ? pb[0] : pb[i]);
    if (detail::track(tape, a, b)) {
        out.set_requires_grad(true);
        Tensor ta = a, tb = b, to = out;
        tape->record([ta, tb, to, bcast]() mutable {
            const double* go = to.grad();
            if (ta.requires_grad()) {
                double* ga = ta.grad();
                for (std::size_t i = 0; i < ta.size(); ++i) ga[i] += go[i];
            }
            if (tb.requires_grad()) {
                double* gb = tb.grad();
                if (bcast) {
                    double acc = 0.0;
                    for (std::size_t i = 0; i < ta.size(); ++i) acc += go[i];
                    gb[0] += acc;
                } else {
                    for (std::size_t i = 0; i < tb.size(); ++i) gb[i] += go[i];
                }
            }
        });
    }
    return out;
}

inline Tensor sub(Tape* tape, const Tensor& a, const Tensor& b) {
    const bool bcast = b.size() == 1 && a.size() != 1;
    if (!bcast && a.shape() != b.shape()) detail::shape_fail("sub", a, b);
    Tensor out(a.shape());
    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out.data();
    for (std::size_t i = 0; i < a.size(); ++i) po[i] = pa[i] - (bcast ? pb[0] : pb[i]);
    if (detail::track(tape, a, b)) {
        out.set_requires_grad(true);
        Tensor ta = a, tb = b, to = out;
        tape->record([ta, tb, to, bcast]() mutable {
            const double* go = to.grad();
            if (ta.requires_grad()) {
                double* ga = ta.grad();
                for (std::size_t i = 0; i < ta.size(); ++i) ga[i] += go[i];
            }
            if (tb.requires_grad()) {
                double* gb = tb.grad();
                if (bcast) {
                    double acc = 0.0;
                    for (std::size_t i = 0; i < ta.size(); ++i) acc += go[i];
                    gb[0] -= acc;
                } else {
                    for (std::size_t i = 0; i < tb.size(); ++i) gb[i] -= go[i];
                }
            }
        });
    }
    return out;
}

inline Tensor mul(Tape* tape, const Tensor& a, const Tensor& b) {
    const bool bcast = b.size() == 1 && a.size() != 1;
    if (!bcast && a.shape() != b.shape()) detail::shape_fail("mul", a, b);
    Tensor out(a.shape());
    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out.data();
    for (std::size_t i = 0; i < a.size(); ++i) po[i] = pa[i] * (bcast ? pb[0] : pb[i]);
    if (detail::track(tape, a, b)) {
        out.set_requires_grad(true);
        Tensor ta = a, tb = b, to = out;
        tape->record([ta, tb, to, bcast]() mutable {
            const double* go = to.grad();
            const double* pa = ta.data();
            const double* pb = tb.data();
            if (ta.requires_grad()) {
                double* ga = ta.grad();
                for (std::size_t i = 0; i < ta.size(); ++i) ga[i] += go[i] * (bcast ? pb[0] : pb[i]);
            }
            if (tb.requires_grad()) {
                double* gb = tb.grad();
                if (bcast) {
                    double acc = 0.0;
                    for (std::size_t i = 0; i < ta.size(); ++i) acc += go[i] * pa[i];
                    gb[0] += acc;
                } else {
                    for (std::size_t i = 0; i < tb.size(); ++i) gb[i] += go[i] * pa[i];
                }
            }
        });
    }
    return out;
}

// Multiply by a plain constant (no gradient for the constant).
inline Tensor scale(Tape* tape, const Tensor& a, double c) {
    Tensor out(a.shape());
    const double* pa = a.data();
    double* po = out.data();
    for (std::size_t i = 0; i < a.size(); ++i) po[i] = pa[i] * c;
    if (detail::track(tape, a)) {
        out.set_requires_grad(true);
        Tensor ta = a, to = out;
        tape->record([ta, to, c]() mutable {
            const double* go = to.grad();
            double* ga = ta.grad();
            for (std::size_t i = 0; i < ta.size(); ++i) ga[i] += go[i] * c;
        });
    }
    return out;
}

inline Tensor relu(Tape* tape, const Tensor& a) {
    Tensor out(a.shape());
    const double* pa = a.data();
    double* po = out.data();
    for (std::size_t i = 0; i < a.size(); ++i) po[i] = pa[i] > 0.0 ? pa[i] : 0.0;
    if (detail::track(tape, a)) {
        out.set_requires_grad(true);
        Tensor ta = a, to = out;
        tape->record([ta, to]() mutable {
            const double* go = to.grad();
            const double* pa = ta.data();
            double* ga = ta.grad();
            for (std::size_t i = 0; i < ta.size(); ++i)
                if (pa[i] > 0.0) ga[i] += go[i];
        });
    }
    return out;
}

inline Tensor abs(Tape* tape, const Tensor& a) {
    Tensor out(a.shape());
    const double* pa = a.data();
    double* po = out.data();
    for (std::size_t i = 0; i < a.size(); ++i) po[i] = std::fabs(pa[i]);
    if (detail::track(tape, a)) {
        out.set_requires_grad(true);
        Tensor ta = a, to = out;
        tape->record([ta, to]() mutable {
            const double* go = to.grad();
            const double* pa = ta.data();
            double* ga = ta.grad();
            // subgradient 0 at the kink
            for (std::size_t i = 0; i < ta.size(); ++i)
                ga[i] += go[i] * (pa[i] > 0.0 ? 1.0 : (pa[i] < 0.0 ? -1.0 : 0.0));
        });
    }
    return out;
}

// Softmax along one axis of a 1-D or 2-D tensor.
inline Tensor softmax(Tape* tape, const Tensor& a, std::size_t axis) {
    if (a.ndim() > 2 || axis >= a.ndim()) detail::shape_fail("softmax", a);
    const std::size_t rows = a.ndim() == 1 ? 1 : a.rows();
    const std::size_t cols = a.ndim() == 1 ? a.dim(0) : a.cols();
    const bool over_cols = a.ndim() == 1 || axis == 1;

    Tensor out(a.shape());
    const double* pa = a.data();
    double* po = out.data();
    const std::size_t groups = over_cols ? rows : cols;
    const std::size_t glen = over_cols ? cols : rows;
    const std::size_t gstride = over_cols ? 1 : cols;
    const std::size_t gbase = over_cols ? cols : 1;
    for (std::size_t g = 0; g < groups; ++g) {
        const double* src = pa + g * gbase;
        double* dst = po + g * gbase;
        double mx = src[0];
        for (std::size_t i = 1; i < glen; ++i) mx = std::max(mx, src[i * gstride]);
        double denom = 0.0;
        for (std::size_t i = 0; i < glen; ++i) {
            double e = std::exp(src[i * gstride] - mx);
            dst[i * gstride] = e;
            denom += e;
        }
        for (std::size_t i = 0; i < glen; ++i) dst[i * gstride] /= denom;
    }
    if (detail::track(tape, a)) {
        out.set_requires_grad(true);
        Tensor ta = a, to = out;
        tape->record([ta, to, groups, glen, gstride, gbase]() mutable {
            const double* y = to.data();
            const double* gy = to.grad();
            double* ga = ta.grad();
            for (std::size_t g = 0; g < groups; ++g) {
                const double* yg = y + g * gbase;
                const double* dg = gy + g * gbase;
                double dot = 0.0;
                for (std::size_t i = 0; i < glen; ++i) dot += yg[i * gstride] * dg[i * gstride];
                for (std::size_t i = 0; i < glen; ++i)
                    ga[g * gbase + i * gstride] += yg[i * gstride] * (dg[i * gstride] - dot);
            }
        });
    }
    return out;
}

// Concatenate 2-D tensors along rows (axis 0) or columns (axis 1).
inline Tensor concat(Tape* tape, const std::vector<Tensor>& parts, std::size_t axis) {
    if (parts.empty()) throw DimensionError("concat: no inputs");
    if (axis > 1) throw DimensionError("concat: axis must be 0 or 1");
    for (const Tensor& p : parts)
        if (p.ndim() != 2) detail::shape_fail("concat", p);
    std::size_t rows = parts[0].rows(), cols = parts[0].cols();
    for (std::size_t i = 1; i < parts.size(); ++i) {
        if (axis == 0) {
            if (parts[i].cols() != cols) detail::shape_fail("concat", parts[0], parts[i]);
            rows += parts[i].rows();
        } else {
            if (parts[i].rows() != rows) detail::shape_fail("concat", parts[0], parts[i]);
            cols += parts[i].cols();
        }
    }

    Tensor out(std::vector<std::size_t>{rows, cols});
    double* po = out.data();
    if (axis == 0) {
        std::size_t r0 = 0;
        for (const Tensor& p : parts) {
            std::copy(p.data(), p.data() + p.size(), po + r0 * cols);
            r0 += p.rows();
        }
    } else {
        std::size_t c0 = 0;
        for (const Tensor& p : parts) {
            for (std::size_t i = 0; i < rows; ++i)
                std::copy(p.data() + i * p.cols(), p.data() + (i + 1) * p.cols(), po + i * cols + c0);
            c0 += p.cols();
        }
    }
    bool any_grad = false;
    for (const Tensor& p : parts) any_grad = any_grad || p.requires_grad();
    if (tape && any_grad) {
        out.set_requires_grad(true);
        std::vector<Tensor> tp = parts;
        Tensor to = out;
        tape->record([tp, to, axis]() mutable {
            const double* go = to.grad();
            const std::size_t cols = to.cols();
            if (axis == 0) {
                std::size_t r0 = 0;
                for (Tensor& p : tp) {
                    if (p.requires_grad()) {
                        double* gp = p.grad();
                        const double* src = go + r0 * cols;
                        for (std::size_t i = 0; i < p.size(); ++i) gp[i] += src[i];
                    }
                    r0 += p.rows();
                }
            } else {
                std::size_t c0 = 0;
                for (Tensor& p : tp) {
                    if (p.requires_grad()) {
                        double* gp = p.grad();
                        for (std::size_t i = 0; i < p.rows(); ++i)
                            for (std::size_t j = 0; j < p.cols(); ++j)
                                gp[i * p.cols() + j] += go[i * cols + c0 + j];
                    }
                    c0 += p.cols();
                }
            }
        });
    }
    return out;
}

// Contiguous slice along one axis of a 1-D or 2-D tensor.
inline Tensor slice(Tape* tape, const Tensor& a, std::size_t axis, std::size_t start, std::size_t len) {
    if (a.ndim() > 2 || axis >= a.ndim()) detail::shape_fail("slice", a);
    const std::size_t extent = a.dim(axis);
    if (start + len > extent || len == 0)
        throw DimensionError("slice: range [" + std::to_string(start) + ", " + std::to_string(start + len) +
                             ") out of bounds for axis extent " + std::to_string(extent));
    std::vector<std::size_t> oshape = a.shape();
    oshape[axis] = len;
    Tensor out(oshape);
    const double* pa = a.data();
    double* po = out.data();
    const std::size_t rows = a.ndim() == 1 ? 1 : a.rows();
    const std::size_t cols = a.ndim() == 1 ? a.dim(0) : a.cols();
    if (a.ndim() == 1 || axis == 1) {
        const std::size_t r = a.ndim() == 1 ? 1 : rows;
        for (std::size_t i = 0; i < r; ++i)
            std::copy(pa + i * cols + start, pa + i * cols + start + len, po + i * len);
    } else {
        std::copy(pa + start * cols, pa + (start + len) * cols, po);
    }
    if (detail::track(tape, a)) {
        out.set_requires_grad(true);
        Tensor ta = a, to = out;
        tape->record([ta, to, axis, start, len]() mutable {
            double* ga = ta.grad();
            const double* go = to.grad();
            const std::size_t cols = ta.ndim() == 1 ? ta.dim(0) : ta.cols();
            if (ta.ndim() == 1 || axis == 1) {
                const std::size_t r = ta.ndim() == 1 ? 1 : ta.rows();
                for (std::size_t i = 0; i < r; ++i)
                    for (std::size_t j = 0; j < len; ++j) ga[i * cols + start + j] += go[i * len + j];
            } else {
                for (std::size_t i = 0; i < len * cols; ++i) ga[start * cols + i] += go[i];
            }
        });
    }
    return out;
}

inline Tensor sum(Tape* tape, const Tensor& a) {
    Tensor out = Tensor::scalar(0.0);
    double acc = 0.0;
    const double* pa = a.data();
    for (std::size_t i = 0; i < a.size(); ++i) acc += pa[i];
    out.data()[0] = acc;
    if (detail::track(tape, a)) {
        out.set_requires_grad(true);
        Tensor ta = a, to = out;
        tape->record([ta, to]() mutable {
            const double g = to.grad()[0];
            double* ga = ta.grad();
            for (std::size_t i = 0; i < ta.size(); ++i) ga[i] += g;
        });
    }
    return out;
}

inline Tensor mean(Tape* tape, const Tensor& a) {
    if (a.size() == 0) throw DimensionError("mean: empty tensor");
    Tensor out = sum(nullptr, a);
    const double inv = 1.0 / static_cast<double>(a.size());
    out.data()[0] *= inv;
    if (detail::track(tape, a)) {
        out.set_requires_grad(true);
        Tensor ta = a, to = out;
        tape->record([ta, to, inv]() mutable {
            const double g = to.grad()[0] * inv;
            double* ga = ta.grad();
            for (std::size_t i = 0; i < ta.size(); ++i) ga[i] += g;
        });
    }
    return out;
}

// Same data, new shape (copying; shapes are small here).
inline Tensor reshape(Tape* tape, const Tensor& a, std::vector<std::size_t> shape) {
    if (Tensor::numel_of(shape) != a.size())
        throw DimensionError("reshape: element count mismatch for " + a.shape_str());
    Tensor out(shape);
    std::copy(a.data(), a.data() + a.size(), out.data());
    if (detail::track(tape, a)) {
        out.set_requires_grad(true);
        Tensor ta = a, to = out;
        tape->record([ta, to]() mutable {
            const double* go = to.grad();
            double* ga = ta.grad();
            for (std::size_t i = 0; i < ta.size(); ++i) ga[i] += go[i];
        });
    }
    return out;
}

// Valid 1-D convolution along time, kernels shared across rows (variables).
// window: n x T, kernel: C x k, bias: C  ->  n x (C * P) with P = T - k + 1;
// output column layout per row is channel-major: [c * P + p].
inline Tensor conv1d(Tape* tape, const Tensor& window, const Tensor& kernel, const Tensor& bias) {
    if (window.ndim() != 2 || kernel.ndim() != 2) detail::shape_fail("conv1d", window, kernel);
    const std::size_t n = window.rows(), T = window.cols();
    const std::size_t C = kernel.rows(), k = kernel.cols();
    if (k > T)
        throw DimensionError("conv1d: kernel size " + std::to_string(k) + " exceeds window length " +
                             std::to_string(T));
    if (bias.size() != C) detail::shape_fail("conv1d", kernel, bias);
    const std::size_t P = T - k + 1;
    Tensor out(std::vector<std::size_t>{n, C * P});
    const double* pw = window.data();
    const double* pk = kernel.data();
    const double* pbias = bias.data();
    double* po = out.data();
    for (std::size_t i = 0; i < n; ++i) {
        const double* wi = pw + i * T;
        double* oi = po + i * C * P;
        for (std::size_t c = 0; c < C; ++c) {
            const double* kc = pk + c * k;
            const double b = pbias[c];
            for (std::size_t p = 0; p < P; ++p) {
                double acc = b;
                for (std::size_t q = 0; q < k; ++q) acc += wi[p + q] * kc[q];
                oi[c * P + p] = acc;
            }
        }
    }
    if (tape && (window.requires_grad() || kernel.requires_grad() || bias.requires_grad())) {
        out.set_requires_grad(true);
        Tensor tw = window, tk = kernel, tb = bias, to = out;
        tape->record([tw, tk, tb, to]() mutable {
            const std::size_t n = tw.rows(), T = tw.cols();
            const std::size_t C = tk.rows(), k = tk.cols();
            const std::size_t P = T - k + 1;
            const double* go = to.grad();
            const double* pw = tw.data();
            const double* pk = tk.data();
            double* gw = tw.requires_grad() ? tw.grad() : nullptr;
            double* gk = tk.requires_grad() ? tk.grad() : nullptr;
            double* gb = tb.requires_grad() ? tb.grad() : nullptr;
            for (std::size_t i = 0; i < n; ++i) {
                const double* wi = pw + i * T;
                const double* goi = go + i * C * P;
                for (std::size_t c = 0; c < C; ++c) {
                    const double* kc = pk + c * k;
                    for (std::size_t p = 0; p < P; ++p) {
                        const double g = goi[c * P + p];
                        if (g == 0.0) continue;
                        if (gb) gb[c] += g;
                        for (std::size_t q = 0; q < k; ++q) {
                            if (gk) gk[c * k + q] += g * wi[p + q];
                            if (gw) gw[i * T + p + q] += g * kc[q];
                        }
                    }
                }
            }
        });
    }
    return out;
}

// Divide each nonzero row of a 2-D tensor by its sum; zero rows pass
// through. Gradient treats zero rows as constant zero.
inline Tensor row_normalize_op(Tape* tape, const Tensor& a) {
    if (a.ndim() != 2) detail::shape_fail("row_normalize", a);
    const std::size_t rows = a.rows(), cols = a.cols();
    Tensor out(a.shape());
    const double* pa = a.data();
    double* po = out.data();
    for (std::size_t i = 0; i < rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < cols; ++j) s += pa[i * cols + j];
        if (s != 0.0) {
            for (std::size_t j = 0; j < cols; ++j) po[i * cols + j] = pa[i * cols + j] / s;
        }
    }
    if (detail::track(tape, a)) {
        out.set_requires_grad(true);
        Tensor ta = a, to = out;
        tape->record([ta, to]() mutable {
            const std::size_t rows = ta.rows(), cols = ta.cols();
            const double* pa = ta.data();
            const double* y = to.data();
            const double* gy = to.grad();
            double* ga = ta.grad();
            for (std::size_t i = 0; i < rows; ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j < cols; ++j) s += pa[i * cols + j];
                if (s == 0.0) continue;
                double dot = 0.0;
                for (std::size_t j = 0; j < cols; ++j) dot += gy[i * cols + j] * y[i * cols + j];
                for (std::size_t j = 0; j < cols; ++j) ga[i * cols + j] += (gy[i * cols + j] - dot) / s;
            }
        });
    }
    return out;
}

}  // namespace hetgnn
