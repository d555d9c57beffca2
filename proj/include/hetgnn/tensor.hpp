// Dense 64-bit tensor with an optional gradient buffer. Value-semantic
// handle over shared storage so tape closures can hold cheap copies.
#pragma once

#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "hetgnn/common.hpp"

namespace hetgnn {

class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0, bool requires_grad = false)
        : s_(std::make_shared<Storage>()) {
        s_->shape = std::move(shape);
        s_->value.assign(numel_of(s_->shape), fill);
        s_->requires_grad = requires_grad;
    }

    static Tensor scalar(double v) {
        Tensor t(std::vector<std::size_t>{1});
        t.data()[0] = v;
        return t;
    }

    static Tensor from_matrix(const Matrix& m) {
        Tensor t(std::vector<std::size_t>{m.rows, m.cols});
        std::copy(m.v.begin(), m.v.end(), t.data());
        return t;
    }

    Matrix to_matrix() const {
        if (ndim() != 2) throw ContractError("to_matrix: tensor is not 2-D");
        Matrix m(shape()[0], shape()[1]);
        std::copy(data(), data() + size(), m.v.begin());
        return m;
    }

    bool defined() const { return static_cast<bool>(s_); }
    const std::vector<std::size_t>& shape() const { return s_->shape; }
    std::size_t ndim() const { return s_->shape.size(); }
    std::size_t size() const { return s_->value.size(); }

    std::size_t rows() const { return dim(0); }
    std::size_t cols() const { return dim(1); }
    std::size_t dim(std::size_t i) const {
        if (i >= s_->shape.size()) throw ContractError("tensor dim index out of range");
        return s_->shape[i];
    }

    double* data() { return s_->value.data(); }
    const double* data() const { return s_->value.data(); }

    double item() const {
        if (size() != 1) throw ContractError("item(): tensor is not scalar");
        return s_->value[0];
    }

    bool requires_grad() const { return s_->requires_grad; }
    void set_requires_grad(bool b) { s_->requires_grad = b; }

    bool has_grad() const { return !s_->grad.empty(); }

    // Allocates (zeroed) on first use; backward rules call this before
    // accumulating.
    double* grad() {
        if (s_->grad.empty()) s_->grad.assign(s_->value.size(), 0.0);
        return s_->grad.data();
    }
    const double* grad() const { return s_->grad.data(); }

    void zero_grad() {
        if (!s_->grad.empty()) std::fill(s_->grad.begin(), s_->grad.end(), 0.0);
    }
    void drop_grad() { s_->grad.clear(); }

    // Deep copy of values only.
    Tensor clone() const {
        Tensor t(s_->shape, 0.0, s_->requires_grad);
        std::copy(s_->value.begin(), s_->value.end(), t.s_->value.begin());
        return t;
    }

    // Identity of storage, not of values.
    bool same_storage(const Tensor& o) const { return s_ == o.s_; }

    std::string shape_str() const {
        std::ostringstream os;
        os << '(';
        for (std::size_t i = 0; i < s_->shape.size(); ++i) {
            if (i) os << 'x';
            os << s_->shape[i];
        }
        os << ')';
        return os.str();
    }

    static std::size_t numel_of(const std::vector<std::size_t>& shape) {
        std::size_t n = 1;
        for (std::size_t d : shape) n *= d;
        return n;
    }

private:
    struct Storage {
        std::vector<std::size_t> shape;
        std::vector<double> value;
        std::vector<double> grad;  // empty until needed
        bool requires_grad = false;
    };
    std::shared_ptr<Storage> s_;
};

}  // namespace hetgnn
