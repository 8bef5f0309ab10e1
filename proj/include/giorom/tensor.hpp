#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "giorom/common.hpp"

namespace giorom {

// Dense row-major tensor of 64-bit floats. Value semantics with shared
// storage; the payload is never mutated after construction, so copies are
// cheap and ops stay pure.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<int64_t> shape)
        : shape_(std::move(shape)),
          data_(std::make_shared<std::vector<double>>(checked_numel(shape_), 0.0)) {}

    Tensor(std::vector<int64_t> shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::make_shared<std::vector<double>>(std::move(data))) {
        if (static_cast<int64_t>(data_->size()) != checked_numel(shape_))
            throw ShapeError("tensor data length does not match shape");
    }

    static Tensor zeros(std::vector<int64_t> shape) { return Tensor(std::move(shape)); }

    static Tensor full(std::vector<int64_t> shape, double v) {
        Tensor t(std::move(shape));
        for (double& x : t.mut()) x = v;
        return t;
    }

    static Tensor scalar(double v) { return Tensor({1}, {v}); }

    const std::vector<int64_t>& shape() const { return shape_; }
    int64_t ndim() const { return static_cast<int64_t>(shape_.size()); }
    int64_t extent(int i) const { return shape_[static_cast<std::size_t>(i)]; }
    int64_t numel() const { return data_ ? static_cast<int64_t>(data_->size()) : 0; }
    bool defined() const { return static_cast<bool>(data_); }

    const double* data() const { return data_->data(); }
    double flat(int64_t i) const { return (*data_)[static_cast<std::size_t>(i)]; }

    double operator()(int64_t i) const { return (*data_)[static_cast<std::size_t>(i)]; }
    double operator()(int64_t i, int64_t j) const { return (*data_)[static_cast<std::size_t>(i * shape_[1] + j)]; }
    double operator()(int64_t i, int64_t j, int64_t k) const {
        return (*data_)[static_cast<std::size_t>((i * shape_[1] + j) * shape_[2] + k)];
    }

    double item() const {
        if (numel() != 1) throw ShapeError("item() on non-scalar tensor");
        return (*data_)[0];
    }

    // Same storage, new shape.
    Tensor reshaped(std::vector<int64_t> shape) const {
        if (checked_numel(shape) != numel()) throw ShapeError("reshape changes element count");
        Tensor t;
        t.shape_ = std::move(shape);
        t.data_ = data_;
        return t;
    }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    std::string shape_str() const {
        std::string s = "[";
        for (std::size_t i = 0; i < shape_.size(); ++i) {
            if (i) s += ", ";
            s += std::to_string(shape_[i]);
        }
        return s + "]";
    }

    // Mutable access for op kernels building a result in place. Callers must
    // hold the only reference (freshly constructed tensors do).
    std::vector<double>& mut() { return *data_; }
    double* mut_data() { return data_->data(); }

private:
    static int64_t checked_numel(const std::vector<int64_t>& shape) {
        int64_t n = 1;
        for (int64_t e : shape) {
            if (e < 1) throw ShapeError("tensor extents must be >= 1");
            n *= e;
        }
        return n;
    }

    std::vector<int64_t> shape_;
    std::shared_ptr<std::vector<double>> data_;
};

// ---- non-autodiff numeric helpers (pure, used for featurization etc.) ----

Tensor t_add(const Tensor& a, const Tensor& b);
Tensor t_sub(const Tensor& a, const Tensor& b);
Tensor t_scale(const Tensor& a, double c);
Tensor t_shift(const Tensor& a, double c);
double t_dot(const Tensor& a, const Tensor& b);
double t_max_abs(const Tensor& a);

// C[M,N] += A[M,K] * B[K,N], row-major dense. Parallel over rows of C with a
// fixed per-row accumulation order.
void gemm_acc(const double* A, const double* B, double* C, int64_t M, int64_t K, int64_t N);
// C[M,K] += G[M,N] * B[K,N]^T
void gemm_nt_acc(const double* G, const double* B, double* C, int64_t M, int64_t N, int64_t K);
// C[K,N] += A[M,K]^T * G[M,N]
void gemm_tn_acc(const double* A, const double* G, double* C, int64_t M, int64_t K, int64_t N);

}  // namespace giorom
