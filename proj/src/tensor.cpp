#include "giorom/tensor.hpp"

#include <cmath>

#include "giorom/threading.hpp"

namespace giorom {

static void check_same(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

Tensor t_add(const Tensor& a, const Tensor& b) {
    check_same(a, b, "t_add");
    Tensor r(a.shape());
    double* out = r.mut_data();
    for (int64_t i = 0; i < a.numel(); ++i) out[i] = a.flat(i) + b.flat(i);
    return r;
}

Tensor t_sub(const Tensor& a, const Tensor& b) {
    check_same(a, b, "t_sub");
    Tensor r(a.shape());
    double* out = r.mut_data();
    for (int64_t i = 0; i < a.numel(); ++i) out[i] = a.flat(i) - b.flat(i);
    return r;
}

Tensor t_scale(const Tensor& a, double c) {
    Tensor r(a.shape());
    double* out = r.mut_data();
    for (int64_t i = 0; i < a.numel(); ++i) out[i] = a.flat(i) * c;
    return r;
}

Tensor t_shift(const Tensor& a, double c) {
    Tensor r(a.shape());
    double* out = r.mut_data();
    for (int64_t i = 0; i < a.numel(); ++i) out[i] = a.flat(i) + c;
    return r;
}

double t_dot(const Tensor& a, const Tensor& b) {
    check_same(a, b, "t_dot");
    double s = 0.0;
    for (int64_t i = 0; i < a.numel(); ++i) s += a.flat(i) * b.flat(i);
    return s;
}

double t_max_abs(const Tensor& a) {
    double m = 0.0;
    for (int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::fabs(a.flat(i)));
    return m;
}

void gemm_acc(const double* A, const double* B, double* C, int64_t M, int64_t K, int64_t N) {
    parallel_for(static_cast<std::size_t>(M), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            const double* a = A + i * K;
            double* c = C + i * N;
            for (int64_t k = 0; k < K; ++k) {
                const double av = a[k];
                const double* b = B + k * N;
                for (int64_t j = 0; j < N; ++j) c[j] += av * b[j];
            }
        }
    }, std::max<std::size_t>(std::size_t(1), std::size_t(32768 / std::max<int64_t>(int64_t(1), K * N))));
}

void gemm_nt_acc(const double* G, const double* B, double* C, int64_t M, int64_t N, int64_t K) {
    // transpose B once so the inner loops stream contiguously
    std::vector<double> Bt(static_cast<std::size_t>(N) * K);
    for (int64_t k = 0; k < K; ++k)
        for (int64_t j = 0; j < N; ++j) Bt[static_cast<std::size_t>(j * K + k)] = B[k * N + j];
    gemm_acc(G, Bt.data(), C, M, N, K);
}

void gemm_tn_acc(const double* A, const double* G, double* C, int64_t M, int64_t K, int64_t N) {
    // parallel over rows of C (= columns of A); each row accumulated sequentially over m
    parallel_for(static_cast<std::size_t>(K), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t k = lo; k < hi; ++k) {
            double* c = C + k * N;
            for (int64_t m = 0; m < M; ++m) {
                const double av = A[m * K + k];
                const double* g = G + m * N;
                for (int64_t j = 0; j < N; ++j) c[j] += av * g[j];
            }
        }
    }, std::max<std::size_t>(std::size_t(1), std::size_t(32768 / std::max<int64_t>(int64_t(1), M * N))));
}

}  // namespace giorom
