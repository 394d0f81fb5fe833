#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace hdrcm {

// Minimal NCHW tensor for the network path. Templated on the scalar so
// training can run in 32-bit while gradient checks run in 64-bit.
template <typename T>
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<T> v;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_, T fill = T(0))
        : n(n_), c(c_), h(h_), w(w_),
          v(static_cast<std::size_t>(n_) * c_ * h_ * w_, fill) {}

    std::size_t size() const { return v.size(); }
    std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
    T* sample(int i) { return v.data() + static_cast<std::size_t>(i) * c * plane(); }
    const T* sample(int i) const {
        return v.data() + static_cast<std::size_t>(i) * c * plane();
    }
    T& at(int ni, int ci, int yi, int xi) {
        return v[((static_cast<std::size_t>(ni) * c + ci) * h + yi) * w + xi];
    }
    T at(int ni, int ci, int yi, int xi) const {
        return v[((static_cast<std::size_t>(ni) * c + ci) * h + yi) * w + xi];
    }
    bool same_shape(const Tensor& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }
    void fill(T s) { std::fill(v.begin(), v.end(), s); }
};

// C = alpha * op(A) op(B) + beta * C, row-major. Dispatches to the BLAS
// sgemm/dgemm behind the scenes.
void gemm(bool trans_a, bool trans_b, int m, int n, int k, float alpha, const float* a,
          int lda, const float* b, int ldb, float beta, float* c, int ldc);
void gemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha, const double* a,
          int lda, const double* b, int ldb, double beta, double* c, int ldc);

}  // namespace hdrcm
