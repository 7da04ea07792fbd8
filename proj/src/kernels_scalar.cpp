#include <algorithm>
#include <cstring>

#include "lawin/kernels.hpp"

namespace lawin::kernels {
namespace {

template <typename T>
void gemm_ref(index_t m, index_t n, index_t k, const T* __restrict a,
              const T* __restrict b, T* __restrict c, bool accumulate) {
    if (!accumulate) std::memset(c, 0, sizeof(T) * static_cast<std::size_t>(m * n));
    for (index_t i = 0; i < m; ++i) {
        T* crow = c + i * n;
        for (index_t p = 0; p < k; ++p) {
            const T av = a[i * k + p];
            const T* brow = b + p * n;
            for (index_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

template <typename T>
void add_ref(index_t n, const T* a, const T* b, T* out) {
    for (index_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

template <typename T>
void mul_ref(index_t n, const T* a, const T* b, T* out) {
    for (index_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

template <typename T>
void scale_ref(index_t n, T alpha, const T* x, T* out) {
    for (index_t i = 0; i < n; ++i) out[i] = alpha * x[i];
}

template <typename T>
void axpy_ref(index_t n, T alpha, const T* x, T* y) {
    for (index_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
T sum_ref(index_t n, const T* x) {
    T s = T(0);
    for (index_t i = 0; i < n; ++i) s += x[i];
    return s;
}

template <typename T>
T max_ref(index_t n, const T* x) {
    T m = x[0];
    for (index_t i = 1; i < n; ++i) m = std::max(m, x[i]);
    return m;
}

template <typename T>
T dot_ref(index_t n, const T* a, const T* b) {
    T s = T(0);
    for (index_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

const KernelTable& scalar_table() {
    static const KernelTable table = {
        "scalar",
        gemm_ref<float>,  gemm_ref<double>,
        add_ref<float>,   add_ref<double>,
        mul_ref<float>,   mul_ref<double>,
        scale_ref<float>, scale_ref<double>,
        axpy_ref<float>,  axpy_ref<double>,
        sum_ref<float>,   sum_ref<double>,
        max_ref<float>,   max_ref<double>,
        dot_ref<float>,   dot_ref<double>,
    };
    return table;
}

}  // namespace lawin::kernels
