#pragma once

#include <string>
#include <vector>

#include "lawin/common.hpp"

// Data-parallel inner loops. Every entry point has a scalar reference
// implementation plus SIMD variants (AVX2 on x86-64, NEON on aarch64)
// selected at runtime. All buffers are row-major contiguous.

namespace lawin::kernels {

struct KernelTable {
    const char* name;

    // c[m,n] = a[m,k] * b[k,n], or += when accumulate is set
    void (*gemm_f32)(index_t m, index_t n, index_t k, const float* a,
                     const float* b, float* c, bool accumulate);
    void (*gemm_f64)(index_t m, index_t n, index_t k, const double* a,
                     const double* b, double* c, bool accumulate);

    void (*add_f32)(index_t n, const float* a, const float* b, float* out);
    void (*add_f64)(index_t n, const double* a, const double* b, double* out);
    void (*mul_f32)(index_t n, const float* a, const float* b, float* out);
    void (*mul_f64)(index_t n, const double* a, const double* b, double* out);
    void (*scale_f32)(index_t n, float alpha, const float* x, float* out);
    void (*scale_f64)(index_t n, double alpha, const double* x, double* out);
    // y += alpha * x
    void (*axpy_f32)(index_t n, float alpha, const float* x, float* y);
    void (*axpy_f64)(index_t n, double alpha, const double* x, double* y);

    float (*sum_f32)(index_t n, const float* x);
    double (*sum_f64)(index_t n, const double* x);
    // require n >= 1
    float (*max_f32)(index_t n, const float* x);
    double (*max_f64)(index_t n, const double* x);
    float (*dot_f32)(index_t n, const float* a, const float* b);
    double (*dot_f64)(index_t n, const double* a, const double* b);
};

const KernelTable& scalar_table();

// Null when the variant is not compiled in or the CPU lacks the ISA.
const KernelTable* avx2_table();
const KernelTable* neon_table();

// Resolution order: LAWIN_KERNELS env (scalar|avx2|neon|auto), then the
// best ISA the CPU reports, then scalar.
const KernelTable& active();
bool set_active(const std::string& name);
std::vector<const KernelTable*> available_tables();

// Typed wrappers so templated callers avoid f32/f64 branching.
template <typename T>
inline void gemm(index_t m, index_t n, index_t k, const T* a, const T* b,
                 T* c, bool accumulate) {
    if constexpr (sizeof(T) == sizeof(float))
        active().gemm_f32(m, n, k, a, b, c, accumulate);
    else
        active().gemm_f64(m, n, k, a, b, c, accumulate);
}
template <typename T>
inline void add(index_t n, const T* a, const T* b, T* out) {
    if constexpr (sizeof(T) == sizeof(float))
        active().add_f32(n, a, b, out);
    else
        active().add_f64(n, a, b, out);
}
template <typename T>
inline void mul(index_t n, const T* a, const T* b, T* out) {
    if constexpr (sizeof(T) == sizeof(float))
        active().mul_f32(n, a, b, out);
    else
        active().mul_f64(n, a, b, out);
}
template <typename T>
inline void scale(index_t n, T alpha, const T* x, T* out) {
    if constexpr (sizeof(T) == sizeof(float))
        active().scale_f32(n, alpha, x, out);
    else
        active().scale_f64(n, alpha, x, out);
}
template <typename T>
inline void axpy(index_t n, T alpha, const T* x, T* y) {
    if constexpr (sizeof(T) == sizeof(float))
        active().axpy_f32(n, alpha, x, y);
    else
        active().axpy_f64(n, alpha, x, y);
}
template <typename T>
inline T sum(index_t n, const T* x) {
    if constexpr (sizeof(T) == sizeof(float))
        return active().sum_f32(n, x);
    else
        return active().sum_f64(n, x);
}
template <typename T>
inline T max(index_t n, const T* x) {
    if constexpr (sizeof(T) == sizeof(float))
        return active().max_f32(n, x);
    else
        return active().max_f64(n, x);
}
template <typename T>
inline T dot(index_t n, const T* a, const T* b) {
    if constexpr (sizeof(T) == sizeof(float))
        return active().dot_f32(n, a, b);
    else
        return active().dot_f64(n, a, b);
}

}  // namespace lawin::kernels
