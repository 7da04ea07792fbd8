#include "lawin/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <algorithm>
#include <cstring>

namespace lawin::kernels {
namespace {

inline float hsum(__m256 v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    lo = _mm_add_ps(lo, _mm_movehl_ps(lo, lo));
    lo = _mm_add_ss(lo, _mm_shuffle_ps(lo, lo, 0x55));
    return _mm_cvtss_f32(lo);
}

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

inline float hmax(__m256 v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_max_ps(lo, hi);
    lo = _mm_max_ps(lo, _mm_movehl_ps(lo, lo));
    lo = _mm_max_ss(lo, _mm_shuffle_ps(lo, lo, 0x55));
    return _mm_cvtss_f32(lo);
}

inline double hmax(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_max_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_max_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

// 4 accumulator registers per row tile, full-k accumulation before store.
void gemm_f32_avx2(index_t m, index_t n, index_t k, const float* a,
                   const float* b, float* c, bool accumulate) {
    for (index_t i = 0; i < m; ++i) {
        const float* arow = a + i * k;
        float* crow = c + i * n;
        index_t j = 0;
        for (; j + 32 <= n; j += 32) {
            __m256 c0, c1, c2, c3;
            if (accumulate) {
                c0 = _mm256_loadu_ps(crow + j);
                c1 = _mm256_loadu_ps(crow + j + 8);
                c2 = _mm256_loadu_ps(crow + j + 16);
                c3 = _mm256_loadu_ps(crow + j + 24);
            } else {
                c0 = c1 = c2 = c3 = _mm256_setzero_ps();
            }
            for (index_t p = 0; p < k; ++p) {
                const __m256 av = _mm256_set1_ps(arow[p]);
                const float* brow = b + p * n + j;
                c0 = _mm256_fmadd_ps(av, _mm256_loadu_ps(brow), c0);
                c1 = _mm256_fmadd_ps(av, _mm256_loadu_ps(brow + 8), c1);
                c2 = _mm256_fmadd_ps(av, _mm256_loadu_ps(brow + 16), c2);
                c3 = _mm256_fmadd_ps(av, _mm256_loadu_ps(brow + 24), c3);
            }
            _mm256_storeu_ps(crow + j, c0);
            _mm256_storeu_ps(crow + j + 8, c1);
            _mm256_storeu_ps(crow + j + 16, c2);
            _mm256_storeu_ps(crow + j + 24, c3);
        }
        for (; j + 8 <= n; j += 8) {
            __m256 c0 = accumulate ? _mm256_loadu_ps(crow + j) : _mm256_setzero_ps();
            for (index_t p = 0; p < k; ++p)
                c0 = _mm256_fmadd_ps(_mm256_set1_ps(arow[p]),
                                     _mm256_loadu_ps(b + p * n + j), c0);
            _mm256_storeu_ps(crow + j, c0);
        }
        for (; j < n; ++j) {
            float s = accumulate ? crow[j] : 0.0f;
            for (index_t p = 0; p < k; ++p) s += arow[p] * b[p * n + j];
            crow[j] = s;
        }
    }
}

void gemm_f64_avx2(index_t m, index_t n, index_t k, const double* a,
                   const double* b, double* c, bool accumulate) {
    for (index_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        index_t j = 0;
        for (; j + 16 <= n; j += 16) {
            __m256d c0, c1, c2, c3;
            if (accumulate) {
                c0 = _mm256_loadu_pd(crow + j);
                c1 = _mm256_loadu_pd(crow + j + 4);
                c2 = _mm256_loadu_pd(crow + j + 8);
                c3 = _mm256_loadu_pd(crow + j + 12);
            } else {
                c0 = c1 = c2 = c3 = _mm256_setzero_pd();
            }
            for (index_t p = 0; p < k; ++p) {
                const __m256d av = _mm256_set1_pd(arow[p]);
                const double* brow = b + p * n + j;
                c0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow), c0);
                c1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + 4), c1);
                c2 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + 8), c2);
                c3 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + 12), c3);
            }
            _mm256_storeu_pd(crow + j, c0);
            _mm256_storeu_pd(crow + j + 4, c1);
            _mm256_storeu_pd(crow + j + 8, c2);
            _mm256_storeu_pd(crow + j + 12, c3);
        }
        for (; j + 4 <= n; j += 4) {
            __m256d c0 = accumulate ? _mm256_loadu_pd(crow + j) : _mm256_setzero_pd();
            for (index_t p = 0; p < k; ++p)
                c0 = _mm256_fmadd_pd(_mm256_set1_pd(arow[p]),
                                     _mm256_loadu_pd(b + p * n + j), c0);
            _mm256_storeu_pd(crow + j, c0);
        }
        for (; j < n; ++j) {
            double s = accumulate ? crow[j] : 0.0;
            for (index_t p = 0; p < k; ++p) s += arow[p] * b[p * n + j];
            crow[j] = s;
        }
    }
}

void add_f32_avx2(index_t n, const float* a, const float* b, float* out) {
    index_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(out + i, _mm256_add_ps(_mm256_loadu_ps(a + i),
                                                _mm256_loadu_ps(b + i)));
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

void add_f64_avx2(index_t n, const double* a, const double* b, double* out) {
    index_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i),
                                                _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

void mul_f32_avx2(index_t n, const float* a, const float* b, float* out) {
    index_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(out + i, _mm256_mul_ps(_mm256_loadu_ps(a + i),
                                                _mm256_loadu_ps(b + i)));
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void mul_f64_avx2(index_t n, const double* a, const double* b, double* out) {
    index_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i),
                                                _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void scale_f32_avx2(index_t n, float alpha, const float* x, float* out) {
    const __m256 va = _mm256_set1_ps(alpha);
    index_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(out + i, _mm256_mul_ps(va, _mm256_loadu_ps(x + i)));
    for (; i < n; ++i) out[i] = alpha * x[i];
}

void scale_f64_avx2(index_t n, double alpha, const double* x, double* out) {
    const __m256d va = _mm256_set1_pd(alpha);
    index_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) out[i] = alpha * x[i];
}

void axpy_f32_avx2(index_t n, float alpha, const float* x, float* y) {
    const __m256 va = _mm256_set1_ps(alpha);
    index_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(y + i, _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i),
                                                _mm256_loadu_ps(y + i)));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void axpy_f64_avx2(index_t n, double alpha, const double* x, double* y) {
    const __m256d va = _mm256_set1_pd(alpha);
    index_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i),
                                                _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

float sum_f32_avx2(index_t n, const float* x) {
    __m256 acc = _mm256_setzero_ps();
    index_t i = 0;
    for (; i + 8 <= n; i += 8) acc = _mm256_add_ps(acc, _mm256_loadu_ps(x + i));
    float s = hsum(acc);
    for (; i < n; ++i) s += x[i];
    return s;
}

double sum_f64_avx2(index_t n, const double* x) {
    __m256d acc = _mm256_setzero_pd();
    index_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double s = hsum(acc);
    for (; i < n; ++i) s += x[i];
    return s;
}

float max_f32_avx2(index_t n, const float* x) {
    float m = x[0];
    index_t i = 0;
    if (n >= 8) {
        __m256 acc = _mm256_loadu_ps(x);
        for (i = 8; i + 8 <= n; i += 8)
            acc = _mm256_max_ps(acc, _mm256_loadu_ps(x + i));
        m = hmax(acc);
    }
    for (; i < n; ++i) m = std::max(m, x[i]);
    return m;
}

double max_f64_avx2(index_t n, const double* x) {
    double m = x[0];
    index_t i = 0;
    if (n >= 4) {
        __m256d acc = _mm256_loadu_pd(x);
        for (i = 4; i + 4 <= n; i += 4)
            acc = _mm256_max_pd(acc, _mm256_loadu_pd(x + i));
        m = hmax(acc);
    }
    for (; i < n; ++i) m = std::max(m, x[i]);
    return m;
}

float dot_f32_avx2(index_t n, const float* a, const float* b) {
    __m256 acc = _mm256_setzero_ps();
    index_t i = 0;
    for (; i + 8 <= n; i += 8)
        acc = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc);
    float s = hsum(acc);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

double dot_f64_avx2(index_t n, const double* a, const double* b) {
    __m256d acc = _mm256_setzero_pd();
    index_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
    double s = hsum(acc);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

const KernelTable avx2_impl = {
    "avx2",
    gemm_f32_avx2,  gemm_f64_avx2,
    add_f32_avx2,   add_f64_avx2,
    mul_f32_avx2,   mul_f64_avx2,
    scale_f32_avx2, scale_f64_avx2,
    axpy_f32_avx2,  axpy_f64_avx2,
    sum_f32_avx2,   sum_f64_avx2,
    max_f32_avx2,   max_f64_avx2,
    dot_f32_avx2,   dot_f64_avx2,
};

}  // namespace

const KernelTable* avx2_table() {
    static const KernelTable* table = []() -> const KernelTable* {
        if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
            return &avx2_impl;
        return nullptr;
    }();
    return table;
}

}  // namespace lawin::kernels

#else

namespace lawin::kernels {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace lawin::kernels

#endif
