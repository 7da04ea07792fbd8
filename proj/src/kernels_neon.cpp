#include "lawin/kernels.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

#include <algorithm>

namespace lawin::kernels {
namespace {

void gemm_f32_neon(index_t m, index_t n, index_t k, const float* a,
                   const float* b, float* c, bool accumulate) {
    for (index_t i = 0; i < m; ++i) {
        const float* arow = a + i * k;
        float* crow = c + i * n;
        index_t j = 0;
        for (; j + 16 <= n; j += 16) {
            float32x4_t c0, c1, c2, c3;
            if (accumulate) {
                c0 = vld1q_f32(crow + j);
                c1 = vld1q_f32(crow + j + 4);
                c2 = vld1q_f32(crow + j + 8);
                c3 = vld1q_f32(crow + j + 12);
            } else {
                c0 = c1 = c2 = c3 = vdupq_n_f32(0.0f);
            }
            for (index_t p = 0; p < k; ++p) {
                const float32x4_t av = vdupq_n_f32(arow[p]);
                const float* brow = b + p * n + j;
                c0 = vfmaq_f32(c0, av, vld1q_f32(brow));
                c1 = vfmaq_f32(c1, av, vld1q_f32(brow + 4));
                c2 = vfmaq_f32(c2, av, vld1q_f32(brow + 8));
                c3 = vfmaq_f32(c3, av, vld1q_f32(brow + 12));
            }
            vst1q_f32(crow + j, c0);
            vst1q_f32(crow + j + 4, c1);
            vst1q_f32(crow + j + 8, c2);
            vst1q_f32(crow + j + 12, c3);
        }
        for (; j + 4 <= n; j += 4) {
            float32x4_t c0 = accumulate ? vld1q_f32(crow + j) : vdupq_n_f32(0.0f);
            for (index_t p = 0; p < k; ++p)
                c0 = vfmaq_f32(c0, vdupq_n_f32(arow[p]), vld1q_f32(b + p * n + j));
            vst1q_f32(crow + j, c0);
        }
        for (; j < n; ++j) {
            float s = accumulate ? crow[j] : 0.0f;
            for (index_t p = 0; p < k; ++p) s += arow[p] * b[p * n + j];
            crow[j] = s;
        }
    }
}

void gemm_f64_neon(index_t m, index_t n, index_t k, const double* a,
                   const double* b, double* c, bool accumulate) {
    for (index_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        index_t j = 0;
        for (; j + 8 <= n; j += 8) {
            float64x2_t c0, c1, c2, c3;
            if (accumulate) {
                c0 = vld1q_f64(crow + j);
                c1 = vld1q_f64(crow + j + 2);
                c2 = vld1q_f64(crow + j + 4);
                c3 = vld1q_f64(crow + j + 6);
            } else {
                c0 = c1 = c2 = c3 = vdupq_n_f64(0.0);
            }
            for (index_t p = 0; p < k; ++p) {
                const float64x2_t av = vdupq_n_f64(arow[p]);
                const double* brow = b + p * n + j;
                c0 = vfmaq_f64(c0, av, vld1q_f64(brow));
                c1 = vfmaq_f64(c1, av, vld1q_f64(brow + 2));
                c2 = vfmaq_f64(c2, av, vld1q_f64(brow + 4));
                c3 = vfmaq_f64(c3, av, vld1q_f64(brow + 6));
            }
            vst1q_f64(crow + j, c0);
            vst1q_f64(crow + j + 2, c1);
            vst1q_f64(crow + j + 4, c2);
            vst1q_f64(crow + j + 6, c3);
        }
        for (; j + 2 <= n; j += 2) {
            float64x2_t c0 = accumulate ? vld1q_f64(crow + j) : vdupq_n_f64(0.0);
            for (index_t p = 0; p < k; ++p)
                c0 = vfmaq_f64(c0, vdupq_n_f64(arow[p]), vld1q_f64(b + p * n + j));
            vst1q_f64(crow + j, c0);
        }
        for (; j < n; ++j) {
            double s = accumulate ? crow[j] : 0.0;
            for (index_t p = 0; p < k; ++p) s += arow[p] * b[p * n + j];
            crow[j] = s;
        }
    }
}

void add_f32_neon(index_t n, const float* a, const float* b, float* out) {
    index_t i = 0;
    for (; i + 4 <= n; i += 4)
        vst1q_f32(out + i, vaddq_f32(vld1q_f32(a + i), vld1q_f32(b + i)));
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

void add_f64_neon(index_t n, const double* a, const double* b, double* out) {
    index_t i = 0;
    for (; i + 2 <= n; i += 2)
        vst1q_f64(out + i, vaddq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

void mul_f32_neon(index_t n, const float* a, const float* b, float* out) {
    index_t i = 0;
    for (; i + 4 <= n; i += 4)
        vst1q_f32(out + i, vmulq_f32(vld1q_f32(a + i), vld1q_f32(b + i)));
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void mul_f64_neon(index_t n, const double* a, const double* b, double* out) {
    index_t i = 0;
    for (; i + 2 <= n; i += 2)
        vst1q_f64(out + i, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void scale_f32_neon(index_t n, float alpha, const float* x, float* out) {
    const float32x4_t va = vdupq_n_f32(alpha);
    index_t i = 0;
    for (; i + 4 <= n; i += 4)
        vst1q_f32(out + i, vmulq_f32(va, vld1q_f32(x + i)));
    for (; i < n; ++i) out[i] = alpha * x[i];
}

void scale_f64_neon(index_t n, double alpha, const double* x, double* out) {
    const float64x2_t va = vdupq_n_f64(alpha);
    index_t i = 0;
    for (; i + 2 <= n; i += 2)
        vst1q_f64(out + i, vmulq_f64(va, vld1q_f64(x + i)));
    for (; i < n; ++i) out[i] = alpha * x[i];
}

void axpy_f32_neon(index_t n, float alpha, const float* x, float* y) {
    const float32x4_t va = vdupq_n_f32(alpha);
    index_t i = 0;
    for (; i + 4 <= n; i += 4)
        vst1q_f32(y + i, vfmaq_f32(vld1q_f32(y + i), va, vld1q_f32(x + i)));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void axpy_f64_neon(index_t n, double alpha, const double* x, double* y) {
    const float64x2_t va = vdupq_n_f64(alpha);
    index_t i = 0;
    for (; i + 2 <= n; i += 2)
        vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

float sum_f32_neon(index_t n, const float* x) {
    float32x4_t acc = vdupq_n_f32(0.0f);
    index_t i = 0;
    for (; i + 4 <= n; i += 4) acc = vaddq_f32(acc, vld1q_f32(x + i));
    float s = vaddvq_f32(acc);
    for (; i < n; ++i) s += x[i];
    return s;
}

double sum_f64_neon(index_t n, const double* x) {
    float64x2_t acc = vdupq_n_f64(0.0);
    index_t i = 0;
    for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vld1q_f64(x + i));
    double s = vaddvq_f64(acc);
    for (; i < n; ++i) s += x[i];
    return s;
}

float max_f32_neon(index_t n, const float* x) {
    float m = x[0];
    index_t i = 0;
    if (n >= 4) {
        float32x4_t acc = vld1q_f32(x);
        for (i = 4; i + 4 <= n; i += 4) acc = vmaxq_f32(acc, vld1q_f32(x + i));
        m = vmaxvq_f32(acc);
    }
    for (; i < n; ++i) m = std::max(m, x[i]);
    return m;
}

double max_f64_neon(index_t n, const double* x) {
    double m = x[0];
    index_t i = 0;
    if (n >= 2) {
        float64x2_t acc = vld1q_f64(x);
        for (i = 2; i + 2 <= n; i += 2) acc = vmaxq_f64(acc, vld1q_f64(x + i));
        m = vmaxvq_f64(acc);
    }
    for (; i < n; ++i) m = std::max(m, x[i]);
    return m;
}

float dot_f32_neon(index_t n, const float* a, const float* b) {
    float32x4_t acc = vdupq_n_f32(0.0f);
    index_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = vfmaq_f32(acc, vld1q_f32(a + i), vld1q_f32(b + i));
    float s = vaddvq_f32(acc);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

double dot_f64_neon(index_t n, const double* a, const double* b) {
    float64x2_t acc = vdupq_n_f64(0.0);
    index_t i = 0;
    for (; i + 2 <= n; i += 2)
        acc = vfmaq_f64(acc, vld1q_f64(a + i), vld1q_f64(b + i));
    double s = vaddvq_f64(acc);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

const KernelTable neon_impl = {
    "neon",
    gemm_f32_neon,  gemm_f64_neon,
    add_f32_neon,   add_f64_neon,
    mul_f32_neon,   mul_f64_neon,
    scale_f32_neon, scale_f64_neon,
    axpy_f32_neon,  axpy_f64_neon,
    sum_f32_neon,   sum_f64_neon,
    max_f32_neon,   max_f64_neon,
    dot_f32_neon,   dot_f64_neon,
};

}  // namespace

const KernelTable* neon_table() { return &neon_impl; }

}  // namespace lawin::kernels

#else

namespace lawin::kernels {
const KernelTable* neon_table() { return nullptr; }
}  // namespace lawin::kernels

#endif
