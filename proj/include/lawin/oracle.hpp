#pragma once

#include <cmath>
#include <vector>

#include "lawin/common.hpp"

// Brute-force reference computations for the verification suites. All of
// these are deliberately written as plain loops over std::vector<double>,
// independent of the tensor engine and the SIMD kernels they check.

namespace lawin::oracle {

inline std::vector<double> matmul(const std::vector<double>& a, index_t m, index_t k,
                                  const std::vector<double>& b, index_t n) {
    std::vector<double> c(static_cast<std::size_t>(m * n), 0.0);
    for (index_t i = 0; i < m; ++i)
        for (index_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (index_t p = 0; p < k; ++p)
                s += a[static_cast<std::size_t>(i * k + p)] *
                     b[static_cast<std::size_t>(p * n + j)];
            c[static_cast<std::size_t>(i * n + j)] = s;
        }
    return c;
}

inline std::vector<double> softmax_rows(const std::vector<double>& x, index_t rows,
                                        index_t cols) {
    std::vector<double> y(x.size());
    for (index_t r = 0; r < rows; ++r) {
        const double* px = x.data() + r * cols;
        double* py = y.data() + r * cols;
        double mx = px[0];
        for (index_t j = 1; j < cols; ++j) mx = std::max(mx, px[j]);
        double denom = 0.0;
        for (index_t j = 0; j < cols; ++j) {
            py[j] = std::exp(px[j] - mx);
            denom += py[j];
        }
        for (index_t j = 0; j < cols; ++j) py[j] /= denom;
    }
    return y;
}

inline std::vector<double> avg_pool(const std::vector<double>& x, index_t c, index_t h,
                                    index_t w, index_t k) {
    const index_t oh = h / k, ow = w / k;
    std::vector<double> y(static_cast<std::size_t>(c * oh * ow), 0.0);
    for (index_t ch = 0; ch < c; ++ch)
        for (index_t i = 0; i < oh; ++i)
            for (index_t j = 0; j < ow; ++j) {
                double s = 0.0;
                for (index_t u = 0; u < k; ++u)
                    for (index_t v = 0; v < k; ++v)
                        s += x[static_cast<std::size_t>(ch * h * w + (i * k + u) * w +
                                                        (j * k + v))];
                y[static_cast<std::size_t>(ch * oh * ow + i * ow + j)] =
                    s / static_cast<double>(k * k);
            }
    return y;
}

inline std::vector<double> bilinear(const std::vector<double>& x, index_t c, index_t h,
                                    index_t w, index_t oh, index_t ow) {
    std::vector<double> y(static_cast<std::size_t>(c * oh * ow), 0.0);
    auto sample = [&](index_t ch, double si, double sj) {
        if (si < 0) si = 0;
        if (sj < 0) sj = 0;
        if (si > static_cast<double>(h - 1)) si = static_cast<double>(h - 1);
        if (sj > static_cast<double>(w - 1)) sj = static_cast<double>(w - 1);
        const index_t i0 = static_cast<index_t>(si);
        const index_t j0 = static_cast<index_t>(sj);
        const index_t i1 = std::min(i0 + 1, h - 1);
        const index_t j1 = std::min(j0 + 1, w - 1);
        const double fi = si - static_cast<double>(i0);
        const double fj = sj - static_cast<double>(j0);
        auto at = [&](index_t ii, index_t jj) {
            return x[static_cast<std::size_t>(ch * h * w + ii * w + jj)];
        };
        return (1 - fi) * ((1 - fj) * at(i0, j0) + fj * at(i0, j1)) +
               fi * ((1 - fj) * at(i1, j0) + fj * at(i1, j1));
    };
    for (index_t ch = 0; ch < c; ++ch)
        for (index_t i = 0; i < oh; ++i)
            for (index_t j = 0; j < ow; ++j) {
                const double si =
                    (static_cast<double>(i) + 0.5) * static_cast<double>(h) /
                        static_cast<double>(oh) - 0.5;
                const double sj =
                    (static_cast<double>(j) + 0.5) * static_cast<double>(w) /
                        static_cast<double>(ow) - 0.5;
                y[static_cast<std::size_t>(ch * oh * ow + i * ow + j)] = sample(ch, si, sj);
            }
    return y;
}

}  // namespace lawin::oracle
