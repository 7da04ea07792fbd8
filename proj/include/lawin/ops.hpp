#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "lawin/flops.hpp"
#include "lawin/kernels.hpp"
#include "lawin/tensor.hpp"
#include "lawin/threading.hpp"

namespace lawin {

namespace ops_detail {

inline std::vector<index_t> strides_of(const Shape& s) {
    std::vector<index_t> st(s.size());
    index_t acc = 1;
    for (int i = static_cast<int>(s.size()) - 1; i >= 0; --i) {
        st[static_cast<std::size_t>(i)] = acc;
        acc *= s[static_cast<std::size_t>(i)];
    }
    return st;
}

inline Shape broadcast_shapes(const Shape& a, const Shape& b, const char* op) {
    const std::size_t r = std::max(a.size(), b.size());
    Shape out(r);
    for (std::size_t i = 0; i < r; ++i) {
        const index_t da = i < r - a.size() ? 1 : a[i - (r - a.size())];
        const index_t db = i < r - b.size() ? 1 : b[i - (r - b.size())];
        if (da != db && da != 1 && db != 1)
            throw ShapeError(str(op, ": shapes ", shape_str(a), " and ", shape_str(b),
                                 " do not broadcast"));
        out[i] = std::max(da, db);
    }
    return out;
}

// strides into `in` for iteration over `out`, 0 on broadcast axes
inline std::vector<index_t> broadcast_strides(const Shape& in, const Shape& out) {
    const std::size_t r = out.size();
    std::vector<index_t> st(r, 0);
    const auto in_st = strides_of(in);
    const std::size_t off = r - in.size();
    for (std::size_t i = 0; i < in.size(); ++i)
        st[off + i] = in[i] == 1 && out[off + i] != 1 ? 0 : in_st[i];
    return st;
}

// walks every element of `out_shape`, handing the linear offsets into two
// broadcast inputs to `fn(out_idx, a_idx, b_idx)`
template <typename Fn>
void for_each_broadcast2(const Shape& out_shape, const Shape& a_shape,
                         const Shape& b_shape, Fn&& fn) {
    const index_t n = numel_of(out_shape);
    const auto sa = broadcast_strides(a_shape, out_shape);
    const auto sb = broadcast_strides(b_shape, out_shape);
    const auto so = strides_of(out_shape);
    const std::size_t r = out_shape.size();
    for (index_t i = 0; i < n; ++i) {
        index_t rem = i, ia = 0, ib = 0;
        for (std::size_t d = 0; d < r; ++d) {
            const index_t q = rem / so[d];
            rem -= q * so[d];
            ia += q * sa[d];
            ib += q * sb[d];
        }
        fn(i, ia, ib);
    }
}

// [outer, axis extent, inner] view of a shape around one axis
struct AxisSplit {
    index_t outer, extent, inner;
};

inline AxisSplit split_axis(const Shape& s, int axis) {
    const int r = static_cast<int>(s.size());
    if (axis < 0) axis += r;
    if (axis < 0 || axis >= r)
        throw ShapeError(str("axis ", axis, " out of range for shape ", shape_str(s)));
    AxisSplit a{1, s[static_cast<std::size_t>(axis)], 1};
    for (int i = 0; i < axis; ++i) a.outer *= s[static_cast<std::size_t>(i)];
    for (int i = axis + 1; i < r; ++i) a.inner *= s[static_cast<std::size_t>(i)];
    return a;
}

constexpr index_t kGemmParallelThreshold = 1 << 21;

template <typename T>
void gemm_threaded(index_t m, index_t n, index_t k, const T* a, const T* b, T* c,
                   bool accumulate) {
    if (worker_count() > 1 && m > 1 && m * n * k >= kGemmParallelThreshold) {
        parallel_for(0, m, 16, [&](index_t lo, index_t hi) {
            kernels::gemm<T>(hi - lo, n, k, a + lo * k, b, c + lo * n, accumulate);
        });
    } else {
        kernels::gemm<T>(m, n, k, a, b, c, accumulate);
    }
}

template <typename T>
void transpose2d(index_t rows, index_t cols, const T* in, T* out) {
    for (index_t i = 0; i < rows; ++i)
        for (index_t j = 0; j < cols; ++j) out[j * rows + i] = in[i * cols + j];
}

}  // namespace ops_detail

// ---------------------------------------------------------------------------
// elementwise binary ops with numpy-style broadcasting

namespace ops_detail {

enum class BinKind { Add, Sub, Mul };

template <typename T>
Tensor<T> binary_op(const Tensor<T>& a, const Tensor<T>& b, BinKind kind,
                    const char* name) {
    const Shape out_shape = broadcast_shapes(a.shape(), b.shape(), name);
    Tensor<T> out = Tensor<T>::zeros(out_shape);
    const bool same = a.shape() == out_shape && b.shape() == out_shape;
    if (same) {
        switch (kind) {
            case BinKind::Add: kernels::add<T>(out.numel(), a.data(), b.data(), out.data()); break;
            case BinKind::Mul: kernels::mul<T>(out.numel(), a.data(), b.data(), out.data()); break;
            case BinKind::Sub:
                for (index_t i = 0; i < out.numel(); ++i)
                    out.data()[i] = a.data()[i] - b.data()[i];
                break;
        }
    } else {
        const T* pa = a.data();
        const T* pb = b.data();
        T* po = out.data();
        for_each_broadcast2(out_shape, a.shape(), b.shape(),
                            [&](index_t io, index_t ia, index_t ib) {
                                switch (kind) {
                                    case BinKind::Add: po[io] = pa[ia] + pb[ib]; break;
                                    case BinKind::Sub: po[io] = pa[ia] - pb[ib]; break;
                                    case BinKind::Mul: po[io] = pa[ia] * pb[ib]; break;
                                }
                            });
    }
    flops::add_elementwise_flops(static_cast<std::uint64_t>(out.numel()));
    if (grad_recording_needed<T>({&a, &b})) {
        out.set_requires_grad(true);
        Tensor<T> ac = a, bc = b, oc = out;
        Tape<T>::active()->record({a, b, out}, [ac, bc, oc, kind]() mutable {
            const T* go = oc.grad_data();
            T* ga = ac.requires_grad() ? ac.grad_data() : nullptr;
            T* gb = bc.requires_grad() ? bc.grad_data() : nullptr;
            const T* pa = ac.data();
            const T* pb = bc.data();
            for_each_broadcast2(oc.shape(), ac.shape(), bc.shape(),
                                [&](index_t io, index_t ia, index_t ib) {
                                    switch (kind) {
                                        case BinKind::Add:
                                            if (ga) ga[ia] += go[io];
                                            if (gb) gb[ib] += go[io];
                                            break;
                                        case BinKind::Sub:
                                            if (ga) ga[ia] += go[io];
                                            if (gb) gb[ib] -= go[io];
                                            break;
                                        case BinKind::Mul:
                                            if (ga) ga[ia] += go[io] * pb[ib];
                                            if (gb) gb[ib] += go[io] * pa[ia];
                                            break;
                                    }
                                });
        });
    }
    return out;
}

}  // namespace ops_detail

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    return ops_detail::binary_op(a, b, ops_detail::BinKind::Add, "add");
}
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
    return ops_detail::binary_op(a, b, ops_detail::BinKind::Sub, "sub");
}
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    return ops_detail::binary_op(a, b, ops_detail::BinKind::Mul, "mul");
}

template <typename T>
Tensor<T> scale_by(const Tensor<T>& x, T c) {
    Tensor<T> out = Tensor<T>::zeros(x.shape());
    kernels::scale<T>(x.numel(), c, x.data(), out.data());
    flops::add_elementwise_flops(static_cast<std::uint64_t>(x.numel()));
    if (grad_recording_needed<T>({&x})) {
        out.set_requires_grad(true);
        Tensor<T> xc = x, oc = out;
        Tape<T>::active()->record({x, out}, [xc, oc, c]() mutable {
            kernels::axpy<T>(xc.numel(), c, oc.grad_data(), xc.grad_data());
        });
    }
    return out;
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& x, T c) {
    Tensor<T> out = Tensor<T>::zeros(x.shape());
    for (index_t i = 0; i < x.numel(); ++i) out.data()[i] = x.data()[i] + c;
    flops::add_elementwise_flops(static_cast<std::uint64_t>(x.numel()));
    if (grad_recording_needed<T>({&x})) {
        out.set_requires_grad(true);
        Tensor<T> xc = x, oc = out;
        Tape<T>::active()->record({x, out}, [xc, oc]() mutable {
            kernels::axpy<T>(xc.numel(), T(1), oc.grad_data(), xc.grad_data());
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// activations

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
    Tensor<T> out = Tensor<T>::zeros(x.shape());
    for (index_t i = 0; i < x.numel(); ++i)
        out.data()[i] = x.data()[i] > T(0) ? x.data()[i] : T(0);
    flops::add_elementwise_flops(static_cast<std::uint64_t>(x.numel()));
    if (grad_recording_needed<T>({&x})) {
        out.set_requires_grad(true);
        Tensor<T> xc = x, oc = out;
        Tape<T>::active()->record({x, out}, [xc, oc]() mutable {
            const T* go = oc.grad_data();
            T* gx = xc.grad_data();
            const T* px = xc.data();
            for (index_t i = 0; i < xc.numel(); ++i)
                if (px[i] > T(0)) gx[i] += go[i];
        });
    }
    return out;
}

// exact erf form: 0.5 x (1 + erf(x / sqrt 2))
template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
    Tensor<T> out = Tensor<T>::zeros(x.shape());
    constexpr double inv_sqrt2 = 0.7071067811865475244;
    for (index_t i = 0; i < x.numel(); ++i) {
        const double v = static_cast<double>(x.data()[i]);
        out.data()[i] = static_cast<T>(0.5 * v * (1.0 + std::erf(v * inv_sqrt2)));
    }
    flops::add_elementwise_flops(static_cast<std::uint64_t>(4 * x.numel()));
    if (grad_recording_needed<T>({&x})) {
        out.set_requires_grad(true);
        Tensor<T> xc = x, oc = out;
        Tape<T>::active()->record({x, out}, [xc, oc]() mutable {
            constexpr double inv_sqrt2pi = 0.3989422804014326779;
            const T* go = oc.grad_data();
            T* gx = xc.grad_data();
            const T* px = xc.data();
            for (index_t i = 0; i < xc.numel(); ++i) {
                const double v = static_cast<double>(px[i]);
                const double cdf = 0.5 * (1.0 + std::erf(v * inv_sqrt2));
                const double pdf = inv_sqrt2pi * std::exp(-0.5 * v * v);
                gx[i] += go[i] * static_cast<T>(cdf + v * pdf);
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// shape ops

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape new_shape) {
    if (numel_of(new_shape) != x.numel())
        throw ShapeError(str("reshape: ", shape_str(x.shape()), " -> ",
                             shape_str(new_shape), " changes element count"));
    Tensor<T> out = Tensor<T>::from(std::move(new_shape), x.values());
    if (grad_recording_needed<T>({&x})) {
        out.set_requires_grad(true);
        Tensor<T> xc = x, oc = out;
        Tape<T>::active()->record({x, out}, [xc, oc]() mutable {
            kernels::axpy<T>(xc.numel(), T(1), oc.grad_data(), xc.grad_data());
        });
    }
    return out;
}

template <typename T>
Tensor<T> permute(const Tensor<T>& x, const std::vector<int>& perm) {
    const int r = x.rank();
    if (static_cast<int>(perm.size()) != r)
        throw ShapeError(str("permute: got ", perm.size(), " axes for rank ", r));
    std::vector<bool> used(static_cast<std::size_t>(r), false);
    Shape out_shape(static_cast<std::size_t>(r));
    for (int i = 0; i < r; ++i) {
        const int p = perm[static_cast<std::size_t>(i)];
        if (p < 0 || p >= r || used[static_cast<std::size_t>(p)])
            throw ShapeError(str("permute: invalid axis list for rank ", r));
        used[static_cast<std::size_t>(p)] = true;
        out_shape[static_cast<std::size_t>(i)] = x.shape()[static_cast<std::size_t>(p)];
    }
    Tensor<T> out = Tensor<T>::zeros(out_shape);
    const auto in_st = ops_detail::strides_of(x.shape());
    const auto out_st = ops_detail::strides_of(out_shape);
    const index_t n = x.numel();
    const T* px = x.data();
    T* po = out.data();
    for (index_t i = 0; i < n; ++i) {
        index_t rem = i, src = 0;
        for (int d = 0; d < r; ++d) {
            const index_t q = rem / out_st[static_cast<std::size_t>(d)];
            rem -= q * out_st[static_cast<std::size_t>(d)];
            src += q * in_st[static_cast<std::size_t>(perm[static_cast<std::size_t>(d)])];
        }
        po[i] = px[src];
    }
    if (grad_recording_needed<T>({&x})) {
        out.set_requires_grad(true);
        Tensor<T> xc = x, oc = out;
        std::vector<int> perm_copy = perm;
        Tape<T>::active()->record({x, out}, [xc, oc, perm_copy]() mutable {
            const auto in_st = ops_detail::strides_of(xc.shape());
            const auto out_st = ops_detail::strides_of(oc.shape());
            const int r = xc.rank();
            const T* go = oc.grad_data();
            T* gx = xc.grad_data();
            for (index_t i = 0; i < oc.numel(); ++i) {
                index_t rem = i, src = 0;
                for (int d = 0; d < r; ++d) {
                    const index_t q = rem / out_st[static_cast<std::size_t>(d)];
                    rem -= q * out_st[static_cast<std::size_t>(d)];
                    src += q * in_st[static_cast<std::size_t>(perm_copy[static_cast<std::size_t>(d)])];
                }
                gx[src] += go[i];
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> transpose_last2(const Tensor<T>& x) {
    std::vector<int> perm(static_cast<std::size_t>(x.rank()));
    for (int i = 0; i < x.rank(); ++i) perm[static_cast<std::size_t>(i)] = i;
    std::swap(perm[perm.size() - 1], perm[perm.size() - 2]);
    return permute(x, perm);
}

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& xs, int axis) {
    if (xs.empty()) throw ShapeError("concat: empty input list");
    const auto base = ops_detail::split_axis(xs[0].shape(), axis);
    const int r = xs[0].rank();
    if (axis < 0) axis += r;
    index_t total = 0;
    for (const auto& x : xs) {
        if (x.rank() != r)
            throw ShapeError("concat: rank mismatch");
        for (int d = 0; d < r; ++d)
            if (d != axis && x.shape()[static_cast<std::size_t>(d)] !=
                                 xs[0].shape()[static_cast<std::size_t>(d)])
                throw ShapeError(str("concat: shape mismatch ", shape_str(x.shape()),
                                     " vs ", shape_str(xs[0].shape())));
        total += x.shape()[static_cast<std::size_t>(axis)];
    }
    Shape out_shape = xs[0].shape();
    out_shape[static_cast<std::size_t>(axis)] = total;
    Tensor<T> out = Tensor<T>::zeros(out_shape);
    T* po = out.data();
    const index_t out_row = total * base.inner;
    index_t col_off = 0;
    for (const auto& x : xs) {
        const index_t len = x.shape()[static_cast<std::size_t>(axis)] * base.inner;
        const T* px = x.data();
        for (index_t o = 0; o < base.outer; ++o)
            std::copy(px + o * len, px + (o + 1) * len, po + o * out_row + col_off);
        col_off += len;
    }
    if (Tape<T>::active()) {
        bool any = false;
        for (const auto& x : xs) any = any || x.requires_grad();
        if (any) {
            out.set_requires_grad(true);
            std::vector<Tensor<T>> involved = xs;
            involved.push_back(out);
            std::vector<Tensor<T>> ins = xs;
            Tensor<T> oc = out;
            const index_t outer = base.outer, inner = base.inner;
            Tape<T>::active()->record(involved, [ins, oc, outer, inner, out_row]() mutable {
                const T* go = oc.grad_data();
                index_t col_off = 0;
                for (auto& x : ins) {
                    const index_t len = x.numel() / outer;
                    if (x.requires_grad()) {
                        T* gx = x.grad_data();
                        for (index_t o = 0; o < outer; ++o)
                            kernels::axpy<T>(len, T(1), go + o * out_row + col_off, gx + o * len);
                    }
                    col_off += len;
                }
                (void)inner;
            });
        }
    }
    return out;
}

template <typename T>
Tensor<T> slice(const Tensor<T>& x, int axis, index_t start, index_t len) {
    const auto base = ops_detail::split_axis(x.shape(), axis);
    const int r = x.rank();
    if (axis < 0) axis += r;
    if (start < 0 || len < 1 || start + len > base.extent)
        throw ShapeError(str("slice: [", start, ", ", start + len, ") out of range for extent ",
                             base.extent));
    Shape out_shape = x.shape();
    out_shape[static_cast<std::size_t>(axis)] = len;
    Tensor<T> out = Tensor<T>::zeros(out_shape);
    const index_t in_row = base.extent * base.inner;
    const index_t out_row = len * base.inner;
    const index_t off = start * base.inner;
    const T* px = x.data();
    T* po = out.data();
    for (index_t o = 0; o < base.outer; ++o)
        std::copy(px + o * in_row + off, px + o * in_row + off + out_row, po + o * out_row);
    if (grad_recording_needed<T>({&x})) {
        out.set_requires_grad(true);
        Tensor<T> xc = x, oc = out;
        const index_t outer = base.outer;
        Tape<T>::active()->record({x, out}, [xc, oc, outer, in_row, out_row, off]() mutable {
            const T* go = oc.grad_data();
            T* gx = xc.grad_data();
            for (index_t o = 0; o < outer; ++o)
                kernels::axpy<T>(out_row, T(1), go + o * out_row, gx + o * in_row + off);
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// matmul: [..., M, K] x [..., K, N] -> [..., M, N], batch dims broadcast

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.rank() < 2 || b.rank() < 2)
        throw ShapeError(str("matmul: inputs must have rank >= 2, got ",
                             shape_str(a.shape()), " and ", shape_str(b.shape())));
    const index_t m = a.dim(-2), ka = a.dim(-1);
    const index_t kb = b.dim(-2), n = b.dim(-1);
    if (ka != kb)
        throw ShapeError(str("matmul: inner extents differ, ", shape_str(a.shape()),
                             " vs ", shape_str(b.shape())));
    const Shape a_batch(a.shape().begin(), a.shape().end() - 2);
    const Shape b_batch(b.shape().begin(), b.shape().end() - 2);
    const Shape batch = ops_detail::broadcast_shapes(a_batch, b_batch, "matmul");
    Shape out_shape = batch;
    out_shape.push_back(m);
    out_shape.push_back(n);
    Tensor<T> out = Tensor<T>::zeros(out_shape);

    const index_t nbatch = numel_of(batch);
    const auto sa = ops_detail::broadcast_strides(a_batch, batch);
    const auto sb = ops_detail::broadcast_strides(b_batch, batch);
    const auto sbt = ops_detail::strides_of(batch);
    const index_t a_block = m * ka, b_block = ka * n, o_block = m * n;
    auto batch_offsets = [&](index_t bi, index_t& ia, index_t& ib) {
        index_t rem = bi;
        ia = ib = 0;
        for (std::size_t d = 0; d < batch.size(); ++d) {
            const index_t q = rem / sbt[d];
            rem -= q * sbt[d];
            ia += q * sa[d];
            ib += q * sb[d];
        }
    };

    for (index_t bi = 0; bi < nbatch; ++bi) {
        index_t ia, ib;
        batch_offsets(bi, ia, ib);
        ops_detail::gemm_threaded<T>(m, n, ka, a.data() + ia * a_block,
                                     b.data() + ib * b_block,
                                     out.data() + bi * o_block, false);
    }
    flops::add_matmul_macs(static_cast<std::uint64_t>(nbatch) *
                           static_cast<std::uint64_t>(m) *
                           static_cast<std::uint64_t>(n) *
                           static_cast<std::uint64_t>(ka));

    if (grad_recording_needed<T>({&a, &b})) {
        out.set_requires_grad(true);
        Tensor<T> ac = a, bc = b, oc = out;
        Tape<T>::active()->record(
            {a, b, out},
            [ac, bc, oc, batch, sa, sb, sbt, m, n, ka, a_block, b_block, o_block]() mutable {
                const index_t nbatch = numel_of(batch);
                const T* go = oc.grad_data();
                std::vector<T> scratch;
                for (index_t bi = 0; bi < nbatch; ++bi) {
                    index_t rem = bi, ia = 0, ib = 0;
                    for (std::size_t d = 0; d < batch.size(); ++d) {
                        const index_t q = rem / sbt[d];
                        rem -= q * sbt[d];
                        ia += q * sa[d];
                        ib += q * sb[d];
                    }
                    const T* gblock = go + bi * o_block;
                    if (ac.requires_grad()) {
                        // da += dout * b^T
                        scratch.resize(static_cast<std::size_t>(b_block));
                        ops_detail::transpose2d(ka, n, bc.data() + ib * b_block, scratch.data());
                        ops_detail::gemm_threaded<T>(m, ka, n, gblock, scratch.data(),
                                                     ac.grad_data() + ia * a_block, true);
                    }
                    if (bc.requires_grad()) {
                        // db += a^T * dout
                        scratch.resize(static_cast<std::size_t>(a_block));
                        ops_detail::transpose2d(m, ka, ac.data() + ia * a_block, scratch.data());
                        ops_detail::gemm_threaded<T>(ka, n, m, scratch.data(), gblock,
                                                     bc.grad_data() + ib * b_block, true);
                    }
                }
                flops::add_matmul_macs(2 * static_cast<std::uint64_t>(nbatch) *
                                       static_cast<std::uint64_t>(m) *
                                       static_cast<std::uint64_t>(n) *
                                       static_cast<std::uint64_t>(ka));
            });
    }
    return out;
}

// ---------------------------------------------------------------------------
// softmax over the last axis, max-subtracted

template <typename T>
Tensor<T> softmax_lastdim(const Tensor<T>& x) {
    if (x.rank() < 1 || x.dim(-1) < 1)
        throw ShapeError(str("softmax: needs a non-empty last axis, got ",
                             shape_str(x.shape())));
    const index_t cols = x.dim(-1);
    const index_t rows = x.numel() / cols;
    Tensor<T> out = Tensor<T>::zeros(x.shape());
    for (index_t r = 0; r < rows; ++r) {
        const T* px = x.data() + r * cols;
        T* po = out.data() + r * cols;
        const T mx = kernels::max<T>(cols, px);
        T denom = T(0);
        for (index_t j = 0; j < cols; ++j) {
            po[j] = static_cast<T>(std::exp(static_cast<double>(px[j] - mx)));
            denom += po[j];
        }
        const T inv = T(1) / denom;
        kernels::scale<T>(cols, inv, po, po);
    }
    flops::add_softmax_flops(static_cast<std::uint64_t>(5 * x.numel()));
    if (grad_recording_needed<T>({&x})) {
        out.set_requires_grad(true);
        Tensor<T> xc = x, oc = out;
        Tape<T>::active()->record({x, out}, [xc, oc, rows, cols]() mutable {
            const T* go = oc.grad_data();
            const T* py = oc.data();
            T* gx = xc.grad_data();
            for (index_t r = 0; r < rows; ++r) {
                const T* yrow = py + r * cols;
                const T* grow = go + r * cols;
                const T s = kernels::dot<T>(cols, grow, yrow);
                T* gxrow = gx + r * cols;
                for (index_t j = 0; j < cols; ++j)
                    gxrow[j] += yrow[j] * (grow[j] - s);
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// reductions

template <typename T>
Tensor<T> sum_all(const Tensor<T>& x) {
    Tensor<T> out = Tensor<T>::scalar(kernels::sum<T>(x.numel(), x.data()));
    flops::add_elementwise_flops(static_cast<std::uint64_t>(x.numel()));
    if (grad_recording_needed<T>({&x})) {
        out.set_requires_grad(true);
        Tensor<T> xc = x, oc = out;
        Tape<T>::active()->record({x, out}, [xc, oc]() mutable {
            const T g = oc.grad()[0];
            T* gx = xc.grad_data();
            for (index_t i = 0; i < xc.numel(); ++i) gx[i] += g;
        });
    }
    return out;
}

template <typename T>
Tensor<T> mean_all(const Tensor<T>& x) {
    return scale_by(sum_all(x), T(1) / static_cast<T>(x.numel()));
}

// keeps the reduced axis as extent 1, broadcast-friendly
template <typename T>
Tensor<T> mean_lastdim(const Tensor<T>& x) {
    const index_t cols = x.dim(-1);
    const index_t rows = x.numel() / cols;
    Shape out_shape = x.shape();
    out_shape.back() = 1;
    Tensor<T> out = Tensor<T>::zeros(out_shape);
    for (index_t r = 0; r < rows; ++r)
        out.data()[r] = kernels::sum<T>(cols, x.data() + r * cols) / static_cast<T>(cols);
    flops::add_elementwise_flops(static_cast<std::uint64_t>(x.numel()));
    if (grad_recording_needed<T>({&x})) {
        out.set_requires_grad(true);
        Tensor<T> xc = x, oc = out;
        Tape<T>::active()->record({x, out}, [xc, oc, rows, cols]() mutable {
            const T* go = oc.grad_data();
            T* gx = xc.grad_data();
            for (index_t r = 0; r < rows; ++r) {
                const T g = go[r] / static_cast<T>(cols);
                for (index_t j = 0; j < cols; ++j) gx[r * cols + j] += g;
            }
        });
    }
    return out;
}

// population variance (divide by N) over the last axis, extent-1 result
template <typename T>
Tensor<T> var_lastdim(const Tensor<T>& x) {
    const index_t cols = x.dim(-1);
    const index_t rows = x.numel() / cols;
    Shape out_shape = x.shape();
    out_shape.back() = 1;
    Tensor<T> out = Tensor<T>::zeros(out_shape);
    for (index_t r = 0; r < rows; ++r) {
        const T* px = x.data() + r * cols;
        const T mu = kernels::sum<T>(cols, px) / static_cast<T>(cols);
        T acc = T(0);
        for (index_t j = 0; j < cols; ++j) acc += (px[j] - mu) * (px[j] - mu);
        out.data()[r] = acc / static_cast<T>(cols);
    }
    flops::add_elementwise_flops(static_cast<std::uint64_t>(3 * x.numel()));
    if (grad_recording_needed<T>({&x})) {
        out.set_requires_grad(true);
        Tensor<T> xc = x, oc = out;
        Tape<T>::active()->record({x, out}, [xc, oc, rows, cols]() mutable {
            const T* go = oc.grad_data();
            T* gx = xc.grad_data();
            const T* px = xc.data();
            for (index_t r = 0; r < rows; ++r) {
                const T* row = px + r * cols;
                const T mu = kernels::sum<T>(cols, row) / static_cast<T>(cols);
                const T g2 = go[r] * T(2) / static_cast<T>(cols);
                for (index_t j = 0; j < cols; ++j) gx[r * cols + j] += g2 * (row[j] - mu);
            }
        });
    }
    return out;
}

// (x - mean) / sqrt(var + eps) per last-axis row, no affine part
template <typename T>
Tensor<T> layer_norm_lastdim(const Tensor<T>& x, T eps = T(1e-5)) {
    const index_t cols = x.dim(-1);
    const index_t rows = x.numel() / cols;
    Tensor<T> out = Tensor<T>::zeros(x.shape());
    for (index_t r = 0; r < rows; ++r) {
        const T* px = x.data() + r * cols;
        T* po = out.data() + r * cols;
        const T mu = kernels::sum<T>(cols, px) / static_cast<T>(cols);
        T var = T(0);
        for (index_t j = 0; j < cols; ++j) var += (px[j] - mu) * (px[j] - mu);
        var /= static_cast<T>(cols);
        const T inv = T(1) / static_cast<T>(std::sqrt(static_cast<double>(var + eps)));
        for (index_t j = 0; j < cols; ++j) po[j] = (px[j] - mu) * inv;
    }
    flops::add_elementwise_flops(static_cast<std::uint64_t>(6 * x.numel()));
    if (grad_recording_needed<T>({&x})) {
        out.set_requires_grad(true);
        Tensor<T> xc = x, oc = out;
        Tape<T>::active()->record({x, out}, [xc, oc, rows, cols, eps]() mutable {
            const T* go = oc.grad_data();
            const T* py = oc.data();
            const T* px = xc.data();
            T* gx = xc.grad_data();
            for (index_t r = 0; r < rows; ++r) {
                const T* xrow = px + r * cols;
                const T* yrow = py + r * cols;
                const T* grow = go + r * cols;
                const T mu = kernels::sum<T>(cols, xrow) / static_cast<T>(cols);
                T var = T(0);
                for (index_t j = 0; j < cols; ++j) var += (xrow[j] - mu) * (xrow[j] - mu);
                var /= static_cast<T>(cols);
                const T inv = T(1) / static_cast<T>(std::sqrt(static_cast<double>(var + eps)));
                const T gmean = kernels::sum<T>(cols, grow) / static_cast<T>(cols);
                const T gymean = kernels::dot<T>(cols, grow, yrow) / static_cast<T>(cols);
                T* gxrow = gx + r * cols;
                for (index_t j = 0; j < cols; ++j)
                    gxrow[j] += inv * (grow[j] - gmean - yrow[j] * gymean);
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// spatial ops on the trailing two axes

// kernel = stride = k; extents must divide (pad first if they do not)
template <typename T>
Tensor<T> avg_pool2d(const Tensor<T>& x, index_t k) {
    if (x.rank() < 2)
        throw ShapeError(str("avg_pool2d: needs rank >= 2, got ", shape_str(x.shape())));
    if (k < 1) throw ShapeError(str("avg_pool2d: kernel must be >= 1, got ", k));
    const index_t h = x.dim(-2), w = x.dim(-1);
    if (h % k != 0 || w % k != 0)
        throw ShapeError(str("avg_pool2d: extents ", h, "x", w, " not divisible by kernel ",
                             k, "; pad the input first"));
    const index_t oh = h / k, ow = w / k;
    const index_t planes = x.numel() / (h * w);
    Shape out_shape = x.shape();
    out_shape[out_shape.size() - 2] = oh;
    out_shape[out_shape.size() - 1] = ow;
    Tensor<T> out = Tensor<T>::zeros(out_shape);
    const T invk2 = T(1) / static_cast<T>(k * k);
    for (index_t p = 0; p < planes; ++p) {
        const T* px = x.data() + p * h * w;
        T* po = out.data() + p * oh * ow;
        for (index_t i = 0; i < oh; ++i)
            for (index_t j = 0; j < ow; ++j) {
                T acc = T(0);
                for (index_t u = 0; u < k; ++u)
                    for (index_t v = 0; v < k; ++v)
                        acc += px[(i * k + u) * w + (j * k + v)];
                po[i * ow + j] = acc * invk2;
            }
    }
    flops::add_pool_flops(static_cast<std::uint64_t>(x.numel() + out.numel()));
    if (grad_recording_needed<T>({&x})) {
        out.set_requires_grad(true);
        Tensor<T> xc = x, oc = out;
        Tape<T>::active()->record({x, out}, [xc, oc, planes, h, w, oh, ow, k, invk2]() mutable {
            const T* go = oc.grad_data();
            T* gx = xc.grad_data();
            for (index_t p = 0; p < planes; ++p) {
                const T* gorow = go + p * oh * ow;
                T* gxrow = gx + p * h * w;
                for (index_t i = 0; i < oh; ++i)
                    for (index_t j = 0; j < ow; ++j) {
                        const T g = gorow[i * ow + j] * invk2;
                        for (index_t u = 0; u < k; ++u)
                            for (index_t v = 0; v < k; ++v)
                                gxrow[(i * k + u) * w + (j * k + v)] += g;
                    }
            }
        });
    }
    return out;
}

namespace ops_detail {

// align_corners = false sampling grid
inline void bilinear_axis(index_t in, index_t out, std::vector<index_t>& lo,
                          std::vector<index_t>& hi, std::vector<double>& frac) {
    lo.resize(static_cast<std::size_t>(out));
    hi.resize(static_cast<std::size_t>(out));
    frac.resize(static_cast<std::size_t>(out));
    const double scale = static_cast<double>(in) / static_cast<double>(out);
    for (index_t i = 0; i < out; ++i) {
        double src = (static_cast<double>(i) + 0.5) * scale - 0.5;
        if (src < 0.0) src = 0.0;
        if (src > static_cast<double>(in - 1)) src = static_cast<double>(in - 1);
        const index_t l = static_cast<index_t>(src);
        lo[static_cast<std::size_t>(i)] = l;
        hi[static_cast<std::size_t>(i)] = std::min(l + 1, in - 1);
        frac[static_cast<std::size_t>(i)] = src - static_cast<double>(l);
    }
}

}  // namespace ops_detail

template <typename T>
Tensor<T> bilinear_resize(const Tensor<T>& x, index_t out_h, index_t out_w) {
    if (x.rank() < 2)
        throw ShapeError(str("bilinear_resize: needs rank >= 2, got ", shape_str(x.shape())));
    if (out_h < 1 || out_w < 1)
        throw ShapeError(str("bilinear_resize: target ", out_h, "x", out_w, " invalid"));
    const index_t h = x.dim(-2), w = x.dim(-1);
    const index_t planes = x.numel() / (h * w);
    Shape out_shape = x.shape();
    out_shape[out_shape.size() - 2] = out_h;
    out_shape[out_shape.size() - 1] = out_w;
    Tensor<T> out = Tensor<T>::zeros(out_shape);
    std::vector<index_t> y0, y1, x0, x1;
    std::vector<double> fy, fx;
    ops_detail::bilinear_axis(h, out_h, y0, y1, fy);
    ops_detail::bilinear_axis(w, out_w, x0, x1, fx);
    for (index_t p = 0; p < planes; ++p) {
        const T* px = x.data() + p * h * w;
        T* po = out.data() + p * out_h * out_w;
        for (index_t i = 0; i < out_h; ++i) {
            const double wy = fy[static_cast<std::size_t>(i)];
            const index_t r0 = y0[static_cast<std::size_t>(i)] * w;
            const index_t r1 = y1[static_cast<std::size_t>(i)] * w;
            for (index_t j = 0; j < out_w; ++j) {
                const double wx = fx[static_cast<std::size_t>(j)];
                const index_t c0 = x0[static_cast<std::size_t>(j)];
                const index_t c1 = x1[static_cast<std::size_t>(j)];
                const double v = (1.0 - wy) * ((1.0 - wx) * px[r0 + c0] + wx * px[r0 + c1]) +
                                 wy * ((1.0 - wx) * px[r1 + c0] + wx * px[r1 + c1]);
                po[i * out_w + j] = static_cast<T>(v);
            }
        }
    }
    flops::add_resize_flops(static_cast<std::uint64_t>(8 * out.numel()));
    if (grad_recording_needed<T>({&x})) {
        out.set_requires_grad(true);
        Tensor<T> xc = x, oc = out;
        Tape<T>::active()->record(
            {x, out}, [xc, oc, planes, h, w, out_h, out_w, y0, y1, x0, x1, fy, fx]() mutable {
                const T* go = oc.grad_data();
                T* gx = xc.grad_data();
                for (index_t p = 0; p < planes; ++p) {
                    const T* gorow = go + p * out_h * out_w;
                    T* gxrow = gx + p * h * w;
                    for (index_t i = 0; i < out_h; ++i) {
                        const double wy = fy[static_cast<std::size_t>(i)];
                        const index_t r0 = y0[static_cast<std::size_t>(i)] * w;
                        const index_t r1 = y1[static_cast<std::size_t>(i)] * w;
                        for (index_t j = 0; j < out_w; ++j) {
                            const double wx = fx[static_cast<std::size_t>(j)];
                            const index_t c0 = x0[static_cast<std::size_t>(j)];
                            const index_t c1 = x1[static_cast<std::size_t>(j)];
                            const double g = static_cast<double>(gorow[i * out_w + j]);
                            gxrow[r0 + c0] += static_cast<T>(g * (1.0 - wy) * (1.0 - wx));
                            gxrow[r0 + c1] += static_cast<T>(g * (1.0 - wy) * wx);
                            gxrow[r1 + c0] += static_cast<T>(g * wy * (1.0 - wx));
                            gxrow[r1 + c1] += static_cast<T>(g * wy * wx);
                        }
                    }
                }
            });
    }
    return out;
}

template <typename T>
Tensor<T> pad2d(const Tensor<T>& x, index_t top, index_t bottom, index_t left,
                index_t right) {
    if (x.rank() < 2)
        throw ShapeError(str("pad2d: needs rank >= 2, got ", shape_str(x.shape())));
    if (top < 0 || bottom < 0 || left < 0 || right < 0)
        throw ShapeError("pad2d: negative padding");
    const index_t h = x.dim(-2), w = x.dim(-1);
    const index_t oh = h + top + bottom, ow = w + left + right;
    const index_t planes = x.numel() / (h * w);
    Shape out_shape = x.shape();
    out_shape[out_shape.size() - 2] = oh;
    out_shape[out_shape.size() - 1] = ow;
    Tensor<T> out = Tensor<T>::zeros(out_shape);
    for (index_t p = 0; p < planes; ++p) {
        const T* px = x.data() + p * h * w;
        T* po = out.data() + p * oh * ow;
        for (index_t i = 0; i < h; ++i)
            std::copy(px + i * w, px + (i + 1) * w, po + (i + top) * ow + left);
    }
    if (grad_recording_needed<T>({&x})) {
        out.set_requires_grad(true);
        Tensor<T> xc = x, oc = out;
        Tape<T>::active()->record({x, out}, [xc, oc, planes, h, w, oh, ow, top, left]() mutable {
            const T* go = oc.grad_data();
            T* gx = xc.grad_data();
            for (index_t p = 0; p < planes; ++p)
                for (index_t i = 0; i < h; ++i)
                    kernels::axpy<T>(w, T(1), go + p * oh * ow + (i + top) * ow + left,
                                     gx + p * h * w + i * w);
        });
    }
    return out;
}

template <typename T>
Tensor<T> crop2d(const Tensor<T>& x, index_t top, index_t left, index_t out_h,
                 index_t out_w) {
    if (x.rank() < 2)
        throw ShapeError(str("crop2d: needs rank >= 2, got ", shape_str(x.shape())));
    const index_t h = x.dim(-2), w = x.dim(-1);
    if (top < 0 || left < 0 || out_h < 1 || out_w < 1 || top + out_h > h || left + out_w > w)
        throw ShapeError(str("crop2d: window ", out_h, "x", out_w, " at (", top, ",", left,
                             ") exceeds ", h, "x", w));
    const index_t planes = x.numel() / (h * w);
    Shape out_shape = x.shape();
    out_shape[out_shape.size() - 2] = out_h;
    out_shape[out_shape.size() - 1] = out_w;
    Tensor<T> out = Tensor<T>::zeros(out_shape);
    for (index_t p = 0; p < planes; ++p) {
        const T* px = x.data() + p * h * w;
        T* po = out.data() + p * out_h * out_w;
        for (index_t i = 0; i < out_h; ++i)
            std::copy(px + (i + top) * w + left, px + (i + top) * w + left + out_w,
                      po + i * out_w);
    }
    if (grad_recording_needed<T>({&x})) {
        out.set_requires_grad(true);
        Tensor<T> xc = x, oc = out;
        Tape<T>::active()->record({x, out}, [xc, oc, planes, h, w, out_h, out_w, top, left]() mutable {
            const T* go = oc.grad_data();
            T* gx = xc.grad_data();
            for (index_t p = 0; p < planes; ++p)
                for (index_t i = 0; i < out_h; ++i)
                    kernels::axpy<T>(out_w, T(1), go + p * out_h * out_w + i * out_w,
                                     gx + p * h * w + (i + top) * w + left);
        });
    }
    return out;
}

}  // namespace lawin
