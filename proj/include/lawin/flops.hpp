#pragma once

#include <cstdint>
#include <string>

#include "lawin/common.hpp"

// Operation-count model and instrumentation.
//
// Unit of record: one multiply-accumulate (MAC). The analytic window
// attention costs below come out exactly in MAC units — the 4(HW)C^2 term
// is the four full-width projections (q, k, v, out) at one MAC per
// multiply-add, and the 2/3(HW)P^2C terms are the two attention matmuls
// plus, for the large-window variant, the position-mixing transform.
// Reports also give FLOPs at the usual 2 FLOPs per MAC. Pooling, softmax,
// residual/bias adds and resizes are tracked in separate buckets; the
// analytic model deliberately excludes them.

namespace lawin::flops {

using wide_t = unsigned __int128;

struct Counts {
    std::uint64_t matmul_macs = 0;
    std::uint64_t pool_flops = 0;
    std::uint64_t softmax_flops = 0;
    std::uint64_t elementwise_flops = 0;
    std::uint64_t resize_flops = 0;

    Counts& operator+=(const Counts& o) {
        matmul_macs += o.matmul_macs;
        pool_flops += o.pool_flops;
        softmax_flops += o.softmax_flops;
        elementwise_flops += o.elementwise_flops;
        resize_flops += o.resize_flops;
        return *this;
    }
};

namespace detail {
Counts*& active_slot();
}

// Binds a counter to the current thread for the scope's lifetime. Ops
// record on the thread that issued them, so internal data-parallel
// execution does not split counts.
class CountScope {
public:
    CountScope() : prev_(detail::active_slot()) { detail::active_slot() = &counts; }
    ~CountScope() { detail::active_slot() = prev_; }
    CountScope(const CountScope&) = delete;
    CountScope& operator=(const CountScope&) = delete;

    Counts counts;

private:
    Counts* prev_;
};

inline void add_matmul_macs(std::uint64_t n) {
    if (Counts* c = detail::active_slot()) c->matmul_macs += n;
}
inline void add_pool_flops(std::uint64_t n) {
    if (Counts* c = detail::active_slot()) c->pool_flops += n;
}
inline void add_softmax_flops(std::uint64_t n) {
    if (Counts* c = detail::active_slot()) c->softmax_flops += n;
}
inline void add_elementwise_flops(std::uint64_t n) {
    if (Counts* c = detail::active_slot()) c->elementwise_flops += n;
}
inline void add_resize_flops(std::uint64_t n) {
    if (Counts* c = detail::active_slot()) c->resize_flops += n;
}

template <typename Fn>
Counts measure(Fn&& fn) {
    CountScope scope;
    fn();
    return scope.counts;
}

// Analytic attention-core cost, in MACs. Wide arithmetic: extents up to
// 2^16 drive the C^2 term past 64 bits.
wide_t local_window_macs(index_t h, index_t w, index_t c, index_t p);
wide_t large_window_macs(index_t h, index_t w, index_t c, index_t p);

std::string to_string(wide_t v);
std::string with_commas(wide_t v);

}  // namespace lawin::flops
