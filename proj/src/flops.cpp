#include <algorithm>

#include "lawin/flops.hpp"

namespace lawin::flops {

namespace detail {
Counts*& active_slot() {
    thread_local Counts* slot = nullptr;
    return slot;
}
}  // namespace detail

namespace {
wide_t check_positive(index_t v, const char* name) {
    if (v <= 0) throw ConfigError(str("flops model: ", name, " must be positive, got ", v));
    return static_cast<wide_t>(static_cast<std::uint64_t>(v));
}
}  // namespace

wide_t local_window_macs(index_t h, index_t w, index_t c, index_t p) {
    const wide_t hw = check_positive(h, "H") * check_positive(w, "W");
    const wide_t cc = check_positive(c, "C");
    const wide_t pp = check_positive(p, "P") * static_cast<wide_t>(static_cast<std::uint64_t>(p));
    return 4 * hw * cc * cc + 2 * hw * pp * cc;
}

wide_t large_window_macs(index_t h, index_t w, index_t c, index_t p) {
    const wide_t hw = check_positive(h, "H") * check_positive(w, "W");
    const wide_t cc = check_positive(c, "C");
    const wide_t pp = check_positive(p, "P") * static_cast<wide_t>(static_cast<std::uint64_t>(p));
    return 4 * hw * cc * cc + 3 * hw * pp * cc;
}

std::string to_string(wide_t v) {
    if (v == 0) return "0";
    std::string out;
    while (v > 0) {
        out.push_back(static_cast<char>('0' + static_cast<int>(v % 10)));
        v /= 10;
    }
    std::reverse(out.begin(), out.end());
    return out;
}

std::string with_commas(wide_t v) {
    const std::string digits = to_string(v);
    std::string out;
    const std::size_t n = digits.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0 && (n - i) % 3 == 0) out.push_back(',');
        out.push_back(digits[i]);
    }
    return out;
}

}  // namespace lawin::flops
