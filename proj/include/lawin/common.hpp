#pragma once

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace lawin {

using index_t = std::int64_t;
using Shape = std::vector<index_t>;

// Error taxonomy. CLI maps these to exit codes.
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {
inline void str_append(std::ostringstream&) {}
template <typename T, typename... Rest>
void str_append(std::ostringstream& os, const T& v, const Rest&... rest) {
    os << v;
    str_append(os, rest...);
}
}  // namespace detail

template <typename... Args>
std::string str(const Args&... args) {
    std::ostringstream os;
    detail::str_append(os, args...);
    return os.str();
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) os << ", ";
        os << s[i];
    }
    os << ']';
    return os.str();
}

inline index_t numel_of(const Shape& s) {
    index_t n = 1;
    for (index_t e : s) n *= e;
    return n;
}

inline index_t ceil_div(index_t a, index_t b) { return (a + b - 1) / b; }

inline index_t round_up(index_t a, index_t b) { return ceil_div(a, b) * b; }

}  // namespace lawin
