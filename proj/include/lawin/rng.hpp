#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "lawin/common.hpp"

namespace lawin {

// mt19937_64 with hand-rolled scaling. The standard distributions are not
// pinned across library implementations; these are, so a seed produces the
// same stream everywhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // [0, 1) with 53 random bits
    double uniform() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // [lo, hi)
    index_t uniform_int(index_t lo, index_t hi) {
        return lo + static_cast<index_t>(uniform() * static_cast<double>(hi - lo));
    }

    // Box-Muller; draws two uniforms per call so state advance is uniform
    double normal() {
        double u1 = uniform();
        const double u2 = uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u1));
        return r * std::cos(2.0 * M_PI * u2);
    }

    // resamples outside +/- clip standard deviations
    double trunc_normal(double stddev, double clip = 2.0) {
        for (;;) {
            const double z = normal();
            if (std::abs(z) <= clip) return z * stddev;
        }
    }

    template <typename T>
    void fill_uniform(std::vector<T>& v, double lo, double hi) {
        for (auto& x : v) x = static_cast<T>(uniform(lo, hi));
    }

    template <typename T>
    void fill_normal(std::vector<T>& v, double stddev) {
        for (auto& x : v) x = static_cast<T>(normal() * stddev);
    }

    template <typename Seq>
    void shuffle(Seq& seq) {
        for (index_t i = static_cast<index_t>(seq.size()) - 1; i > 0; --i) {
            const index_t j = uniform_int(0, i + 1);
            std::swap(seq[static_cast<std::size_t>(i)], seq[static_cast<std::size_t>(j)]);
        }
    }

private:
    std::mt19937_64 eng_;
};

}  // namespace lawin
