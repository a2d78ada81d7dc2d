#pragma once

#include "gddpc/types.hpp"

#include <cstdint>
#include <random>

namespace gddpc {

// ---------------------------------------------------------------------------
// Seed derivation
//
// Master seed -> stream seeds via splitmix64 evaluated at counter offsets.
// split_seed(master, i) equals the (i+1)-th output of a splitmix64 generator
// seeded with `master`, so adding streams never perturbs existing ones.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline std::uint64_t split_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(master + index * 0x9E3779B97F4A7C15ull);
}

// ---------------------------------------------------------------------------
// Gaussian stream
//
// mt19937_64 + Box-Muller. std::normal_distribution is implementation-defined,
// so it would break bit-reproducibility of seeded runs across standard
// libraries; Box-Muller over the fully specified mt19937_64 does not.
// ---------------------------------------------------------------------------

class GaussianStream {
  public:
    explicit GaussianStream(std::uint64_t seed) : eng_(seed) {}

    /// Uniform on (0,1].
    double uniform_pos() {
        return static_cast<double>((eng_() >> 11) + 1) * 0x1.0p-53;
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_pos();
        const double u2 = uniform_pos();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    Vec normal_vec(Index n) {
        Vec v(n);
        for (Index i = 0; i < n; ++i) v[i] = normal();
        return v;
    }

    Mat normal_mat(Index rows, Index cols) {
        Mat m(rows, cols);
        for (Index j = 0; j < cols; ++j)  // column-major fill: time runs over columns
            for (Index i = 0; i < rows; ++i) m(i, j) = normal();
        return m;
    }

  private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace gddpc
