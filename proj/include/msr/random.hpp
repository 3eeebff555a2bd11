#pragma once

#include "msr/types.hpp"

#include <cmath>
#include <cstdint>
#include <random>

namespace msr {

/// Deterministic random source. All draws are derived from the raw
/// mt19937_64 stream with fixed arithmetic, so sequences are reproducible
/// across platforms and standard-library implementations (std::*_distribution
/// is implementation-defined and deliberately avoided).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Uniform draw in [0, 1) with 53 bits of randomness.
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). Requires n > 0.
    int uniform_int(int n) {
        if (n <= 0) throw DegenerateInputError("uniform_int: n must be positive");
        return static_cast<int>(gen_() % static_cast<std::uint64_t>(n));
    }

    std::uint64_t raw() { return gen_(); }

    /// Standard normal via Box-Muller (fixed algorithm for reproducibility).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    /// Uniform direction on the unit sphere in R^dim.
    Vector unit_vector(Eigen::Index dim) {
        Vector v(dim);
        double norm = 0.0;
        do {
            for (Eigen::Index i = 0; i < dim; ++i) v[i] = normal();
            norm = v.norm();
        } while (norm < 1e-12);
        return v / norm;
    }

    Vector gaussian_vector(Eigen::Index dim) {
        Vector v(dim);
        for (Eigen::Index i = 0; i < dim; ++i) v[i] = normal();
        return v;
    }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// Haar-ish random rotation in SO(dim): QR of a Gaussian matrix with the
/// usual sign fix, then a determinant correction on the last column.
Matrix random_rotation(Eigen::Index dim, Rng& rng);

}  // namespace msr
