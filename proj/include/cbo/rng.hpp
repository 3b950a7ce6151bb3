#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "core.hpp"

namespace cbo {

namespace detail {

// 64-bit finalizer (murmur3 variant). Statistically strong enough that
// hashing distinct counters yields independent-looking streams.
inline std::uint64_t mix64(std::uint64_t h) {
    h ^= h >> 33;
    h *= 0xff51afd7ed558ccdULL;
    h ^= h >> 33;
    h *= 0xc4ceb9fe1a85ec53ULL;
    h ^= h >> 33;
    return h;
}

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

inline std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                                  std::uint64_t c) {
    std::uint64_t h = mix64(seed + kGolden);
    h = mix64(h ^ (a * kGolden + 0x2545f4914f6cdd1dULL));
    h = mix64(h ^ (b * kGolden + 0x6c62272e07bb0142ULL));
    h = mix64(h ^ (c * kGolden + 0x27d4eb2f165667c5ULL));
    return h;
}

// Uniform in (0, 1]: top 53 bits, shifted off zero so log() is safe.
inline double uniform_open(std::uint64_t h) {
    return (static_cast<double>(h >> 11) + 1.0) * 0x1.0p-53;
}

// Standard normal as a pure function of the counter, via Box-Muller on two
// hashed uniforms.
inline double standard_normal(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                              std::uint64_t c) {
    const double u1 = uniform_open(counter_hash(seed, a, b, 2 * c));
    const double u2 = uniform_open(counter_hash(seed, a, b, 2 * c + 1));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

constexpr std::uint64_t kInitSalt = 0x7b0c7d9f2ce0e1a3ULL;
constexpr std::uint64_t kBridgeSalt = 0x1f83d9abfb41bd6bULL;
constexpr std::uint64_t kRefineSalt = 0x5be0cd19137e2179ULL;

}  // namespace detail

/// Gaussian increments addressed by (particle i, step k, coordinate j), each
/// N(0, dt) per coordinate. Values are pure functions of (seed, i, k, j), so
/// concurrent reads are deterministic regardless of thread scheduling.
///
/// refine(m) produces the same Brownian path sampled on a grid m times finer:
/// within each coarse step the m fine increments sum to the coarse increment
/// exactly (bridge sampling conditional on the coarse sum).
class NoiseTable {
public:
    NoiseTable(std::uint64_t seed, double dt, std::size_t n_particles, std::size_t n_steps,
               std::size_t dim)
        : seed_(seed), dt_(dt), n_particles_(n_particles), n_steps_(n_steps), dim_(dim) {
        if (!(dt > 0.0)) throw std::invalid_argument("noise table: dt must be > 0");
    }

    std::uint64_t seed() const { return seed_; }
    double dt() const { return dt_; }
    std::size_t n_particles() const { return n_particles_; }
    std::size_t n_steps() const { return n_steps_; }
    std::size_t dim() const { return dim_; }

    /// The (i, k) increment vector, per-coordinate variance dt.
    std::vector<double> increment(std::size_t i, std::size_t k) const {
        std::vector<double> out(dim_);
        increment_into(i, k, out.data());
        return out;
    }

    void increment_into(std::size_t i, std::size_t k, double* out) const {
        if (i >= n_particles_ || k >= n_steps_)
            throw std::out_of_range("noise table: increment index out of range");
        if (!parent_) {
            const double s = std::sqrt(dt_);
            for (std::size_t j = 0; j < dim_; ++j)
                out[j] = s * detail::standard_normal(seed_, i, k, j);
            return;
        }
        // Bridge over the parent step: G_r = Z_r - mean(Z) + C/m with
        // Z_r ~ N(0, dt) i.i.d. from this table's own stream. Marginals are
        // N(0, dt), the sum over r equals C, and the G_r are independent.
        const std::size_t m = factor_;
        const std::size_t kc = k / m;
        const std::size_t r = k % m;
        std::vector<double> coarse(dim_);
        parent_->increment_into(i, kc, coarse.data());
        const double s = std::sqrt(dt_);
        for (std::size_t j = 0; j < dim_; ++j) {
            double sum = 0.0;
            double zr = 0.0;
            for (std::size_t rr = 0; rr < m; ++rr) {
                const double z = s * detail::standard_normal(seed_, i, kc * m + rr, j);
                sum += z;
                if (rr == r) zr = z;
            }
            out[j] = zr - sum / static_cast<double>(m) + coarse[j] / static_cast<double>(m);
        }
    }

    /// Same Brownian path on a grid refined by factor m. m = 1 is the identity.
    NoiseTable refine(std::uint32_t m) const {
        if (m < 1) throw std::invalid_argument("refine: factor must be >= 1");
        if (m == 1) return *this;
        if (n_steps_ > (std::size_t(1) << 56) / m)
            throw std::overflow_error("refine: step index overflow");
        NoiseTable fine(detail::mix64(seed_ ^ detail::kRefineSalt ^ (detail::kGolden * m)),
                        dt_ / static_cast<double>(m), n_particles_, n_steps_ * m, dim_);
        fine.parent_ = std::make_shared<NoiseTable>(*this);
        fine.factor_ = m;
        return fine;
    }

    /// W(k dt + tau) - W(k dt) for tau in [0, dt], bridge-sampled conditional
    /// on the step's increment. One bridge draw per (i, k); diagnostic use only.
    std::vector<double> brownian_partial(std::size_t i, std::size_t k, double tau) const {
        if (!(tau >= 0.0) || !(tau <= dt_))
            throw std::out_of_range("brownian_partial: tau outside [0, dt]");
        std::vector<double> dw = increment(i, k);
        const double frac = tau / dt_;
        const double bridge_sd = std::sqrt(tau * (dt_ - tau) / dt_);
        const std::uint64_t bseed = detail::mix64(seed_ ^ detail::kBridgeSalt);
        for (std::size_t j = 0; j < dim_; ++j)
            dw[j] = frac * dw[j] + bridge_sd * detail::standard_normal(bseed, i, k, j);
        return dw;
    }

private:
    std::uint64_t seed_;
    double dt_;
    std::size_t n_particles_;
    std::size_t n_steps_;
    std::size_t dim_;
    std::shared_ptr<const NoiseTable> parent_;  // null for a base table
    std::uint32_t factor_ = 1;                  // refinement relative to parent
};

/// i.i.d. initial positions, deterministic in (seed, particle, coordinate).
/// Uses a stream disjoint from the increment stream of any NoiseTable built
/// on the same seed.
inline Matrix sample_initial(const InitDistribution& init, std::size_t n_particles,
                             std::size_t dim, std::uint64_t seed) {
    init.validate(dim);
    Matrix x(n_particles, dim);
    const std::uint64_t s = detail::mix64(seed ^ detail::kInitSalt);
    for (std::size_t i = 0; i < n_particles; ++i) {
        for (std::size_t j = 0; j < dim; ++j) {
            if (init.kind == InitDistribution::Kind::UniformBox) {
                const double u = detail::uniform_open(detail::counter_hash(s, i, 0, j));
                x(i, j) = init.a[j] + u * (init.b[j] - init.a[j]);
            } else {
                x(i, j) = init.a[j] +
                          std::sqrt(init.b[j]) * detail::standard_normal(s, i, 0, j);
            }
        }
    }
    return x;
}

}  // namespace cbo
