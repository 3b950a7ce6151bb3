#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cbo {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class EvalError : public std::runtime_error {
public:
    EvalError(const std::string& msg, std::size_t particle)
        : std::runtime_error(msg), particle_index(particle) {}
    std::size_t particle_index;
};

/// Diffusion scaling of the noise term: isotropic multiplies the increment by
/// the Euclidean norm of (x - consensus), anisotropic componentwise.
enum class DiffusionKind { Isotropic, Anisotropic };

inline const char* to_string(DiffusionKind k) {
    return k == DiffusionKind::Isotropic ? "isotropic" : "anisotropic";
}

/// kappa(Isotropic, d) = d, kappa(Anisotropic, d) = 1. Enters the decay rate
/// 2*lambda - kappa*sigma^2 and is the reason anisotropic noise scales to
/// high dimensions.
inline std::uint32_t kappa(DiffusionKind kind, std::uint32_t dim) {
    if (dim < 1) throw ConfigError("kappa: dim must be >= 1");
    return kind == DiffusionKind::Isotropic ? dim : 1u;
}

// Row-major dense matrix, rows = particles, cols = coordinates.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
    std::span<const double> row(std::size_t i) const {
        return {data.data() + i * cols, cols};
    }
    std::span<double> row(std::size_t i) {
        return {data.data() + i * cols, cols};
    }
};

/// Initial particle distribution. Sampling is i.i.d. per particle and
/// coordinate; see rng.hpp for the deterministic sampler.
struct InitDistribution {
    enum class Kind { UniformBox, Gaussian };
    Kind kind = Kind::Gaussian;
    // UniformBox: a = lower, b = upper. Gaussian: a = mean, b = diagonal covariance.
    std::vector<double> a;
    std::vector<double> b;

    static InitDistribution uniform_box(std::vector<double> lower, std::vector<double> upper) {
        InitDistribution d;
        d.kind = Kind::UniformBox;
        d.a = std::move(lower);
        d.b = std::move(upper);
        return d;
    }
    static InitDistribution gaussian(std::vector<double> mean, std::vector<double> cov_diag) {
        InitDistribution d;
        d.kind = Kind::Gaussian;
        d.a = std::move(mean);
        d.b = std::move(cov_diag);
        return d;
    }

    void validate(std::size_t dim) const {
        if (a.size() != dim || b.size() != dim)
            throw ConfigError("init distribution: parameter dimension mismatch");
        if (kind == Kind::UniformBox) {
            for (std::size_t j = 0; j < dim; ++j)
                if (!(a[j] < b[j]))
                    throw ConfigError("init distribution: lower must be < upper componentwise");
        } else {
            for (std::size_t j = 0; j < dim; ++j)
                if (!(b[j] >= 0.0))
                    throw ConfigError("init distribution: covariance diagonal must be >= 0");
        }
    }

    /// Whether x lies in the support of the distribution.
    bool supports(std::span<const double> x) const {
        if (kind == Kind::Gaussian) return true;  // full support
        for (std::size_t j = 0; j < x.size(); ++j)
            if (x[j] < a[j] || x[j] > b[j]) return false;
        return true;
    }
};

/// All hyperparameters of one CBO run.
struct CboConfig {
    std::uint32_t dim = 1;
    std::uint32_t n_particles = 1;
    double lambda = 1.0;   // drift gain, 1/time
    double sigma = 0.0;    // noise gain, 1/sqrt(time)
    double alpha = 1.0;    // Laplace sharpness, 1/energy
    double dt = 0.1;       // step size, must lie in (0, 1]
    std::uint32_t n_steps = 0;
    DiffusionKind diffusion = DiffusionKind::Isotropic;
    std::uint64_t seed = 0;
    InitDistribution init;
    double moment_cap = 1e8;  // diagnostic cap on the ensemble second moment

    double decay_rate() const {
        return 2.0 * lambda - static_cast<double>(kappa(diffusion, dim)) * sigma * sigma;
    }

    /// 2*lambda - kappa*sigma^2 > 0; required by the decay theory.
    bool well_posed() const { return decay_rate() > 0.0; }

    void validate() const {
        if (dim < 1) throw ConfigError("config: dim must be >= 1");
        if (n_particles < 1) throw ConfigError("config: n_particles must be >= 1");
        if (!(lambda > 0.0)) throw ConfigError("config: lambda must be > 0");
        if (!(sigma >= 0.0)) throw ConfigError("config: sigma must be >= 0");
        if (!(alpha > 0.0)) throw ConfigError("config: alpha must be > 0");
        if (!(dt > 0.0) || !(dt <= 1.0))
            throw ConfigError("config: dt must lie in (0, 1]");
        if (!(moment_cap > 0.0)) throw ConfigError("config: moment_cap must be > 0");
        init.validate(dim);
    }

    /// Non-fatal issues a valid config can still carry.
    std::vector<std::string> warnings() const {
        std::vector<std::string> w;
        if (lambda * dt > 1.0)
            w.push_back("lambda*dt > 1: contraction overshoots, run may oscillate");
        return w;
    }
};

/// Immutable snapshot of the particle system at one time index.
/// energies[i] caches the objective at positions.row(i).
class Ensemble {
public:
    Ensemble(Matrix positions, std::vector<double> energies, std::uint32_t time_index)
        : positions_(std::move(positions)), energies_(std::move(energies)), time_index_(time_index) {
        if (energies_.size() != positions_.rows)
            throw std::invalid_argument("ensemble: energies/positions size mismatch");
        for (double v : positions_.data)
            if (!std::isfinite(v))
                throw std::invalid_argument("ensemble: non-finite position rejected");
        for (double e : energies_)
            if (!std::isfinite(e))
                throw std::invalid_argument("ensemble: non-finite energy rejected");
    }

    const Matrix& positions() const { return positions_; }
    const std::vector<double>& energies() const { return energies_; }
    std::uint32_t time_index() const { return time_index_; }
    std::size_t size() const { return positions_.rows; }
    std::size_t dim() const { return positions_.cols; }

private:
    Matrix positions_;
    std::vector<double> energies_;
    std::uint32_t time_index_;
};

/// (1/(2N)) * sum_i |x_i - x_star|^2, the variance functional of the
/// empirical measure about the minimizer.
inline double variance_functional(const Ensemble& ens, std::span<const double> x_star) {
    if (x_star.size() != ens.dim())
        throw std::invalid_argument("variance_functional: dimension mismatch");
    double acc = 0.0, comp = 0.0;  // Neumaier compensated sum
    for (std::size_t i = 0; i < ens.size(); ++i) {
        auto xi = ens.positions().row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < x_star.size(); ++j) {
            const double dv = xi[j] - x_star[j];
            s += dv * dv;
        }
        const double t = acc + s;
        comp += (std::abs(acc) >= std::abs(s)) ? (acc - t) + s : (s - t) + acc;
        acc = t;
    }
    return (acc + comp) / (2.0 * static_cast<double>(ens.size()));
}

/// Per-iteration record of a run.
struct TraceRow {
    std::uint32_t step = 0;
    std::vector<double> consensus_point;
    double variance_functional = std::numeric_limits<double>::quiet_NaN();  // needs x_star
    double second_moment = 0.0;
    double max_norm = 0.0;
    double effective_weight_fraction = 1.0;  // largest normalized Laplace weight
    double jensen_error = std::numeric_limits<double>::quiet_NaN();  // |mean_i x_i - x*|^2
    std::uint64_t evaluations = 0;  // cumulative objective calls
};

struct RunTrace {
    std::vector<TraceRow> rows;
    std::vector<std::string> warnings;
    bool moment_cap_breached = false;
};

}  // namespace cbo
