#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include "core.hpp"
#include "rng.hpp"

namespace cbo {

/// Black-box objective with optional known minimizer and assumption metadata.
class Objective {
public:
    struct Metadata {
        std::optional<double> lipschitz_l;  // L_E of the local Lipschitz condition
        std::optional<double> c_u;          // quadratic upper growth constant
        std::optional<double> c_l;          // quadratic lower growth constant
        std::optional<double> c_l_tilde;    // farfield onset radius of the lower bound
        std::optional<double> eta;          // inverse continuity constant
        std::optional<double> nu;           // inverse continuity exponent
        std::optional<double> r0;           // inverse continuity ball radius
        std::optional<double> e_inf;        // farfield gap
        bool bounded_above = false;
    };

    Objective(std::function<double(std::span<const double>)> eval, std::uint32_t dim,
              std::string name = "custom")
        : eval_(std::move(eval)), dim_(dim), name_(std::move(name)) {}

    double operator()(std::span<const double> x) const {
        if (x.size() != dim_) throw std::invalid_argument("objective: dimension mismatch");
        return eval_(x);
    }

    std::uint32_t dim() const { return dim_; }
    const std::string& name() const { return name_; }
    const std::optional<std::vector<double>>& x_star() const { return x_star_; }
    const std::optional<double>& e_min() const { return e_min_; }
    const Metadata& metadata() const { return meta_; }

    Objective& with_minimizer(std::vector<double> x_star, double e_min) {
        if (x_star.size() != dim_)
            throw std::invalid_argument("objective: x_star dimension mismatch");
        const double at_min = eval_(x_star);
        if (std::abs(at_min - e_min) > 1e-12)
            throw std::invalid_argument("objective: eval(x_star) != declared e_min");
        x_star_ = std::move(x_star);
        e_min_ = e_min;
        return *this;
    }

    Objective& with_metadata(Metadata m) {
        meta_ = std::move(m);
        return *this;
    }

private:
    std::function<double(std::span<const double>)> eval_;
    std::uint32_t dim_;
    std::string name_;
    std::optional<std::vector<double>> x_star_;
    std::optional<double> e_min_;
    Metadata meta_;
};

enum class BuiltinObjective { Sphere, Rastrigin, Ackley, ShiftedSphere };

inline std::optional<BuiltinObjective> builtin_by_name(const std::string& name) {
    if (name == "sphere") return BuiltinObjective::Sphere;
    if (name == "rastrigin") return BuiltinObjective::Rastrigin;
    if (name == "ackley") return BuiltinObjective::Ackley;
    if (name == "shifted_sphere") return BuiltinObjective::ShiftedSphere;
    return std::nullopt;
}

/// Standard benchmark objectives with exact minimizer metadata.
/// Rastrigin uses A = 10, Ackley the usual (20, 0.2, 2*pi) constants.
inline Objective builtin(BuiltinObjective which, std::uint32_t dim, double offset = 0.0) {
    if (dim < 1) throw ConfigError("builtin objective: dim must be >= 1");
    switch (which) {
        case BuiltinObjective::Sphere: {
            Objective obj(
                [](std::span<const double> x) {
                    double s = 0.0;
                    for (double v : x) s += v * v;
                    return 0.5 * s;
                },
                dim, "sphere");
            Objective::Metadata m;
            m.c_u = 0.5;
            m.c_l = 0.5;
            m.c_l_tilde = 0.0;
            m.eta = 1.0 / std::numbers::sqrt2;
            m.nu = 0.5;
            m.r0 = 1.0;
            obj.with_minimizer(std::vector<double>(dim, 0.0), 0.0).with_metadata(m);
            return obj;
        }
        case BuiltinObjective::ShiftedSphere: {
            Objective obj(
                [offset](std::span<const double> x) {
                    double s = 0.0;
                    for (double v : x) s += (v - offset) * (v - offset);
                    return 0.5 * s;
                },
                dim, "shifted_sphere");
            Objective::Metadata m;
            m.c_u = 0.5;  // about the shifted minimizer
            m.nu = 0.5;
            m.eta = 1.0 / std::numbers::sqrt2;
            m.r0 = 1.0;
            obj.with_minimizer(std::vector<double>(dim, offset), 0.0).with_metadata(m);
            return obj;
        }
        case BuiltinObjective::Rastrigin: {
            Objective obj(
                [](std::span<const double> x) {
                    double s = 0.0;
                    for (double v : x)
                        s += v * v - 10.0 * std::cos(2.0 * std::numbers::pi * v) + 10.0;
                    return s;
                },
                dim, "rastrigin");
            Objective::Metadata m;
            m.r0 = 0.5;
            obj.with_minimizer(std::vector<double>(dim, 0.0), 0.0).with_metadata(m);
            return obj;
        }
        case BuiltinObjective::Ackley: {
            const double d = static_cast<double>(dim);
            Objective obj(
                [d](std::span<const double> x) {
                    double sq = 0.0, cs = 0.0;
                    for (double v : x) {
                        sq += v * v;
                        cs += std::cos(2.0 * std::numbers::pi * v);
                    }
                    return 20.0 + std::numbers::e - 20.0 * std::exp(-0.2 * std::sqrt(sq / d)) -
                           std::exp(cs / d);
                },
                dim, "ackley");
            Objective::Metadata m;
            m.bounded_above = true;
            m.r0 = 0.5;
            obj.with_minimizer(std::vector<double>(dim, 0.0), 0.0).with_metadata(m);
            return obj;
        }
    }
    throw ConfigError("builtin objective: unknown name");
}

// ---------------------------------------------------------------------------
// Assumption checkers. These are sample-based falsifiers: "passed" certifies
// only that no violation was found on the drawn samples.
// ---------------------------------------------------------------------------

namespace detail {

// Uniform point in the Euclidean ball of given radius, deterministic in
// (seed, index).
inline std::vector<double> ball_point(std::uint32_t dim, double radius, std::uint64_t seed,
                                      std::uint64_t index) {
    std::vector<double> x(dim);
    double norm2 = 0.0;
    for (std::uint32_t j = 0; j < dim; ++j) {
        x[j] = standard_normal(seed, index, 0, j);
        norm2 += x[j] * x[j];
    }
    const double u = uniform_open(counter_hash(seed, index, 1, 0));
    const double r = radius * std::pow(u, 1.0 / static_cast<double>(dim));
    const double scale = norm2 > 0.0 ? r / std::sqrt(norm2) : 0.0;
    for (double& v : x) v *= scale;
    return x;
}

inline double norm2(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

inline double norm_inf(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s = std::max(s, std::abs(v));
    return s;
}

}  // namespace detail

struct LipschitzReport {
    bool passed = false;
    double fitted_l = 0.0;
    double fitted_l_half = 0.0;  // fit restricted to the half-radius ball
};

/// Local Lipschitz condition with linearly growing factor:
/// |E(x)-E(y)| <= L (1+|x|+|y|) |x-y|. fitted_l is the max observed ratio
/// over the full ball; fitted_l_half the same over the half-radius ball. For
/// any objective admitting a uniform L the two fits are comparable, so the
/// check fails when doubling the radius doubles the fit (the signature of
/// super-quadratic growth, where no uniform L exists).
inline LipschitzReport check_local_lipschitz(const Objective& obj, double radius,
                                             std::size_t samples, std::uint64_t seed) {
    if (samples < 2) throw std::invalid_argument("check_local_lipschitz: samples >= 2");
    LipschitzReport rep;
    const auto max_ratio = [&](double r, std::uint64_t salt) {
        double fit = 0.0;
        for (std::size_t s = 0; s < samples; ++s) {
            auto x = detail::ball_point(obj.dim(), r, detail::mix64(seed ^ salt), 2 * s);
            auto y = detail::ball_point(obj.dim(), r, detail::mix64(seed ^ salt), 2 * s + 1);
            std::vector<double> diff(obj.dim());
            for (std::size_t j = 0; j < diff.size(); ++j) diff[j] = x[j] - y[j];
            const double dxy = detail::norm2(diff);
            if (dxy == 0.0) continue;
            const double ex = obj(x), ey = obj(y);
            if (!std::isfinite(ex) || !std::isfinite(ey))
                throw EvalError("check_local_lipschitz: non-finite evaluation", s);
            fit = std::max(fit, std::abs(ex - ey) /
                                    ((1.0 + detail::norm2(x) + detail::norm2(y)) * dxy));
        }
        return fit;
    };
    rep.fitted_l_half = max_ratio(radius / 2.0, 0x5a5aULL);
    rep.fitted_l = std::max(rep.fitted_l_half, max_ratio(radius, 0xc3c3ULL));
    rep.passed = std::isfinite(rep.fitted_l) &&
                 (rep.fitted_l == 0.0 || rep.fitted_l < 2.0 * rep.fitted_l_half);
    return rep;
}

struct GrowthReport {
    bool upper_ok = false;
    bool lower_ok = false;
    double fitted_c_u = 0.0;
    double fitted_c_l = 0.0;
    bool bounded_branch = false;  // lower bound satisfied via boundedness
};

/// Quadratic growth: E - e_min <= c_u (1+|x|^2) everywhere sampled, and
/// either E bounded above or E - e_min >= c_l |x|^2 in the farfield.
inline GrowthReport check_growth(const Objective& obj, double radius, std::size_t samples,
                                 std::uint64_t seed) {
    if (!obj.e_min()) throw std::invalid_argument("check_growth: e_min undeclared");
    if (samples < 8) throw std::invalid_argument("check_growth: samples >= 8");
    const double e_min = *obj.e_min();
    GrowthReport rep;

    double cu_fit = 0.0, cu_half = 0.0;
    double max_inner = -std::numeric_limits<double>::infinity();
    double max_outer = -std::numeric_limits<double>::infinity();
    const double c_tilde =
        std::min(obj.metadata().c_l_tilde.value_or(radius / 4.0), radius / 4.0);
    double cl_near = std::numeric_limits<double>::infinity();
    double cl_far = std::numeric_limits<double>::infinity();
    double cl_all = std::numeric_limits<double>::infinity();

    for (std::size_t s = 0; s < 2 * samples; ++s) {
        auto x = detail::ball_point(obj.dim(), radius, detail::mix64(seed ^ 0xa5a5ULL), s);
        const double r = detail::norm2(x);
        const double e = obj(x);
        if (!std::isfinite(e)) throw EvalError("check_growth: non-finite evaluation", s);
        const double excess = e - e_min;
        cu_fit = std::max(cu_fit, excess / (1.0 + r * r));
        if (s + 1 == samples) cu_half = cu_fit;
        (r <= radius / 2.0 ? max_inner : max_outer) = std::max(
            r <= radius / 2.0 ? max_inner : max_outer, e);
        if (r >= std::max(c_tilde, 1e-12)) {
            const double q = excess / (r * r);
            cl_all = std::min(cl_all, q);
            (r <= radius / 2.0 ? cl_near : cl_far) =
                std::min(r <= radius / 2.0 ? cl_near : cl_far, q);
        }
    }
    rep.fitted_c_u = cu_fit;
    rep.upper_ok = std::isfinite(cu_fit) && (cu_half == 0.0 || cu_fit / cu_half < 2.0);

    rep.fitted_c_l = std::isfinite(cl_all) ? cl_all : 0.0;
    // Bounded branch: the farfield max does not keep growing past the inner max.
    const bool bounded = max_outer <= max_inner * 1.05 + 1e-9;
    // Quadratic branch: the shell fit must not keep decaying with the radius.
    const bool quad = std::isfinite(cl_far) && std::isfinite(cl_near) && cl_far > 0.0 &&
                      cl_far > 0.6 * cl_near;
    rep.bounded_branch = bounded;
    rep.lower_ok = bounded || quad;
    return rep;
}

struct IcpGrid {
    std::optional<double> r0;   // defaults to the objective's metadata
    double farfield_radius = 10.0;
    std::size_t n_inner = 4000;
    std::size_t n_outer = 4000;
    std::uint64_t seed = 1;
};

struct IcpReport {
    bool passed = false;
    bool local_ok = false;
    bool farfield_ok = false;
    double eta = 0.0;
    double nu = 0.0;
    double e_inf = 0.0;  // tightest farfield gap found
};

enum class IcpNorm { Euclidean, MaxNorm };

/// Inverse continuity: dist(x, x*) <= (1/eta) (E - e_min)^nu inside the
/// R0-ball (Euclidean or max norm) and E - e_min > E_inf outside. Grid search
/// over nu in {1/4, 1/2, 1, 2}; the largest exponent whose fitted eta does not
/// degenerate near x* is reported.
inline IcpReport check_icp(const Objective& obj, IcpNorm norm, const IcpGrid& grid = {}) {
    if (!obj.x_star() || !obj.e_min())
        throw std::invalid_argument("check_icp: x_star and e_min required");
    const double r0 = grid.r0 ? *grid.r0 : obj.metadata().r0.value_or(1.0);
    if (!(r0 > 0.0) || !(grid.farfield_radius > r0))
        throw std::invalid_argument("check_icp: invalid radii");
    const auto& xs = *obj.x_star();
    const double e_min = *obj.e_min();
    const auto dist = [&](std::span<const double> x) {
        std::vector<double> v(x.size());
        for (std::size_t j = 0; j < v.size(); ++j) v[j] = x[j] - xs[j];
        return norm == IcpNorm::Euclidean ? detail::norm2(v) : detail::norm_inf(v);
    };

    IcpReport rep;

    // Inner samples: uniform (Euclidean ball sampling, then filtered for the
    // max-norm branch into the inscribed region; both cover the ball shape).
    struct Pt { double d; double excess; };
    std::vector<Pt> inner;
    inner.reserve(grid.n_inner);
    const std::uint64_t iseed = detail::mix64(grid.seed ^ 0x1c9f2ULL);
    const double sample_radius =
        norm == IcpNorm::Euclidean ? r0 : r0 * std::sqrt(static_cast<double>(obj.dim()));
    for (std::size_t s = 0; inner.size() < grid.n_inner && s < 8 * grid.n_inner; ++s) {
        auto x = detail::ball_point(obj.dim(), sample_radius, iseed, s);
        for (std::size_t j = 0; j < x.size(); ++j) x[j] += xs[j];
        const double dd = dist(x);
        if (dd > r0 || dd == 0.0) continue;
        const double e = obj(x);
        if (!std::isfinite(e)) throw EvalError("check_icp: non-finite evaluation", s);
        inner.push_back({dd, e - e_min});
    }
    if (inner.size() < 16) throw std::invalid_argument("check_icp: sampling too sparse");

    const double nus[] = {0.25, 0.5, 1.0, 2.0};
    for (double nu : nus) {
        double eta_full = std::numeric_limits<double>::infinity();
        double eta_shell = std::numeric_limits<double>::infinity();
        for (const auto& p : inner) {
            const double ratio = std::pow(std::max(p.excess, 0.0), nu) / p.d;
            eta_full = std::min(eta_full, ratio);
            if (p.d >= r0 / 2.0) eta_shell = std::min(eta_shell, ratio);
        }
        // Feasible when the fitted constant does not collapse near x*.
        const bool feasible = eta_full > 0.0 && std::isfinite(eta_shell) &&
                              eta_full >= 0.5 * eta_shell;
        if (feasible && nu >= rep.nu) {
            rep.nu = nu;
            rep.eta = eta_full;
            rep.local_ok = true;
        }
    }

    // Farfield: E - e_min must stay above a gap outside the ball.
    double gap = std::numeric_limits<double>::infinity();
    const std::uint64_t oseed = detail::mix64(grid.seed ^ 0x8d31aULL);
    std::size_t found = 0;
    for (std::size_t s = 0; found < grid.n_outer && s < 16 * grid.n_outer; ++s) {
        auto x = detail::ball_point(obj.dim(), grid.farfield_radius, oseed, s);
        for (std::size_t j = 0; j < x.size(); ++j) x[j] += xs[j];
        if (dist(x) <= r0) continue;
        const double e = obj(x);
        if (!std::isfinite(e)) throw EvalError("check_icp: non-finite evaluation", s);
        gap = std::min(gap, e - e_min);
        ++found;
    }
    rep.e_inf = std::isfinite(gap) ? gap : 0.0;
    rep.farfield_ok = found > 0 && gap > 1e-3;
    rep.passed = rep.local_ok && rep.farfield_ok;
    return rep;
}

// ---------------------------------------------------------------------------
// External objective: child process speaking a line protocol, one
// whitespace-separated d-vector in, one decimal value out, per evaluation.
// ---------------------------------------------------------------------------

class ProcessObjective {
public:
    ProcessObjective(const std::string& command, std::uint32_t dim) : dim_(dim) {
        int to_child[2], from_child[2];
        if (pipe(to_child) != 0 || pipe(from_child) != 0)
            throw std::runtime_error("process objective: pipe failed");
        pid_ = fork();
        if (pid_ < 0) throw std::runtime_error("process objective: fork failed");
        if (pid_ == 0) {
            dup2(to_child[0], STDIN_FILENO);
            dup2(from_child[1], STDOUT_FILENO);
            close(to_child[0]);
            close(to_child[1]);
            close(from_child[0]);
            close(from_child[1]);
            execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
            _exit(127);
        }
        close(to_child[0]);
        close(from_child[1]);
        in_ = fdopen(from_child[0], "r");
        out_ = fdopen(to_child[1], "w");
        if (!in_ || !out_) throw std::runtime_error("process objective: fdopen failed");
    }

    ~ProcessObjective() {
        if (out_) fclose(out_);
        if (in_) fclose(in_);
        if (pid_ > 0) waitpid(pid_, nullptr, 0);
    }

    ProcessObjective(const ProcessObjective&) = delete;
    ProcessObjective& operator=(const ProcessObjective&) = delete;

    double eval(std::span<const double> x) {
        std::lock_guard<std::mutex> lock(mutex_);
        for (std::size_t j = 0; j < x.size(); ++j)
            fprintf(out_, j + 1 < x.size() ? "%.17g " : "%.17g\n", x[j]);
        fflush(out_);
        char line[256];
        if (!fgets(line, sizeof line, in_))
            throw std::runtime_error("process objective: child closed the stream");
        char* end = nullptr;
        const double v = strtod(line, &end);
        if (end == line) throw std::runtime_error("process objective: unparsable reply");
        return v;
    }

    std::uint32_t dim() const { return dim_; }

private:
    std::uint32_t dim_;
    pid_t pid_ = -1;
    FILE* in_ = nullptr;
    FILE* out_ = nullptr;
    std::mutex mutex_;
};

inline Objective objective_from_command(const std::string& command, std::uint32_t dim) {
    auto proc = std::make_shared<ProcessObjective>(command, dim);
    return Objective([proc](std::span<const double> x) { return proc->eval(x); }, dim,
                     "external");
}

}  // namespace cbo
