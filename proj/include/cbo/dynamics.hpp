#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "consensus.hpp"
#include "core.hpp"
#include "objectives.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace cbo {

struct StepReport {
    Ensemble ensemble;          // post-step
    ConsensusResult consensus;  // computed from the pre-step ensemble
    std::uint64_t evaluations = 0;
};

/// One iteration of the Euler-Maruyama CBO update,
///   x_i' = x_i - lambda (x_i - x_alpha) dt + sigma D(x_i - x_alpha) dW_i,
/// with x_alpha frozen from the pre-step ensemble (synchronous update).
/// Isotropic: D(v) dW = |v| dW. Anisotropic: D(v) dW = v (.) dW.
/// A non-finite objective value at a proposed position is a hard error.
inline StepReport em_step(const Ensemble& ens, const CboConfig& cfg, const NoiseTable& noise,
                          const Objective& obj, unsigned threads = 1) {
    const std::size_t n = ens.size();
    const std::size_t d = ens.dim();
    const std::uint32_t k = ens.time_index();
    if (k >= cfg.n_steps) throw std::invalid_argument("em_step: time index beyond n_steps");

    ConsensusResult cons = consensus_point(ens, cfg.alpha);
    const double a = cfg.lambda * cfg.dt;

    Matrix next(n, d);
    std::vector<double> energies(n);
    std::vector<double> dw(threads <= 1 ? d : 0);

    parallel_for(n, threads, [&](std::size_t i) {
        std::vector<double> local_dw(d);
        double* dwp = threads <= 1 ? dw.data() : local_dw.data();
        noise.increment_into(i, k, dwp);
        auto xi = ens.positions().row(i);
        auto out = next.row(i);
        if (cfg.diffusion == DiffusionKind::Isotropic) {
            double vn = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double v = xi[j] - cons.point[j];
                vn += v * v;
            }
            vn = std::sqrt(vn);
            for (std::size_t j = 0; j < d; ++j) {
                const double v = xi[j] - cons.point[j];
                out[j] = xi[j] - a * v + cfg.sigma * vn * dwp[j];
            }
        } else {
            for (std::size_t j = 0; j < d; ++j) {
                const double v = xi[j] - cons.point[j];
                out[j] = xi[j] - a * v + cfg.sigma * v * dwp[j];
            }
        }
        energies[i] = obj(out);
        if (!std::isfinite(energies[i]))
            throw EvalError("em_step: objective non-finite at proposed position for particle " +
                                std::to_string(i),
                            i);
    });

    return StepReport{Ensemble(std::move(next), std::move(energies), k + 1), std::move(cons),
                      n};
}

struct RunResult {
    RunTrace trace;
    std::optional<Ensemble> final_ensemble;
    std::uint64_t evaluations = 0;
};

namespace detail {

inline TraceRow make_trace_row(const Ensemble& ens, const ConsensusResult& cons,
                               const std::optional<std::vector<double>>& x_star,
                               std::uint64_t evals) {
    TraceRow row;
    row.step = ens.time_index();
    row.consensus_point = cons.point;
    row.effective_weight_fraction = cons.max_weight;
    row.evaluations = evals;
    const std::size_t n = ens.size();
    const std::size_t d = ens.dim();
    double sm = 0.0, mx = 0.0;
    std::vector<double> mean(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto xi = ens.positions().row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            s += xi[j] * xi[j];
            mean[j] += xi[j];
        }
        sm += s;
        mx = std::max(mx, std::sqrt(s));
    }
    row.second_moment = sm / static_cast<double>(n);
    row.max_norm = mx;
    if (x_star) {
        row.variance_functional = variance_functional(ens, *x_star);
        double je = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double v = mean[j] / static_cast<double>(n) - (*x_star)[j];
            je += v * v;
        }
        row.jensen_error = je;
    }
    return row;
}

}  // namespace detail

/// Samples the initial ensemble, iterates em_step for cfg.n_steps steps and
/// records per-step statistics. The trace has n_steps + 1 rows (index 0 is
/// the initial ensemble). Deterministic in (cfg, seed) for any thread count.
inline RunResult run(const CboConfig& cfg, const Objective& obj,
                     std::optional<std::vector<double>> x_star = std::nullopt,
                     unsigned threads = 1) {
    cfg.validate();
    if (obj.dim() != cfg.dim) throw ConfigError("run: objective dimension mismatch");
    if (!x_star && obj.x_star()) x_star = obj.x_star();

    RunResult res;
    res.trace.warnings = cfg.warnings();
    if (x_star) {
        if (x_star->size() != cfg.dim) throw ConfigError("run: x_star dimension mismatch");
        if (!cfg.init.supports(*x_star))
            res.trace.warnings.push_back(
                "initial distribution support does not contain x*; decay theory void");
    }

    Matrix positions = sample_initial(cfg.init, cfg.n_particles, cfg.dim, cfg.seed);
    std::vector<double> energies(cfg.n_particles);
    parallel_for(cfg.n_particles, threads, [&](std::size_t i) {
        energies[i] = obj(positions.row(i));
        if (!std::isfinite(energies[i]))
            throw EvalError("run: objective non-finite at initial position", i);
    });
    res.evaluations = cfg.n_particles;

    Ensemble ens(std::move(positions), std::move(energies), 0);
    NoiseTable noise(cfg.seed, cfg.dt, cfg.n_particles, std::max<std::uint32_t>(cfg.n_steps, 1),
                     cfg.dim);

    for (std::uint32_t k = 0;; ++k) {
        ConsensusResult cons = consensus_point(ens, cfg.alpha);
        res.trace.rows.push_back(detail::make_trace_row(ens, cons, x_star, res.evaluations));
        if (res.trace.rows.back().second_moment > cfg.moment_cap)
            res.trace.moment_cap_breached = true;
        if (k == cfg.n_steps) {
            res.final_ensemble = std::move(ens);
            break;
        }
        try {
            StepReport rep = em_step(ens, cfg, noise, obj, threads);
            res.evaluations += rep.evaluations;
            ens = std::move(rep.ensemble);
        } catch (const EvalError& e) {
            throw EvalError(std::string(e.what()) + " at step " + std::to_string(k),
                            e.particle_index);
        }
    }
    return res;
}

/// Continuous-time extension of the step that starts at ens_k: returns
/// X(k dt) + b (t - k dt) + n (W_t - W_{k dt}) with the drift and diffusion
/// frozen at the step start. Coincides with the discrete iterate at t = k dt.
/// Diagnostic-only; run() never calls this.
inline Matrix interpolate(const Ensemble& ens_k, const ConsensusResult& consensus_k,
                          const CboConfig& cfg, const NoiseTable& noise, double t) {
    const std::size_t n = ens_k.size();
    const std::size_t d = ens_k.dim();
    const std::uint32_t k = ens_k.time_index();
    const double t0 = static_cast<double>(k) * cfg.dt;
    const double tau = t - t0;
    if (!(tau >= 0.0) || !(tau < cfg.dt))
        throw std::out_of_range("interpolate: t outside [k dt, (k+1) dt)");

    Matrix out(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        auto xi = ens_k.positions().row(i);
        std::vector<double> w = tau == 0.0 ? std::vector<double>(d, 0.0)
                                           : noise.brownian_partial(i, k, tau);
        double vn = 0.0;
        if (cfg.diffusion == DiffusionKind::Isotropic) {
            for (std::size_t j = 0; j < d; ++j) {
                const double v = xi[j] - consensus_k.point[j];
                vn += v * v;
            }
            vn = std::sqrt(vn);
        }
        for (std::size_t j = 0; j < d; ++j) {
            const double v = xi[j] - consensus_k.point[j];
            const double scale = cfg.diffusion == DiffusionKind::Isotropic ? vn : v;
            out(i, j) = xi[j] - cfg.lambda * v * tau + cfg.sigma * scale * w[j];
        }
    }
    return out;
}

}  // namespace cbo
