// Acceptance suite: one line per criterion, nonzero exit if any fails.
// Tolerances are fixed here and are not tuned at run time.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "cbo/cbo.hpp"

using namespace cbo;

namespace {

int g_failures = 0;

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

void report(int idx, const char* what, bool ok, double secs, const std::string& detail) {
    std::printf("%s: criterion %d (%s) [%.2fs] %s\n", ok ? "PASS" : "FAIL", idx, what, secs,
                detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

double urand(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return detail::uniform_open(detail::counter_hash(seed, a, b, c));
}

// --------------------------------------------------------------- criterion 1

void criterion_consensus() {
    Timer timer;
    bool ok = true;
    std::string detail;

    // Hand-worked 3-particle example, checked to 1e-12.
    {
        Matrix x(3, 1);
        x(0, 0) = 0; x(1, 0) = 1; x(2, 0) = 2;
        std::vector<double> e{0, 1, 2};
        const long double expect =
            (expl(-1.0L) + 2.0L * expl(-2.0L)) / (1.0L + expl(-1.0L) + expl(-2.0L));
        const auto res = consensus_point(x, e, 1.0);
        if (std::abs(res.point[0] - static_cast<double>(expect)) > 1e-12) {
            ok = false;
            detail = "hand example off";
        }
    }

    // 10^4 random instances: convex hull membership, energy-shift and
    // permutation invariance, Laplace sandwich, long-double oracle agreement.
    std::size_t checked = 0;
    for (std::uint64_t t = 0; t < 10000 && ok; ++t) {
        const std::size_t n = 1 + static_cast<std::size_t>(urand(1, t, 0, 0) * 64.0);
        const std::size_t d = 1 + static_cast<std::size_t>(urand(1, t, 0, 1) * 8.0);
        const double alpha = std::pow(10.0, -2.0 + 8.0 * urand(1, t, 0, 2));
        Matrix x(n, d);
        std::vector<double> e(n);
        for (std::size_t i = 0; i < n; ++i) {
            e[i] = -5.0 + 10.0 * urand(1, t, 1 + i, 0);
            for (std::size_t j = 0; j < d; ++j)
                x(i, j) = -5.0 + 10.0 * urand(1, t, 1 + i, 1 + j);
        }
        const auto res = consensus_point(x, e, alpha);
        ++checked;

        double e_min = e[0], e_max = e[0];
        for (double v : e) { e_min = std::min(e_min, v); e_max = std::max(e_max, v); }

        for (std::size_t j = 0; j < d && ok; ++j) {
            double lo = x(0, j), hi = x(0, j);
            for (std::size_t i = 0; i < n; ++i) {
                lo = std::min(lo, x(i, j));
                hi = std::max(hi, x(i, j));
            }
            if (res.point[j] < lo - 1e-12 || res.point[j] > hi + 1e-12) {
                ok = false;
                detail = "hull violation at instance " + std::to_string(t);
            }
        }

        const double upper = e_min + std::log(static_cast<double>(n)) / alpha;
        if (ok && (res.laplace_value < e_min - 1e-9 * (1.0 + std::abs(e_min)) ||
                   res.laplace_value > upper + 1e-9 * (1.0 + std::abs(upper)))) {
            ok = false;
            detail = "Laplace sandwich violation at instance " + std::to_string(t);
        }

        if (ok) {
            // Offsets up to 1e6 at alpha up to 1e4. Adding the offset rounds
            // each energy by up to offset * eps, which the exponential weights
            // amplify by alpha; the tolerance covers exactly that.
            const double alpha_s = std::min(alpha, 1e4);
            const double offset = std::pow(10.0, 6.0 * urand(2, t, 0, 0));
            const auto base = consensus_point(x, e, alpha_s);
            std::vector<double> shifted = e;
            for (double& v : shifted) v += offset;
            const auto res2 = consensus_point(x, shifted, alpha_s);
            const double tol =
                1e-12 + 50.0 * alpha_s * offset * 2.22e-16 * 10.0;
            for (std::size_t j = 0; j < d; ++j)
                if (std::abs(base.point[j] - res2.point[j]) > tol) {
                    ok = false;
                    detail = "shift invariance violation at instance " + std::to_string(t);
                }
        }

        if (ok) {  // permutation invariance (reversal is an odd permutation)
            Matrix xp(n, d);
            std::vector<double> ep(n);
            for (std::size_t i = 0; i < n; ++i) {
                ep[i] = e[n - 1 - i];
                for (std::size_t j = 0; j < d; ++j) xp(i, j) = x(n - 1 - i, j);
            }
            const auto res2 = consensus_point(xp, ep, alpha);
            for (std::size_t j = 0; j < d; ++j)
                if (std::abs(res.point[j] - res2.point[j]) > 1e-12) {
                    ok = false;
                    detail = "permutation invariance violation at instance " + std::to_string(t);
                }
        }

        if (ok) {  // independent long-double oracle
            long double den = 0.0L;
            std::vector<long double> num(d, 0.0L);
            for (std::size_t i = 0; i < n; ++i) {
                const long double w =
                    expl(-static_cast<long double>(alpha) * (e[i] - e_min));
                den += w;
                for (std::size_t j = 0; j < d; ++j) num[j] += w * x(i, j);
            }
            for (std::size_t j = 0; j < d; ++j)
                if (std::abs(res.point[j] - static_cast<double>(num[j] / den)) > 1e-10) {
                    ok = false;
                    detail = "oracle mismatch at instance " + std::to_string(t);
                }
        }
    }
    const double secs = timer.seconds();
    if (ok && secs > 10.0) {
        ok = false;
        detail = "too slow";
    }
    if (ok) detail = std::to_string(checked) + " random instances + hand example";
    report(1, "consensus properties", ok, secs, detail);
}

// --------------------------------------------------------------- criterion 2

void criterion_exact_limits() {
    Timer timer;
    bool ok = true;
    std::string detail = "fixed point, collapse, contraction all exact";

    Objective flat([](std::span<const double>) { return 0.0; }, 1, "flat");
    Objective flat2([](std::span<const double>) { return 0.0; }, 2, "flat");

    // A lone particle is a bitwise fixed point even with noise.
    {
        Matrix x(1, 2);
        x(0, 0) = 0.3; x(0, 1) = -1.7;
        CboConfig cfg;
        cfg.dim = 2; cfg.n_particles = 1; cfg.lambda = 1.0; cfg.sigma = 5.0;
        cfg.dt = 0.5; cfg.n_steps = 1; cfg.init = InitDistribution::gaussian({0, 0}, {1, 1});
        NoiseTable noise(1, cfg.dt, 1, 1, 2);
        auto rep = em_step(Ensemble(x, {0.0}, 0), cfg, noise, flat2);
        if (rep.ensemble.positions()(0, 0) != 0.3 || rep.ensemble.positions()(0, 1) != -1.7) {
            ok = false;
            detail = "single-particle fixed point not exact";
        }
    }

    // sigma = 0, lambda dt = 1: exact collapse onto the consensus for dyadic
    // data (equal energies make the consensus the arithmetic mean, 0.75).
    if (ok) {
        Matrix x(4, 1);
        x(0, 0) = 0.0; x(1, 0) = 0.5; x(2, 0) = 1.0; x(3, 0) = 1.5;
        CboConfig cfg;
        cfg.dim = 1; cfg.n_particles = 4; cfg.lambda = 1.0; cfg.sigma = 0.0;
        cfg.dt = 1.0; cfg.n_steps = 1; cfg.init = InitDistribution::gaussian({0}, {1});
        NoiseTable noise(1, cfg.dt, 4, 1, 1);
        auto rep = em_step(Ensemble(x, {0, 0, 0, 0}, 0), cfg, noise, flat);
        for (std::size_t i = 0; i < 4; ++i)
            if (rep.ensemble.positions()(i, 0) != 0.75) {
                ok = false;
                detail = "collapse not exact";
            }

        // lambda dt = 1/2: distances to the consensus halve exactly.
        cfg.dt = 0.5;
        NoiseTable noise2(1, cfg.dt, 4, 1, 1);
        auto half = em_step(Ensemble(x, {0, 0, 0, 0}, 0), cfg, noise2, flat);
        for (std::size_t i = 0; i < 4; ++i)
            if (half.ensemble.positions()(i, 0) - 0.75 != 0.5 * (x(i, 0) - 0.75)) {
                ok = false;
                detail = "contraction factor not exact";
            }
    }

    const double secs = timer.seconds();
    if (ok && secs > 1.0) { ok = false; detail = "too slow"; }
    report(2, "exact deterministic limits", ok, secs, detail);
}

// --------------------------------------------------------------- criterion 3

double fitted_decay(std::uint32_t dim, DiffusionKind kind, double sigma,
                    std::uint32_t n_steps, unsigned threads) {
    CboConfig cfg;
    cfg.dim = dim;
    cfg.n_particles = 256;
    cfg.lambda = 1.0;
    cfg.sigma = sigma;
    cfg.alpha = 1e5;
    cfg.dt = 0.01;
    cfg.n_steps = n_steps;
    cfg.diffusion = kind;
    cfg.seed = 2024;
    cfg.init = InitDistribution::gaussian(std::vector<double>(dim, 0.0),
                                          std::vector<double>(dim, 1.0));
    auto obj = builtin(BuiltinObjective::Sphere, dim);
    return decay_experiment(cfg, obj, 50, threads).fitted_rate;
}

void criterion_decay_rates() {
    Timer timer;
    bool ok = true;
    char buf[256];

    const double iso4 = fitted_decay(4, DiffusionKind::Isotropic, 0.4, 700, 8);
    const double aniso4 = fitted_decay(4, DiffusionKind::Anisotropic, 0.4, 600, 8);
    const double aniso16 = fitted_decay(16, DiffusionKind::Anisotropic, 0.4, 600, 8);
    const double p_iso = 2.0 - 4.0 * 0.16;   // 1.36
    const double p_aniso = 2.0 - 0.16;       // 1.84

    ok = ok && std::abs(iso4 - p_iso) <= 0.3 * p_iso;
    ok = ok && std::abs(aniso4 - p_aniso) <= 0.3 * p_aniso;
    ok = ok && std::abs(aniso16 - p_aniso) <= 0.3 * p_aniso;
    std::snprintf(buf, sizeof buf,
                  "iso d=4: %.3f (predicted 1.36), aniso d=4: %.3f, aniso d=16: %.3f "
                  "(predicted 1.84), 50 seeds",
                  iso4, aniso4, aniso16);
    const double secs = timer.seconds();
    if (ok && secs > 300.0) { ok = false; std::snprintf(buf, sizeof buf, "too slow"); }
    report(3, "variance decay rates", ok, secs, buf);
}

// --------------------------------------------------------------- criterion 4

void criterion_rate_dt() {
    Timer timer;
    bool ok = true;
    char buf[256];

    CboConfig cfg;
    cfg.dim = 2;
    cfg.n_particles = 512;
    cfg.lambda = 1.0;
    cfg.sigma = 0.7;
    cfg.alpha = 10.0;
    cfg.dt = 0.04;
    cfg.n_steps = 25;
    cfg.seed = 77;
    cfg.init = InitDistribution::gaussian({1.0, 1.0}, {1.0, 1.0});
    auto obj = builtin(BuiltinObjective::Sphere, 2);

    // rate_dt_experiment verifies the refinement coupling to 1e-14 internally
    // and throws on violation.
    auto stoch = rate_dt_experiment(cfg, obj, 5, 32, 8);
    CboConfig det = cfg;
    det.sigma = 0.0;
    auto control = rate_dt_experiment(det, obj, 5, 8, 8);

    ok = ok && stoch.slope >= 0.8 && stoch.slope <= 1.2;
    ok = ok && control.slope >= 1.7 && control.slope <= 2.3;
    std::snprintf(buf, sizeof buf,
                  "MSE slope %.3f in [0.8, 1.2] (CI [%.3f, %.3f]), sigma=0 control %.3f in "
                  "[1.7, 2.3], coupling verified to 1e-14",
                  stoch.slope, stoch.slope_ci[0], stoch.slope_ci[1], control.slope);
    const double secs = timer.seconds();
    if (ok && secs > 600.0) { ok = false; std::snprintf(buf, sizeof buf, "too slow"); }
    report(4, "strong rate in dt", ok, secs, buf);
}

// --------------------------------------------------------------- criterion 5

void criterion_rate_n() {
    Timer timer;
    bool ok = true;
    char buf[256];

    CboConfig cfg;
    cfg.dim = 2;
    cfg.n_particles = 16;
    cfg.lambda = 1.0;
    cfg.sigma = 0.4;
    cfg.alpha = 50.0;
    cfg.dt = 0.02;
    cfg.n_steps = 50;
    cfg.seed = 99;
    cfg.init = InitDistribution::gaussian({1.0, 1.0}, {1.0, 1.0});
    auto obj = builtin(BuiltinObjective::Sphere, 2);

    ReferenceSpec ref;
    ref.n_ref = 4096;
    auto rep = rate_n_experiment(cfg, obj, {16, 32, 64, 128, 256}, 16, ref, 8);

    ok = ok && rep.slope >= -1.3 && rep.slope <= -0.5;
    ok = ok && rep.slope_ci[0] <= rep.slope && rep.slope <= rep.slope_ci[1];
    ok = ok && rep.slope_ci[1] - rep.slope_ci[0] < 1.0;  // informative interval
    std::snprintf(buf, sizeof buf,
                  "slope %.3f in [-1.3, -0.5], bootstrap CI [%.3f, %.3f], n_ref=4096",
                  rep.slope, rep.slope_ci[0], rep.slope_ci[1]);
    const double secs = timer.seconds();
    if (ok && secs > 600.0) { ok = false; std::snprintf(buf, sizeof buf, "too slow"); }
    report(5, "rate in particle count", ok, secs, buf);
}

// --------------------------------------------------------------- criterion 6

void criterion_planner() {
    Timer timer;
    bool ok = true;
    std::string detail = "worked example exact to 1e-9, 20-point sweep monotone";

    PlannerInput in;
    in.eps_total = 0.01;
    in.lambda = 1.0;
    in.sigma = 0.5;
    in.diffusion = DiffusionKind::Isotropic;
    in.dim = 2;
    auto out = plan(in);
    // (1 - 1/3)(2 - 2 * 0.25) = 1, so T = ln(1200) + 1.
    if (std::abs(out.horizon - (std::log(1200.0) + 1.0)) > 1e-9) ok = false;
    if (out.n_particles != 300) ok = false;
    if (std::abs(out.dt - 0.01 / 3.0) > 1e-9) ok = false;
    if (out.n_steps != 2428) ok = false;
    if (!ok) detail = "worked example mismatch";

    if (ok) {
        double prev_t = -1.0, prev_dt = 2.0;
        std::uint64_t prev_n = 0, prev_k = 0;
        for (int i = 0; i < 20; ++i) {
            in.eps_total = 1.0 * std::pow(0.6, i);
            auto o = plan(in);
            if (i > 0 && (o.horizon < prev_t || o.n_particles < prev_n || o.dt > prev_dt ||
                          o.n_steps < prev_k)) {
                ok = false;
                detail = "sweep not monotone at point " + std::to_string(i);
            }
            prev_t = o.horizon;
            prev_n = o.n_particles;
            prev_dt = o.dt;
            prev_k = o.n_steps;
        }
        in.eps_total = 1000.0;
        auto clamped = plan(in);
        if (!clamped.horizon_clamped || clamped.horizon != 1.0) {
            ok = false;
            detail = "horizon clamp missing";
        }
    }

    const double secs = timer.seconds();
    if (ok && secs > 1.0) { ok = false; detail = "too slow"; }
    report(6, "hyperparameter planner", ok, secs, detail);
}

// --------------------------------------------------------------- criterion 7

void criterion_budget() {
    Timer timer;
    bool ok = true;
    char buf[256];

    PlannerInput pin;
    pin.eps_total = 0.01;
    pin.lambda = 1.0;
    pin.sigma = 0.5;
    pin.diffusion = DiffusionKind::Isotropic;
    pin.dim = 2;
    pin.v_rho0 = 1.0;

    CboConfig tmpl;
    tmpl.seed = 4242;
    tmpl.init = InitDistribution::gaussian({0.0, 0.0}, {1.0, 1.0});  // V(rho0) = 1
    auto obj = builtin(BuiltinObjective::Sphere, 2);

    auto rep = error_budget(tmpl, obj, pin, 20, 8);
    ok = ok && rep.success_fraction >= 0.8;
    std::snprintf(buf, sizeof buf,
                  "planned N=%llu K=%llu: measured mean %.2e, eps=0.01 met in %.0f%% of 20 "
                  "seeds (budget %.3f)",
                  static_cast<unsigned long long>(rep.planned.n_particles),
                  static_cast<unsigned long long>(rep.planned.n_steps), rep.measured_mean,
                  100.0 * rep.success_fraction, rep.budget_total);
    const double secs = timer.seconds();
    if (ok && secs > 300.0) { ok = false; std::snprintf(buf, sizeof buf, "too slow"); }
    report(7, "end-to-end error budget", ok, secs, buf);
}

// --------------------------------------------------------------- criterion 8

void criterion_checkers() {
    Timer timer;
    bool ok = true;
    std::string detail =
        "sphere certified (c_u=c_l=1/2, nu=1/2); exp(|x|^2), |x| and a twin-minimum "
        "objective rejected";

    auto sphere = builtin(BuiltinObjective::Sphere, 2);
    auto lip = check_local_lipschitz(sphere, 10.0, 4000, 11);
    auto growth = check_growth(sphere, 10.0, 4000, 11);
    auto icp = check_icp(sphere, IcpNorm::Euclidean);
    if (!lip.passed || !growth.upper_ok || !growth.lower_ok || !icp.passed)
        { ok = false; detail = "sphere rejected"; }
    if (ok && (std::abs(growth.fitted_c_u - 0.5) > 0.05 * 0.5 ||
               std::abs(growth.fitted_c_l - 0.5) > 0.05 * 0.5))
        { ok = false; detail = "sphere growth constants off 1/2"; }
    if (ok && (icp.nu != 0.5 || std::abs(icp.eta - 1.0 / std::sqrt(2.0)) > 0.05))
        { ok = false; detail = "sphere inverse-continuity constants off"; }

    if (ok) {
        Objective hot(
            [](std::span<const double> x) {
                double s = 0.0;
                for (double v : x) s += v * v;
                return std::exp(s);
            },
            2, "exp_sq");
        if (check_local_lipschitz(hot, 10.0, 4000, 11).passed)
            { ok = false; detail = "exp(|x|^2) not rejected by the Lipschitz check"; }
    }

    if (ok) {
        Objective lin(
            [](std::span<const double> x) {
                double s = 0.0;
                for (double v : x) s += v * v;
                return std::sqrt(s);
            },
            2, "norm");
        lin.with_minimizer({0.0, 0.0}, 0.0);
        auto g = check_growth(lin, 10.0, 4000, 11);
        if (g.lower_ok) { ok = false; detail = "|x| not rejected by the growth check"; }
    }

    if (ok) {
        Objective twin(
            [](std::span<const double> x) {
                double s = 0.0;
                for (double v : x) s += v * v;
                return (s - 1.0) * (s - 1.0);
            },
            2, "ring");
        twin.with_minimizer({1.0, 0.0}, 0.0);
        IcpGrid grid;
        grid.r0 = 0.5;
        if (check_icp(twin, IcpNorm::Euclidean, grid).passed)
            { ok = false; detail = "twin-minimum objective not rejected by the ICP check"; }
    }

    const double secs = timer.seconds();
    if (ok && secs > 30.0) { ok = false; detail = "too slow"; }
    report(8, "assumption checkers", ok, secs, detail);
}

// --------------------------------------------------------------- criterion 9

void criterion_thread_determinism() {
    Timer timer;
    bool ok = true;
    std::string detail = "run and decay CSVs byte-identical for 1, 2, 8 threads";

    CboConfig cfg;
    cfg.dim = 3;
    cfg.n_particles = 64;
    cfg.lambda = 1.0;
    cfg.sigma = 0.6;
    cfg.alpha = 1000.0;
    cfg.dt = 0.02;
    cfg.n_steps = 50;
    cfg.seed = 321;
    cfg.init = InitDistribution::gaussian({1, 1, 1}, {1, 1, 1});
    auto obj = builtin(BuiltinObjective::Sphere, 3);

    std::string run_csv[3], decay_csv_s[3];
    const unsigned threads[3] = {1, 2, 8};
    for (int t = 0; t < 3; ++t) {
        auto rr = run(cfg, obj, std::nullopt, threads[t]);
        run_csv[t] = trace_csv(rr.trace, cfg.dt, 0);
        auto dec = decay_experiment(cfg, obj, 12, threads[t]);
        decay_csv_s[t] = decay_csv(dec, 0);
    }
    for (int t = 1; t < 3; ++t) {
        if (run_csv[t] != run_csv[0]) { ok = false; detail = "run trace differs"; }
        if (decay_csv_s[t] != decay_csv_s[0]) { ok = false; detail = "decay trace differs"; }
    }
    report(9, "thread-count determinism", ok, timer.seconds(), detail);
}

}  // namespace

int main() {
    criterion_consensus();
    criterion_exact_limits();
    criterion_decay_rates();
    criterion_rate_dt();
    criterion_rate_n();
    criterion_planner();
    criterion_budget();
    criterion_checkers();
    criterion_thread_determinism();
    if (g_failures == 0) {
        std::printf("all 9 acceptance criteria passed\n");
        return 0;
    }
    std::printf("%d acceptance criteria FAILED\n", g_failures);
    return 1;
}
