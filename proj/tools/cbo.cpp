// Command-line driver: one binary, one subcommand per experiment. Every
// output file embeds the tool version and the hash of the canonical
// configuration, so identical configs reproduce byte-identical CSVs.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "cbo/cbo.hpp"

namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw cbo::ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

// Overrides are applied on the canonical serialization: replace the key line
// inside its section, or append the section/key if absent, then re-parse.
std::string apply_override(std::string text, const std::string& spec) {
    const auto dot = spec.find('.');
    const auto eq = spec.find('=');
    if (dot == std::string::npos || eq == std::string::npos || dot > eq)
        throw cbo::ConfigError("override must look like section.key=value: " + spec);
    const std::string section = spec.substr(0, dot);
    const std::string key = spec.substr(dot + 1, eq - dot - 1);
    const std::string value = spec.substr(eq + 1);

    std::istringstream in(text);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);

    const std::string header = "[" + section + "]";
    std::size_t sec_begin = lines.size();
    std::size_t sec_end = lines.size();
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i] == header) {
            sec_begin = i + 1;
            sec_end = lines.size();
            for (std::size_t j = sec_begin; j < lines.size(); ++j) {
                if (!lines[j].empty() && lines[j].front() == '[') {
                    sec_end = j;
                    break;
                }
            }
            break;
        }
    }
    if (sec_begin == lines.size()) {
        lines.push_back(header);
        lines.push_back(key + " = " + value);
    } else {
        bool replaced = false;
        for (std::size_t j = sec_begin; j < sec_end; ++j) {
            const auto e = lines[j].find('=');
            if (e == std::string::npos) continue;
            if (cbo::detail::trim(lines[j].substr(0, e)) == key) {
                lines[j] = key + " = " + value;
                replaced = true;
                break;
            }
        }
        if (!replaced) lines.insert(lines.begin() + sec_end, key + " = " + value);
    }
    std::string out;
    for (const auto& l : lines) out += l + "\n";
    return out;
}

bool config_mentions_seed(const std::string& text) {
    std::istringstream in(text);
    std::string line, section;
    while (std::getline(in, line)) {
        line = cbo::detail::trim(line.substr(0, line.find('#')));
        if (line.empty()) continue;
        if (line.front() == '[') {
            section = line;
            continue;
        }
        const auto eq = line.find('=');
        if (section == "[run]" && eq != std::string::npos &&
            cbo::detail::trim(line.substr(0, eq)) == "seed")
            return true;
    }
    return false;
}

struct CommonOpts {
    std::string config_path;
    std::string out_dir = ".";
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
};

cbo::ExperimentConfig load(const CommonOpts& opts) {
    std::string text = read_file(opts.config_path);
    // Canonicalize first so overrides always find their key lines.
    std::string canonical = cbo::serialize_config(cbo::parse_config(text));
    for (const auto& o : opts.overrides) canonical = apply_override(canonical, o);
    cbo::ExperimentConfig cfg = cbo::parse_config(canonical);
    if (opts.seed) {
        cfg.run.seed = *opts.seed;
    } else if (!config_mentions_seed(text)) {
        if (const char* env = std::getenv("CBO_SEED")) cfg.run.seed = std::strtoull(env, nullptr, 10);
    }
    return cfg;
}

cbo::Objective objective_of(const cbo::ExperimentConfig& cfg) {
    if (!cfg.objective) throw cbo::ConfigError("config: missing [objective] section");
    return cfg.objective->build(cfg.run.dim);
}

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("-c,--config", opts.config_path, "config file")->required();
    cmd->add_option("-o,--out-dir", opts.out_dir, "output directory");
    cmd->add_option("-s,--set", opts.overrides, "override section.key=value");
    cmd->add_option("--seed", opts.seed, "seed override");
    cmd->add_option("-t,--threads", opts.threads, "worker threads");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"consensus-based optimization experiment harness"};
    app.require_subcommand(1);

    CommonOpts opts;
    auto* cmd_run = app.add_subcommand("run", "single CBO run, trace to CSV");
    auto* cmd_plan = app.add_subcommand("plan", "hyperparameters for a target accuracy");
    auto* cmd_decay = app.add_subcommand("decay", "variance decay rate experiment");
    auto* cmd_rate_dt = app.add_subcommand("rate-dt", "strong rate in the step size");
    auto* cmd_rate_n = app.add_subcommand("rate-n", "rate in the particle count");
    auto* cmd_budget = app.add_subcommand("budget", "end-to-end error budget");
    auto* cmd_check = app.add_subcommand("check", "objective assumption checks");
    for (auto* c : {cmd_run, cmd_plan, cmd_decay, cmd_rate_dt, cmd_rate_n, cmd_budget, cmd_check})
        add_common(c, opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        const cbo::ExperimentConfig cfg = load(opts);
        const std::uint64_t hash = cbo::config_hash(cfg);
        const fs::path out_dir(opts.out_dir);

        if (cmd_plan->parsed()) {
            const cbo::PlannerOutput planned = cbo::plan(cfg.planner_input());
            std::printf("T = %.9g\nN = %llu\ndt = %.9g\nK = %llu\n", planned.horizon,
                        static_cast<unsigned long long>(planned.n_particles), planned.dt,
                        static_cast<unsigned long long>(planned.n_steps));
            if (planned.horizon_clamped)
                std::printf("warning: target already met by the bound, horizon clamped to 1\n");
            auto j = cbo::summary_base(cfg);
            j["plan"] = cbo::planner_json(planned);
            write_file(out_dir / "plan_summary.json", j.dump(2) + "\n");
            return 0;
        }

        const cbo::Objective obj = objective_of(cfg);

        if (cmd_run->parsed()) {
            const cbo::RunResult rr = cbo::run(cfg.run, obj, std::nullopt, opts.threads);
            write_file(out_dir / "run_trace.csv", cbo::trace_csv(rr.trace, cfg.run.dt, hash));
            auto j = cbo::summary_base(cfg);
            j["evaluations"] = rr.evaluations;
            j["warnings"] = rr.trace.warnings;
            j["moment_cap_breached"] = rr.trace.moment_cap_breached;
            const auto& last = rr.trace.rows.back();
            j["final_consensus"] = last.consensus_point;
            j["final_variance_functional"] = last.variance_functional;
            write_file(out_dir / "run_summary.json", j.dump(2) + "\n");
            for (const auto& w : rr.trace.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
            std::printf("run complete: %llu evaluations, trace in %s\n",
                        static_cast<unsigned long long>(rr.evaluations),
                        (out_dir / "run_trace.csv").c_str());
            return 0;
        }

        if (cmd_decay->parsed()) {
            const auto rep =
                cbo::decay_experiment(cfg.run, obj, cfg.experiment.n_seeds, opts.threads);
            write_file(out_dir / "decay_trace.csv", cbo::decay_csv(rep, hash));
            auto j = cbo::summary_base(cfg);
            j["decay"] = cbo::decay_json(rep);
            write_file(out_dir / "decay_summary.json", j.dump(2) + "\n");
            std::printf("fitted rate = %.6g, predicted rate = %.6g\n", rep.fitted_rate,
                        rep.predicted_rate);
            return 0;
        }

        if (cmd_rate_dt->parsed()) {
            if (cfg.experiment.levels < 3)
                throw cbo::ConfigError("rate-dt: experiment.levels must be >= 3");
            const auto rep = cbo::rate_dt_experiment(cfg.run, obj, cfg.experiment.levels,
                                                     cfg.experiment.n_seeds, opts.threads);
            write_file(out_dir / "rate_dt.csv", cbo::rate_csv(rep, hash));
            auto j = cbo::summary_base(cfg);
            j["rate_dt"] = cbo::rate_json(rep);
            write_file(out_dir / "rate_dt_summary.json", j.dump(2) + "\n");
            std::printf("dt slope = %.4g  [%.4g, %.4g]\n", rep.slope, rep.slope_ci[0],
                        rep.slope_ci[1]);
            return 0;
        }

        if (cmd_rate_n->parsed()) {
            cbo::ReferenceSpec ref;
            ref.n_ref = cfg.experiment.n_ref;
            ref.dt_ref = cfg.experiment.dt_ref;
            const auto rep = cbo::rate_n_experiment(cfg.run, obj, cfg.experiment.n_values,
                                                    cfg.experiment.n_seeds, ref, opts.threads);
            write_file(out_dir / "rate_n.csv", cbo::rate_csv(rep, hash));
            auto j = cbo::summary_base(cfg);
            j["rate_n"] = cbo::rate_json(rep);
            write_file(out_dir / "rate_n_summary.json", j.dump(2) + "\n");
            std::printf("N slope = %.4g  [%.4g, %.4g]\n", rep.slope, rep.slope_ci[0],
                        rep.slope_ci[1]);
            return 0;
        }

        if (cmd_budget->parsed()) {
            const auto rep = cbo::error_budget(cfg.run, obj, cfg.planner_input(),
                                               cfg.experiment.n_seeds, opts.threads);
            write_file(out_dir / "budget.csv", cbo::budget_csv(rep, hash));
            auto j = cbo::summary_base(cfg);
            j["budget"] = cbo::budget_json(rep);
            write_file(out_dir / "budget_summary.json", j.dump(2) + "\n");
            std::printf("measured mean = %.6g, budget = %.6g, success fraction = %.2f\n",
                        rep.measured_mean, rep.budget_total, rep.success_fraction);
            return 0;
        }

        if (cmd_check->parsed()) {
            const double radius = 10.0;
            const auto lip = cbo::check_local_lipschitz(obj, radius, 4000, cfg.run.seed + 1);
            const auto growth = cbo::check_growth(obj, radius, 4000, cfg.run.seed + 2);
            const auto norm = cfg.run.diffusion == cbo::DiffusionKind::Anisotropic
                                  ? cbo::IcpNorm::MaxNorm
                                  : cbo::IcpNorm::Euclidean;
            cbo::IcpGrid grid;
            grid.seed = cfg.run.seed + 3;
            const auto icp = cbo::check_icp(obj, norm, grid);
            std::printf("A2 local lipschitz: %s (fitted L = %.6g)\n",
                        lip.passed ? "pass" : "FAIL", lip.fitted_l);
            std::printf("A3 growth: upper %s (c_u = %.6g), lower %s (c_l = %.6g%s)\n",
                        growth.upper_ok ? "pass" : "FAIL", growth.fitted_c_u,
                        growth.lower_ok ? "pass" : "FAIL", growth.fitted_c_l,
                        growth.bounded_branch ? ", bounded branch" : "");
            std::printf("ICP: %s (nu = %.3g, eta = %.6g, farfield gap = %.6g)\n",
                        icp.passed ? "pass" : "FAIL", icp.nu, icp.eta, icp.e_inf);
            auto j = cbo::summary_base(cfg);
            j["lipschitz"] = {{"passed", lip.passed}, {"fitted_l", lip.fitted_l}};
            j["growth"] = {{"upper_ok", growth.upper_ok},
                           {"lower_ok", growth.lower_ok},
                           {"c_u", growth.fitted_c_u},
                           {"c_l", growth.fitted_c_l},
                           {"bounded_branch", growth.bounded_branch}};
            j["icp"] = {{"passed", icp.passed},
                        {"nu", icp.nu},
                        {"eta", icp.eta},
                        {"e_inf", icp.e_inf}};
            write_file(out_dir / "check_summary.json", j.dump(2) + "\n");
            return 0;
        }
    } catch (const cbo::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
