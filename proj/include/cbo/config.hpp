#pragma once

#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "core.hpp"
#include "experiments.hpp"
#include "objectives.hpp"

namespace cbo {

namespace detail {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string format_vector(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ' ';
        out += format_double(v[i]);
    }
    return out;
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace detail

/// Objective selection: a builtin by name or an external command speaking the
/// line protocol.
struct ObjectiveConfig {
    std::string name = "sphere";
    double offset = 0.0;       // shifted_sphere only
    std::string command;       // external only

    Objective build(std::uint32_t dim) const {
        if (name == "external") {
            if (command.empty()) throw ConfigError("objective: external requires command");
            return objective_from_command(command, dim);
        }
        auto which = builtin_by_name(name);
        if (!which) throw ConfigError("objective: unknown name '" + name + "'");
        return builtin(*which, dim, offset);
    }
};

struct ExperimentSection {
    std::uint32_t n_seeds = 16;
    std::uint32_t levels = 5;
    std::vector<std::uint32_t> n_values = {16, 32, 64, 128, 256};
    std::uint32_t n_ref = 4096;
    double dt_ref = 0.0;  // 0 = use [run] dt
};

/// The full structured-text configuration: sections [run], [objective],
/// [planner], [experiment]. Unknown sections or keys are rejected.
struct ExperimentConfig {
    CboConfig run;
    std::optional<ObjectiveConfig> objective;
    std::optional<PlannerInput> planner;
    ExperimentSection experiment;
    bool has_experiment_section = false;

    PlannerInput planner_input() const {
        PlannerInput p = planner.value_or(PlannerInput{});
        p.lambda = run.lambda;
        p.sigma = run.sigma;
        p.alpha = run.alpha;
        p.diffusion = run.diffusion;
        p.dim = run.dim;
        return p;
    }
};

inline ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg;
    bool saw_run = false;
    std::string section;
    std::istringstream in(text);
    std::string line;

    // Raw key-value capture per section, validated afterwards.
    std::map<std::string, std::map<std::string, std::string>> raw;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(lineno) + ": bad section");
            section = detail::trim(line.substr(1, line.size() - 2));
            if (section != "run" && section != "objective" && section != "planner" &&
                section != "experiment")
                throw ConfigError("config: unknown section [" + section + "]");
            raw[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos || section.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (!raw[section].emplace(key, value).second)
            throw ConfigError("config: duplicate key '" + key + "' in [" + section + "]");
    }

    const auto take = [](std::map<std::string, std::string>& sec, const std::string& key)
        -> std::optional<std::string> {
        auto it = sec.find(key);
        if (it == sec.end()) return std::nullopt;
        std::string v = it->second;
        sec.erase(it);
        return v;
    };
    const auto to_double = [](const std::string& v, const std::string& key) {
        try {
            std::size_t pos = 0;
            const double d = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
            return d;
        } catch (...) {
            throw ConfigError("config: bad number for '" + key + "': " + v);
        }
    };
    const auto to_u64 = [&](const std::string& v, const std::string& key) {
        try {
            return static_cast<std::uint64_t>(std::stoull(v));
        } catch (...) {
            throw ConfigError("config: bad integer for '" + key + "': " + v);
        }
    };
    const auto to_dvec = [&](const std::string& v, const std::string& key) {
        std::vector<double> out;
        std::istringstream vs(v);
        std::string tok;
        while (vs >> tok) out.push_back(to_double(tok, key));
        return out;
    };
    const auto reject_leftovers = [](const std::map<std::string, std::string>& sec,
                                     const std::string& name) {
        if (!sec.empty())
            throw ConfigError("config: unknown key '" + sec.begin()->first + "' in [" + name +
                              "]");
    };

    if (auto it = raw.find("run"); it != raw.end()) {
        saw_run = true;
        auto& sec = it->second;
        if (auto v = take(sec, "dim")) cfg.run.dim = static_cast<std::uint32_t>(to_u64(*v, "dim"));
        if (auto v = take(sec, "n_particles"))
            cfg.run.n_particles = static_cast<std::uint32_t>(to_u64(*v, "n_particles"));
        if (auto v = take(sec, "lambda")) cfg.run.lambda = to_double(*v, "lambda");
        if (auto v = take(sec, "sigma")) cfg.run.sigma = to_double(*v, "sigma");
        if (auto v = take(sec, "alpha")) cfg.run.alpha = to_double(*v, "alpha");
        if (auto v = take(sec, "dt")) cfg.run.dt = to_double(*v, "dt");
        if (auto v = take(sec, "n_steps"))
            cfg.run.n_steps = static_cast<std::uint32_t>(to_u64(*v, "n_steps"));
        if (auto v = take(sec, "diffusion")) {
            if (*v == "isotropic") cfg.run.diffusion = DiffusionKind::Isotropic;
            else if (*v == "anisotropic") cfg.run.diffusion = DiffusionKind::Anisotropic;
            else throw ConfigError("config: diffusion must be isotropic or anisotropic");
        }
        if (auto v = take(sec, "seed")) cfg.run.seed = to_u64(*v, "seed");
        if (auto v = take(sec, "moment_cap")) cfg.run.moment_cap = to_double(*v, "moment_cap");
        std::string init_kind = "gaussian";
        if (auto v = take(sec, "init")) init_kind = *v;
        if (init_kind == "gaussian") {
            std::vector<double> mean(cfg.run.dim, 0.0), cov(cfg.run.dim, 1.0);
            if (auto v = take(sec, "init_mean")) mean = to_dvec(*v, "init_mean");
            if (auto v = take(sec, "init_cov_diag")) cov = to_dvec(*v, "init_cov_diag");
            cfg.run.init = InitDistribution::gaussian(mean, cov);
        } else if (init_kind == "uniform") {
            std::vector<double> lo(cfg.run.dim, -1.0), hi(cfg.run.dim, 1.0);
            if (auto v = take(sec, "init_lower")) lo = to_dvec(*v, "init_lower");
            if (auto v = take(sec, "init_upper")) hi = to_dvec(*v, "init_upper");
            cfg.run.init = InitDistribution::uniform_box(lo, hi);
        } else {
            throw ConfigError("config: init must be gaussian or uniform");
        }
        reject_leftovers(sec, "run");
    }
    if (!saw_run) throw ConfigError("config: missing [run] section");

    if (auto it = raw.find("objective"); it != raw.end()) {
        auto& sec = it->second;
        ObjectiveConfig oc;
        if (auto v = take(sec, "name")) oc.name = *v;
        if (auto v = take(sec, "offset")) oc.offset = to_double(*v, "offset");
        if (auto v = take(sec, "command")) oc.command = *v;
        reject_leftovers(sec, "objective");
        cfg.objective = oc;
    }

    if (auto it = raw.find("planner"); it != raw.end()) {
        auto& sec = it->second;
        PlannerInput p;
        if (auto v = take(sec, "eps_total")) p.eps_total = to_double(*v, "eps_total");
        if (auto v = take(sec, "theta")) p.theta = to_double(*v, "theta");
        if (auto v = take(sec, "v_rho0")) p.v_rho0 = to_double(*v, "v_rho0");
        if (auto v = take(sec, "q")) p.q = to_double(*v, "q");
        if (auto v = take(sec, "c_na")) p.c_na = to_double(*v, "c_na");
        if (auto v = take(sec, "c_mfa")) p.c_mfa = to_double(*v, "c_mfa");
        reject_leftovers(sec, "planner");
        cfg.planner = p;
    }

    if (auto it = raw.find("experiment"); it != raw.end()) {
        auto& sec = it->second;
        cfg.has_experiment_section = true;
        if (auto v = take(sec, "n_seeds"))
            cfg.experiment.n_seeds = static_cast<std::uint32_t>(to_u64(*v, "n_seeds"));
        if (auto v = take(sec, "levels"))
            cfg.experiment.levels = static_cast<std::uint32_t>(to_u64(*v, "levels"));
        if (auto v = take(sec, "n_values")) {
            cfg.experiment.n_values.clear();
            std::istringstream vs(*v);
            std::string tok;
            while (vs >> tok)
                cfg.experiment.n_values.push_back(
                    static_cast<std::uint32_t>(to_u64(tok, "n_values")));
        }
        if (auto v = take(sec, "n_ref"))
            cfg.experiment.n_ref = static_cast<std::uint32_t>(to_u64(*v, "n_ref"));
        if (auto v = take(sec, "dt_ref")) cfg.experiment.dt_ref = to_double(*v, "dt_ref");
        reject_leftovers(sec, "experiment");
    }

    cfg.run.validate();
    return cfg;
}

/// Canonical serialization; parse(serialize(parse(text))) is the identity on
/// the configuration.
inline std::string serialize_config(const ExperimentConfig& cfg) {
    std::string out;
    out += "[run]\n";
    out += "dim = " + std::to_string(cfg.run.dim) + "\n";
    out += "n_particles = " + std::to_string(cfg.run.n_particles) + "\n";
    out += "lambda = " + detail::format_double(cfg.run.lambda) + "\n";
    out += "sigma = " + detail::format_double(cfg.run.sigma) + "\n";
    out += "alpha = " + detail::format_double(cfg.run.alpha) + "\n";
    out += "dt = " + detail::format_double(cfg.run.dt) + "\n";
    out += "n_steps = " + std::to_string(cfg.run.n_steps) + "\n";
    out += std::string("diffusion = ") + to_string(cfg.run.diffusion) + "\n";
    out += "seed = " + std::to_string(cfg.run.seed) + "\n";
    out += "moment_cap = " + detail::format_double(cfg.run.moment_cap) + "\n";
    if (cfg.run.init.kind == InitDistribution::Kind::Gaussian) {
        out += "init = gaussian\n";
        out += "init_mean = " + detail::format_vector(cfg.run.init.a) + "\n";
        out += "init_cov_diag = " + detail::format_vector(cfg.run.init.b) + "\n";
    } else {
        out += "init = uniform\n";
        out += "init_lower = " + detail::format_vector(cfg.run.init.a) + "\n";
        out += "init_upper = " + detail::format_vector(cfg.run.init.b) + "\n";
    }
    if (cfg.objective) {
        out += "\n[objective]\n";
        out += "name = " + cfg.objective->name + "\n";
        if (cfg.objective->name == "shifted_sphere")
            out += "offset = " + detail::format_double(cfg.objective->offset) + "\n";
        if (!cfg.objective->command.empty())
            out += "command = " + cfg.objective->command + "\n";
    }
    if (cfg.planner) {
        out += "\n[planner]\n";
        out += "eps_total = " + detail::format_double(cfg.planner->eps_total) + "\n";
        out += "theta = " + detail::format_double(cfg.planner->theta) + "\n";
        out += "v_rho0 = " + detail::format_double(cfg.planner->v_rho0) + "\n";
        out += "q = " + detail::format_double(cfg.planner->q) + "\n";
        out += "c_na = " + detail::format_double(cfg.planner->c_na) + "\n";
        out += "c_mfa = " + detail::format_double(cfg.planner->c_mfa) + "\n";
    }
    if (cfg.has_experiment_section) {
        out += "\n[experiment]\n";
        out += "n_seeds = " + std::to_string(cfg.experiment.n_seeds) + "\n";
        out += "levels = " + std::to_string(cfg.experiment.levels) + "\n";
        out += "n_values =";
        for (auto n : cfg.experiment.n_values) out += " " + std::to_string(n);
        out += "\n";
        out += "n_ref = " + std::to_string(cfg.experiment.n_ref) + "\n";
        out += "dt_ref = " + detail::format_double(cfg.experiment.dt_ref) + "\n";
    }
    return out;
}

/// FNV-1a over the canonical serialization; stamped into every output file.
inline std::uint64_t config_hash(const ExperimentConfig& cfg) {
    const std::string text = serialize_config(cfg);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace cbo
