#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "core.hpp"
#include "dynamics.hpp"
#include "experiments.hpp"

namespace cbo {

inline constexpr const char* kToolVersion = "cbo 0.1.0";

namespace detail {

inline std::string csv_header(std::uint64_t hash) {
    std::string out = "# ";
    out += kToolVersion;
    out += "\n# config_hash = " + std::to_string(hash) + "\n";
    return out;
}

inline void append_num(std::string& out, double v) { out += format_double(v); }

}  // namespace detail

/// Decimal text with 17 significant digits throughout, so doubles round-trip
/// exactly across implementations.
inline std::string trace_csv(const RunTrace& trace, double dt, std::uint64_t hash) {
    std::string out = detail::csv_header(hash);
    out += "step,time,";
    const std::size_t d = trace.rows.empty() ? 0 : trace.rows[0].consensus_point.size();
    for (std::size_t j = 0; j < d; ++j) out += "consensus_" + std::to_string(j) + ",";
    out += "variance_functional,second_moment,max_norm,effective_weight_fraction,"
           "jensen_error,evaluations\n";
    for (const auto& row : trace.rows) {
        out += std::to_string(row.step) + ",";
        detail::append_num(out, static_cast<double>(row.step) * dt);
        out += ",";
        for (double c : row.consensus_point) {
            detail::append_num(out, c);
            out += ",";
        }
        detail::append_num(out, row.variance_functional);
        out += ",";
        detail::append_num(out, row.second_moment);
        out += ",";
        detail::append_num(out, row.max_norm);
        out += ",";
        detail::append_num(out, row.effective_weight_fraction);
        out += ",";
        detail::append_num(out, row.jensen_error);
        out += "," + std::to_string(row.evaluations) + "\n";
    }
    return out;
}

/// Long format: one row per (seed, step); seed -1 carries the seed average.
inline std::string decay_csv(const DecayReport& rep, std::uint64_t hash) {
    std::string out = detail::csv_header(hash);
    out += "seed,step,time,variance\n";
    for (std::size_t k = 0; k < rep.avg_variance.size(); ++k) {
        out += "-1," + std::to_string(k) + ",";
        detail::append_num(out, static_cast<double>(k) * rep.dt);
        out += ",";
        detail::append_num(out, rep.avg_variance[k]);
        out += "\n";
    }
    for (std::size_t r = 0; r < rep.per_seed_variance.size(); ++r) {
        for (std::size_t k = 0; k < rep.per_seed_variance[r].size(); ++k) {
            out += std::to_string(r) + "," + std::to_string(k) + ",";
            detail::append_num(out, static_cast<double>(k) * rep.dt);
            out += ",";
            detail::append_num(out, rep.per_seed_variance[r][k]);
            out += "\n";
        }
    }
    return out;
}

/// Long format: one row per (seed, level); seed -1 carries the seed average.
inline std::string rate_csv(const RateReport& rep, std::uint64_t hash) {
    std::string out = detail::csv_header(hash);
    out += "seed,level,x_value,error\n";
    for (std::size_t l = 0; l < rep.x_values.size(); ++l) {
        out += "-1," + std::to_string(l) + ",";
        detail::append_num(out, rep.x_values[l]);
        out += ",";
        detail::append_num(out, rep.errors[l]);
        out += "\n";
    }
    for (std::size_t r = 0; r < rep.per_seed.size(); ++r) {
        for (std::size_t l = 0; l < rep.per_seed[r].size(); ++l) {
            out += std::to_string(r) + "," + std::to_string(l) + ",";
            detail::append_num(out, rep.x_values[l]);
            out += ",";
            detail::append_num(out, rep.per_seed[r][l]);
            out += "\n";
        }
    }
    return out;
}

inline std::string budget_csv(const BudgetReport& rep, std::uint64_t hash) {
    std::string out = detail::csv_header(hash);
    out += "seed,measured,measured_jensen\n";
    for (std::size_t r = 0; r < rep.measured.size(); ++r) {
        out += std::to_string(r) + ",";
        detail::append_num(out, rep.measured[r]);
        out += ",";
        detail::append_num(out, rep.measured_jensen[r]);
        out += "\n";
    }
    return out;
}

inline nlohmann::json summary_base(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["tool_version"] = kToolVersion;
    j["config_hash"] = config_hash(cfg);
    j["config"] = serialize_config(cfg);
    return j;
}

inline nlohmann::json planner_json(const PlannerOutput& out) {
    nlohmann::json j;
    j["horizon"] = out.horizon;
    j["n_particles"] = out.n_particles;
    j["dt"] = out.dt;
    j["n_steps"] = out.n_steps;
    j["horizon_clamped"] = out.horizon_clamped;
    return j;
}

inline nlohmann::json decay_json(const DecayReport& rep) {
    nlohmann::json j;
    j["fitted_rate"] = rep.fitted_rate;
    j["predicted_rate"] = rep.predicted_rate;
    j["fit_window_end"] = rep.fit_window_end;
    j["n_seeds"] = rep.n_seeds;
    return j;
}

inline nlohmann::json rate_json(const RateReport& rep) {
    nlohmann::json j;
    j["x_values"] = rep.x_values;
    j["errors"] = rep.errors;
    j["slope"] = rep.slope;
    j["slope_ci"] = rep.slope_ci;
    j["n_seeds"] = rep.n_seeds;
    return j;
}

inline nlohmann::json budget_json(const BudgetReport& rep) {
    nlohmann::json j;
    j["planned"] = planner_json(rep.planned);
    j["term_discretization"] = rep.term_discretization;
    j["term_mean_field"] = rep.term_mean_field;
    j["term_decay"] = rep.term_decay;
    j["budget_total"] = rep.budget_total;
    j["measured_mean"] = rep.measured_mean;
    j["success_fraction"] = rep.success_fraction;
    return j;
}

}  // namespace cbo
