#pragma once

#include <fstream>
#include <string>

#include "json.hpp"
#include "lsid/bounds.hpp"
#include "lsid/estimator.hpp"
#include "lsid/experiments.hpp"
#include "lsid/packing.hpp"
#include "lsid/smallball.hpp"

namespace lsid {

inline constexpr const char* kVersion = "lsid 0.1.0";

namespace io {

using nlohmann::json;

inline json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Matrix matrix_from_json(const json& j) {
    if (!j.is_array() || j.empty()) throw ConfigError("matrix: expected nonempty array of rows");
    const std::size_t rows = j.size();
    const std::size_t cols = j.front().size();
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        if (j[i].size() != cols) throw ConfigError("matrix: ragged rows");
        for (std::size_t c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
    }
    return m;
}

inline json to_json(const EstimateReport& report) {
    json j;
    j["a_hat"] = matrix_to_json(report.a_hat);
    j["op_error"] = report.op_error ? json(*report.op_error) : json(nullptr);
    j["sigma_min_x"] = report.sigma_min_x;
    j["rank_deficient"] = report.rank_deficient;
    return j;
}

inline json to_json(const BoundReport& report) {
    json j;
    j["feasible"] = report.feasible;
    if (report.value && std::isinf(*report.value)) {
        j["value"] = nullptr;
        j["unbounded"] = true;
    } else {
        j["value"] = report.value ? json(*report.value) : json(nullptr);
    }
    j["constants_used"] = report.constants_used;
    j["block_length"] = report.block_length ? json(*report.block_length) : json(nullptr);
    j["regime"] = report.regime ? json(regime_name(*report.regime)) : json(nullptr);
    return j;
}

inline json to_json(const TailCheckResult& result) {
    json j;
    j["empirical_prob"] = result.empirical_prob;
    j["theoretical_bound"] = result.theoretical_bound;
    j["trials"] = result.trials;
    j["standard_error"] = result.standard_error;
    j["passed"] = result.passed;
    j["exact_value"] = result.exact_value ? json(*result.exact_value) : json(nullptr);
    j["params"] = result.params;
    j["seed"] = result.seed;
    return j;
}

inline json to_json(const PackingSet& set) {
    json j;
    j["epsilon0"] = set.epsilon0;
    j["member_count"] = set.members.size();
    json members = json::array();
    for (const Matrix& m : set.members) members.push_back(matrix_to_json(m));
    j["members"] = std::move(members);
    j["min_op_separation"] = set.min_op_separation;
    j["max_fro_diameter"] = set.max_fro_diameter;
    j["certified_op_floor"] = set.epsilon0 / 4.0;
    j["certified_fro_ceiling"] = 4.0 * set.epsilon0;
    j["seed"] = set.seed;
    return j;
}

inline json system_spec_to_json(const SystemSpec& spec) {
    json j;
    if (const auto* s = std::get_if<ScalarSpec>(&spec)) {
        j["type"] = "scalar";
        j["a"] = s->a;
    } else if (const auto* o = std::get_if<ScaledOrthogonalSpec>(&spec)) {
        j["type"] = "scaled_orthogonal";
        j["rho"] = o->rho;
        j["d"] = o->d;
        j["seed"] = o->seed;
    } else if (const auto* e = std::get_if<DiagonalizableSpec>(&spec)) {
        j["type"] = "diagonalizable";
        j["spectrum"] = e->spectrum;
        j["cond_s"] = e->cond_s;
        j["seed"] = e->seed;
    } else {
        j["type"] = "explicit";
        j["a"] = matrix_to_json(std::get<ExplicitSpec>(spec).a);
    }
    return j;
}

namespace detail {

inline void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed,
                                const char* where) {
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* key : allowed)
            if (item.key() == key) {
                known = true;
                break;
            }
        if (!known) throw ConfigError(std::string(where) + ": unknown key '" + item.key() + "'");
    }
}

}  // namespace detail

inline SystemSpec system_spec_from_json(const json& j) {
    if (!j.contains("type")) throw ConfigError("system_spec: missing 'type'");
    const std::string type = j.at("type").get<std::string>();
    if (type == "scalar") {
        detail::reject_unknown_keys(j, {"type", "a"}, "system_spec(scalar)");
        return ScalarSpec{j.at("a").get<double>()};
    }
    if (type == "scaled_orthogonal") {
        detail::reject_unknown_keys(j, {"type", "rho", "d", "seed"},
                                    "system_spec(scaled_orthogonal)");
        ScaledOrthogonalSpec spec;
        spec.rho = j.at("rho").get<double>();
        spec.d = j.at("d").get<int>();
        spec.seed = j.value("seed", 0ULL);
        return spec;
    }
    if (type == "diagonalizable") {
        detail::reject_unknown_keys(j, {"type", "spectrum", "cond_s", "seed"},
                                    "system_spec(diagonalizable)");
        DiagonalizableSpec spec;
        spec.spectrum = j.at("spectrum").get<std::vector<double>>();
        spec.cond_s = j.at("cond_s").get<double>();
        spec.seed = j.value("seed", 0ULL);
        return spec;
    }
    if (type == "explicit") {
        detail::reject_unknown_keys(j, {"type", "a"}, "system_spec(explicit)");
        return ExplicitSpec{matrix_from_json(j.at("a"))};
    }
    throw ConfigError("system_spec: unknown type '" + type + "'");
}

/// SweepConfig JSON: the fields verbatim; unknown keys rejected.
inline SweepConfig sweep_config_from_json(const json& j) {
    detail::reject_unknown_keys(
        j, {"system_spec", "sigma", "T_grid", "trials", "delta", "master_seed"}, "sweep config");
    SweepConfig cfg;
    if (!j.contains("system_spec")) throw ConfigError("sweep config: missing 'system_spec'");
    cfg.system = system_spec_from_json(j.at("system_spec"));
    cfg.sigma = j.value("sigma", 1.0);
    if (!j.contains("T_grid")) throw ConfigError("sweep config: missing 'T_grid'");
    cfg.t_grid = j.at("T_grid").get<std::vector<int>>();
    cfg.trials = j.value("trials", 100);
    cfg.delta = j.value("delta", 0.1);
    cfg.master_seed = j.value("master_seed", 0ULL);
    cfg.validate();
    return cfg;
}

inline json sweep_config_to_json(const SweepConfig& cfg) {
    json j;
    j["system_spec"] = system_spec_to_json(cfg.system);
    j["sigma"] = cfg.sigma;
    j["T_grid"] = cfg.t_grid;
    j["trials"] = cfg.trials;
    j["delta"] = cfg.delta;
    j["master_seed"] = cfg.master_seed;
    return j;
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// Sweep CSV: one row per grid point,
/// `T,trials,median_err,q_err,mean_sigma_min,overflow_count,bound_value`;
/// the bound column is empty where the burn-in condition failed.
inline std::string sweep_csv(const SweepResult& result) {
    std::string out = "T,trials,median_err,q_err,mean_sigma_min,overflow_count,bound_value\n";
    for (const SweepCell& cell : result.cells) {
        out += std::to_string(cell.horizon) + ',' + std::to_string(cell.trials) + ',';
        out += format_double(cell.median_err) + ',';
        out += format_double(cell.quantile_err) + ',';
        out += format_double(cell.mean_sigma_min) + ',';
        out += std::to_string(cell.overflow_count) + ',';
        if (cell.bound_value) out += format_double(*cell.bound_value);
        out += '\n';
    }
    return out;
}

/// Companion JSON for a sweep run: config echo, version, seed, and the
/// fitted slope summary.
inline json sweep_summary_json(const SweepConfig& cfg, const SweepResult& result) {
    json j;
    j["config"] = sweep_config_to_json(cfg);
    j["version"] = kVersion;
    j["master_seed"] = result.master_seed;
    j["regime_label"] = result.regime_label;
    j["fitted_slope"] = result.fitted_slope ? json(*result.fitted_slope) : json(nullptr);
    j["slope_ci_halfwidth"] =
        result.slope_ci_halfwidth ? json(*result.slope_ci_halfwidth) : json(nullptr);
    return j;
}

inline void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << contents;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    std::string contents((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return contents;
}

}  // namespace io
}  // namespace lsid
