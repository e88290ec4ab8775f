#pragma once

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "studies.hpp"

namespace ucfem::analysis {

namespace detail {

inline std::string sci(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12e", x);
    return buf;
}

/// JSON has no NaN; non-finite values become null.
inline nlohmann::json number(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

}  // namespace detail

/// One line per level with the columns of `row_columns()`.
inline void write_csv(std::ostream& out, const ConvergenceReport& rep) {
    const auto& cols = row_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
    using detail::sci;
    for (const auto& r : rep.rows) {
        out << r.level << ',' << sci(r.h) << ',' << r.n_dofs_primal << ',' << r.n_dofs_dual << ',' << sci(r.err_l2_B)
            << ',' << sci(r.err_l2_omega) << ',' << sci(r.err_h1semi_B) << ',' << sci(r.triple_norm) << ','
            << sci(r.residual_hminus1) << ',' << sci(r.l2_Omega_of_uh) << '\n';
    }
}

inline nlohmann::json to_json(const ConvergenceReport& rep) {
    using nlohmann::json;
    using detail::number;
    json j;
    j["study"] = rep.study;
    json cfg = json::object();
    for (const auto& [k, v] : config_entries(rep.config)) cfg[k] = v;
    j["config"] = cfg;
    j["window"] = {{"lo", rep.window.lo}, {"hi", rep.window.hi}};
    j["alpha"] = number(rep.alpha);
    if (rep.h_min) j["h_min"] = number(*rep.h_min);
    if (rep.u_norm) j["u_norm"] = number(*rep.u_norm);

    json rows = json::array();
    for (const auto& r : rep.rows) {
        json row = {{"level", r.level},
                    {"h", number(r.h)},
                    {"n_dofs_primal", r.n_dofs_primal},
                    {"n_dofs_dual", r.n_dofs_dual},
                    {"err_l2_B", number(r.err_l2_B)},
                    {"err_l2_omega", number(r.err_l2_omega)},
                    {"err_h1semi_B", number(r.err_h1semi_B)},
                    {"triple_norm", number(r.triple_norm)},
                    {"residual_hminus1", number(r.residual_hminus1)},
                    {"l2_Omega_of_uh", number(r.l2_Omega_of_uh)},
                    {"tikhonov_scale", number(r.tikhonov_scale)}};
        if (r.sensitivity) row["sensitivity"] = number(*r.sensitivity);
        rows.push_back(row);
    }
    j["rows"] = rows;

    json rates = json::object();
    for (const auto& [col, fit] : rep.fitted_rates) {
        json eoc = json::array();
        for (double e : fit.per_step_eoc) eoc.push_back(number(e));
        rates[col] = {{"slope", number(fit.slope)}, {"per_step_eoc", eoc}};
    }
    j["fitted_rates"] = rates;

    json th = json::array();
    for (const auto& t : rep.thresholds)
        th.push_back({{"name", t.name}, {"value", number(t.value)}, {"provenance", t.provenance}});
    j["thresholds"] = th;

    json checks = json::array();
    for (const auto& c : rep.checks)
        checks.push_back(
            {{"name", c.name}, {"passed", c.passed}, {"observed", number(c.observed)}, {"requirement", c.requirement}});
    j["checks"] = checks;
    return j;
}

inline void write_json(std::ostream& out, const ConvergenceReport& rep) { out << to_json(rep).dump(2) << '\n'; }

/// Rebuilds `key = value` text from the config echo of a report document.
inline std::string config_text_from_json(const nlohmann::json& doc) {
    std::string text;
    for (const auto& [k, v] : doc.at("config").items()) text += k + " = " + v.get<std::string>() + "\n";
    return text;
}

}  // namespace ucfem::analysis
