#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "analysis/rates.hpp"
#include "error.hpp"
#include "geometry.hpp"
#include "uc_solver.hpp"

namespace ucfem {

enum class HminPolicy { Off, Auto, Value };

/// Everything a CLI run depends on. Defaults are the values below.
struct RunConfig {
    Geometry geometry;
    int k = 1;
    int sectors = 8;
    std::vector<int> levels{1, 2, 3, 4, 5};
    int level = 3;
    ExactSolution exact;
    Perturbation perturbation;
    HminPolicy hmin = HminPolicy::Off;
    double hmin_value = 0.0;
    std::optional<double> hmin_u_norm;
    analysis::LevelWindow rate_window;
    std::string output_csv;
    std::string output_json;
    std::optional<double> alpha1;
    std::optional<double> alpha2;
    int three_ball_n_max = 50;
    std::vector<double> three_ball_alpha_tests{0.5, 0.55, 0.6};

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            out.push_back(trim(s.substr(start, i - start)));
            start = i + 1;
        }
    }
    return out;
}

inline double parse_double(std::string_view key, std::string_view v) {
    double x = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size() || !std::isfinite(x))
        throw ConfigError(std::string(key) + ": expected a finite number, got '" + std::string(v) + "'");
    return x;
}

inline long long parse_integer(std::string_view key, std::string_view v) {
    long long x = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size())
        throw ConfigError(std::string(key) + ": expected an integer, got '" + std::string(v) + "'");
    return x;
}

inline int parse_int(std::string_view key, std::string_view v) {
    const long long x = parse_integer(key, v);
    if (x < -1000000 || x > 1000000) throw ConfigError(std::string(key) + ": integer out of range");
    return static_cast<int>(x);
}

/// `a..b` (inclusive) or a comma separated list.
inline std::vector<int> parse_levels(std::string_view key, std::string_view v) {
    std::vector<int> out;
    if (const auto dots = v.find(".."); dots != std::string_view::npos) {
        const int lo = parse_int(key, trim(v.substr(0, dots)));
        const int hi = parse_int(key, trim(v.substr(dots + 2)));
        if (hi < lo) throw ConfigError(std::string(key) + ": empty range");
        for (int l = lo; l <= hi; ++l) out.push_back(l);
        return out;
    }
    for (auto part : split(v, ',')) out.push_back(parse_int(key, part));
    return out;
}

inline std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string format_levels(const std::vector<int>& levels) {
    bool contiguous = levels.size() >= 2;
    for (std::size_t i = 1; i < levels.size(); ++i) contiguous = contiguous && levels[i] == levels[i - 1] + 1;
    if (contiguous) return std::to_string(levels.front()) + ".." + std::to_string(levels.back());
    std::string s;
    for (std::size_t i = 0; i < levels.size(); ++i) s += (i ? "," : "") + std::to_string(levels[i]);
    return s;
}

inline const char* mode_name(PerturbationMode m) {
    switch (m) {
        case PerturbationMode::None: return "none";
        case PerturbationMode::Oscillatory: return "oscillatory";
        case PerturbationMode::NodalNoise: return "nodal_noise";
    }
    return "none";
}

/// Assigns one key. Unknown keys are rejected.
inline void apply_key(RunConfig& c, std::string_view key, std::string_view v) {
    const std::string k(key);
    auto fail = [&](const std::string& what) { throw ConfigError(k + ": " + what); };
    if (k == "geometry.r1") c.geometry.r1 = parse_double(key, v);
    else if (k == "geometry.r2") c.geometry.r2 = parse_double(key, v);
    else if (k == "geometry.r3") c.geometry.r3 = parse_double(key, v);
    else if (k == "geometry.dim") c.geometry.dim = parse_int(key, v);
    else if (k == "k") c.k = parse_int(key, v);
    else if (k == "sectors") c.sectors = parse_int(key, v);
    else if (k == "levels") c.levels = parse_levels(key, v);
    else if (k == "level") c.level = parse_int(key, v);
    else if (k == "exact.kind") {
        if (v == "monomial") c.exact.kind = ExactSolution::Kind::Monomial;
        else if (v == "zero") c.exact.kind = ExactSolution::Kind::Zero;
        else fail("expected monomial or zero");
    } else if (k == "exact.n") c.exact.n = parse_int(key, v);
    else if (k == "exact.part") {
        if (v == "re") c.exact.part = analysis::Part::Re;
        else if (v == "im") c.exact.part = analysis::Part::Im;
        else fail("expected re or im");
    } else if (k == "perturbation.mode") {
        if (v == "none") c.perturbation.mode = PerturbationMode::None;
        else if (v == "oscillatory") c.perturbation.mode = PerturbationMode::Oscillatory;
        else if (v == "nodal_noise") c.perturbation.mode = PerturbationMode::NodalNoise;
        else fail("expected none, oscillatory or nodal_noise");
    } else if (k == "perturbation.epsilon") c.perturbation.epsilon = parse_double(key, v);
    else if (k == "perturbation.kappa") c.perturbation.kappa = parse_double(key, v);
    else if (k == "perturbation.seed") {
        const long long s = parse_integer(key, v);
        if (s < 0) fail("seed must be >= 0");
        c.perturbation.seed = static_cast<std::uint64_t>(s);
    } else if (k == "hmin") {
        if (v == "off") c.hmin = HminPolicy::Off;
        else if (v == "auto") c.hmin = HminPolicy::Auto;
        else {
            c.hmin = HminPolicy::Value;
            c.hmin_value = parse_double(key, v);
        }
    } else if (k == "hmin.u_norm") {
        if (v == "exact") c.hmin_u_norm.reset();
        else c.hmin_u_norm = parse_double(key, v);
    } else if (k == "rate_window") {
        const auto dots = v.find("..");
        if (dots == std::string_view::npos) fail("expected lo..hi");
        c.rate_window.lo = parse_int(key, trim(v.substr(0, dots)));
        c.rate_window.hi = parse_int(key, trim(v.substr(dots + 2)));
    } else if (k == "output.csv") c.output_csv = std::string(v);
    else if (k == "output.json") c.output_json = std::string(v);
    else if (k == "exponents.alpha1") {
        if (v == "none") c.alpha1.reset();
        else c.alpha1 = parse_double(key, v);
    } else if (k == "exponents.alpha2") {
        if (v == "none") c.alpha2.reset();
        else c.alpha2 = parse_double(key, v);
    } else if (k == "three_ball.n_max") c.three_ball_n_max = parse_int(key, v);
    else if (k == "three_ball.alpha_tests") {
        c.three_ball_alpha_tests.clear();
        for (auto part : split(v, ',')) c.three_ball_alpha_tests.push_back(parse_double(key, part));
    } else {
        fail("unknown key");
    }
}

}  // namespace detail

/// Throws ConfigError naming the key and the violated constraint.
inline void validate_config(const RunConfig& c) {
    auto fail = [](const std::string& key, const std::string& what) { throw ConfigError(key + ": " + what); };
    if (const auto v = c.geometry.violation(); !v.empty()) fail("geometry", v);
    if (c.k != 1 && c.k != 2) fail("k", "k in {1,2} violated");
    if (c.sectors < 6 || c.sectors % 2 != 0) fail("sectors", "sectors >= 6 and even violated");
    if (c.levels.empty()) fail("levels", "at least one level required");
    for (std::size_t i = 0; i < c.levels.size(); ++i) {
        if (c.levels[i] < 0 || c.levels[i] > 10) fail("levels", "0 <= level <= 10 violated");
        if (i > 0 && c.levels[i] <= c.levels[i - 1]) fail("levels", "levels must be strictly increasing");
    }
    if (c.level < 0 || c.level > 10) fail("level", "0 <= level <= 10 violated");
    if (c.exact.n < 1) fail("exact.n", "n >= 1 violated");
    if (c.exact.kind == ExactSolution::Kind::Monomial && c.exact.n == 1 && c.exact.part == analysis::Part::Im)
        fail("exact.part", "Im of z^0 vanishes; use exact.kind = zero");
    if (c.perturbation.epsilon < 0.0) fail("perturbation.epsilon", "epsilon >= 0 violated");
    if (!(c.perturbation.kappa > 0.0)) fail("perturbation.kappa", "kappa > 0 violated");
    if (c.perturbation.mode == PerturbationMode::None && c.perturbation.epsilon > 0.0)
        fail("perturbation.mode", "mode none requires epsilon = 0");
    if (c.hmin == HminPolicy::Value && !(c.hmin_value > 0.0)) fail("hmin", "hmin > 0 violated");
    if (c.hmin_u_norm && !(*c.hmin_u_norm > 0.0)) fail("hmin.u_norm", "u_norm > 0 violated");
    if (c.rate_window.lo < 0 || c.rate_window.hi <= c.rate_window.lo)
        fail("rate_window", "0 <= lo < hi violated");
    for (const auto* a : {&c.alpha1, &c.alpha2})
        if (*a && !(**a > 0.0 && **a < 1.0))
            fail(a == &c.alpha1 ? "exponents.alpha1" : "exponents.alpha2", "0 < alpha < 1 violated");
    if (c.three_ball_n_max < 1 || c.three_ball_n_max > 200) fail("three_ball.n_max", "1 <= n_max <= 200 violated");
    if (c.three_ball_alpha_tests.empty()) fail("three_ball.alpha_tests", "at least one value required");
    for (double a : c.three_ball_alpha_tests)
        if (!(a > 0.0 && a < 1.0)) fail("three_ball.alpha_tests", "0 < alpha_test < 1 violated");
}

/// Applies `key = value` overrides in order on top of `base`, then validates.
inline RunConfig apply_overrides(RunConfig base, const std::vector<std::pair<std::string, std::string>>& kv) {
    for (const auto& [k, v] : kv) detail::apply_key(base, detail::trim(k), detail::trim(v));
    validate_config(base);
    return base;
}

/// Parses flat `key = value` text with `#` comments on top of the defaults.
inline RunConfig parse_config(std::string_view text, RunConfig base = {}) {
    int line_no = 0;
    std::size_t pos = 0;
    std::map<std::string, int> seen;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError("expected 'key = value'", line_no);
        const auto key = detail::trim(line.substr(0, eq));
        const auto value = detail::trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("missing key", line_no);
        if (const auto [it, fresh] = seen.emplace(std::string(key), line_no); !fresh)
            throw ConfigError(std::string(key) + ": duplicate key (first on line " + std::to_string(it->second) + ")",
                              line_no);
        try {
            detail::apply_key(base, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError(e.what(), line_no);
        }
    }
    validate_config(base);
    return base;
}

/// Every key with its value, in a fixed order; values print with 17
/// significant digits so parsing the echo gives back an equal config.
inline std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& c) {
    using detail::format_double;
    std::vector<std::pair<std::string, std::string>> e;
    e.emplace_back("geometry.r1", format_double(c.geometry.r1));
    e.emplace_back("geometry.r2", format_double(c.geometry.r2));
    e.emplace_back("geometry.r3", format_double(c.geometry.r3));
    e.emplace_back("geometry.dim", std::to_string(c.geometry.dim));
    e.emplace_back("k", std::to_string(c.k));
    e.emplace_back("sectors", std::to_string(c.sectors));
    e.emplace_back("levels", detail::format_levels(c.levels));
    e.emplace_back("level", std::to_string(c.level));
    e.emplace_back("exact.kind", c.exact.kind == ExactSolution::Kind::Zero ? "zero" : "monomial");
    e.emplace_back("exact.n", std::to_string(c.exact.n));
    e.emplace_back("exact.part", c.exact.part == analysis::Part::Im ? "im" : "re");
    e.emplace_back("perturbation.mode", detail::mode_name(c.perturbation.mode));
    e.emplace_back("perturbation.epsilon", format_double(c.perturbation.epsilon));
    e.emplace_back("perturbation.kappa", format_double(c.perturbation.kappa));
    e.emplace_back("perturbation.seed", std::to_string(c.perturbation.seed));
    switch (c.hmin) {
        case HminPolicy::Off: e.emplace_back("hmin", "off"); break;
        case HminPolicy::Auto: e.emplace_back("hmin", "auto"); break;
        case HminPolicy::Value: e.emplace_back("hmin", format_double(c.hmin_value)); break;
    }
    e.emplace_back("hmin.u_norm", c.hmin_u_norm ? format_double(*c.hmin_u_norm) : "exact");
    e.emplace_back("rate_window", std::to_string(c.rate_window.lo) + ".." + std::to_string(c.rate_window.hi));
    e.emplace_back("output.csv", c.output_csv);
    e.emplace_back("output.json", c.output_json);
    e.emplace_back("exponents.alpha1", c.alpha1 ? format_double(*c.alpha1) : "none");
    e.emplace_back("exponents.alpha2", c.alpha2 ? format_double(*c.alpha2) : "none");
    e.emplace_back("three_ball.n_max", std::to_string(c.three_ball_n_max));
    std::string tests;
    for (std::size_t i = 0; i < c.three_ball_alpha_tests.size(); ++i)
        tests += (i ? "," : "") + format_double(c.three_ball_alpha_tests[i]);
    e.emplace_back("three_ball.alpha_tests", tests);
    return e;
}

inline std::string to_config_text(const RunConfig& c) {
    std::ostringstream out;
    for (const auto& [k, v] : config_entries(c)) out << k << " = " << v << '\n';
    return out.str();
}

/// UcProblem for a single solve; the h_min override is resolved by the caller.
inline UcProblem make_problem(const RunConfig& c) {
    UcProblem p;
    p.geometry = c.geometry;
    p.k = c.k;
    p.exact = c.exact;
    p.perturbation = c.perturbation;
    return p;
}

}  // namespace ucfem
