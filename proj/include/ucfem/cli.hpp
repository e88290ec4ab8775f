#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "analysis/exponents.hpp"
#include "analysis/harmonic.hpp"
#include "analysis/rates.hpp"
#include "analysis/report_io.hpp"
#include "analysis/studies.hpp"
#include "assembly.hpp"
#include "config.hpp"
#include "error.hpp"
#include "mesh.hpp"
#include "mesh_io.hpp"
#include "quadrature.hpp"
#include "sparse.hpp"
#include "uc_solver.hpp"

namespace ucfem::cli {

enum ExitCode : int { kOk = 0, kInternal = 1, kConfig = 2, kSolver = 3, kCheckFailed = 4 };

inline const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names{"alpha", "three-ball", "mesh",     "poisson", "uc",
                                                "converge", "perturb",  "stagnate", "selftest"};
    return names;
}

struct Options {
    std::filesystem::path out_dir = ".";
    /// Exit with kCheckFailed when a study check fails.
    bool strict = false;
};

/// Shortest round-trip decimal, always with a fraction or exponent ("1.0", "0.5").
inline std::string shortest(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    std::string s(buf, res.ptr);
    if (s.find_first_of(".eE") == std::string::npos && s.find_first_of("in") == std::string::npos) s += ".0";
    return s;
}

inline std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

namespace detail {

inline int run_alpha(const RunConfig& c, std::ostream& out) {
    const auto e = analysis::optimal_alpha(c.geometry.r1, c.geometry.r2, c.geometry.r3);
    out << "alpha=" << shortest(e.alpha) << " beta=" << shortest(e.beta);
    if (c.alpha1 && c.alpha2) {
        const auto ce = analysis::combined_exponent(*c.alpha1, *c.alpha2, e.alpha);
        out << " alpha_tilde=" << shortest(ce.alpha_tilde);
    }
    out << '\n';
    return kOk;
}

inline int run_three_ball(const RunConfig& c, std::ostream& out) {
    out << "n";
    for (double a : c.three_ball_alpha_tests) out << " alpha_test=" << shortest(a);
    out << '\n';
    for (int n = 1; n <= c.three_ball_n_max; ++n) {
        out << n;
        const analysis::HarmonicMonomial m{n, analysis::Part::Modulus, c.geometry.dim};
        for (double a : c.three_ball_alpha_tests) out << ' ' << fmt("%.12f", analysis::three_ball_ratio(m, c.geometry, a));
        out << '\n';
    }
    return kOk;
}

inline int run_mesh(const RunConfig& c, const Options& o, std::ostream& out) {
    const Mesh mesh = build_disk_mesh(c.geometry, c.sectors, c.level);
    const auto diag = validate(mesh);
    std::filesystem::create_directories(o.out_dir);
    const auto path = o.out_dir / ("mesh_L" + std::to_string(c.level) + ".txt");
    std::ofstream f(path);
    UCFEM_THROW_IF(!f, Error, "cannot write " + path.string());
    write_mesh(f, mesh);
    out << "level=" << c.level << " vertices=" << mesh.vertices.size() << " triangles=" << mesh.triangles.size()
        << " h=" << fmt("%.12e", mesh.h) << " shape_ratio=" << fmt("%.12e", diag.shape_ratio)
        << " violations=" << diag.violations.size() << " file=" << path.string() << '\n';
    return diag.ok() ? kOk : kCheckFailed;
}

inline int run_poisson(const RunConfig& c, std::ostream& out) {
    const auto p = analysis::poisson_level(c.geometry, c.sectors, c.k, c.level);
    out << "level=" << p.level << " h=" << fmt("%.12e", p.h) << " dofs=" << p.n_dofs
        << " err_l2=" << fmt("%.12e", p.err_l2) << " err_h1semi=" << fmt("%.12e", p.err_h1semi)
        << " solve_residual=" << fmt("%.3e", p.solve_residual) << '\n';
    return kOk;
}

inline std::optional<double> resolve_hmin(const RunConfig& c) {
    if (c.hmin == HminPolicy::Value) return c.hmin_value;
    if (c.hmin == HminPolicy::Auto) {
        const double u = analysis::detail::solution_scale(c);
        UCFEM_THROW_IF(!(u > 0.0), ConfigError, "hmin.u_norm: hmin = auto needs a nonzero solution norm");
        return std::pow(c.perturbation.epsilon / u, 1.0 / c.k);
    }
    return std::nullopt;
}

inline int run_uc(const RunConfig& c, std::ostream& out) {
    UCFEM_THROW_IF(c.geometry.dim != 2, ConfigError, "geometry.dim: finite element runs need dim = 2");
    UcProblem p = make_problem(c);
    p.h_min = resolve_hmin(c);
    const auto r = analysis::measure_level(c, p, c.level);
    out << "level=" << r.level << " h=" << fmt("%.12e", r.h) << " tikhonov_scale=" << fmt("%.12e", r.tikhonov_scale)
        << " n_dofs_primal=" << r.n_dofs_primal << " n_dofs_dual=" << r.n_dofs_dual << '\n'
        << "err_l2_B=" << fmt("%.12e", r.err_l2_B) << " err_l2_omega=" << fmt("%.12e", r.err_l2_omega)
        << " err_h1semi_B=" << fmt("%.12e", r.err_h1semi_B) << '\n'
        << "triple_norm=" << fmt("%.12e", r.triple_norm) << " residual_hminus1=" << fmt("%.12e", r.residual_hminus1)
        << " l2_Omega_of_uh=" << fmt("%.12e", r.l2_Omega_of_uh) << '\n';
    return kOk;
}

inline int run_study(const std::string& name, const RunConfig& c, const Options& o, std::ostream& out) {
    analysis::ConvergenceReport rep;
    if (name == "converge") rep = analysis::run_convergence_study(c);
    else if (name == "perturb") rep = analysis::run_perturbation_study(c);
    else rep = analysis::run_stagnation_study(c);

    std::filesystem::create_directories(o.out_dir);
    const auto csv = o.out_dir / (c.output_csv.empty() ? name + ".csv" : c.output_csv);
    const auto json = o.out_dir / (c.output_json.empty() ? name + ".json" : c.output_json);
    {
        std::ofstream f(csv);
        UCFEM_THROW_IF(!f, Error, "cannot write " + csv.string());
        analysis::write_csv(f, rep);
    }
    {
        std::ofstream f(json);
        UCFEM_THROW_IF(!f, Error, "cannot write " + json.string());
        analysis::write_json(f, rep);
    }
    analysis::write_csv(out, rep);
    for (const auto& [col, fit] : rep.fitted_rates) out << "rate " << col << " = " << fmt("%.4f", fit.slope) << '\n';
    if (rep.h_min) out << "h_min = " << fmt("%.6e", *rep.h_min) << '\n';
    for (const auto& ch : rep.checks)
        out << "check " << ch.name << ' ' << (ch.passed ? "PASS" : "FAIL") << " observed=" << fmt("%.6g", ch.observed)
            << " (" << ch.requirement << ")\n";
    out << "wrote " << csv.string() << ' ' << json.string() << '\n';
    return (o.strict && !rep.all_passed()) ? kCheckFailed : kOk;
}

}  // namespace detail

struct Invariant {
    std::string name;
    std::function<bool()> holds;
};

/// Algebraic and structural identities that must hold on any correct build.
inline std::vector<Invariant> invariant_suite() {
    std::vector<Invariant> s;
    s.push_back({"quadrature degree-4 rule integrates monomials exactly", [] {
                     const auto& q = triangle_rule_degree4();
                     for (int a = 0; a <= 4; ++a)
                         for (int b = 0; a + b <= 4; ++b) {
                             double v = 0.0;
                             for (std::size_t i = 0; i < q.size(); ++i)
                                 v += q.weights[i] * std::pow(q.points[i][1], a) * std::pow(q.points[i][2], b);
                             const double exact = std::tgamma(a + 1) * std::tgamma(b + 1) / std::tgamma(a + b + 3);
                             if (std::abs(v - exact) > 1e-14 * std::max(1.0, exact) + 1e-15) return false;
                         }
                     return true;
                 }});
    s.push_back({"collapsed Gauss rule integrates degree 12 exactly", [] {
                     const auto q = collapsed_gauss_rule<7>();
                     for (int a = 0; a <= 12; ++a)
                         for (int b = 0; a + b <= 12; ++b) {
                             double v = 0.0;
                             for (std::size_t i = 0; i < q.size(); ++i)
                                 v += q.weights[i] * std::pow(q.points[i][1], a) * std::pow(q.points[i][2], b);
                             const double exact = std::tgamma(a + 1) * std::tgamma(b + 1) / std::tgamma(a + b + 3);
                             if (std::abs(v - exact) > 1e-13 * exact) return false;
                         }
                     return true;
                 }});
    s.push_back({"three-ball ratio is 1 at the optimal exponent (2D, 3D, n <= 50)", [] {
                     const Geometry g;
                     const double a = analysis::optimal_alpha(g.r1, g.r2, g.r3).alpha;
                     for (int dim : {2, 3})
                         for (int n = 1; n <= 50; ++n) {
                             Geometry gd = g;
                             gd.dim = dim;
                             const double r = analysis::three_ball_ratio({n, analysis::Part::Modulus, dim}, gd, a);
                             if (std::abs(r - 1.0) > 1e-12) return false;
                         }
                     return true;
                 }});
    s.push_back({"three-ball ratio above the optimal exponent grows past 1e3", [] {
                     const Geometry g;
                     const double a = analysis::optimal_alpha(g.r1, g.r2, g.r3).alpha + 0.05;
                     double prev = 0.0;
                     bool exceeded = false;
                     for (int n = 1; n <= 200; ++n) {
                         const double r = analysis::three_ball_ratio({n, analysis::Part::Modulus, 2}, g, a);
                         if (!(r > prev)) return false;
                         prev = r;
                         exceeded = exceeded || r > 1e3;
                     }
                     return exceeded;
                 }});
    s.push_back({"combined exponent exceeds alpha above the optimal pair", [] {
                     const double a = 0.5;
                     for (int i = 0; i < 32; ++i)
                         for (int j = 0; j < 32; ++j) {
                             const double a1 = a + (1.0 - a) * i / 32.0;
                             const double a2 = a + (1.0 - a) * j / 32.0;
                             if (i == 0 && j == 0) continue;
                             if (!analysis::combined_exponent(a1, a2, a).exceeds_alpha) return false;
                         }
                     return true;
                 }});
    s.push_back({"disk meshes validate at levels 0-3", [] {
                     for (int l = 0; l <= 3; ++l)
                         if (!validate(build_disk_mesh(Geometry{}, 8, l)).ok()) return false;
                     return true;
                 }});
    s.push_back({"stiffness is symmetric and annihilates constants", [] {
                     auto mesh = std::make_shared<const Mesh>(build_disk_mesh(Geometry{}, 8, 2));
                     for (int k : {1, 2}) {
                         const auto V = build_space(mesh, k, false);
                         const auto A = assemble_stiffness(V, V).matrix;
                         if (A.max_asymmetry() != 0.0) return false;
                         if (matvec(A, Vector::Ones(V.n_dofs)).lpNorm<Eigen::Infinity>() > 1e-12 * A.max_abs())
                             return false;
                     }
                     return true;
                 }});
    s.push_back({"mass matrices reproduce region areas", [] {
                     auto mesh = std::make_shared<const Mesh>(build_disk_mesh(Geometry{}, 8, 2));
                     for (int k : {1, 2}) {
                         const auto V = build_space(mesh, k, false);
                         for (RegionSet r : {RegionSet::omega(), RegionSet::target(), RegionSet::all()}) {
                             const Vector one = Vector::Ones(V.n_dofs);
                             const double area = bilinear(assemble_region_mass(V, r).matrix, one, one);
                             if (std::abs(area - mesh_area(*mesh, r)) > 1e-12) return false;
                         }
                     }
                     return true;
                 }});
    s.push_back({"gradient jumps vanish on global polynomials of degree k", [] {
                     auto mesh = std::make_shared<const Mesh>(build_disk_mesh(Geometry{}, 8, 2));
                     for (int k : {1, 2}) {
                         const auto V = build_space(mesh, k, false);
                         const auto parts = assemble_stabilization_parts(V, mesh->h);
                         const Vector w = interpolate_nodal(V, [k](const Point& x) {
                             return k == 1 ? 1.0 + 2.0 * x[0] - x[1] : x[0] * x[0] - 3.0 * x[0] * x[1];
                         });
                         if (bilinear(parts.jump, w, w) > 1e-20) return false;
                     }
                     return true;
                 }});
    s.push_back({"positivity identity of the saddle system", [] {
                     for (int k : {1, 2})
                         for (int l : {1, 2}) {
                             auto mesh = std::make_shared<const Mesh>(build_disk_mesh(Geometry{}, 8, l));
                             if (verify_positivity(mesh, k, 20, 7) > 1e-12) return false;
                         }
                     return true;
                 }});
    s.push_back({"saddle matrix is exactly symmetric", [] {
                     auto mesh = std::make_shared<const Mesh>(build_disk_mesh(Geometry{}, 8, 2));
                     for (int k : {1, 2})
                         if (assemble_uc_system(mesh, k).saddle.max_asymmetry() != 0.0) return false;
                     return true;
                 }});
    s.push_back({"direct solver on a 2x2 indefinite system", [] {
                     const auto K = SparseMatrix::from_triplets(2, 2, {{0, 0, 2.0}, {0, 1, 3.0}, {1, 0, 3.0}, {1, 1, -5.0}});
                     const Vector x = solve_direct(K, make_vector({1.0, 0.0}));
                     return std::abs(x[0] - 5.0 / 19.0) < 1e-15 && std::abs(x[1] - 3.0 / 19.0) < 1e-15;
                 }});
    s.push_back({"rate fit reproduces power laws", [] {
                     std::vector<analysis::RatePoint> pts;
                     for (int i = 0; i < 5; ++i) {
                         const double h = std::pow(0.5, i);
                         pts.push_back({i, h, 3.0 * std::pow(h, 1.5)});
                     }
                     return std::abs(analysis::fit_rate(pts).slope - 1.5) < 1e-12;
                 }});
    s.push_back({"config echo parses back to the same config", [] {
                     RunConfig c;
                     c.geometry.r1 = 0.1;
                     c.perturbation.epsilon = 1.0 / 3.0;
                     c.hmin = HminPolicy::Value;
                     c.hmin_value = 0.07;
                     return parse_config(to_config_text(c)) == c;
                 }});
    return s;
}

inline int run_selftest(std::ostream& out) {
    int passed = 0, failed = 0;
    for (const auto& inv : invariant_suite()) {
        bool ok = false;
        try {
            ok = inv.holds();
        } catch (const std::exception&) {
            ok = false;
        }
        out << (ok ? "ok   " : "FAIL ") << inv.name << '\n';
        (ok ? passed : failed)++;
    }
    out << "invariants: " << passed << " passed, " << failed << " failed\n";
    return failed == 0 ? kOk : kCheckFailed;
}

/// Runs one subcommand; errors are reported on `err` as `error[<kind>]: <message>`.
inline int dispatch(const std::string& sub, const RunConfig& cfg, const Options& opt, std::ostream& out,
                    std::ostream& err) {
    try {
        validate_config(cfg);
        if (sub == "alpha") return detail::run_alpha(cfg, out);
        if (sub == "three-ball") return detail::run_three_ball(cfg, out);
        if (sub == "mesh") return detail::run_mesh(cfg, opt, out);
        if (sub == "poisson") return detail::run_poisson(cfg, out);
        if (sub == "uc") return detail::run_uc(cfg, out);
        if (sub == "converge" || sub == "perturb" || sub == "stagnate") return detail::run_study(sub, cfg, opt, out);
        if (sub == "selftest") return run_selftest(out);
        err << "error[config]: unknown subcommand '" << sub << "'\n";
        return kConfig;
    } catch (const ConfigError& e) {
        err << "error[config]: " << e.what() << '\n';
        return kConfig;
    } catch (const InvalidArgument& e) {
        err << "error[config]: " << e.what() << '\n';
        return kConfig;
    } catch (const SolverError& e) {
        err << "error[solver]: " << e.what() << '\n';
        return kSolver;
    } catch (const std::exception& e) {
        err << "error[internal]: " << e.what() << '\n';
        return kInternal;
    }
}

}  // namespace ucfem::cli
