#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include <ucfem/analysis/exponents.hpp>
#include <ucfem/analysis/harmonic.hpp>
#include <ucfem/analysis/rates.hpp>
#include <ucfem/analysis/report_io.hpp>
#include <ucfem/analysis/studies.hpp>

namespace ucfem::analysis {
namespace {

using std::numbers::pi;

double integrate(const std::function<double(double)>& f, double a, double b) {
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-14);
}

TEST(Exponents, OptimalAlphaExamples) {
    auto e = optimal_alpha(0.25, 0.5, 1.0);
    EXPECT_NEAR(e.alpha, 0.5, 1e-15);
    EXPECT_NEAR(e.beta, 1.0, 1e-15);
    EXPECT_NEAR(optimal_alpha(1.0, 2.0, 4.0).alpha, 0.5, 1e-15);
    e = optimal_alpha(0.5, 0.75, 1.0);
    EXPECT_NEAR(e.alpha, 0.415037, 1e-6);
    EXPECT_NEAR(e.beta, 0.709511, 1e-6);
    EXPECT_NEAR(e.alpha, e.beta / (1.0 + e.beta), 1e-15);
    EXPECT_THROW(optimal_alpha(0.5, 0.5, 1.0), InvalidArgument);
    EXPECT_THROW(optimal_alpha(0.0, 0.5, 1.0), InvalidArgument);
}

// alpha depends continuously on the radii: Lipschitz with a modest constant near (1/4, 1/2, 1).
TEST(Exponents, OptimalAlphaIsContinuous) {
    const double base = optimal_alpha(0.25, 0.5, 1.0).alpha;
    for (double d : {1e-2, 1e-4, 1e-6, 1e-8}) {
        for (const auto& [r1, r2, r3] : {std::array{0.25 + d, 0.5, 1.0}, std::array{0.25, 0.5 + d, 1.0},
                                         std::array{0.25, 0.5, 1.0 + d}, std::array{0.25 - d, 0.5 - d, 1.0 - d}})
            EXPECT_LE(std::abs(optimal_alpha(r1, r2, r3).alpha - base), 5.0 * d) << d;
    }
}

TEST(Exponents, CombinedExponentExamples) {
    auto c = combined_exponent(0.5, 0.75, 0.5);
    EXPECT_NEAR(c.alpha_tilde, 2.0 / 3.0, 1e-15);
    EXPECT_TRUE(c.premise);
    EXPECT_TRUE(c.exceeds_alpha);
    c = combined_exponent(0.5, 0.5, 0.5);
    EXPECT_DOUBLE_EQ(c.alpha_tilde, 0.5);
    EXPECT_FALSE(c.premise);
    EXPECT_FALSE(c.exceeds_alpha);
    EXPECT_DOUBLE_EQ(combined_exponent(0.6, 0.6).alpha_tilde, 0.6);
    EXPECT_THROW(combined_exponent(1.0, 0.5), InvalidArgument);
}

// Under the premise alpha1, alpha2 >= alpha with one strict, alpha_tilde exceeds alpha.
TEST(Exponents, PremiseImpliesImprovementOnGrid) {
    for (int i = 1; i < 20; ++i)
        for (int j = 1; j < 20; ++j) {
            const double a1 = i / 20.0, a2 = j / 20.0;
            const auto c = combined_exponent(a1, a2, 0.5);
            if (c.premise) {
                EXPECT_TRUE(c.exceeds_alpha) << a1 << " " << a2;
            }
        }
}

TEST(Harmonic, ClosedFormNorms) {
    EXPECT_NEAR(harmonic_norm_closed({1, Part::Modulus, 2}, 1.0), pi, 1e-14);
    EXPECT_NEAR(harmonic_norm_closed({2, Part::Modulus, 2}, 1.0), pi / 2.0, 1e-14);
    EXPECT_NEAR(harmonic_norm_closed({1, Part::Modulus, 3}, 2.0), 32.0 * pi / 3.0, 1e-12);
    EXPECT_NEAR(harmonic_norm_closed({3, Part::Re, 2}, 1.0), pi / 6.0, 1e-14);
    EXPECT_EQ(harmonic_norm_closed({1, Part::Im, 2}, 1.0), 0.0);
}

// |z|^{2p} = s^{2p} in cylindrical coordinates over the 3D ball.
TEST(Harmonic, ThreeDimensionalNormsMatchRadialIntegral) {
    for (int n = 1; n <= 8; ++n) {
        const int p = n - 1;
        const double rho = 0.7;
        const double oracle =
            4.0 * pi * integrate([&](double s) { return std::pow(s, 2 * p + 1) * std::sqrt(rho * rho - s * s); }, 0.0, rho);
        EXPECT_NEAR(harmonic_norm_closed({n, Part::Modulus, 3}, rho), oracle, 1e-10 * oracle) << "n " << n;
    }
}

TEST(Harmonic, TwoDimensionalNormsMatchPolarIntegral) {
    for (int n = 1; n <= 8; ++n)
        for (Part part : {Part::Re, Part::Im}) {
            if (n == 1 && part == Part::Im) continue;
            const int p = n - 1;
            const double angular = integrate(
                [&](double t) {
                    const double c = part == Part::Re ? std::cos(p * t) : std::sin(p * t);
                    return c * c;
                },
                0.0, 2.0 * pi);
            const double oracle = angular * std::pow(1.3, 2 * p + 2) / (2 * p + 2);
            EXPECT_NEAR(harmonic_norm_closed({n, part, 2}, 1.3), oracle, 1e-11 * oracle) << n;
        }
}

TEST(Harmonic, LargeDegreesStayFinite) {
    const double l = log_harmonic_norm({200, Part::Modulus, 3}, 0.25);
    EXPECT_TRUE(std::isfinite(l));
    EXPECT_LT(l, -200.0);
}

TEST(Harmonic, EvaluationAndGradient) {
    const auto v = harmonic_eval({4, Part::Re, 2}, {0.5, 0.2});  // x^3 - 3 x y^2
    EXPECT_NEAR(v.value, 0.125 - 3.0 * 0.5 * 0.04, 1e-15);
    EXPECT_NEAR(v.gradient[0], 3.0 * 0.25 - 3.0 * 0.04, 1e-15);
    EXPECT_NEAR(v.gradient[1], -6.0 * 0.5 * 0.2, 1e-15);
    const auto w = harmonic_eval({3, Part::Im, 2}, {0.5, 0.2});  // 2 x y
    EXPECT_NEAR(w.value, 0.2, 1e-15);
    EXPECT_NEAR(w.gradient[0], 0.4, 1e-15);
    EXPECT_NEAR(w.gradient[1], 1.0, 1e-15);
    EXPECT_THROW(harmonic_eval({2, Part::Modulus, 2}, {0, 0}), InvalidArgument);
}

// Re z^2 = x^2 - y^2 on the unit disk: ||u||^2 = pi/6, ||grad u||^2 = 2 pi, sum of squared second derivatives = 8 pi.
TEST(Harmonic, SobolevNorms) {
    const HarmonicMonomial m{3, Part::Re, 2};
    EXPECT_NEAR(harmonic_sobolev_norm_sq(m, 0, 1.0), pi / 6.0, 1e-14);
    EXPECT_NEAR(harmonic_sobolev_norm_sq(m, 1, 1.0), pi / 6.0 + 2.0 * pi, 1e-13);
    EXPECT_NEAR(harmonic_sobolev_norm_sq(m, 2, 1.0), pi / 6.0 + 10.0 * pi, 1e-13);
    EXPECT_NEAR(harmonic_sobolev_norm_sq(m, 5, 1.0), pi / 6.0 + 10.0 * pi, 1e-13);
    EXPECT_NEAR(harmonic_sobolev_norm_sq({1, Part::Re, 2}, 3, 2.0), 4.0 * pi, 1e-13);
    EXPECT_NEAR(harmonic_sobolev_norm_sq({2, Part::Re, 2}, 1, 1.0), pi / 4.0 + pi, 1e-14);
    EXPECT_THROW(harmonic_sobolev_norm_sq({2, Part::Modulus, 2}, 1, 1.0), InvalidArgument);
}

TEST(ThreeBall, EqualityAtOptimalExponent) {
    const Geometry g;
    for (int n : {1, 2, 5, 20, 50}) {
        EXPECT_NEAR(three_ball_ratio({n, Part::Modulus, 2}, g, 0.5), 1.0, 1e-12) << n;
        Geometry g3 = g;
        g3.dim = 3;
        EXPECT_LE(three_ball_ratio({n, Part::Modulus, 3}, g3, 0.5), 1.0 + 1e-12) << n;
    }
}

// The ratio is 2^{n (alpha_test - 1/2) 2} for r = (1/4, 1/2, 1) in 2D.
TEST(ThreeBall, GrowthAboveOptimalExponent) {
    const Geometry g;
    EXPECT_NEAR(three_ball_ratio({10, Part::Modulus, 2}, g, 0.6), 4.0, 1e-12);
    EXPECT_NEAR(three_ball_ratio({80, Part::Modulus, 2}, g, 0.6), 65536.0, 1e-7);
    EXPECT_NEAR(three_ball_log_ratio({50, Part::Modulus, 2}, g, 0.55), 5.0 * std::log(2.0), 1e-12);
    EXPECT_THROW(three_ball_ratio({3, Part::Modulus, 2}, g, 1.0), InvalidArgument);
}

// Orthogonal sums of monomials keep ||u||_{B(r2)} <= ||u||_{B(r1)}^alpha ||u||_{B(r3)}^{1-alpha}.
TEST(ThreeBall, LogConvexityForRandomCombinations) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    const Geometry g;
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> a(12);
        for (auto& x : a) x = d(rng);
        auto norm_sq = [&](double rho) {
            double s = 0.0;
            for (int n = 1; n <= 12; ++n) s += a[n - 1] * a[n - 1] * harmonic_norm_closed({n, Part::Modulus, 2}, rho);
            return s;
        };
        EXPECT_LE(std::sqrt(norm_sq(g.r2)), std::pow(norm_sq(g.r1), 0.25) * std::pow(norm_sq(g.r3), 0.25) * (1 + 1e-12));
    }
}

TEST(ThreeBall, CurvedQuadratureMatchesClosedForm) {
    const Geometry g;
    const Mesh m = build_disk_mesh(g, 8, 4);
    for (int n = 1; n <= 6; ++n)
        for (Part part : {Part::Re, Part::Modulus})
            for (int ring = 1; ring <= 3; ++ring) {
                const HarmonicMonomial hm{n, part, 2};
                const double exact = harmonic_norm_closed(hm, g.radius(ring));
                EXPECT_NEAR(harmonic_norm_quadrature(m, g, hm, ring), exact, 1e-8 * exact) << n << " ring " << ring;
            }
}

TEST(Rates, FitExamples) {
    const std::vector<RatePoint> pts{{1, 1.0, 3.0}, {2, 0.5, 0.75}, {3, 0.25, 0.1875}};
    const auto fit = fit_rate(pts);
    EXPECT_NEAR(fit.slope, 2.0, 1e-14);
    ASSERT_EQ(fit.per_step_eoc.size(), 2u);
    EXPECT_NEAR(fit.per_step_eoc[0], 2.0, 1e-14);
    EXPECT_NEAR(fit_rate({{1, 0.1, 1.0}, {2, 0.01, 0.1}}).slope, 1.0, 1e-14);
    EXPECT_NEAR(fit_rate(pts, LevelWindow{2, 3}).slope, 2.0, 1e-14);
    EXPECT_THROW(fit_rate(pts, LevelWindow{3, 5}), InvalidArgument);
    EXPECT_THROW(fit_rate({{1, 1.0, 1.0}, {2, 0.5, 0.0}}), InvalidArgument);
    EXPECT_THROW(fit_rate({{1, 1.0, 1.0}, {2, 1.0, 0.5}}), InvalidArgument);
}

TEST(Rates, LeastSquaresOfNoisyData) {
    // err = h^1.5 with alternating factors 1.1, 1/1.1: slope stays close to 1.5.
    std::vector<RatePoint> pts;
    for (int l = 0; l < 6; ++l) {
        const double h = std::pow(0.5, l);
        pts.push_back({l, h, std::pow(h, 1.5) * (l % 2 ? 1.1 : 1.0 / 1.1)});
    }
    EXPECT_NEAR(fit_rate(pts).slope, 1.5, 0.05);
}

RunConfig small_config() {
    RunConfig c;
    c.levels = {1, 2, 3};
    c.rate_window = {1, 3};
    c.perturbation.epsilon = 0.0;
    return c;
}

TEST(Studies, ConvergenceReportStructure) {
    const auto rep = run_convergence_study(small_config());
    EXPECT_EQ(rep.study, "converge");
    ASSERT_EQ(rep.rows.size(), 3u);
    EXPECT_NEAR(rep.alpha, 0.5, 1e-15);
    for (const auto& col : fitted_columns()) EXPECT_TRUE(rep.fitted_rates.count(col)) << col;
    for (const char* name :
         {"err_l2_B_rate", "err_l2_B_monotone", "triple_norm_rate", "residual_hminus1_rate", "err_l2_omega_rate",
          "a_priori_bound"})
        EXPECT_NE(rep.find_check(name), nullptr) << name;
    EXPECT_EQ(rep.thresholds.size(), 2u);
    EXPECT_GT(rep.rows[0].h, rep.rows[1].h);
    EXPECT_EQ(rep.rows[2].n_dofs_primal, 1313);
    EXPECT_FALSE(rep.rows[0].sensitivity.has_value());
    EXPECT_THROW(
        [] {
            auto c = small_config();
            c.perturbation.epsilon = 1e-3;
            return run_convergence_study(c);
        }(),
        InvalidArgument);
}

TEST(Studies, RowsMatchDirectSolve) {
    const auto cfg = small_config();
    const auto row = measure_level(cfg, make_problem(cfg), 2);
    auto mesh = std::make_shared<const Mesh>(build_disk_mesh(cfg.geometry, cfg.sectors, 2));
    const auto sol = solve_uc(make_problem(cfg), mesh);
    const auto e = error_norms(sol.system->primal, sol.u, cfg.exact.field(), RegionSet::target());
    EXPECT_EQ(row.err_l2_B, e.l2);
    EXPECT_EQ(row.err_h1semi_B, e.h1_semi);
    EXPECT_EQ(row.h, sol.system->h);
}

// With epsilon = 0 the perturbed pipeline reproduces the unperturbed rows bit for bit.
TEST(Studies, ZeroPerturbationIsNeutral) {
    auto cfg = small_config();
    const auto a = measure_level(cfg, make_problem(cfg), 2);
    cfg.perturbation.mode = PerturbationMode::NodalNoise;
    cfg.perturbation.seed = 99;
    const auto b = measure_level(cfg, make_problem(cfg), 2);
    EXPECT_EQ(a.err_l2_B, b.err_l2_B);
    EXPECT_EQ(a.triple_norm, b.triple_norm);
    EXPECT_EQ(a.residual_hminus1, b.residual_hminus1);
}

TEST(Studies, PerturbationSensitivity) {
    auto cfg = small_config();
    cfg.exact.kind = ExactSolution::Kind::Zero;
    cfg.perturbation.epsilon = 1e-3;
    const auto rep = run_perturbation_study(cfg);
    for (const auto& r : rep.rows) {
        ASSERT_TRUE(r.sensitivity.has_value());
        EXPECT_NEAR(*r.sensitivity, r.err_l2_B * std::pow(r.h, 0.5) / 1e-3, 1e-12 * *r.sensitivity);
    }
    const auto* c = rep.find_check("sensitivity_bounded");
    ASSERT_NE(c, nullptr);
    EXPECT_GE(c->observed, 1.0);
    cfg.perturbation.epsilon = 0.0;
    EXPECT_THROW(run_perturbation_study(cfg), InvalidArgument);
}

TEST(Studies, StagnationFindsCrossing) {
    auto cfg = small_config();
    cfg.perturbation.epsilon = 1e-2;
    cfg.hmin = HminPolicy::Value;
    cfg.hmin_value = 0.3;
    const auto rep = run_stagnation_study(cfg);
    ASSERT_TRUE(rep.h_min.has_value());
    EXPECT_EQ(*rep.h_min, 0.3);
    EXPECT_EQ(rep.rows[0].tikhonov_scale, rep.rows[0].h);
    EXPECT_EQ(rep.rows[1].tikhonov_scale, 0.3);
    EXPECT_EQ(rep.rows[2].tikhonov_scale, 0.3);
    const auto* s = rep.find_check("no_blow_up");
    ASSERT_NE(s, nullptr);
    EXPECT_TRUE(std::isfinite(s->observed));

    cfg.hmin = HminPolicy::Auto;
    const auto aut = run_stagnation_study(cfg);
    const double unorm = cfg.exact.sobolev_norm(2, 1.0);
    EXPECT_NEAR(*aut.h_min, 1e-2 / unorm, 1e-15);
    EXPECT_TRUE(std::isnan(aut.find_check("no_blow_up")->observed));

    cfg.hmin = HminPolicy::Off;
    EXPECT_THROW(run_stagnation_study(cfg), ConfigError);
}

TEST(Studies, PoissonBaselineConverges) {
    const auto a = poisson_level(Geometry{}, 8, 1, 3);
    const auto b = poisson_level(Geometry{}, 8, 1, 4);
    EXPECT_NEAR(std::log2(a.err_l2 / b.err_l2), 2.0, 0.2);
    EXPECT_NEAR(std::log2(a.err_h1semi / b.err_h1semi), 1.0, 0.1);
    const auto q = poisson_level(Geometry{}, 8, 2, 3);
    EXPECT_LT(q.err_l2, a.err_l2);
}

TEST(ReportIo, CsvAndJson) {
    const auto rep = run_convergence_study(small_config());
    std::ostringstream csv;
    write_csv(csv, rep);
    std::istringstream lines(csv.str());
    std::string header;
    std::getline(lines, header);
    EXPECT_EQ(header, "level,h,n_dofs_primal,n_dofs_dual,err_l2_B,err_l2_omega,err_h1semi_B,triple_norm,"
                      "residual_hminus1,l2_Omega_of_uh");
    int n = 0;
    for (std::string l; std::getline(lines, l);) ++n;
    EXPECT_EQ(n, 3);

    const auto j = to_json(rep);
    EXPECT_EQ(j.at("study"), "converge");
    EXPECT_EQ(j.at("rows").size(), 3u);
    EXPECT_EQ(j.at("rows")[1].at("err_l2_B").get<double>(), rep.rows[1].err_l2_B);
    EXPECT_EQ(j.at("checks").size(), rep.checks.size());
    EXPECT_EQ(parse_config(config_text_from_json(j)), rep.config);
}

}  // namespace
}  // namespace ucfem::analysis
