#include <cmath>
#include <memory>
#include <numbers>

#include <gtest/gtest.h>

#include <ucfem/uc_solver.hpp>

namespace ucfem {
namespace {

std::shared_ptr<const Mesh> disk(int level) {
    return std::make_shared<const Mesh>(build_disk_mesh(Geometry{}, 8, level));
}

UcProblem affine_problem() {
    UcProblem p;
    p.exact.n = 2;  // u = x1
    p.perturbation.epsilon = 0.0;
    return p;
}

TEST(Positivity, IdentityHoldsForRandomPairs) {
    for (int k : {1, 2})
        for (int level : {0, 1, 2}) EXPECT_LE(verify_positivity(disk(level), k, 20, 7), 1e-12) << k << "/" << level;
}

TEST(Positivity, InvariantUnderScaling) {
    const auto s = assemble_uc_system(disk(1), 1);
    const Vector u = Vector::LinSpaced(s.primal.n_dofs, -1.0, 2.0);
    const Vector z = Vector::LinSpaced(s.dual.n_dofs, 0.5, -0.5);
    EXPECT_LE(positivity_deviation(s, 1e3 * u, 1e3 * z), 1e-12);
    EXPECT_LE(positivity_deviation(s, 1e-3 * u, 1e-3 * z), 1e-12);
    EXPECT_EQ(positivity_deviation(s, Vector::Zero(s.primal.n_dofs), Vector::Zero(s.dual.n_dofs)), 0.0);
}

TEST(UcSystem, ShapesAndSymmetry) {
    auto m = disk(1);
    const auto s = assemble_uc_system(m, 1);
    EXPECT_EQ(s.primal.n_dofs, 89);
    EXPECT_EQ(s.dual.n_dofs, 89 - 16);
    EXPECT_EQ(s.saddle.rows(), 89 + 73);
    EXPECT_EQ(s.saddle.max_asymmetry(), 0.0);
    EXPECT_EQ(s.tikhonov_scale, s.h);
    EXPECT_EQ(assemble_uc_system(m, 1, 0.9).tikhonov_scale, 0.9);
    EXPECT_EQ(assemble_uc_system(m, 1, 1e-3).tikhonov_scale, s.h);
}

TEST(Poisson, ZeroLoadGivesZero) {
    const auto V0 = build_space(disk(2), 1, true);
    const Vector u = solve_poisson(V0, [](const Point&) { return 0.0; });
    EXPECT_EQ(u.lpNorm<Eigen::Infinity>(), 0.0);
    EXPECT_THROW(solve_poisson(build_space(disk(1), 1, false), [](const Point&) { return 1.0; }), InvalidArgument);
}

// -Delta u = 4 with u = 1 - |x|^2 vanishing at every boundary vertex.
TEST(Poisson, SecondOrderL2Convergence) {
    const ExactField exact{[](const Point& x) { return 1.0 - x[0] * x[0] - x[1] * x[1]; },
                           [](const Point& x) { return Gradient{-2.0 * x[0], -2.0 * x[1]}; }};
    double prev_l2 = 0.0, prev_h1 = 0.0;
    for (int level = 2; level <= 5; ++level) {
        const auto V0 = build_space(disk(level), 1, true);
        const auto V = build_space(V0.mesh, 1, false);
        SolveInfo info;
        const Vector u0 = solve_poisson(V0, [](const Point&) { return 4.0; }, 1e-10, &info);
        EXPECT_LE(info.residual, info.tolerance);
        const auto e = error_norms(V, extend_by_zero(V0, V, u0), exact, RegionSet::all());
        if (level > 2) {
            EXPECT_NEAR(std::log2(prev_l2 / e.l2), 2.0, 0.25) << "level " << level;
            EXPECT_NEAR(std::log2(prev_h1 / e.h1_semi), 1.0, 0.15) << "level " << level;
        }
        prev_l2 = e.l2;
        prev_h1 = e.h1_semi;
    }
}

TEST(Residual, AffineFieldsAreDiscretelyHarmonic) {
    auto m = disk(2);
    for (int k : {1, 2}) {
        const auto V = build_space(m, k, false);
        const auto V0 = build_space(m, k, true);
        const Vector u = interpolate_nodal(V, [](const Point& x) { return 1.0 - 2.0 * x[0] + 0.5 * x[1]; });
        EXPECT_LT(hminus1_residual(V0, V, u), 1e-12);
    }
}

// For u = |x|^2 in P2, a(u, v) = -(4, v) on V_0h, so the Riesz representative solves a Poisson problem.
TEST(Residual, QuadraticMatchesPoissonRepresentative) {
    auto m = disk(2);
    const auto V = build_space(m, 2, false);
    const auto V0 = build_space(m, 2, true);
    const Vector u = interpolate_nodal(V, [](const Point& x) { return x[0] * x[0] + x[1] * x[1]; });
    const Vector phi = solve_poisson(V0, [](const Point&) { return 4.0; });
    const Vector load = assemble_load_region(V0, [](const Point&) { return 4.0; }, RegionSet::all());
    const double expected = std::sqrt(load.dot(phi));
    EXPECT_NEAR(hminus1_residual(V0, V, u), expected, 1e-10 * expected);
    EXPECT_NEAR(hminus1_residual(V0, V, -3.0 * u), 3.0 * expected, 1e-10 * expected);
}

TEST(Perturbation, OscillatoryNormIsEpsilon) {
    const auto V = build_space(disk(3), 1, false);
    Perturbation p;
    p.epsilon = 1e-3;
    const auto dq = make_perturbation(p, V);
    EXPECT_NEAR(dq.certified_norm, 1e-3, 1e-13);
    EXPECT_FALSE(dq.coefficients.has_value());
    p.epsilon = 0.0;
    EXPECT_EQ(make_perturbation(p, V).certified_norm, 0.0);
    p.epsilon = -1.0;
    EXPECT_THROW(make_perturbation(p, V), InvalidArgument);
}

TEST(Perturbation, NodalNoiseIsSeededAndSupportedInOmega) {
    const auto V = build_space(disk(2), 2, false);
    Perturbation p;
    p.mode = PerturbationMode::NodalNoise;
    p.epsilon = 0.05;
    p.seed = 42;
    const auto a = make_perturbation(p, V);
    const auto b = make_perturbation(p, V);
    ASSERT_TRUE(a.coefficients && b.coefficients);
    EXPECT_EQ(*a.coefficients, *b.coefficients);
    EXPECT_NEAR(a.certified_norm, 0.05, 1e-15);
    p.seed = 43;
    EXPECT_NE(*make_perturbation(p, V).coefficients, *a.coefficients);
    for (int i = 0; i < V.n_dofs; ++i)
        if (norm(V.dof_coords[static_cast<std::size_t>(i)]) > 0.25 + 1e-12) {
            EXPECT_EQ((*a.coefficients)[i], 0.0);
        }
    // The FE field reproduces its nodal values.
    for (int i = 0; i < V.n_dofs; ++i)
        if ((*a.coefficients)[i] != 0.0) {
            EXPECT_NEAR(a.field(V.dof_coords[static_cast<std::size_t>(i)]), (*a.coefficients)[i], 1e-14);
        }
}

// The residual of the method on the exact interpolant is the jump and Laplacian part of s.
TEST(Consistency, ResidualIsStabilizationOfInterpolant) {
    for (int k : {1, 2}) {
        UcProblem p;
        p.k = k;
        p.exact.n = 4;
        p.perturbation.epsilon = 1e-3;
        const auto sol = solve_uc(p, disk(2));
        const auto& st = sol.system->stabilization;
        const Vector uI = interpolate_nodal(sol.system->primal, p.exact.field().value);
        const Vector expected = matvec(st.jump + st.laplacian, uI);
        EXPECT_LT((consistency_residual(sol, p) - expected).norm(), 1e-9 * std::max(1.0, expected.norm())) << k;
    }
}

// u = x1 has no jumps and no Laplacian, so only the Tikhonov term competes with the data:
// u_h is close to c u_I with c = ||x1||^2_omega / (||x1||^2_omega + h^2 ||x1||^2_Omega).
TEST(Affine, ShrinksTowardsTikhonovOracle) {
    const auto p = affine_problem();
    const double omega_sq = std::numbers::pi * std::pow(0.25, 4) / 4.0;
    const double all_sq = std::numbers::pi / 4.0;
    double prev = 1e300;
    for (int level = 2; level <= 4; ++level) {
        const auto sol = solve_uc(p, disk(level));
        const auto& s = *sol.system;
        const Vector uI = interpolate_nodal(s.primal, p.exact.field().value);
        const double c = omega_sq / (omega_sq + s.h * s.h * all_sq);
        const double ratio = sol.u.dot(matvec(s.mass_all.matrix, uI)) / uI.dot(matvec(s.mass_all.matrix, uI));
        EXPECT_NEAR(ratio, c, 0.1 * c) << "level " << level;
        const double err = error_norms(s.primal, sol.u, p.exact.field(), RegionSet::target()).l2;
        EXPECT_LT(err, prev) << "level " << level;
        prev = err;
    }
}

TEST(Linearity, SolutionScalesWithData) {
    UcProblem p;
    p.exact.kind = ExactSolution::Kind::Zero;
    p.perturbation.epsilon = 1e-3;
    auto system = std::make_shared<const UcSystem>(assemble_uc_system(disk(2), 1));
    const auto a = solve_uc(p, system);
    p.perturbation.epsilon = 2e-3;
    const auto b = solve_uc(p, system);
    EXPECT_LT((b.u - 2.0 * a.u).norm(), 1e-10 * b.u.norm());
    EXPECT_LT((b.z - 2.0 * a.z).norm(), 1e-10 * std::max(b.z.norm(), 1e-300) + 1e-300);
    EXPECT_NEAR(b.diagnostics.perturbation_norm, 2e-3, 1e-15);
}

TEST(Solve, DiagnosticsAreConsistent) {
    UcProblem p;
    p.perturbation.epsilon = 0.0;
    const auto sol = solve_uc(p, disk(2));
    const auto& d = sol.diagnostics;
    EXPECT_LE(d.solve_residual, d.solve_tolerance);
    EXPECT_EQ(d.primal_dofs, sol.system->primal.n_dofs);
    EXPECT_EQ(d.dual_dofs, sol.system->dual.n_dofs);
    const double tn = triple_norm(sol.u, sol.z, sol.system->stabilization.total, sol.system->mass_omega,
                                  sol.system->dual_stiffness);
    EXPECT_NEAR(tn * tn, d.s_part + d.a_part + d.omega_part, 1e-12);
    EXPECT_EQ(d.perturbation_norm, 0.0);
}

TEST(Solve, RejectsBadProblems) {
    UcProblem p;
    p.perturbation.epsilon = -1.0;
    EXPECT_THROW(solve_uc(p, disk(0)), InvalidArgument);
    p = UcProblem{};
    p.geometry.r1 = 0.6;
    EXPECT_THROW(solve_uc(p, disk(0)), InvalidArgument);
    p = UcProblem{};
    p.exact.n = 0;
    EXPECT_THROW(solve_uc(p, disk(0)), InvalidArgument);
}

TEST(Solve, BitwiseReproducible) {
    UcProblem p;
    p.perturbation.epsilon = 1e-2;
    const auto a = solve_uc(p, disk(3));
    const auto b = solve_uc(p, disk(3));
    EXPECT_EQ(a.u, b.u);
    EXPECT_EQ(a.z, b.z);
}

}  // namespace
}  // namespace ucfem
