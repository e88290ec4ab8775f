#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>

#include "analysis/harmonic.hpp"
#include "assembly.hpp"
#include "fe_space.hpp"
#include "mesh.hpp"
#include "sparse.hpp"

namespace ucfem {

/// Exact solution of the continuation problem: zero, or Re/Im of z^{n-1}.
struct ExactSolution {
    enum class Kind { Zero, Monomial };
    Kind kind = Kind::Monomial;
    int n = 3;
    analysis::Part part = analysis::Part::Re;

    [[nodiscard]] analysis::HarmonicMonomial monomial() const { return {n, part, 2}; }

    [[nodiscard]] ExactField field() const {
        if (kind == Kind::Zero) return {[](const Point&) { return 0.0; }, [](const Point&) { return Gradient{}; }};
        const auto m = monomial();
        return {[m](const Point& x) { return analysis::harmonic_eval(m, x).value; },
                [m](const Point& x) { return analysis::harmonic_eval(m, x).gradient; }};
    }

    /// ||u||_{H^order(B(rho))} from closed forms.
    [[nodiscard]] double sobolev_norm(int order, double rho) const {
        if (kind == Kind::Zero) return 0.0;
        return std::sqrt(analysis::harmonic_sobolev_norm_sq(monomial(), order, rho));
    }

    friend bool operator==(const ExactSolution&, const ExactSolution&) = default;
};

enum class PerturbationMode { None, Oscillatory, NodalNoise };

struct Perturbation {
    PerturbationMode mode = PerturbationMode::Oscillatory;
    double epsilon = 0.0;  ///< L2(omega) norm of the data perturbation
    double kappa = 10.0;
    std::uint64_t seed = 0;

    [[nodiscard]] bool active() const { return mode != PerturbationMode::None && epsilon > 0.0; }
    friend bool operator==(const Perturbation&, const Perturbation&) = default;
};

/// A data perturbation with its norm recomputed by quadrature on omega.
///
/// Oscillatory perturbations are analytic; nodal noise is a finite element
/// function given by `coefficients` in `space`.
struct PerturbationField {
    ScalarField field;
    std::optional<Vector> coefficients;
    double certified_norm = 0.0;
};

namespace detail {

inline double omega_norm(const FeSpace& space, const ScalarField& g) {
    return error_norms(space, Vector::Zero(space.n_dofs), {g, nullptr}, RegionSet::omega()).l2;
}

/// Evaluates an FE function by searching the omega elements; zero elsewhere.
inline ScalarField fe_function_on_omega(const FeSpace& space, Vector coeffs) {
    return [space, coeffs = std::move(coeffs), mesh = space.mesh](const Point& x) {
        std::array<double, 6> phi{};
        for (std::size_t t = 0; t < mesh->triangles.size(); ++t) {
            if (mesh->tags[t] != Region::OmegaData) continue;
            const ElementGeometry g(mesh->corners(t));
            const auto l = g.barycentric(x);
            constexpr double tol = -1e-12;
            if (l[0] < tol || l[1] < tol || l[2] < tol) continue;
            basis_values(space.k, l, phi);
            const auto dofs = space.element_dofs(t);
            double v = 0.0;
            for (std::size_t a = 0; a < dofs.size(); ++a)
                if (dofs[a] >= 0) v += coeffs[dofs[a]] * phi[a];
            return v;
        }
        return 0.0;
    };
}

}  // namespace detail

/// Builds a perturbation with ||delta q||_{L2(omega)} = epsilon on the given space's mesh.
inline PerturbationField make_perturbation(const Perturbation& p, const FeSpace& space) {
    UCFEM_THROW_IF(!(p.epsilon >= 0.0) || !std::isfinite(p.epsilon), InvalidArgument,
                   "make_perturbation: epsilon must be >= 0");
    PerturbationField out;
    if (!p.active()) {
        out.field = [](const Point&) { return 0.0; };
        return out;
    }
    if (p.mode == PerturbationMode::Oscillatory) {
        const double kappa = p.kappa;
        const ScalarField g = [kappa](const Point& x) { return std::sin(kappa * x[0]) * std::sin(kappa * x[1]); };
        const double gnorm = detail::omega_norm(space, g);
        UCFEM_THROW_IF(!(gnorm > 1e-300), InvalidArgument, "make_perturbation: oscillatory profile has zero norm");
        const double scale = p.epsilon / gnorm;
        out.field = [g, scale](const Point& x) { return scale * g(x); };
        out.certified_norm = detail::omega_norm(space, out.field);
        return out;
    }

    // Seeded uniform(-1, 1) values on dofs supported in omega.
    std::vector<char> in_omega(static_cast<std::size_t>(space.n_dofs), 0);
    for (std::size_t t = 0; t < space.mesh->triangles.size(); ++t)
        if (space.mesh->tags[t] == Region::OmegaData)
            for (int d : space.element_dofs(t))
                if (d >= 0) in_omega[static_cast<std::size_t>(d)] = 1;
    std::mt19937_64 rng(p.seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Vector c = Vector::Zero(space.n_dofs);
    for (int i = 0; i < space.n_dofs; ++i)
        if (in_omega[static_cast<std::size_t>(i)]) c[i] = dist(rng);
    const auto M = assemble_region_mass(space, RegionSet::omega());
    const double cnorm = std::sqrt(bilinear(M.matrix, c, c));
    UCFEM_THROW_IF(!(cnorm > 1e-300), InvalidArgument, "make_perturbation: nodal noise has zero norm");
    c *= p.epsilon / cnorm;
    out.certified_norm = std::sqrt(bilinear(M.matrix, c, c));
    out.field = detail::fe_function_on_omega(space, c);
    out.coefficients = std::move(c);
    return out;
}

/// Unique continuation problem: recover u on B from u = q + delta q on omega.
struct UcProblem {
    Geometry geometry;
    int k = 1;
    ExactSolution exact;
    Perturbation perturbation;
    /// Lower bound on the Tikhonov scale: the stabilization uses max(h, h_min)^{2k}.
    std::optional<double> h_min;
    double rel_tol = 1e-10;
};

/// Spaces and assembled forms of the primal-dual system on one mesh.
struct UcSystem {
    std::shared_ptr<const Mesh> mesh;
    FeSpace primal;  ///< V_h
    FeSpace dual;    ///< V_0h
    double h = 0.0;
    double tikhonov_scale = 0.0;
    Stabilization stabilization;
    FormMatrix mass_omega;
    FormMatrix mass_all;
    FormMatrix coupling;        ///< B(i, j) = a(phi_j, psi_i), rows in V_0h
    FormMatrix dual_stiffness;  ///< A0 on V_0h
    SparseMatrix saddle;        ///< [[S + M_omega, B^T], [B, -A0]]
};

inline UcSystem assemble_uc_system(std::shared_ptr<const Mesh> mesh, int k, std::optional<double> h_min = {}) {
    UcSystem s;
    s.mesh = mesh;
    s.primal = build_space(mesh, k, false);
    s.dual = build_space(mesh, k, true);
    s.h = mesh_metrics(*mesh).h;
    s.tikhonov_scale = h_min ? std::max(s.h, *h_min) : s.h;
    s.stabilization = assemble_stabilization_parts(s.primal, s.tikhonov_scale);
    s.mass_omega = assemble_region_mass(s.primal, RegionSet::omega());
    s.mass_all = assemble_region_mass(s.primal, RegionSet::all());
    s.coupling = assemble_stiffness(s.dual, s.primal);
    s.dual_stiffness = assemble_stiffness(s.dual, s.dual);
    s.saddle = compose_saddle(s.stabilization.total.matrix + s.mass_omega.matrix, s.coupling.matrix,
                              s.dual_stiffness.matrix);
    return s;
}

struct UcDiagnostics {
    double solve_residual = 0.0;
    double solve_tolerance = 0.0;
    double s_part = 0.0;      ///< s(u_h, u_h)
    double a_part = 0.0;      ///< a(z_h, z_h)
    double omega_part = 0.0;  ///< ||u_h||^2_{L2(omega)}
    double h = 0.0;
    double tikhonov_scale = 0.0;
    int primal_dofs = 0;
    int dual_dofs = 0;
    double perturbation_norm = 0.0;
};

struct UcSolution {
    std::shared_ptr<const UcSystem> system;
    Vector u;  ///< primal field in V_h
    Vector z;  ///< dual field in V_0h
    Vector rhs;
    UcDiagnostics diagnostics;
};

/// Right-hand side ((q + delta q, phi_i)_omega, 0).
inline Vector uc_rhs(const UcSystem& system, const UcProblem& problem, double* perturbation_norm = nullptr) {
    const FeSpace& V = system.primal;
    Vector top = assemble_load_region(V, problem.exact.field().value, RegionSet::omega());
    const auto dq = make_perturbation(problem.perturbation, V);
    if (dq.coefficients) {
        top += matvec(system.mass_omega.matrix, *dq.coefficients);
    } else if (problem.perturbation.active()) {
        top += assemble_load_region(V, dq.field, RegionSet::omega());
    }
    if (perturbation_norm) *perturbation_norm = dq.certified_norm;
    Vector rhs = Vector::Zero(V.n_dofs + system.dual.n_dofs);
    rhs.head(V.n_dofs) = top;
    return rhs;
}

inline UcSolution solve_uc(const UcProblem& problem, std::shared_ptr<const UcSystem> system) {
    UcSolution sol;
    sol.system = system;
    const int n = system->primal.n_dofs;
    const int m = system->dual.n_dofs;
    sol.rhs = uc_rhs(*system, problem, &sol.diagnostics.perturbation_norm);
    SolveInfo info;
    const Vector x = solve_direct(system->saddle, sol.rhs, problem.rel_tol, &info);
    sol.u = x.head(n);
    sol.z = x.tail(m);
    auto& d = sol.diagnostics;
    d.solve_residual = info.residual;
    d.solve_tolerance = info.tolerance;
    d.s_part = bilinear(system->stabilization.total.matrix, sol.u, sol.u);
    d.a_part = bilinear(system->dual_stiffness.matrix, sol.z, sol.z);
    d.omega_part = bilinear(system->mass_omega.matrix, sol.u, sol.u);
    d.h = system->h;
    d.tikhonov_scale = system->tikhonov_scale;
    d.primal_dofs = n;
    d.dual_dofs = m;
    return sol;
}

/// Assembles and solves the primal-dual stabilized method on `mesh`.
inline UcSolution solve_uc(const UcProblem& problem, std::shared_ptr<const Mesh> mesh) {
    problem.geometry.validate();
    UCFEM_THROW_IF(problem.perturbation.epsilon < 0.0, InvalidArgument, "solve_uc: epsilon must be >= 0");
    UCFEM_THROW_IF(problem.exact.kind == ExactSolution::Kind::Monomial && problem.exact.n < 1, InvalidArgument,
                   "solve_uc: exact.n >= 1 required");
    auto system = std::make_shared<const UcSystem>(assemble_uc_system(mesh, problem.k, problem.h_min));
    return solve_uc(problem, std::move(system));
}

/// Galerkin solution of -Delta u = f with u = 0 on the boundary polygon.
inline Vector solve_poisson(const FeSpace& space0, const ScalarField& f, double rel_tol = 1e-10,
                            SolveInfo* info = nullptr) {
    UCFEM_THROW_IF(!space0.dirichlet, InvalidArgument, "solve_poisson: space must carry the Dirichlet constraint");
    const auto A0 = assemble_stiffness(space0, space0);
    const Vector b = assemble_load_region(space0, f, RegionSet::all());
    return solve_direct(A0.matrix, b, rel_tol, info);
}

/// Discrete dual norm sup_{v in V_0h} a(u, v) / ||v||_V through the Riesz
/// representative phi in V_0h with a(phi, v) = a(u, v).
inline double hminus1_residual(const SparseMatrix& coupling, const SparseMatrix& dual_stiffness, const Vector& u,
                               double rel_tol = 1e-10) {
    const Vector r = matvec(coupling, u);
    if (r.size() == 0) return 0.0;
    const Vector phi = solve_direct(dual_stiffness, r, rel_tol);
    return std::sqrt(std::max(r.dot(phi), 0.0));
}

inline double hminus1_residual(const FeSpace& space0, const FeSpace& space, const Vector& u, double rel_tol = 1e-10) {
    UCFEM_THROW_IF(!space0.same_mesh(space), InvalidArgument, "hminus1_residual: spaces on different meshes");
    UCFEM_THROW_IF(u.size() != space.n_dofs, InvalidArgument, "hminus1_residual: size mismatch");
    return hminus1_residual(assemble_stiffness(space0, space).matrix, assemble_stiffness(space0, space0).matrix, u,
                            rel_tol);
}

/// |[u; -z]^T K [u; z] - |||(u, z)|||^2| / |||(u, z)|||^2 (0 when both vanish).
inline double positivity_deviation(const UcSystem& s, const Vector& u, const Vector& z) {
    Vector x(u.size() + z.size()), y(u.size() + z.size());
    x << u, z;
    y << u, -z;
    const double lhs = y.dot(matvec(s.saddle, x));
    const double tn = triple_norm(u, z, s.stabilization.total, s.mass_omega, s.dual_stiffness);
    const double rhs = tn * tn;
    if (rhs == 0.0) return std::abs(lhs);
    return std::abs(lhs - rhs) / rhs;
}

/// Max positivity deviation over seeded uniform(-1, 1) pairs (u, z).
inline double verify_positivity(const UcSystem& s, int trials, std::uint64_t seed) {
    UCFEM_THROW_IF(trials < 1, InvalidArgument, "verify_positivity: trials >= 1 required");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
        Vector u(s.primal.n_dofs), z(s.dual.n_dofs);
        for (auto& v : u) v = dist(rng);
        for (auto& v : z) v = dist(rng);
        worst = std::max(worst, positivity_deviation(s, u, z));
    }
    return worst;
}

inline double verify_positivity(std::shared_ptr<const Mesh> mesh, int k, int trials, std::uint64_t seed) {
    return verify_positivity(assemble_uc_system(std::move(mesh), k), trials, seed);
}

/// v -> A_h[(u_I - u_h, -z_h), (v, 0)] - scale^{2k} (u_I, v) + (delta q + u - u_I, v)_omega on every
/// basis direction of V_h. Algebraically this equals the jump and Laplacian parts of s applied to u_I.
inline Vector consistency_residual(const UcSolution& sol, const UcProblem& problem) {
    const UcSystem& s = *sol.system;
    const FeSpace& V = s.primal;
    const Vector uI = interpolate_nodal(V, problem.exact.field().value);
    const Vector e = uI - sol.u;
    Vector r = matvec(s.stabilization.total.matrix, e) + matvec(s.mass_omega.matrix, e) -
               transpose_matvec(s.coupling.matrix, sol.z);
    r -= matvec(s.stabilization.tikhonov, uI);
    // The data load already holds (q + delta q, v)_omega with q = u on omega.
    r += sol.rhs.head(V.n_dofs);
    r -= matvec(s.mass_omega.matrix, uI);
    return r;
}

}  // namespace ucfem
