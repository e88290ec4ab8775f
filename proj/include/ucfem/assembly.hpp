#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "fe_space.hpp"
#include "quadrature.hpp"
#include "sparse.hpp"

namespace ucfem {

enum class FormRole { Stiffness, MassRegion, Stab, Load };

/// Assembled bilinear form together with the spaces it maps between.
struct FormMatrix {
    SparseMatrix matrix;
    FormRole role = FormRole::Stiffness;
    bool row_dirichlet = false;
    bool col_dirichlet = false;
};

namespace detail {

inline void require_compatible(const FeSpace& a, const FeSpace& b, const char* who) {
    UCFEM_THROW_IF(!a.same_mesh(b), InvalidArgument, std::string(who) + ": spaces live on different meshes");
    UCFEM_THROW_IF(a.k != b.k, InvalidArgument, std::string(who) + ": spaces have different orders");
}

/// Scatters a symmetric local matrix (row-major, n x n) into triplets.
inline void scatter(std::span<const int> rows, std::span<const int> cols, const std::array<double, 36>& local,
                    std::size_t n, std::vector<Triplet>& out) {
    for (std::size_t a = 0; a < n; ++a) {
        if (rows[a] < 0) continue;
        for (std::size_t b = 0; b < n; ++b)
            if (cols[b] >= 0) out.push_back({rows[a], cols[b], local[a * n + b]});
    }
}

inline std::vector<Triplet> stiffness_triplets(const FeSpace& row, const FeSpace& col) {
    const Mesh& mesh = *row.mesh;
    const auto& rule = triangle_rule_degree4();
    const auto n = static_cast<std::size_t>(row.local_size());
    std::vector<Triplet> out;
    out.reserve(mesh.triangles.size() * n * n);
    std::array<Gradient, 6> grads{};
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const ElementGeometry g(mesh.corners(t));
        std::array<double, 36> local{};
        for (std::size_t q = 0; q < rule.size(); ++q) {
            basis_gradients(row.k, g, rule.points[q], grads);
            const double w = 2.0 * g.area * rule.weights[q];
            for (std::size_t a = 0; a < n; ++a)
                for (std::size_t b = a; b < n; ++b) local[a * n + b] += w * dot(grads[a], grads[b]);
        }
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < a; ++b) local[a * n + b] = local[b * n + a];
        scatter(row.element_dofs(t), col.element_dofs(t), local, n, out);
    }
    return out;
}

inline std::vector<Triplet> mass_triplets(const FeSpace& space, RegionSet region, double scale) {
    const Mesh& mesh = *space.mesh;
    const auto& rule = triangle_rule_degree4();
    const auto n = static_cast<std::size_t>(space.local_size());
    std::vector<Triplet> out;
    std::array<double, 6> phi{};
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        if (!region.contains(mesh.tags[t])) continue;
        const ElementGeometry g(mesh.corners(t));
        std::array<double, 36> local{};
        for (std::size_t q = 0; q < rule.size(); ++q) {
            basis_values(space.k, rule.points[q], phi);
            const double w = scale * 2.0 * g.area * rule.weights[q];
            for (std::size_t a = 0; a < n; ++a)
                for (std::size_t b = a; b < n; ++b) local[a * n + b] += w * phi[a] * phi[b];
        }
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < a; ++b) local[a * n + b] = local[b * n + a];
        scatter(space.element_dofs(t), space.element_dofs(t), local, n, out);
    }
    return out;
}

/// sum_T h_T^2 (Delta u, Delta v)_T; empty for k = 1.
inline std::vector<Triplet> laplacian_triplets(const FeSpace& space) {
    std::vector<Triplet> out;
    if (space.k == 1) return out;
    const Mesh& mesh = *space.mesh;
    const auto n = static_cast<std::size_t>(space.local_size());
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const ElementGeometry g(mesh.corners(t));
        const auto lap = basis_laplacians(space.k, g);
        const double w = g.diameter * g.diameter * g.area;
        std::array<double, 36> local{};
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = a; b < n; ++b) local[a * n + b] = local[b * n + a] = w * lap[a] * lap[b];
        scatter(space.element_dofs(t), space.element_dofs(t), local, n, out);
    }
    return out;
}

/// sum_F |F| ([grad u . n], [grad v . n])_F over interior faces, each face once.
inline std::vector<Triplet> jump_triplets(const FeSpace& space) {
    const Mesh& mesh = *space.mesh;
    const auto n = static_cast<std::size_t>(space.local_size());
    // Two-point Gauss on the face: the squared jump has degree 2(k-1) <= 2.
    constexpr double gp = 0.28867513459481287;  // 0.5 / sqrt(3)
    constexpr std::array<double, 2> nodes{0.5 - gp, 0.5 + gp};
    std::vector<Triplet> out;
    out.reserve(mesh.interior_faces.size() * 4 * n * n);
    std::array<Gradient, 6> g1{}, g2{};
    for (const auto& face : mesh.interior_faces) {
        const Point& pa = mesh.vertices[static_cast<std::size_t>(face.vertices[0])];
        const Point& pb = mesh.vertices[static_cast<std::size_t>(face.vertices[1])];
        const double len = detail::distance(pa, pb);
        const auto t1 = static_cast<std::size_t>(face.left);
        const auto t2 = static_cast<std::size_t>(face.right);
        const ElementGeometry e1(mesh.corners(t1));
        const ElementGeometry e2(mesh.corners(t2));

        // Outward normal of the left element.
        Gradient normal{(pb[1] - pa[1]) / len, -(pb[0] - pa[0]) / len};
        const Point c1{(e1.corners[0][0] + e1.corners[1][0] + e1.corners[2][0]) / 3.0,
                       (e1.corners[0][1] + e1.corners[1][1] + e1.corners[2][1]) / 3.0};
        if (normal[0] * (pa[0] - c1[0]) + normal[1] * (pa[1] - c1[1]) < 0.0) normal = {-normal[0], -normal[1]};

        // Merge the two local dof lists so shared dofs get one summed coefficient.
        std::array<int, 12> dofs{};
        std::size_t m = 0;
        std::array<std::size_t, 6> slot1{}, slot2{};
        auto slot_of = [&](int dof) {
            for (std::size_t i = 0; i < m; ++i)
                if (dofs[i] == dof) return i;
            dofs[m] = dof;
            return m++;
        };
        const auto d1 = space.element_dofs(t1);
        const auto d2 = space.element_dofs(t2);
        // Eliminated dofs (-1) are kept distinct per element so their coefficients are dropped below.
        for (std::size_t a = 0; a < n; ++a) slot1[a] = d1[a] >= 0 ? slot_of(d1[a]) : (dofs[m] = -1, m++);
        for (std::size_t a = 0; a < n; ++a) slot2[a] = d2[a] >= 0 ? slot_of(d2[a]) : (dofs[m] = -1, m++);

        std::array<double, 144> local{};
        for (double s : nodes) {
            const Point x{pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])};
            basis_gradients(space.k, e1, e1.barycentric(x), g1);
            basis_gradients(space.k, e2, e2.barycentric(x), g2);
            std::array<double, 12> jump{};
            for (std::size_t a = 0; a < n; ++a) {
                jump[slot1[a]] += dot(g1[a], normal);
                jump[slot2[a]] -= dot(g2[a], normal);
            }
            const double w = len * 0.5 * len;  // face weight |F| times Gauss weight times |F|
            for (std::size_t a = 0; a < m; ++a)
                for (std::size_t b = a; b < m; ++b) local[a * 12 + b] += w * jump[a] * jump[b];
        }
        for (std::size_t a = 0; a < m; ++a) {
            if (dofs[a] < 0) continue;
            for (std::size_t b = 0; b < m; ++b) {
                if (dofs[b] < 0) continue;
                out.push_back({dofs[a], dofs[b], a <= b ? local[a * 12 + b] : local[b * 12 + a]});
            }
        }
    }
    return out;
}

}  // namespace detail

/// (i, j) = a(phi_j, psi_i) with rows from `row` and columns from `col`.
inline FormMatrix assemble_stiffness(const FeSpace& row, const FeSpace& col) {
    detail::require_compatible(row, col, "assemble_stiffness");
    return {SparseMatrix::from_triplets(row.n_dofs, col.n_dofs, detail::stiffness_triplets(row, col)),
            FormRole::Stiffness, row.dirichlet, col.dirichlet};
}

inline FormMatrix assemble_region_mass(const FeSpace& space, RegionSet region) {
    UCFEM_THROW_IF(region.empty(), InvalidArgument, "assemble_region_mass: empty region");
    return {SparseMatrix::from_triplets(space.n_dofs, space.n_dofs, detail::mass_triplets(space, region, 1.0)),
            FormRole::MassRegion, space.dirichlet, space.dirichlet};
}

/// The three positive semidefinite parts of the stabilization and their sum.
struct Stabilization {
    SparseMatrix laplacian;
    SparseMatrix jump;
    SparseMatrix tikhonov;
    FormMatrix total;
};

inline Stabilization assemble_stabilization_parts(const FeSpace& space, double tikhonov_scale) {
    UCFEM_THROW_IF(!(tikhonov_scale > 0.0), InvalidArgument, "assemble_stabilization: tikhonov_scale must be > 0");
    const int n = space.n_dofs;
    auto lap = detail::laplacian_triplets(space);
    auto jump = detail::jump_triplets(space);
    auto tik = detail::mass_triplets(space, RegionSet::all(), std::pow(tikhonov_scale, 2 * space.k));
    std::vector<Triplet> all;
    all.reserve(lap.size() + jump.size() + tik.size());
    all.insert(all.end(), lap.begin(), lap.end());
    all.insert(all.end(), jump.begin(), jump.end());
    all.insert(all.end(), tik.begin(), tik.end());
    Stabilization s;
    s.laplacian = SparseMatrix::from_triplets(n, n, std::move(lap));
    s.jump = SparseMatrix::from_triplets(n, n, std::move(jump));
    s.tikhonov = SparseMatrix::from_triplets(n, n, std::move(tik));
    s.total = {SparseMatrix::from_triplets(n, n, std::move(all)), FormRole::Stab, space.dirichlet, space.dirichlet};
    return s;
}

/// s(u, v) = sum_T h_T^2 (Delta u, Delta v)_T + sum_F |F| ([du/dn], [dv/dn])_F + scale^{2k} (u, v)_Omega.
inline FormMatrix assemble_stabilization(const FeSpace& space, double tikhonov_scale) {
    return assemble_stabilization_parts(space, tikhonov_scale).total;
}

/// (g, phi_i) over the tagged elements.
inline Vector assemble_load_region(const FeSpace& space, const ScalarField& g, RegionSet region) {
    const Mesh& mesh = *space.mesh;
    const auto& rule = triangle_rule_degree4();
    const auto n = static_cast<std::size_t>(space.local_size());
    Vector out = Vector::Zero(space.n_dofs);
    std::array<double, 6> phi{};
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        if (!region.contains(mesh.tags[t])) continue;
        const ElementGeometry geo(mesh.corners(t));
        const auto dofs = space.element_dofs(t);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            basis_values(space.k, rule.points[q], phi);
            const double w = 2.0 * geo.area * rule.weights[q] * g(geo.map(rule.points[q]));
            for (std::size_t a = 0; a < n; ++a)
                if (dofs[a] >= 0) out[dofs[a]] += w * phi[a];
        }
    }
    return out;
}

/// Exact field with gradient, for error evaluation.
struct ExactField {
    ScalarField value;
    std::function<Gradient(const Point&)> gradient;
};

struct ErrorNorms {
    double l2 = 0.0;
    double h1_semi = 0.0;
};

/// ||u - u_h|| over the tagged elements, with a 49-point rule per element.
inline ErrorNorms error_norms(const FeSpace& space, const Vector& coeffs, const ExactField& exact, RegionSet region) {
    UCFEM_THROW_IF(coeffs.size() != space.n_dofs, InvalidArgument, "error_norms: coefficient size mismatch");
    static const QuadratureRule rule = collapsed_gauss_rule<7>();
    const Mesh& mesh = *space.mesh;
    const auto n = static_cast<std::size_t>(space.local_size());
    std::array<double, 6> phi{};
    std::array<Gradient, 6> grads{};
    double l2 = 0.0, h1 = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        if (!region.contains(mesh.tags[t])) continue;
        const ElementGeometry g(mesh.corners(t));
        const auto dofs = space.element_dofs(t);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const auto& l = rule.points[q];
            basis_values(space.k, l, phi);
            basis_gradients(space.k, g, l, grads);
            double uh = 0.0;
            Gradient guh{};
            for (std::size_t a = 0; a < n; ++a) {
                if (dofs[a] < 0) continue;
                const double c = coeffs[dofs[a]];
                uh += c * phi[a];
                guh[0] += c * grads[a][0];
                guh[1] += c * grads[a][1];
            }
            const Point x = g.map(l);
            const double w = 2.0 * g.area * rule.weights[q];
            const double e = exact.value ? exact.value(x) - uh : -uh;
            Gradient ge{-guh[0], -guh[1]};
            if (exact.gradient) {
                const auto gu = exact.gradient(x);
                ge = {gu[0] - guh[0], gu[1] - guh[1]};
            }
            l2 += w * e * e;
            h1 += w * dot(ge, ge);
        }
    }
    return {std::sqrt(l2), std::sqrt(h1)};
}

/// |||(u, z)||| = sqrt(u^T S u + z^T A0 z + u^T M_omega u).
inline double triple_norm(const Vector& u, const Vector& z, const FormMatrix& S, const FormMatrix& M_omega,
                          const FormMatrix& A0) {
    UCFEM_THROW_IF(u.size() != S.matrix.rows() || u.size() != M_omega.matrix.rows() || z.size() != A0.matrix.rows(),
                   InvalidArgument, "triple_norm: dimension mismatch");
    const double sq = bilinear(S.matrix, u, u) + bilinear(A0.matrix, z, z) + bilinear(M_omega.matrix, u, u);
    return std::sqrt(std::max(sq, 0.0));
}

}  // namespace ucfem
