#pragma once

#include <array>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "error.hpp"
#include "mesh.hpp"

namespace ucfem {

using Vector = Eigen::VectorXd;
using ScalarField = std::function<double(const Point&)>;
using Gradient = std::array<double, 2>;

/// Affine element data: area and gradients of the barycentric coordinates.
struct ElementGeometry {
    std::array<Point, 3> corners;
    double area = 0.0;
    double diameter = 0.0;
    std::array<Gradient, 3> grad_lambda;

    explicit ElementGeometry(const std::array<Point, 3>& p) : corners(p) {
        area = detail::signed_area(p[0], p[1], p[2]);
        diameter = detail::longest_edge(p);
        const double inv = 1.0 / (2.0 * area);
        for (std::size_t i = 0; i < 3; ++i) {
            const Point& b = p[(i + 1) % 3];
            const Point& c = p[(i + 2) % 3];
            grad_lambda[i] = {(b[1] - c[1]) * inv, (c[0] - b[0]) * inv};
        }
    }

    [[nodiscard]] Point map(const std::array<double, 3>& l) const {
        return {l[0] * corners[0][0] + l[1] * corners[1][0] + l[2] * corners[2][0],
                l[0] * corners[0][1] + l[1] * corners[1][1] + l[2] * corners[2][1]};
    }

    /// Barycentric coordinates of a physical point (valid outside the element too).
    [[nodiscard]] std::array<double, 3> barycentric(const Point& x) const {
        std::array<double, 3> l{};
        for (std::size_t i = 0; i < 3; ++i) {
            const Point& a = corners[(i + 1) % 3];
            l[i] = (x[0] - a[0]) * grad_lambda[i][0] + (x[1] - a[1]) * grad_lambda[i][1];
        }
        return l;
    }
};

inline double dot(const Gradient& a, const Gradient& b) { return a[0] * b[0] + a[1] * b[1]; }

/// Local nodes of P2: vertices 0-2, then the midpoints of edges (0,1), (1,2), (2,0).
inline constexpr std::array<std::array<int, 2>, 3> kEdgeNodes{{{0, 1}, {1, 2}, {2, 0}}};

inline int nodes_per_element(int k) { return k == 1 ? 3 : 6; }

/// Values of the local Lagrange basis at barycentric point `l`.
inline void basis_values(int k, const std::array<double, 3>& l, std::array<double, 6>& out) {
    if (k == 1) {
        out = {l[0], l[1], l[2], 0.0, 0.0, 0.0};
        return;
    }
    for (std::size_t i = 0; i < 3; ++i) out[i] = l[i] * (2.0 * l[i] - 1.0);
    for (std::size_t e = 0; e < 3; ++e) {
        const auto [a, b] = kEdgeNodes[e];
        out[3 + e] = 4.0 * l[static_cast<std::size_t>(a)] * l[static_cast<std::size_t>(b)];
    }
}

/// Physical gradients of the local basis at barycentric point `l`.
inline void basis_gradients(int k, const ElementGeometry& g, const std::array<double, 3>& l,
                            std::array<Gradient, 6>& out) {
    const auto& gl = g.grad_lambda;
    if (k == 1) {
        out = {gl[0], gl[1], gl[2], Gradient{}, Gradient{}, Gradient{}};
        return;
    }
    for (std::size_t i = 0; i < 3; ++i) {
        const double s = 4.0 * l[i] - 1.0;
        out[i] = {s * gl[i][0], s * gl[i][1]};
    }
    for (std::size_t e = 0; e < 3; ++e) {
        const auto a = static_cast<std::size_t>(kEdgeNodes[e][0]);
        const auto b = static_cast<std::size_t>(kEdgeNodes[e][1]);
        out[3 + e] = {4.0 * (l[a] * gl[b][0] + l[b] * gl[a][0]), 4.0 * (l[a] * gl[b][1] + l[b] * gl[a][1])};
    }
}

/// Element-constant Laplacians of the local basis (all zero for k = 1).
inline std::array<double, 6> basis_laplacians(int k, const ElementGeometry& g) {
    std::array<double, 6> out{};
    if (k == 1) return out;
    const auto& gl = g.grad_lambda;
    for (std::size_t i = 0; i < 3; ++i) out[i] = 4.0 * dot(gl[i], gl[i]);
    for (std::size_t e = 0; e < 3; ++e) {
        const auto a = static_cast<std::size_t>(kEdgeNodes[e][0]);
        const auto b = static_cast<std::size_t>(kEdgeNodes[e][1]);
        out[3 + e] = 8.0 * dot(gl[a], gl[b]);
    }
    return out;
}

/// Continuous Lagrange space of order k on a mesh, optionally with the degrees
/// of freedom on the boundary polygon removed (homogeneous Dirichlet).
///
/// Geometric nodes are numbered vertices first, then edges (node nv + e).
struct FeSpace {
    std::shared_ptr<const Mesh> mesh;
    int k = 1;
    bool dirichlet = false;
    int n_dofs = 0;
    /// Per element, nodes_per_element(k) global dofs; -1 marks an eliminated dof.
    std::vector<int> dof_map;
    std::vector<Point> dof_coords;
    std::vector<int> node_to_dof;
    std::vector<int> dof_to_node;
    /// Geometric nodes removed by the Dirichlet constraint.
    std::vector<int> eliminated_nodes;

    [[nodiscard]] int local_size() const { return nodes_per_element(k); }

    [[nodiscard]] std::span<const int> element_dofs(std::size_t t) const {
        const auto n = static_cast<std::size_t>(local_size());
        return {dof_map.data() + t * n, n};
    }

    [[nodiscard]] bool same_mesh(const FeSpace& other) const { return mesh == other.mesh; }
};

inline FeSpace build_space(std::shared_ptr<const Mesh> mesh, int k, bool dirichlet) {
    UCFEM_THROW_IF(!mesh, InvalidArgument, "build_space: null mesh");
    UCFEM_THROW_IF(k != 1 && k != 2, InvalidArgument, "build_space: unsupported order k = " + std::to_string(k));
    FeSpace s;
    s.mesh = mesh;
    s.k = k;
    s.dirichlet = dirichlet;

    const std::size_t nv = mesh->vertices.size();
    const std::size_t n_nodes = k == 1 ? nv : nv + mesh->edges.size();
    std::vector<char> boundary(n_nodes, 0);
    for (int v : mesh->boundary_vertices) boundary[static_cast<std::size_t>(v)] = 1;
    if (k == 2)
        for (std::size_t e = 0; e < mesh->edges.size(); ++e)
            if (mesh->is_boundary_edge(static_cast<int>(e))) boundary[nv + e] = 1;

    s.node_to_dof.assign(n_nodes, -1);
    for (std::size_t node = 0; node < n_nodes; ++node) {
        if (dirichlet && boundary[node]) {
            s.eliminated_nodes.push_back(static_cast<int>(node));
            continue;
        }
        s.node_to_dof[node] = s.n_dofs++;
        s.dof_to_node.push_back(static_cast<int>(node));
        if (node < nv) {
            s.dof_coords.push_back(mesh->vertices[node]);
        } else {
            const auto& e = mesh->edges[node - nv];
            const Point& a = mesh->vertices[static_cast<std::size_t>(e[0])];
            const Point& b = mesh->vertices[static_cast<std::size_t>(e[1])];
            s.dof_coords.push_back({0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])});
        }
    }

    const auto per = static_cast<std::size_t>(s.local_size());
    s.dof_map.resize(mesh->triangles.size() * per);
    for (std::size_t t = 0; t < mesh->triangles.size(); ++t) {
        for (std::size_t i = 0; i < 3; ++i)
            s.dof_map[t * per + i] = s.node_to_dof[static_cast<std::size_t>(mesh->triangles[t][i])];
        if (k == 2)
            for (std::size_t e = 0; e < 3; ++e)
                s.dof_map[t * per + 3 + e] = s.node_to_dof[nv + static_cast<std::size_t>(mesh->triangle_edges[t][e])];
    }
    return s;
}

/// Coefficients f(dof_coords). Exact for polynomials of degree <= k on straight elements.
inline Vector interpolate_nodal(const FeSpace& space, const ScalarField& f) {
    Vector out(space.n_dofs);
    for (int i = 0; i < space.n_dofs; ++i) out[i] = f(space.dof_coords[static_cast<std::size_t>(i)]);
    return out;
}

/// Lifts a Dirichlet-space vector into the unconstrained space of the same mesh and order,
/// with zeros at eliminated nodes.
inline Vector extend_by_zero(const FeSpace& constrained, const FeSpace& full, const Vector& x) {
    UCFEM_THROW_IF(!constrained.same_mesh(full) || constrained.k != full.k || full.dirichlet, InvalidArgument,
                   "extend_by_zero: incompatible spaces");
    Vector out = Vector::Zero(full.n_dofs);
    for (int i = 0; i < constrained.n_dofs; ++i)
        out[full.node_to_dof[static_cast<std::size_t>(constrained.dof_to_node[static_cast<std::size_t>(i)])]] = x[i];
    return out;
}

}  // namespace ucfem
