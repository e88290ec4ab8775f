#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <tuple>
#include <vector>

#include "error.hpp"
#include "geometry.hpp"

namespace ucfem {

/// Ring band a triangle was created in.
enum class Region : std::uint8_t {
    OmegaData = 0,      ///< inside the polygonal r1 circle
    TargetAnnulus = 1,  ///< between r1 and r2
    OuterAnnulus = 2,   ///< between r2 and r3
};

/// Small bitmask over Region values.
class RegionSet {
public:
    constexpr RegionSet() = default;
    constexpr RegionSet(std::initializer_list<Region> regions) {
        for (auto r : regions) bits_ |= bit(r);
    }

    [[nodiscard]] static constexpr RegionSet all() {
        return {Region::OmegaData, Region::TargetAnnulus, Region::OuterAnnulus};
    }
    /// Tagged realization of omega = B(r1).
    [[nodiscard]] static constexpr RegionSet omega() { return {Region::OmegaData}; }
    /// Tagged realization of the target disk B = B(r2).
    [[nodiscard]] static constexpr RegionSet target() { return {Region::OmegaData, Region::TargetAnnulus}; }
    /// Elements inside the polygonal circle of ring 1, 2 or 3.
    [[nodiscard]] static RegionSet disk(int ring) {
        switch (ring) {
            case 1: return omega();
            case 2: return target();
            case 3: return all();
            default: throw InvalidArgument("RegionSet::disk: ring must be 1, 2 or 3");
        }
    }

    [[nodiscard]] constexpr bool contains(Region r) const { return (bits_ & bit(r)) != 0; }
    [[nodiscard]] constexpr bool empty() const { return bits_ == 0; }
    friend constexpr bool operator==(RegionSet, RegionSet) = default;

private:
    static constexpr std::uint8_t bit(Region r) { return static_cast<std::uint8_t>(1u << static_cast<unsigned>(r)); }
    std::uint8_t bits_ = 0;
};

using Triangle = std::array<int, 3>;
using Edge = std::array<int, 2>;

struct InteriorFace {
    Edge vertices;  ///< sorted vertex pair
    int left;       ///< triangle with the smaller index
    int right;
};

/// Conforming triangulation of the polygonal disk with per-element region tags.
///
/// Vertex `ring` records which circle (1, 2, 3) a vertex was placed on, 0 for
/// vertices strictly between circles. Edge `e` of triangle `t` joins local
/// vertices `e` and `(e + 1) % 3`; `triangle_edges[t][e]` is its global index.
struct Mesh {
    std::vector<Point> vertices;
    std::vector<Triangle> triangles;
    std::vector<Region> tags;
    std::vector<int> vertex_ring;

    std::vector<Edge> edges;
    std::vector<std::array<int, 2>> edge_triangles;  ///< second entry -1 on the boundary
    std::vector<std::array<int, 3>> triangle_edges;
    std::vector<InteriorFace> interior_faces;
    std::vector<int> boundary_vertices;

    int level = 0;
    double h = 0.0;

    [[nodiscard]] std::size_t num_vertices() const { return vertices.size(); }
    [[nodiscard]] std::size_t num_triangles() const { return triangles.size(); }
    [[nodiscard]] bool is_boundary_edge(int e) const { return edge_triangles[static_cast<std::size_t>(e)][1] < 0; }

    [[nodiscard]] std::array<Point, 3> corners(std::size_t t) const {
        const auto& tri = triangles[t];
        return {vertices[static_cast<std::size_t>(tri[0])], vertices[static_cast<std::size_t>(tri[1])],
                vertices[static_cast<std::size_t>(tri[2])]};
    }
};

namespace detail {

inline double signed_area(const Point& a, const Point& b, const Point& c) {
    return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
}

inline double distance(const Point& a, const Point& b) { return std::hypot(b[0] - a[0], b[1] - a[1]); }

inline double longest_edge(const std::array<Point, 3>& p) {
    return std::max({distance(p[0], p[1]), distance(p[1], p[2]), distance(p[2], p[0])});
}

/// Fills edges, adjacency, interior faces, boundary vertices and h.
/// Edges are numbered in order of first appearance (triangle order, then local edge).
/// Edges shared by more than two triangles keep only the first two; validate() reports them.
inline void build_topology(Mesh& m) {
    const std::size_t nt = m.triangles.size();
    struct Rec {
        Edge key;
        int tri;
        int local;
    };
    std::vector<Rec> recs;
    recs.reserve(3 * nt);
    for (std::size_t t = 0; t < nt; ++t) {
        for (int e = 0; e < 3; ++e) {
            int a = m.triangles[t][static_cast<std::size_t>(e)];
            int b = m.triangles[t][static_cast<std::size_t>((e + 1) % 3)];
            if (a > b) std::swap(a, b);
            recs.push_back({{a, b}, static_cast<int>(t), e});
        }
    }
    std::vector<std::size_t> order(recs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return recs[x].key < recs[y].key; });

    // Group identical keys; the group's first record (in triangle order) fixes numbering.
    std::vector<int> group_of(recs.size(), -1);
    std::vector<std::size_t> group_first;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (i == 0 || recs[order[i]].key != recs[order[i - 1]].key) group_first.push_back(order[i]);
        group_of[order[i]] = static_cast<int>(group_first.size() - 1);
    }
    std::vector<int> first_rank(group_first.size());
    {
        std::vector<std::size_t> groups(group_first.size());
        for (std::size_t g = 0; g < groups.size(); ++g) groups[g] = g;
        std::sort(groups.begin(), groups.end(),
                  [&](std::size_t x, std::size_t y) { return group_first[x] < group_first[y]; });
        for (std::size_t r = 0; r < groups.size(); ++r) first_rank[groups[r]] = static_cast<int>(r);
    }

    m.edges.assign(group_first.size(), Edge{-1, -1});
    m.edge_triangles.assign(group_first.size(), {-1, -1});
    m.triangle_edges.assign(nt, {-1, -1, -1});
    for (std::size_t i = 0; i < recs.size(); ++i) {
        const int e = first_rank[static_cast<std::size_t>(group_of[i])];
        auto& adj = m.edge_triangles[static_cast<std::size_t>(e)];
        m.edges[static_cast<std::size_t>(e)] = recs[i].key;
        m.triangle_edges[static_cast<std::size_t>(recs[i].tri)][static_cast<std::size_t>(recs[i].local)] = e;
        if (adj[0] < 0) {
            adj[0] = recs[i].tri;
        } else if (adj[1] < 0) {
            adj[1] = recs[i].tri;
        }
    }

    m.interior_faces.clear();
    std::vector<char> on_boundary(m.vertices.size(), 0);
    for (std::size_t e = 0; e < m.edges.size(); ++e) {
        const auto& adj = m.edge_triangles[e];
        if (adj[1] >= 0) {
            m.interior_faces.push_back({m.edges[e], std::min(adj[0], adj[1]), std::max(adj[0], adj[1])});
        } else {
            on_boundary[static_cast<std::size_t>(m.edges[e][0])] = 1;
            on_boundary[static_cast<std::size_t>(m.edges[e][1])] = 1;
        }
    }
    m.boundary_vertices.clear();
    for (std::size_t v = 0; v < on_boundary.size(); ++v)
        if (on_boundary[v]) m.boundary_vertices.push_back(static_cast<int>(v));

    m.h = 0.0;
    for (std::size_t t = 0; t < nt; ++t) m.h = std::max(m.h, longest_edge(m.corners(t)));
}

}  // namespace detail

/// Assembles a mesh from raw arrays and derives its topology.
inline Mesh make_mesh(std::vector<Point> vertices, std::vector<Triangle> triangles, std::vector<Region> tags,
                      std::vector<int> vertex_ring = {}, int level = 0) {
    UCFEM_THROW_IF(tags.size() != triangles.size(), InvalidArgument, "make_mesh: one tag per triangle required");
    for (const auto& t : triangles)
        for (int v : t)
            UCFEM_THROW_IF(v < 0 || static_cast<std::size_t>(v) >= vertices.size(), InvalidArgument,
                           "make_mesh: vertex index out of range");
    if (vertex_ring.empty()) vertex_ring.assign(vertices.size(), 0);
    UCFEM_THROW_IF(vertex_ring.size() != vertices.size(), InvalidArgument, "make_mesh: ring size mismatch");
    Mesh m;
    m.vertices = std::move(vertices);
    m.triangles = std::move(triangles);
    m.tags = std::move(tags);
    m.vertex_ring = std::move(vertex_ring);
    m.level = level;
    detail::build_topology(m);
    return m;
}

/// Red refinement: every triangle splits into four through its edge midpoints.
/// Midpoints of edges whose endpoints sit on the same circle are projected back
/// onto that circle. Children inherit the parent's tag.
inline Mesh refine_uniform(const Mesh& mesh, const Geometry& geometry) {
    geometry.validate();
    UCFEM_THROW_IF(mesh.edges.empty() || mesh.triangle_edges.size() != mesh.triangles.size(), InvalidArgument,
                   "refine_uniform: mesh has no topology");
    const std::size_t nv = mesh.vertices.size();
    std::vector<Point> verts = mesh.vertices;
    std::vector<int> ring = mesh.vertex_ring;
    verts.reserve(nv + mesh.edges.size());
    ring.reserve(nv + mesh.edges.size());
    for (const auto& e : mesh.edges) {
        const Point& a = mesh.vertices[static_cast<std::size_t>(e[0])];
        const Point& b = mesh.vertices[static_cast<std::size_t>(e[1])];
        Point mid{0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])};
        const int ra = mesh.vertex_ring[static_cast<std::size_t>(e[0])];
        const int rb = mesh.vertex_ring[static_cast<std::size_t>(e[1])];
        int r = 0;
        if (ra > 0 && ra == rb) {
            r = ra;
            const double s = geometry.radius(r) / norm(mid);
            mid = {mid[0] * s, mid[1] * s};
        }
        verts.push_back(mid);
        ring.push_back(r);
    }

    std::vector<Triangle> tris;
    std::vector<Region> tags;
    tris.reserve(4 * mesh.triangles.size());
    tags.reserve(4 * mesh.triangles.size());
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& v = mesh.triangles[t];
        const auto& te = mesh.triangle_edges[t];
        const int m01 = static_cast<int>(nv) + te[0];
        const int m12 = static_cast<int>(nv) + te[1];
        const int m20 = static_cast<int>(nv) + te[2];
        tris.push_back({v[0], m01, m20});
        tris.push_back({m01, v[1], m12});
        tris.push_back({m20, m12, v[2]});
        tris.push_back({m01, m12, m20});
        for (int c = 0; c < 4; ++c) tags.push_back(mesh.tags[t]);
    }
    return make_mesh(std::move(verts), std::move(tris), std::move(tags), std::move(ring), mesh.level + 1);
}

/// Center fan plus two triangulated annuli with vertex rings exactly at r1, r2, r3,
/// followed by `level` red refinements.
inline Mesh build_disk_mesh(const Geometry& geometry, int sectors, int level) {
    geometry.validate();
    UCFEM_THROW_IF(geometry.dim != 2, InvalidArgument, "build_disk_mesh: only dim = 2 is meshed");
    UCFEM_THROW_IF(sectors < 6 || sectors % 2 != 0, InvalidArgument, "build_disk_mesh: sectors must be even and >= 6");
    UCFEM_THROW_IF(level < 0, InvalidArgument, "build_disk_mesh: level must be >= 0");

    const auto s = static_cast<std::size_t>(sectors);
    std::vector<Point> verts{{0.0, 0.0}};
    std::vector<int> ring{0};
    for (int r = 1; r <= 3; ++r) {
        const double radius = geometry.radius(r);
        for (std::size_t j = 0; j < s; ++j) {
            const double theta = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(s);
            verts.push_back({radius * std::cos(theta), radius * std::sin(theta)});
            ring.push_back(r);
        }
    }
    auto id = [s](int r, std::size_t j) { return static_cast<int>(1 + static_cast<std::size_t>(r - 1) * s + j % s); };

    std::vector<Triangle> tris;
    std::vector<Region> tags;
    for (std::size_t j = 0; j < s; ++j) {
        tris.push_back({0, id(1, j), id(1, j + 1)});
        tags.push_back(Region::OmegaData);
    }
    for (int r = 1; r <= 2; ++r) {
        const Region tag = r == 1 ? Region::TargetAnnulus : Region::OuterAnnulus;
        for (std::size_t j = 0; j < s; ++j) {
            tris.push_back({id(r, j), id(r + 1, j), id(r + 1, j + 1)});
            tris.push_back({id(r, j), id(r + 1, j + 1), id(r, j + 1)});
            tags.push_back(tag);
            tags.push_back(tag);
        }
    }

    Mesh mesh = make_mesh(std::move(verts), std::move(tris), std::move(tags), std::move(ring), 0);
    for (int l = 0; l < level; ++l) mesh = refine_uniform(mesh, geometry);
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto p = mesh.corners(t);
        UCFEM_THROW_IF(!(detail::signed_area(p[0], p[1], p[2]) > 0.0), InvalidArgument,
                       "build_disk_mesh: sectors too small to keep positive areas (element " + std::to_string(t) +
                           ")");
    }
    return mesh;
}

struct MeshMetrics {
    double h = 0.0;           ///< max element diameter (longest edge)
    double h_min_elem = 0.0;  ///< min element diameter
    double shape_ratio = 0.0; ///< max over elements of diameter / inscribed-circle diameter
};

inline MeshMetrics mesh_metrics(const Mesh& mesh) {
    MeshMetrics out;
    out.h_min_elem = mesh.triangles.empty() ? 0.0 : std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto p = mesh.corners(t);
        const double diam = detail::longest_edge(p);
        const double perimeter =
            detail::distance(p[0], p[1]) + detail::distance(p[1], p[2]) + detail::distance(p[2], p[0]);
        const double inscribed = 4.0 * std::abs(detail::signed_area(p[0], p[1], p[2])) / perimeter;
        out.h = std::max(out.h, diam);
        out.h_min_elem = std::min(out.h_min_elem, diam);
        out.shape_ratio = std::max(out.shape_ratio, diam / inscribed);
    }
    return out;
}

inline double mesh_area(const Mesh& mesh, RegionSet region = RegionSet::all()) {
    double area = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        if (!region.contains(mesh.tags[t])) continue;
        const auto p = mesh.corners(t);
        area += detail::signed_area(p[0], p[1], p[2]);
    }
    return area;
}

enum class ViolationKind { Index, Orientation, Conformity, Tag, Boundary };

struct Violation {
    ViolationKind kind;
    int element;  ///< triangle index, -1 when not element specific
    std::string message;
};

struct MeshDiagnostics {
    std::vector<Violation> violations;
    double shape_ratio = 0.0;
    /// (max element diameter) / (min inscribed-circle diameter)
    double quasi_uniformity = 0.0;

    [[nodiscard]] bool ok() const { return violations.empty(); }
};

/// Checks the Mesh invariants without throwing. Topology is recomputed from the
/// triangle list, so stale or hand-edited derived fields do not hide problems.
inline MeshDiagnostics validate(const Mesh& mesh) {
    MeshDiagnostics report;
    const auto nv = static_cast<int>(mesh.vertices.size());
    if (mesh.tags.size() != mesh.triangles.size())
        report.violations.push_back({ViolationKind::Tag, -1, "tag count differs from triangle count"});

    struct Directed {
        int a, b, tri;
    };
    std::vector<Directed> half;
    double max_diam = 0.0;
    double min_inscribed = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        const int ti = static_cast<int>(t);
        bool indices_ok = true;
        for (int v : tri) {
            if (v < 0 || v >= nv) {
                report.violations.push_back({ViolationKind::Index, ti, "vertex index out of range"});
                indices_ok = false;
                break;
            }
        }
        if (!indices_ok) continue;
        if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) {
            report.violations.push_back({ViolationKind::Index, ti, "repeated vertex in triangle"});
            continue;
        }
        if (t < mesh.tags.size()) {
            const auto tag = static_cast<unsigned>(mesh.tags[t]);
            if (tag > 2) report.violations.push_back({ViolationKind::Tag, ti, "unknown region tag"});
        }
        const auto p = mesh.corners(t);
        const double area = detail::signed_area(p[0], p[1], p[2]);
        if (!(area > 0.0))
            report.violations.push_back({ViolationKind::Orientation, ti, "non-positive signed area"});
        const double perimeter =
            detail::distance(p[0], p[1]) + detail::distance(p[1], p[2]) + detail::distance(p[2], p[0]);
        const double diam = detail::longest_edge(p);
        const double inscribed = 4.0 * std::abs(area) / perimeter;
        max_diam = std::max(max_diam, diam);
        min_inscribed = std::min(min_inscribed, inscribed);
        if (inscribed > 0.0) report.shape_ratio = std::max(report.shape_ratio, diam / inscribed);
        for (int e = 0; e < 3; ++e)
            half.push_back({tri[static_cast<std::size_t>(e)], tri[static_cast<std::size_t>((e + 1) % 3)], ti});
    }
    report.quasi_uniformity = min_inscribed > 0.0 ? max_diam / min_inscribed : 0.0;

    std::sort(half.begin(), half.end(), [](const Directed& x, const Directed& y) {
        return std::tuple(std::min(x.a, x.b), std::max(x.a, x.b), x.tri) <
               std::tuple(std::min(y.a, y.b), std::max(y.a, y.b), y.tri);
    });
    const bool have_rings = mesh.vertex_ring.size() == mesh.vertices.size() &&
                            std::find(mesh.vertex_ring.begin(), mesh.vertex_ring.end(), 3) != mesh.vertex_ring.end();
    for (std::size_t i = 0; i < half.size();) {
        std::size_t j = i;
        const int lo = std::min(half[i].a, half[i].b);
        const int hi = std::max(half[i].a, half[i].b);
        while (j < half.size() && std::min(half[j].a, half[j].b) == lo && std::max(half[j].a, half[j].b) == hi) ++j;
        const std::size_t count = j - i;
        const std::string edge = "(" + std::to_string(lo) + "," + std::to_string(hi) + ")";
        if (count > 2) {
            for (std::size_t k = i; k < j; ++k)
                report.violations.push_back({ViolationKind::Conformity, half[k].tri,
                                             "face " + edge + " shared by " + std::to_string(count) + " triangles"});
        } else if (count == 2 && half[i].a == half[i + 1].a) {
            report.violations.push_back(
                {ViolationKind::Conformity, half[i + 1].tri, "face " + edge + " traversed twice in the same direction"});
        } else if (count == 1 && have_rings) {
            if (mesh.vertex_ring[static_cast<std::size_t>(lo)] != 3 || mesh.vertex_ring[static_cast<std::size_t>(hi)] != 3)
                report.violations.push_back(
                    {ViolationKind::Boundary, half[i].tri, "boundary face " + edge + " not on the outer circle"});
        }
        i = j;
    }
    return report;
}

}  // namespace ucfem
