#pragma once

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "mesh.hpp"

namespace ucfem {

/// Writes `mesh v1 <nv> <nt>`, then `v x y` lines, then `t i j k tag` lines.
/// Coordinates use 17 significant digits so a read back is exact.
inline void write_mesh(std::ostream& out, const Mesh& mesh) {
    out << "mesh v1 " << mesh.vertices.size() << ' ' << mesh.triangles.size() << '\n';
    char buf[96];
    for (const auto& p : mesh.vertices) {
        std::snprintf(buf, sizeof buf, "v %.17g %.17g\n", p[0], p[1]);
        out << buf;
    }
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        out << "t " << tri[0] << ' ' << tri[1] << ' ' << tri[2] << ' ' << static_cast<int>(mesh.tags[t]) << '\n';
    }
}

/// Reads the format produced by write_mesh. The file carries no ring data, so
/// vertices within 1e-12 (relative) of a geometry circle are re-attached to it.
/// The refinement level is not stored and reads back as 0.
inline Mesh read_mesh(std::istream& in, const Geometry& geometry) {
    geometry.validate();
    std::string line;
    int line_no = 0;
    auto next = [&]() -> std::istringstream {
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.find_first_not_of(" \t\r") != std::string::npos) return std::istringstream(line);
        }
        throw InvalidArgument("read_mesh: unexpected end of input after line " + std::to_string(line_no));
    };
    auto fail = [&](const std::string& what) {
        throw InvalidArgument("read_mesh: line " + std::to_string(line_no) + ": " + what);
    };

    std::size_t nv = 0, nt = 0;
    {
        auto ls = next();
        std::string magic, version;
        if (!(ls >> magic >> version >> nv >> nt) || magic != "mesh" || version != "v1") fail("bad header");
    }
    std::vector<Point> verts(nv);
    std::vector<int> ring(nv, 0);
    for (std::size_t i = 0; i < nv; ++i) {
        auto ls = next();
        std::string key;
        if (!(ls >> key >> verts[i][0] >> verts[i][1]) || key != "v") fail("expected vertex line");
        for (int r = 1; r <= 3; ++r)
            if (std::abs(norm(verts[i]) - geometry.radius(r)) <= 1e-12 * geometry.radius(r)) ring[i] = r;
    }
    std::vector<Triangle> tris(nt);
    std::vector<Region> tags(nt);
    for (std::size_t t = 0; t < nt; ++t) {
        auto ls = next();
        std::string key;
        int tag = -1;
        if (!(ls >> key >> tris[t][0] >> tris[t][1] >> tris[t][2] >> tag) || key != "t") fail("expected triangle line");
        if (tag < 0 || tag > 2) fail("region tag must be 0, 1 or 2");
        tags[t] = static_cast<Region>(tag);
    }
    return make_mesh(std::move(verts), std::move(tris), std::move(tags), std::move(ring), 0);
}

}  // namespace ucfem
