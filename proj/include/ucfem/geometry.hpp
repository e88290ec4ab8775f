#pragma once

#include <array>
#include <cmath>
#include <string>

#include "error.hpp"

namespace ucfem {

using Point = std::array<double, 2>;

/// Concentric radii r1 < r2 < r3: data disk omega = B(r1), target disk
/// B = B(r2) and computational domain Omega = B(r3).
struct Geometry {
    double r1 = 0.25;
    double r2 = 0.5;
    double r3 = 1.0;
    int dim = 2;

    /// Empty string when valid, otherwise the first violated constraint.
    [[nodiscard]] std::string violation() const {
        if (!(std::isfinite(r1) && std::isfinite(r2) && std::isfinite(r3))) return "radii must be finite";
        if (!(r1 > 0.0)) return "0 < r1 violated";
        if (!(r1 < r2)) return "r1 < r2 violated";
        if (!(r2 < r3)) return "r2 < r3 violated";
        if (dim != 2 && dim != 3) return "dim in {2,3} violated";
        return {};
    }

    void validate() const {
        const auto v = violation();
        UCFEM_THROW_IF(!v.empty(), InvalidArgument, "geometry: " + v);
    }

    [[nodiscard]] double radius(int ring) const {
        switch (ring) {
            case 1: return r1;
            case 2: return r2;
            case 3: return r3;
            default: throw InvalidArgument("geometry: ring index must be 1, 2 or 3");
        }
    }

    friend bool operator==(const Geometry&, const Geometry&) = default;
};

inline double norm(const Point& p) { return std::hypot(p[0], p[1]); }

}  // namespace ucfem
