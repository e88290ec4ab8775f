#pragma once

#include <array>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

namespace ucfem {

/// Rule on the reference triangle {(0,0),(1,0),(0,1)}. Points are barycentric
/// coordinates (l0, l1, l2); weights sum to the reference area 1/2.
struct QuadratureRule {
    std::vector<std::array<double, 3>> points;
    std::vector<double> weights;
    int exact_degree = 0;

    [[nodiscard]] std::size_t size() const { return weights.size(); }
};

/// Symmetric 6-point rule, exact for total degree 4 (Strang-Fix / Dunavant).
inline const QuadratureRule& triangle_rule_degree4() {
    static const QuadratureRule rule = [] {
        constexpr double a1 = 0.445948490915965, b1 = 1.0 - 2.0 * a1;
        constexpr double a2 = 0.091576213509771, b2 = 1.0 - 2.0 * a2;
        constexpr double w1 = 0.5 * 0.223381589678011;
        constexpr double w2 = 0.5 * 0.109951743655322;
        QuadratureRule r;
        r.points = {{b1, a1, a1}, {a1, b1, a1}, {a1, a1, b1}, {b2, a2, a2}, {a2, b2, a2}, {a2, a2, b2}};
        r.weights = {w1, w1, w1, w2, w2, w2};
        r.exact_degree = 4;
        return r;
    }();
    return rule;
}

/// Gauss-Legendre rule with N points mapped to [0, 1].
template <unsigned N>
std::vector<std::array<double, 2>> gauss_unit_interval() {
    using G = boost::math::quadrature::gauss<double, N>;
    std::vector<std::array<double, 2>> out;  // (point, weight)
    const auto& x = G::abscissa();
    const auto& w = G::weights();
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] == 0.0) {
            out.push_back({0.5, 0.5 * w[i]});
        } else {
            out.push_back({0.5 - 0.5 * x[i], 0.5 * w[i]});
            out.push_back({0.5 + 0.5 * x[i], 0.5 * w[i]});
        }
    }
    return out;
}

/// Collapsed (Duffy) tensor Gauss rule with N x N points, exact for total degree 2N - 2.
/// l1 = s (1 - t), l2 = s t, with Jacobian s.
template <unsigned N>
QuadratureRule collapsed_gauss_rule() {
    QuadratureRule r;
    const auto g = gauss_unit_interval<N>();
    for (const auto& [s, ws] : g) {
        for (const auto& [t, wt] : g) {
            const double l1 = s * (1.0 - t);
            const double l2 = s * t;
            r.points.push_back({1.0 - l1 - l2, l1, l2});
            r.weights.push_back(ws * wt * s);
        }
    }
    r.exact_degree = 2 * static_cast<int>(N) - 2;
    return r;
}

}  // namespace ucfem
