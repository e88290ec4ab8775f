#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "../assembly.hpp"
#include "../error.hpp"
#include "../mesh.hpp"
#include "../quadrature.hpp"

namespace ucfem::analysis {

/// Which real function is taken from z^{n-1}, z = x1 + i x2. `Modulus` stands
/// for the complex-valued function itself (its L2 norm is that of |z|^{n-1}).
enum class Part { Re, Im, Modulus };

/// u = z^{n-1} (or its real / imaginary part); harmonic in 2D and, as a
/// function of (x1, x2) only, in 3D.
struct HarmonicMonomial {
    int n = 1;
    Part part = Part::Modulus;
    int dim = 2;
};

struct ValueAndGradient {
    double value = 0.0;
    Gradient gradient{};
};

namespace detail {

inline void check(const HarmonicMonomial& m) {
    UCFEM_THROW_IF(m.n < 1, InvalidArgument, "HarmonicMonomial: n >= 1 required");
    UCFEM_THROW_IF(m.dim != 2 && m.dim != 3, InvalidArgument, "HarmonicMonomial: dim must be 2 or 3");
}

/// c^p by repeated multiplication (p >= 0).
inline std::complex<double> cpow(std::complex<double> c, int p) {
    std::complex<double> r{1.0, 0.0};
    for (int i = 0; i < p; ++i) r *= c;
    return r;
}

/// log of n! by summation.
inline double log_factorial(int n) {
    double s = 0.0;
    for (int i = 2; i <= n; ++i) s += std::log(static_cast<double>(i));
    return s;
}

/// Fraction of the modulus norm carried by the chosen part (rotational averaging of cos^2 / sin^2).
inline double part_factor(const HarmonicMonomial& m) {
    switch (m.part) {
        case Part::Modulus: return 1.0;
        case Part::Re: return m.n == 1 ? 1.0 : 0.5;
        case Part::Im: return m.n == 1 ? 0.0 : 0.5;
    }
    return 1.0;
}

}  // namespace detail

/// Re or Im of z^{n-1} with gradient (Cauchy-Riemann from f' = (n-1) z^{n-2}).
inline ValueAndGradient harmonic_eval(const HarmonicMonomial& m, const Point& x) {
    detail::check(m);
    UCFEM_THROW_IF(m.part == Part::Modulus, InvalidArgument, "harmonic_eval: choose Re or Im");
    const std::complex<double> z{x[0], x[1]};
    const int p = m.n - 1;
    const std::complex<double> f = detail::cpow(z, p);
    const std::complex<double> df = p == 0 ? std::complex<double>{} : static_cast<double>(p) * detail::cpow(z, p - 1);
    if (m.part == Part::Re) return {f.real(), {df.real(), -df.imag()}};
    return {f.imag(), {df.imag(), df.real()}};
}

/// log of the constant c_n in ||z^{n-1}||^2_{L2(B(rho))} = c_n rho^{2n} (2D) or rho^{2n+1} (3D).
inline double log_norm_constant(int n, int dim) {
    if (dim == 2) return std::log(std::numbers::pi / n);
    // c_n = 2 pi^{3/2} Gamma(n) / ((2n+1) Gamma(n+1/2)),
    // Gamma(n) = (n-1)!, Gamma(n+1/2) = (2n)! sqrt(pi) / (4^n n!).
    const double log_gamma_n = detail::log_factorial(n - 1);
    const double log_gamma_half = detail::log_factorial(2 * n) + 0.5 * std::log(std::numbers::pi) -
                                  n * std::log(4.0) - detail::log_factorial(n);
    return std::log(2.0) + 1.5 * std::log(std::numbers::pi) + log_gamma_n - std::log(2.0 * n + 1.0) - log_gamma_half;
}

/// log ||u||_{L2(B(rho))} from the closed form; -inf for the vanishing Im part of n = 1.
inline double log_harmonic_norm(const HarmonicMonomial& m, double rho) {
    detail::check(m);
    UCFEM_THROW_IF(!(rho > 0.0), InvalidArgument, "harmonic norm: rho must be > 0");
    const double factor = detail::part_factor(m);
    if (factor == 0.0) return -std::numeric_limits<double>::infinity();
    const double exponent = m.dim == 2 ? 2.0 * m.n : 2.0 * m.n + 1.0;
    return 0.5 * (log_norm_constant(m.n, m.dim) + std::log(factor) + exponent * std::log(rho));
}

/// Squared L2 norm of the monomial on B(rho).
inline double harmonic_norm_closed(const HarmonicMonomial& m, double rho) {
    return std::exp(2.0 * log_harmonic_norm(m, rho));
}

/// ||u||_{B(r2)} / (||u||_{B(r1)}^a ||u||_{B(r3)}^{1-a}), evaluated in log space.
inline double three_ball_log_ratio(const HarmonicMonomial& m, const Geometry& geometry, double alpha_test) {
    geometry.validate();
    UCFEM_THROW_IF(!(alpha_test > 0.0 && alpha_test < 1.0), InvalidArgument, "three_ball_ratio: alpha in (0,1)");
    UCFEM_THROW_IF(detail::part_factor(m) == 0.0, InvalidArgument, "three_ball_ratio: monomial vanishes");
    HarmonicMonomial mm = m;
    mm.dim = geometry.dim;
    return log_harmonic_norm(mm, geometry.r2) - alpha_test * log_harmonic_norm(mm, geometry.r1) -
           (1.0 - alpha_test) * log_harmonic_norm(mm, geometry.r3);
}

inline double three_ball_ratio(const HarmonicMonomial& m, const Geometry& geometry, double alpha_test) {
    return std::exp(three_ball_log_ratio(m, geometry, alpha_test));
}

/// ||u||^2_{H^order(B(rho))} for Re/Im of z^{n-1} in 2D: the sum over all
/// multi-indices |a| <= order of ||D^a u||^2, using D^{(a,b)} f = i^b f^{(a+b)}.
inline double harmonic_sobolev_norm_sq(const HarmonicMonomial& m, int order, double rho) {
    detail::check(m);
    UCFEM_THROW_IF(m.part == Part::Modulus || m.dim != 2, InvalidArgument,
                   "harmonic_sobolev_norm: Re/Im part in 2D required");
    const int p = m.n - 1;
    double total = 0.0;
    for (int j = 0; j <= order && j <= p; ++j) {
        const int q = p - j;
        double falling = 1.0;  // p! / (p-j)!
        for (int i = 0; i < j; ++i) falling *= static_cast<double>(p - i);
        for (int b = 0; b <= j; ++b) {
            const std::complex<double> c = falling * detail::cpow(std::complex<double>{0.0, 1.0}, b);
            if (q >= 1) {
                total += std::norm(c) * 0.5 * std::numbers::pi * std::pow(rho, 2 * q + 2) / (q + 1);
            } else {
                const double part = m.part == Part::Re ? c.real() : c.imag();
                total += part * part * std::numbers::pi * rho * rho;
            }
        }
    }
    return total;
}

/// Squared L2 norm of the monomial over the exact disk B(r_ring), integrated on
/// the mesh with the ring's chords replaced by circular arcs (blended element
/// map) and a 100-point collapsed Gauss rule per element.
inline double harmonic_norm_quadrature(const Mesh& mesh, const Geometry& geometry, const HarmonicMonomial& m,
                                       int ring) {
    detail::check(m);
    UCFEM_THROW_IF(m.dim != 2, InvalidArgument, "harmonic_norm_quadrature: 2D only");
    UCFEM_THROW_IF(mesh.vertex_ring.size() != mesh.vertices.size(), InvalidArgument,
                   "harmonic_norm_quadrature: mesh lacks ring data");
    const double rho = geometry.radius(ring);
    const RegionSet region = RegionSet::disk(ring);
    static const QuadratureRule rule = collapsed_gauss_rule<10>();

    auto integrand = [&](const Point& x) {
        const std::complex<double> f = detail::cpow({x[0], x[1]}, m.n - 1);
        switch (m.part) {
            case Part::Re: return f.real() * f.real();
            case Part::Im: return f.imag() * f.imag();
            case Part::Modulus: return std::norm(f);
        }
        return 0.0;
    };

    double total = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        if (!region.contains(mesh.tags[t])) continue;
        // Rotate local numbering so a curved edge, if any, joins local vertices 1 and 2.
        auto tri = mesh.triangles[t];
        bool curved = false;
        for (int r = 0; r < 3 && !curved; ++r) {
            if (mesh.vertex_ring[static_cast<std::size_t>(tri[1])] == ring &&
                mesh.vertex_ring[static_cast<std::size_t>(tri[2])] == ring) {
                curved = true;
            } else {
                tri = {tri[1], tri[2], tri[0]};
            }
        }
        const Point v0 = mesh.vertices[static_cast<std::size_t>(tri[0])];
        const Point v1 = mesh.vertices[static_cast<std::size_t>(tri[1])];
        const Point v2 = mesh.vertices[static_cast<std::size_t>(tri[2])];
        const double th1 = std::atan2(v1[1], v1[0]);
        double dth = std::atan2(v2[1], v2[0]) - th1;
        if (dth > std::numbers::pi) dth -= 2.0 * std::numbers::pi;
        if (dth < -std::numbers::pi) dth += 2.0 * std::numbers::pi;

        for (std::size_t q = 0; q < rule.size(); ++q) {
            const double l1 = rule.points[q][1];
            const double l2 = rule.points[q][2];
            Point x{v0[0] + l1 * (v1[0] - v0[0]) + l2 * (v2[0] - v0[0]),
                    v0[1] + l1 * (v1[1] - v0[1]) + l2 * (v2[1] - v0[1])};
            std::array<double, 2> d1{v1[0] - v0[0], v1[1] - v0[1]};
            std::array<double, 2> d2{v2[0] - v0[0], v2[1] - v0[1]};
            if (curved) {
                // x = affine + s D(t), s = l1 + l2, t = l2 / s, D(t) = arc(t) - chord(t).
                const double s = l1 + l2;
                const double tt = l2 / s;
                const double th = th1 + tt * dth;
                const Point arc{rho * std::cos(th), rho * std::sin(th)};
                const std::array<double, 2> D{arc[0] - v1[0] - tt * (v2[0] - v1[0]),
                                              arc[1] - v1[1] - tt * (v2[1] - v1[1])};
                const std::array<double, 2> dD{-rho * dth * std::sin(th) - (v2[0] - v1[0]),
                                               rho * dth * std::cos(th) - (v2[1] - v1[1])};
                x = {x[0] + s * D[0], x[1] + s * D[1]};
                d1 = {d1[0] + D[0] - tt * dD[0], d1[1] + D[1] - tt * dD[1]};
                d2 = {d2[0] + D[0] + (1.0 - tt) * dD[0], d2[1] + D[1] + (1.0 - tt) * dD[1]};
            }
            const double jac = std::abs(d1[0] * d2[1] - d1[1] * d2[0]);
            total += rule.weights[q] * jac * integrand(x);
        }
    }
    return total;
}

}  // namespace ucfem::analysis
