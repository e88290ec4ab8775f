#pragma once

#include <cmath>
#include <vector>

#include "../error.hpp"

namespace ucfem::analysis {

struct RatePoint {
    int level = 0;
    double h = 0.0;
    double err = 0.0;
};

/// Inclusive level range used for fitting.
struct LevelWindow {
    int lo = 2;
    int hi = 5;

    [[nodiscard]] bool contains(int level) const { return level >= lo && level <= hi; }
    friend bool operator==(const LevelWindow&, const LevelWindow&) = default;
};

struct RateFit {
    double slope = 0.0;               ///< least-squares slope of log err against log h
    std::vector<double> per_step_eoc; ///< log(e_i / e_{i+1}) / log(h_i / h_{i+1})
};

inline RateFit fit_rate(const std::vector<RatePoint>& points) {
    UCFEM_THROW_IF(points.size() < 2, InvalidArgument, "fit_rate: at least two points required");
    for (const auto& p : points)
        UCFEM_THROW_IF(!(p.h > 0.0 && p.err > 0.0), InvalidArgument, "fit_rate: h and err must be positive");
    const double n = static_cast<double>(points.size());
    double sx = 0.0, sy = 0.0;
    for (const auto& p : points) {
        sx += std::log(p.h);
        sy += std::log(p.err);
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& p : points) {
        const double dx = std::log(p.h) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(p.err) - my);
    }
    UCFEM_THROW_IF(sxx == 0.0, InvalidArgument, "fit_rate: all h equal");
    RateFit fit;
    fit.slope = sxy / sxx;
    for (std::size_t i = 0; i + 1 < points.size(); ++i)
        fit.per_step_eoc.push_back(std::log(points[i].err / points[i + 1].err) /
                                   std::log(points[i].h / points[i + 1].h));
    return fit;
}

inline RateFit fit_rate(const std::vector<RatePoint>& points, const LevelWindow& window) {
    std::vector<RatePoint> in;
    for (const auto& p : points)
        if (window.contains(p.level)) in.push_back(p);
    return fit_rate(in);
}

}  // namespace ucfem::analysis
