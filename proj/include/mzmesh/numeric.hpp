#pragma once

#include <cmath>
#include <stdexcept>

namespace mzmesh::numeric {

inline constexpr double pi = 3.14159265358979323846;

// Wrap an angle to [0, 2*pi).
inline double wrap_2pi(double x) {
    double y = std::fmod(x, 2.0 * pi);
    if (y < 0.0) y += 2.0 * pi;
    return y;
}

// Wrap an angle to (-pi, pi].
inline double wrap_pm_pi(double x) {
    double y = wrap_2pi(x);
    if (y > pi) y -= 2.0 * pi;
    return y;
}

// Golden-section search for the minimum of f on [lo, hi].
template <typename F>
double golden_minimize(F&& f, double lo, double hi, double tol = 1e-10) {
    if (!(hi > lo)) throw std::invalid_argument("golden_minimize: empty interval");
    constexpr double inv_phi = 0.6180339887498949;
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d; d = c; fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c; c = d; fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

// Coarse grid scan over [lo, hi] followed by golden-section refinement around
// the best cell. Returns the refined argmin.
template <typename F>
double grid_refine_minimize(F&& f, double lo, double hi, int grid_points, double tol = 1e-10) {
    if (grid_points < 3) throw std::invalid_argument("grid_refine_minimize: need >= 3 points");
    const double step = (hi - lo) / (grid_points - 1);
    double best_x = lo, best_v = f(lo);
    for (int i = 1; i < grid_points; ++i) {
        const double x = lo + i * step;
        const double v = f(x);
        if (v < best_v) { best_v = v; best_x = x; }
    }
    const double a = std::max(lo, best_x - step);
    const double b = std::min(hi, best_x + step);
    return golden_minimize(f, a, b, tol);
}

}  // namespace mzmesh::numeric
