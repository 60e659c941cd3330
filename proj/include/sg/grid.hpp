#pragma once
#include <cmath>
#include <cstddef>
#include <vector>

namespace sg {

struct Grid1D {
    double lo = -1.0, hi = 1.0;
    int n = 2;
    double dx() const { return (hi - lo) / (n - 1); }
    double x(int i) const { return lo + i * dx(); }
};

// Precomputed 4-point Lagrange stencil (exact on cubics). Evaluations beyond
// the grid extend linearly with the one-sided edge slope.
struct CubicStencil {
    int mode = 0;  // 0 interior, -1 below lo, +1 above hi
    int base = 0;  // index of leftmost stencil node
    double w[4] = {0, 0, 0, 0};
    double extrap = 0.0;  // signed distance past the edge
};

inline CubicStencil make_stencil(const Grid1D& g, double x) {
    CubicStencil s;
    if (x < g.lo) {
        s.mode = -1;
        s.extrap = x - g.lo;
        return s;
    }
    if (x > g.hi) {
        s.mode = 1;
        s.extrap = x - g.hi;
        return s;
    }
    double p = (x - g.lo) / g.dx();
    int i = static_cast<int>(p);
    if (i < 1) i = 1;
    if (i > g.n - 3) i = g.n - 3;
    double u = p - i;
    s.base = i - 1;
    s.w[0] = -u * (u - 1.0) * (u - 2.0) / 6.0;
    s.w[1] = (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0;
    s.w[2] = -(u + 1.0) * u * (u - 2.0) / 2.0;
    s.w[3] = (u + 1.0) * u * (u - 1.0) / 6.0;
    return s;
}

// y: node values; slope_lo/slope_hi: extension slopes beyond the edges.
inline double apply_stencil(const CubicStencil& s, const double* y, int n, double slope_lo,
                            double slope_hi) {
    if (s.mode < 0) return y[0] + s.extrap * slope_lo;
    if (s.mode > 0) return y[n - 1] + s.extrap * slope_hi;
    return s.w[0] * y[s.base] + s.w[1] * y[s.base + 1] + s.w[2] * y[s.base + 2] +
           s.w[3] * y[s.base + 3];
}

inline double interp_cubic(const Grid1D& g, const std::vector<double>& y, double x,
                           double slope_lo, double slope_hi) {
    CubicStencil s = make_stencil(g, x);
    return apply_stencil(s, y.data(), g.n, slope_lo, slope_hi);
}

// centered first/second differences at node i (one-sided at the edges)
inline double node_deriv1(const Grid1D& g, const std::vector<double>& y, int i) {
    double dx = g.dx();
    if (i == 0) return (y[1] - y[0]) / dx;
    if (i == g.n - 1) return (y[g.n - 1] - y[g.n - 2]) / dx;
    return (y[i + 1] - y[i - 1]) / (2.0 * dx);
}
inline double node_deriv2(const Grid1D& g, const std::vector<double>& y, int i) {
    double dx = g.dx();
    if (i == 0 || i == g.n - 1) return 0.0;
    return (y[i + 1] - 2.0 * y[i] + y[i - 1]) / (dx * dx);
}

}  // namespace sg
