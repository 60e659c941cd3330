#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "sg/grid.hpp"
#include "sg/measure.hpp"
#include "sg/mixture.hpp"

namespace sg {

struct PdeGridParams {
    int n = 2048;      // spatial nodes
    double L = 0.0;    // half-width of the domain; 0 selects 10 + |h| + 4 sqrt(xi'(1))
    int quad = 64;     // Gauss-Hermite order for the recursion steps
    double fd_dt = 5e-4;  // target time step of the finite-difference scheme
};

double auto_domain_halfwidth(const MixtureSpec& spec);

// One time slice of the solution together with its first two x-derivatives.
// The recursion propagates fx and fxx exactly (reweighted expectations), so
// they carry quadrature accuracy rather than finite-difference accuracy.
struct SolutionSlice {
    std::vector<double> f, fx, fxx;
};

// Backward solution of
//   dphi/dt + xi''(t)/2 (phi_xx + m(t) phi_x^2) = 0,  phi(1,x) = log cosh x,
// with m the cdf of an atomic measure. Slices are stored at the knots
// (atoms plus interval endpoints); slice(t) reconstructs intermediate times.
struct ParisiSolution {
    MixtureSpec spec;
    AtomicMeasure nu;
    Grid1D grid;
    std::vector<double> knots;       // 0 = t_0 < ... < t_m = 1
    std::vector<double> mbar;        // cdf value on (knots[j], knots[j+1])
    std::vector<SolutionSlice> phi;  // phi[j]: values at knots[j]
    int quad = 64;
    std::string method;              // "recursion" or "fd"

    ParisiSolution(MixtureSpec s, AtomicMeasure m) : spec(std::move(s)), nu(std::move(m)) {}

    double mbar_at(double t) const;        // cdf on the interval containing t
    SolutionSlice slice(double t) const;   // solution at time t on the grid
    double value(double t, double x) const;
    double value0_at_h() const { return value(0.0, spec.h); }
    double edge_slope_lo(const std::vector<double>& s) const;
    double edge_slope_hi(const std::vector<double>& s) const;
};

// interpolators with the appropriate edge extensions (|slope| -> 1, curvature -> 0)
double slice_value(const ParisiSolution& sol, const SolutionSlice& s, double x);
double slice_dx(const ParisiSolution& sol, const SolutionSlice& s, double x);
double slice_dxx(const ParisiSolution& sol, const SolutionSlice& s, double x);

ParisiSolution solve_recursion(const MixtureSpec& spec, const AtomicMeasure& nu,
                               const PdeGridParams& params = {},
                               const std::vector<double>& extra_knots = {});
ParisiSolution solve_fd(const MixtureSpec& spec, const AtomicMeasure& nu,
                        const PdeGridParams& params = {},
                        const std::vector<double>& extra_knots = {});

// exact-in-time backward step of length var = xi'(b) - xi'(a) with constant
// cdf value mb; the slice at the later time is given on g
SolutionSlice recursion_step(const Grid1D& g, const SolutionSlice& next, double mb, double var,
                             int quad_order);

// ---- local field process -----------------------------------------------
//   dX_s = xi''(s) m(s) phi_x(s, X_s) ds + sqrt(xi''(s)) dW_s,  X_0 = h.

struct LocalFieldOptions {
    std::string method = "density";  // "density" (deterministic) or "mc"
    int n_paths = 20000;             // mc only
    int n_steps = 0;                 // 0 = automatic
    uint64_t seed = 1;
    int n_drift_slices = 128;
};

struct LocalFieldStats {
    double q = 0.0;
    double e_phix = 0.0;      // E phi_x(q, X_q)
    double e_phix_sq = 0.0;   // E phi_x(q, X_q)^2
    double e_phixx_sq = 0.0;  // E phi_xx(q, X_q)^2
    double se_phix = 0.0, se_phix_sq = 0.0, se_phixx_sq = 0.0;
    int n_paths = 0;
    std::string method;
};

LocalFieldStats local_field_stats(const ParisiSolution& sol, double q,
                                  const LocalFieldOptions& opts = {});

// Replicon eigenvalue 1 - xi''(q) E (phi_xx)^2(q, X_q).
double replicon_eigenvalue(const ParisiSolution& sol, double q, const LocalFieldStats& stats);

// Plain-text dump of the stored slices (one block per knot).
std::string dump_solution(const ParisiSolution& sol);

}  // namespace sg
