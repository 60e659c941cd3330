#pragma once
#include <cstdint>
#include <optional>
#include <vector>

#include "sg/measure.hpp"
#include "sg/mixture.hpp"

namespace sg {

// Spherical-model statics. Everything here is closed-form: the order
// parameter enters only through psi_nu(t) = int_t^1 xi''(s) m(s) ds and
// phi_nu(t) = int_t^1 m(u) du, and with atomic nu every functional reduces to
// integrals of xi''/(B - psi)^r over pieces of constant cdf, which have exact
// antiderivatives in xi'. No quadrature error reaches the derivative checks.

struct SphericalAnsatz {
    AtomicMeasure nu;
    double b = 1.0;  // admissible when b >= 1 and b >= psi_nu(0)
};

double psi_nu(const MixtureSpec& spec, const AtomicMeasure& nu, double t);
double phi_nu(const MixtureSpec& spec, const AtomicMeasure& nu, double t);

// C(nu) = 1/2 (int xi'' phi + int (1/phi - 1/(1-s)) + h^2 phi(0)); the final
// piece has phi = 1-s exactly and contributes nothing to the middle integral.
// Throws if the top atom sits at 1 (phi degenerates before s=1).
double cs_functional(const MixtureSpec& spec, const AtomicMeasure& nu);

// Free-energy-scale Parisi value: half of
//   h^2/(b-psi(0)) + int_0^1 xi''/(b-psi) + b - 1 - log b - int t xi'' m,
// so that sph_parisi = cs_functional at the joint minimizer and the
// two-replica functional below satisfies gt_value_sph(0, q) = 2 * sph_parisi.
// Inadmissible (b, nu) returns +infinity.
double sph_parisi(const MixtureSpec& spec, const SphericalAnsatz& ansatz);

struct GDiagnostic {
    double grid_min = 0.0;  // min of the first-variation function G on a fine grid
    double atom_min = 0.0;  // min of G over the support atoms
    double gap = 0.0;       // atom_min - grid_min (should vanish at the optimum)
    bool ok = false;
};

struct SphericalOptReport {
    SphericalAnsatz minimizer;
    double cs_value = 0.0;
    double ps_value = 0.0;
    std::vector<double> q_opt_residual;    // per atom: q - int_0^q xi''/(b-psi)^2 - h^2/(b-psi(0))^2
    std::vector<double> phi_psi_residual;  // per atom: phi(q) - 1/(b-psi(q))
    double b_residual = 0.0;               // b - (xi'(1) - xi'(q_EA) + 1/(1-q_EA))
    double margin_psi = 0.0;               // b - psi(0)
    double margin_one = 0.0;               // b - 1
    std::vector<double> replicon;          // per atom: 1/phi(q)^2 - xi''(q)
    GDiagnostic g_diag;
    bool converged = false;
    double multistart_spread = 0.0;
    int n_eval = 0;
};

struct SphOptOptions {
    int n_starts = 8;
    uint64_t seed = 7;
    double merge_tol = 1e-4;
    double support_w_tol = 1e-3;
    int max_eval = 4000;
    int g_grid_n = 2001;
    double g_tol = 1e-6;
};

// Joint minimization of the spherical Parisi functional over k-atomic nu and
// b (inner 1D convex search), followed by a Newton polish of the optimality
// system with b eliminated through b = xi'(1) - xi'(q_EA) + 1/(1-q_EA).
SphericalOptReport minimize_spherical(const MixtureSpec& spec, int k,
                                      const SphOptOptions& opts = {});

// Lambda_R(q, nu) = 1/phi_nu(q)^2 - xi''(q); throws when phi_nu(q) = 0.
double replicon_sph(const MixtureSpec& spec, const AtomicMeasure& nu, double q);

// Single-atom test for h = 0: the minimizer is a Dirac mass iff
// g(s) = xi(s) + log(1-s) + s < 0 on all of (0,1). Optional outputs report
// the located maximum.
bool atom_criterion_pure_p(const MixtureSpec& spec, double* g_max = nullptr,
                           double* s_max = nullptr);

// Two-replica functional P(lambda, q) at the optimal (mu, b); requires
// b - |lambda| - psi(0) > 0 (returns +infinity otherwise). Derivatives in
// lambda are analytic closed forms on the same piecewise decomposition.
double gt_value_sph(const MixtureSpec& spec, const SphericalOptReport& report, double lambda,
                    double q);
double gt_dlambda_sph(const MixtureSpec& spec, const SphericalOptReport& report, double lambda,
                      double q);
double gt_d2lambda_sph(const MixtureSpec& spec, const SphericalOptReport& report, double lambda,
                       double q);

struct SphBarrier {
    double q = 0.0;        // off-support overlap where the window is certified
    double lambda = 0.0;   // tilt achieving the gap
    double gap = 0.0;      // 2*ps_value - min_lambda P(lambda, q) > 0
    double rate_c = 0.0;   // certified decay rate: lambda_1 <~ exp(-rate_c * N)
    double hess_a = 0.0;   // d2/dlambda2 P at (0, q*)
    double hess_b = 0.0;   // d/dq d/dlambda P at (0, q*)
    double hess_neg = 0.0; // negative eigenvalue of [[a, b], [b, 0]]
};

struct SphBarrierOptions {
    int n_offsets = 12;       // geometric offsets per side away from q*
    double max_offset = 0.1;  // largest |q - q*| tried
    int lambda_grid = 41;
    double min_gap = 1e-10;
};

// Searches the punctured neighborhood of a support atom q* with
// Lambda_R(q*) > 0 for a window where min_lambda P(lambda, q) dips below the
// unconstrained value 2*ps. Returns the best certificate found, or nullopt.
std::optional<SphBarrier> barrier_search_sph(const MixtureSpec& spec,
                                             const SphericalOptReport& report, double q_star,
                                             const SphBarrierOptions& opts = {});

// (K/eps)^2 e^{-D} / (1 - 4 e^{-D}); +infinity when D <= log 4 (vacuous).
double manifold_gap_bound(double K, double eps, double D);

// Holley-Stroock stability on the sphere: lambda_1 >= e^{-2 osc(U)} (1 - 1/N).
double poincare_stability_lower(double osc_u, int n);

}  // namespace sg
