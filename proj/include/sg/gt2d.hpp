#pragma once
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sg/grid.hpp"
#include "sg/measure.hpp"
#include "sg/mixture.hpp"
#include "sg/parisi_pde.hpp"

namespace sg {

// Two-replica terminal data
//   f_lambda(x,y) = log( 1/4 sum_{e1,e2 = +-1} exp(e1 x + e2 y + lambda e1 e2) )
// and its analytic lambda-derivative, evaluated with shifted exponentials.
// f_0 = log cosh x + log cosh y and d/dlambda f|_0 = tanh(x) tanh(y).
struct TerminalData {
    double f = 0.0;
    double dlambda = 0.0;
};
TerminalData terminal_data(double lambda, double x, double y);

// cdf of the tilted measure: mu(t)/2 below q, mu(t) at and above q
double tilted_cdf(const AtomicMeasure& mu, double q, double t);

// L = int_0^1 xi''(t) t mu(t) dt, the constant subtracted from v(0,h); exact
// piecewise-polynomial form (twice the one-replica correction)
double gt_correction(const MixtureSpec& spec, const AtomicMeasure& mu);

struct Gt2dParams {
    int n = 256;       // nodes per axis
    double L = 0.0;    // half-width; 0 selects the 1D solver's rule
    int quad = 48;     // Gauss-Hermite order per direction
    bool with_grad = true;     // propagate (u_x, u_y)
    bool with_dlambda = true;  // propagate d/dlambda u
    double adi_dt = 5e-4;      // time step of the alternating-direction route
};

// One time slice of the two-replica solution; (i,j) indexes (x_i, y_j).
// Disabled arrays (with_grad / with_dlambda) stay empty.
struct Slice2D {
    Eigen::MatrixXd f, fx, fy, flam;
};

// Backward sweep of
//   du/dt + xi''(t)/2 ( u_xx + u_yy + m(t) (u_x^2 + u_y^2) ) = 0,  u(1,.) = f_lambda,
// on [q,1], m the cdf of mu (the tilted measure coincides with mu there).
// Slices are stored at the knots: atoms of mu in (q,1), requested record
// times, and the endpoints.
struct USolution {
    MixtureSpec spec;
    AtomicMeasure mu;
    Grid1D grid;
    Gt2dParams params;
    double q = 0.0, lambda = 0.0;
    std::vector<double> knots;    // q = k_0 < ... < k_M = 1
    std::vector<Slice2D> slices;  // one per knot

    USolution(MixtureSpec s, AtomicMeasure m) : spec(std::move(s)), mu(std::move(m)) {}

    const Slice2D& at_q() const { return slices.front(); }
    int knot_index(double t) const;  // exact match within 1e-9, else -1
};

USolution solve_u2d(const MixtureSpec& spec, const AtomicMeasure& mu, double q, double lambda,
                    const Gt2dParams& params = {}, const std::vector<double>& record_times = {});

// Value-only cross-check of solve_u2d: Peaceman-Rachford direction splitting,
// diffusion implicit per direction, gradient terms explicit, edge rows closed
// with the +-1 far-field slopes. Returns u(q,.,.).
Eigen::MatrixXd solve_u2d_adi(const MixtureSpec& spec, const AtomicMeasure& mu, double q,
                              double lambda, const Gt2dParams& params = {});

// Collapsed equation on [0,q]:
//   dv/dt + xi''(t)/2 ( v_xx + (mu(t)/2) v_x^2 ) = 0,  v(q,x) = u(q,x,x),
// the indicator source of the two-replica system acting only through the
// terminal coupling. Carries d/dlambda v when the u-slice has it.
struct VSolution {
    Grid1D grid;
    double q = 0.0, lambda = 0.0;
    std::vector<double> v0, v0lam;  // slices at t = 0
    double v_h = 0.0;               // v(0,h)
    double vlam_h = 0.0;            // d/dlambda v(0,h)
};

VSolution solve_v(const MixtureSpec& spec, const AtomicMeasure& mu, const USolution& u);
// same, ending at a recorded knot time q of u (q <= u's solve range)
VSolution solve_v_at(const MixtureSpec& spec, const AtomicMeasure& mu, const USolution& u,
                     double q);

// P(lambda, q) = v(0,h) - lambda q - L and the pieces it came from
struct GtValue {
    double value = 0.0;
    double v_h = 0.0;
    double dlambda = 0.0;     // dP/dlambda = dv/dlambda(0,h) - q (propagated)
    double correction = 0.0;  // L
};

GtValue gt_value(const MixtureSpec& spec, const AtomicMeasure& mu, double q, double lambda,
                 const Gt2dParams& params = {});

// negative root eig = (a - sqrt(a^2 + 4b^2))/2 of x^2 - a x - b^2 (the
// negative eigenvalue of [[a, b], [b, 0]]) together with the descent
// direction (eig*2/b, 1) =: ((a - sqrt(a^2 + 4b^2))/b, 1), along which the
// quadratic form a d0^2 + 2 b d0 d1 is strictly negative; requires b != 0
void hess_eigenpair(double a, double b, double* eig, double dir[2]);

// ---- barrier certification -------------------------------------------------
//
// Certified quantities are same-march differences gap(lambda, q) =
// P(0,q) - P(lambda,q), equal to 2 P_I(mu) - P(lambda,q) by the lambda = 0
// identity; the shared discretization cancels, which matters because the
// descent depths can sit below the absolute PDE accuracy.

struct GtBarrierOptions {
    int n_candidates = 4;     // scanned q per side of q*
    int side = 0;             // -1 below q*, +1 above, 0 both
    double max_offset = 0.1;  // farthest geometric offset from q*
    double lambda_cap = 1.0;  // line-search window |lambda| <= cap
    double fd_delta = 0.05;   // lambda step for the Hessian diagnostic
    double min_gap = 1e-6;    // certification floor
    int golden_iters = 12;
    double support_tol = 1e-7;
    Gt2dParams pde{.n = 192, .quad = 40};
    PdeGridParams pde1d{};  // reference 1D solve (defect curve, replicon)
};

struct GtBarrier {
    bool found = false;
    double q = 0.0, lambda = 0.0;  // certified point
    double value = 0.0;            // P(lambda*, q)
    double gap = 0.0;              // P(0,q) - P(lambda*, q) > 0 when found
    double two_p_i = 0.0;          // 2 P_I(mu) from the 1D pipeline
    double replicon = 0.0;         // Lambda_R(q*): > 0 is the theorem's
                                   // sufficient condition, reported only
    double hess_a = 0.0, hess_b = 0.0, neg_eig = 0.0;
    int n_solves = 0;  // 2D budget spent
    std::vector<double> scanned_q;
};

GtBarrier barrier_search(const MixtureSpec& spec, const AtomicMeasure& mu, double q_star,
                         const GtBarrierOptions& opts = {});

// ---- certified rate-function lower bound ------------------------------------

struct RatePoint {
    double q = 0.0;
    double i_lb = 0.0;     // max(0, max_lambda gap(lambda, q))
    bool is_zero = false;  // q is an atom of mu (certified zero of I)
    bool certified = true;  // false for negative q outside the reflection case
    double lambda_best = 0.0;
};

struct RateCurve {
    std::vector<RatePoint> pts;  // sorted by q
    double two_p_i = 0.0;
    double h_cal = 0.0;  // best I_lb(q2) - I_lb(q1) - I_lb(q3), ends at zeros
    double q1 = 0.0, q2 = 0.0, q3 = 0.0;  // attaining triple
    double zero_residual = 0.0;  // max unclamped |gap| over certified zeros
    bool gfeb = false;           // h_cal > gfeb_tol
    double gfeb_tol = 0.0;
    int n_solves = 0;

    std::string table() const;             // "q <tab> i_lb <tab> is_zero" lines
    std::string certificate_json() const;  // {q1,q2,q3,epsilon,height}
};

struct RateOptions {
    int lambda_grid = 21;  // coarse odd count on [-cap, cap] (0 included)
    double lambda_cap = 1.0;
    int refine_rounds = 6;  // bracket-shrinking rounds around per-q minima
    double gfeb_tol = 1e-6;
    double zero_tol = 1e-7;  // |q - atom| below this marks a certified zero
    Gt2dParams pde{.n = 128, .quad = 32, .with_grad = false, .with_dlambda = false};
    PdeGridParams pde1d{};
};

// q_grid entries may lie in [-1,1]; the atoms of mu are added to the scan.
// Negative q is certified by reflection when xi is even and h = 0, and
// reported as the trivial bound 0 (certified = false) otherwise. Requires xi
// convex on [-1,1].
RateCurve rate_curve(const MixtureSpec& spec, const AtomicMeasure& mu,
                     const std::vector<double>& q_grid, const RateOptions& opts = {});

}  // namespace sg
