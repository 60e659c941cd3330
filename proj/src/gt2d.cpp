#include "sg/gt2d.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "sg/ising_statics.hpp"
#include "sg/quadrature.hpp"
#include "sg/tridiag.hpp"

namespace sg {

namespace {

constexpr double kLog4 = 1.3862943611198906;
constexpr double kInf = std::numeric_limits<double>::infinity();

// ---- terminal data ---------------------------------------------------------

// exponents of the four sign pairs (+,+), (+,-), (-,+), (-,-)
inline void corner_exponents(double lambda, double x, double y, double a[4]) {
    a[0] = x + y + lambda;
    a[1] = x - y - lambda;
    a[2] = -x + y - lambda;
    a[3] = -x - y + lambda;
}

}  // namespace

TerminalData terminal_data(double lambda, double x, double y) {
    double a[4];
    corner_exponents(lambda, x, y, a);
    double c = std::max(std::max(a[0], a[1]), std::max(a[2], a[3]));
    double e0 = std::exp(a[0] - c), e1 = std::exp(a[1] - c), e2 = std::exp(a[2] - c),
           e3 = std::exp(a[3] - c);
    double s = e0 + e1 + e2 + e3;
    TerminalData t;
    t.f = c + std::log(s) - kLog4;
    t.dlambda = (e0 - e1 - e2 + e3) / s;
    return t;
}

double tilted_cdf(const AtomicMeasure& mu, double q, double t) {
    double m = mu.cdf(t);
    return t < q ? 0.5 * m : m;
}

double gt_correction(const MixtureSpec& spec, const AtomicMeasure& mu) {
    return 2.0 * parisi_correction(spec, mu);
}

// ---- Gaussian substep kernel ------------------------------------------------

namespace {

// evaluation at x_i + off for all i with shift-invariant cubic weights;
// linear slope extension outside the domain (same scheme as the 1D solver)
struct ShiftedEval {
    int base = 0;
    double w[4] = {0, 0, 0, 0};
    double off = 0.0;
};

ShiftedEval make_shift(const Grid1D& g, double off) {
    ShiftedEval s;
    s.off = off;
    double u = off / g.dx();
    int i0 = (int)std::floor(u);
    double f = u - i0;
    s.base = i0 - 1;
    s.w[0] = -f * (f - 1.0) * (f - 2.0) / 6.0;
    s.w[1] = (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0;
    s.w[2] = -(f + 1.0) * f * (f - 2.0) / 2.0;
    s.w[3] = (f + 1.0) * f * (f - 1.0) / 6.0;
    return s;
}

double eval_shift(const ShiftedEval& s, const Grid1D& g, const double* y, int i, double slope_lo,
                  double slope_hi) {
    int j = i + s.base;
    if (j >= 0 && j + 3 < g.n)
        return s.w[0] * y[j] + s.w[1] * y[j + 1] + s.w[2] * y[j + 2] + s.w[3] * y[j + 3];
    double x = g.x(i) + s.off;
    if (x <= g.lo) return y[0] + slope_lo * (x - g.lo);
    if (x >= g.hi) return y[g.n - 1] + slope_hi * (x - g.hi);
    CubicStencil st = make_stencil(g, x);
    return apply_stencil(st, y, g.n, slope_lo, slope_hi);
}

// One Gaussian smoothing substep along a contiguous array. The value updates
// through the exponential moment (expm1/log1p keep it stable down to mb -> 0);
// every auxiliary array updates through the same reweighted expectation, which
// is the exact derivative of the discrete value update. f extends linearly
// past the edges with its own edge slopes, auxiliaries extend flat.
void substep_col(const Grid1D& g, double mb, const GaussHermite& gh,
                 const std::vector<ShiftedEval>& sh, const double* f, const double* const* aux,
                 int n_aux, double* f_out, double* const* aux_out, std::vector<double>& vf,
                 std::vector<double>& wt) {
    int n = g.n;
    size_t nq = gh.z.size();
    double slo = (f[1] - f[0]) / g.dx();
    double shi = (f[n - 1] - f[n - 2]) / g.dx();
    for (int i = 0; i < n; ++i) {
        for (size_t k = 0; k < nq; ++k) vf[k] = eval_shift(sh[k], g, f, i, slo, shi);
        if (mb == 0.0) {
            double af = 0.0;
            for (size_t k = 0; k < nq; ++k) {
                af += gh.w[k] * vf[k];
                wt[k] = gh.w[k];
            }
            f_out[i] = af;
        } else {
            double c = vf[0];
            for (size_t k = 1; k < nq; ++k) c = std::max(c, vf[k]);
            double em = 0.0;
            for (size_t k = 0; k < nq; ++k) em += gh.w[k] * std::expm1(mb * (vf[k] - c));
            double acc = 1.0 + em;
            f_out[i] = c + std::log1p(em) / mb;
            for (size_t k = 0; k < nq; ++k) wt[k] = gh.w[k] * std::exp(mb * (vf[k] - c)) / acc;
        }
        for (int a = 0; a < n_aux; ++a) {
            double s = 0.0;
            for (size_t k = 0; k < nq; ++k) s += wt[k] * eval_shift(sh[k], g, aux[a], i, 0.0, 0.0);
            aux_out[a][i] = s;
        }
    }
}

// active matrices of a slice, value first
std::vector<Eigen::MatrixXd*> active(Slice2D& s) {
    std::vector<Eigen::MatrixXd*> m{&s.f};
    if (s.fx.size() > 0) m.push_back(&s.fx);
    if (s.fy.size() > 0) m.push_back(&s.fy);
    if (s.flam.size() > 0) m.push_back(&s.flam);
    return m;
}

void pass_cols(const Grid1D& g, double mb, const GaussHermite& gh,
               const std::vector<ShiftedEval>& sh, const std::vector<Eigen::MatrixXd*>& in,
               const std::vector<Eigen::MatrixXd*>& out, std::vector<double>& vf,
               std::vector<double>& wt) {
    int n = g.n;
    int n_aux = (int)in.size() - 1;
    const double* aux[3];
    double* auxo[3];
    for (int j = 0; j < n; ++j) {
        for (int a = 0; a < n_aux; ++a) {
            aux[a] = in[a + 1]->col(j).data();
            auxo[a] = out[a + 1]->col(j).data();
        }
        substep_col(g, mb, gh, sh, in[0]->col(j).data(), aux, n_aux, out[0]->col(j).data(), auxo,
                    vf, wt);
    }
}

// One 2D substep of variance var: the quadrature factorizes over directions
// (exp(mb u) solves the heat equation on constant-cdf stretches), so a pass
// along x followed by a pass along y reproduces the full 2D exponential
// moment exactly, reweighting included.
void substep_2d(const Grid1D& g, double mb, double var, const GaussHermite& gh, Slice2D& cur,
                Slice2D& work, std::vector<double>& vf, std::vector<double>& wt) {
    double s = std::sqrt(var);
    std::vector<ShiftedEval> sh(gh.z.size());
    for (size_t k = 0; k < gh.z.size(); ++k) sh[k] = make_shift(g, s * gh.z[k]);
    auto a_cur = active(cur), a_work = active(work);
    pass_cols(g, mb, gh, sh, a_cur, a_work, vf, wt);
    for (auto* m : a_work) m->transposeInPlace();
    pass_cols(g, mb, gh, sh, a_work, a_cur, vf, wt);
    for (auto* m : a_cur) m->transposeInPlace();
}

void march_interval_2d(const Grid1D& g, const MixtureSpec& spec, double mb, double ta, double tb,
                       const GaussHermite& gh, Slice2D& cur, Slice2D& work, std::vector<double>& vf,
                       std::vector<double>& wt) {
    double var = spec.xi(tb, 1) - spec.xi(ta, 1);
    if (var <= 0.0) return;
    // splitting is exact for constant mb; capped substeps keep the quadrature
    // in its fast-convergence regime (same rule as the 1D recursion)
    int n_sub = std::max(1, (int)std::ceil(var / 1.0));
    for (int s = 0; s < n_sub; ++s) substep_2d(g, mb, var / n_sub, gh, cur, work, vf, wt);
}

Slice2D terminal_2d(const Grid1D& g, double lambda, bool grad, bool dlam) {
    int n = g.n;
    Slice2D s;
    s.f.resize(n, n);
    if (grad) {
        s.fx.resize(n, n);
        s.fy.resize(n, n);
    }
    if (dlam) s.flam.resize(n, n);
    double a[4];
    for (int j = 0; j < n; ++j) {
        double y = g.x(j);
        for (int i = 0; i < n; ++i) {
            corner_exponents(lambda, g.x(i), y, a);
            double c = std::max(std::max(a[0], a[1]), std::max(a[2], a[3]));
            double e0 = std::exp(a[0] - c), e1 = std::exp(a[1] - c), e2 = std::exp(a[2] - c),
                   e3 = std::exp(a[3] - c);
            double sum = e0 + e1 + e2 + e3;
            s.f(i, j) = c + std::log(sum) - kLog4;
            if (grad) {
                s.fx(i, j) = (e0 + e1 - e2 - e3) / sum;
                s.fy(i, j) = (e0 - e1 + e2 - e3) / sum;
            }
            if (dlam) s.flam(i, j) = (e0 - e1 - e2 + e3) / sum;
        }
    }
    return s;
}

std::vector<double> u_knots(const AtomicMeasure& mu, double q, const std::vector<double>& record) {
    std::vector<double> k{q};
    if (q < 1.0 - 1e-13) k.push_back(1.0);
    auto push = [&](double t) {
        if (t <= q + 1e-12 || t >= 1.0 - 1e-12) return;
        for (double v : k)
            if (std::fabs(v - t) < 1e-13) return;
        k.push_back(t);
    };
    for (double a : mu.q) push(a);
    for (double t : record) {
        if (t < q - 1e-9 || t > 1.0 + 1e-9) throw std::invalid_argument("record time outside [q,1]");
        push(std::min(1.0, std::max(q, t)));
    }
    std::sort(k.begin(), k.end());
    return k;
}

}  // namespace

int USolution::knot_index(double t) const {
    for (size_t j = 0; j < knots.size(); ++j)
        if (std::fabs(knots[j] - t) < 1e-9) return (int)j;
    return -1;
}

USolution solve_u2d(const MixtureSpec& spec, const AtomicMeasure& mu, double q, double lambda,
                    const Gt2dParams& params, const std::vector<double>& record_times) {
    MixtureSpec sp = spec;
    sp.validate();
    if (q < -1e-12 || q > 1.0 + 1e-12) throw std::invalid_argument("q outside [0,1]");
    q = std::min(1.0, std::max(0.0, q));
    if (params.n < 16) throw std::invalid_argument("grid too small");
    USolution sol(sp, mu);
    sol.q = q;
    sol.lambda = lambda;
    sol.params = params;
    double L = params.L > 0 ? params.L : auto_domain_halfwidth(sp);
    sol.grid = Grid1D{-L, L, params.n};
    sol.knots = u_knots(mu, q, record_times);
    size_t m = sol.knots.size();
    sol.slices.resize(m);
    sol.slices[m - 1] = terminal_2d(sol.grid, lambda, params.with_grad, params.with_dlambda);

    GaussHermite gh(params.quad);
    std::vector<double> vf(gh.z.size()), wt(gh.z.size());
    Slice2D cur = sol.slices[m - 1];
    Slice2D work = cur;  // shape only; contents overwritten each pass
    for (size_t j = m - 1; j-- > 0;) {
        double mb = mu.cdf(0.5 * (sol.knots[j] + sol.knots[j + 1]));
        march_interval_2d(sol.grid, sp, mb, sol.knots[j], sol.knots[j + 1], gh, cur, work, vf, wt);
        sol.slices[j] = cur;
    }
    return sol;
}

// ---- alternating-direction cross-check --------------------------------------

namespace {

// ghost-closed second difference along the leading index; the far-field slope
// of u is -1 at the low edge and +1 at the high edge in both directions
void lap_lead(const Eigen::MatrixXd& m, double dx, Eigen::MatrixXd& out) {
    int n = (int)m.rows();
    for (int j = 0; j < n; ++j) {
        out(0, j) = 2.0 * (m(1, j) - m(0, j) + dx) / (dx * dx);
        for (int i = 1; i < n - 1; ++i)
            out(i, j) = (m(i - 1, j) - 2.0 * m(i, j) + m(i + 1, j)) / (dx * dx);
        out(n - 1, j) = 2.0 * (m(n - 2, j) - m(n - 1, j) + dx) / (dx * dx);
    }
}

void grad_sq(const Eigen::MatrixXd& m, double dx, Eigen::MatrixXd& out) {
    int n = (int)m.rows();
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            double gx = (i == 0) ? -1.0
                        : (i == n - 1) ? 1.0
                                       : (m(i + 1, j) - m(i - 1, j)) / (2.0 * dx);
            double gy = (j == 0) ? -1.0
                        : (j == n - 1) ? 1.0
                                       : (m(i, j + 1) - m(i, j - 1)) / (2.0 * dx);
            out(i, j) = gx * gx + gy * gy;
        }
}

// (I - theta dxx) x = rhs column-wise with the +-1 ghost rows
void implicit_lead(double theta, double dx, Eigen::MatrixXd& rhs, std::vector<double>& a,
                   std::vector<double>& b, std::vector<double>& c, std::vector<double>& col,
                   std::vector<double>& scratch) {
    int n = (int)rhs.rows();
    for (int j = 0; j < n; ++j) {
        a.assign(n, -theta);
        b.assign(n, 1.0 + 2.0 * theta);
        c.assign(n, -theta);
        c[0] = -2.0 * theta;
        a[n - 1] = -2.0 * theta;
        for (int i = 0; i < n; ++i) col[i] = rhs(i, j);
        col[0] += 2.0 * theta * dx;
        col[n - 1] += 2.0 * theta * dx;
        solve_tridiag(a, b, c, col, scratch);
        for (int i = 0; i < n; ++i) rhs(i, j) = col[i];
    }
}

}  // namespace

Eigen::MatrixXd solve_u2d_adi(const MixtureSpec& spec, const AtomicMeasure& mu, double q,
                              double lambda, const Gt2dParams& params) {
    MixtureSpec sp = spec;
    sp.validate();
    if (q < -1e-12 || q > 1.0 + 1e-12) throw std::invalid_argument("q outside [0,1]");
    q = std::min(1.0, std::max(0.0, q));
    double L = params.L > 0 ? params.L : auto_domain_halfwidth(sp);
    Grid1D g{-L, L, params.n};
    double dx = g.dx();
    int n = g.n;
    std::vector<double> knots = u_knots(mu, q, {});
    Eigen::MatrixXd u = terminal_2d(g, lambda, false, false).f;
    Eigen::MatrixXd lap(n, n), nl(n, n), rhs(n, n), stage(n, n);
    std::vector<double> a(n), b(n), c(n), col(n), scratch(n);
    for (size_t j = knots.size() - 1; j-- > 0;) {
        double mb = mu.cdf(0.5 * (knots[j] + knots[j + 1]));
        double len = knots[j + 1] - knots[j];
        int steps = std::max(1, (int)std::ceil(len / params.adi_dt));
        double dt = len / steps;
        for (int s = 0; s < steps; ++s) {
            double tm = knots[j + 1] - (s + 0.5) * dt;
            double dcoef = 0.5 * sp.xi(tm, 2);
            double r = 0.5 * dt * dcoef;
            double theta = r / (dx * dx);
            // Peaceman-Rachford: x implicit then y implicit, gradient term
            // explicit at each stage value
            lap_lead(u.transpose(), dx, lap);  // y-laplacian, transposed
            grad_sq(u, dx, nl);
            rhs = u + r * lap.transpose() + (r * mb) * nl;
            implicit_lead(theta, dx, rhs, a, b, c, col, scratch);
            stage = rhs;
            lap_lead(stage, dx, lap);
            grad_sq(stage, dx, nl);
            rhs = (stage + r * lap + (r * mb) * nl).transpose();
            implicit_lead(theta, dx, rhs, a, b, c, col, scratch);
            u = rhs.transpose();
        }
    }
    return u;
}

// ---- collapsed 1D solve ------------------------------------------------------

VSolution solve_v_at(const MixtureSpec& spec, const AtomicMeasure& mu, const USolution& u,
                     double q) {
    int idx = u.knot_index(q);
    if (idx < 0) throw std::invalid_argument("q is not a recorded knot of the 2D solution");
    const Slice2D& s = u.slices[idx];
    const Grid1D& g = u.grid;
    int n = g.n;
    bool dlam = s.flam.size() > 0;
    VSolution v;
    v.grid = g;
    v.q = q;
    v.lambda = u.lambda;
    v.v0.resize(n);
    for (int i = 0; i < n; ++i) v.v0[i] = s.f(i, i);
    if (dlam) {
        v.v0lam.resize(n);
        for (int i = 0; i < n; ++i) v.v0lam[i] = s.flam(i, i);
    }
    if (q > 1e-14) {
        std::vector<double> k{0.0, q};
        for (double t : mu.q) {
            if (t <= 1e-12 || t >= q - 1e-12) continue;
            bool dup = false;
            for (double kv : k) dup = dup || std::fabs(kv - t) < 1e-13;
            if (!dup) k.push_back(t);
        }
        std::sort(k.begin(), k.end());
        GaussHermite gh(u.params.quad);
        std::vector<ShiftedEval> sh(gh.z.size());
        std::vector<double> vf(gh.z.size()), wt(gh.z.size());
        std::vector<double> f2(n), l2(n);
        for (size_t j = k.size() - 1; j-- > 0;) {
            double mb = tilted_cdf(mu, q, 0.5 * (k[j] + k[j + 1]));
            double var = spec.xi(k[j + 1], 1) - spec.xi(k[j], 1);
            if (var <= 0.0) continue;
            int n_sub = std::max(1, (int)std::ceil(var / 1.0));
            for (int ss = 0; ss < n_sub; ++ss) {
                double sd = std::sqrt(var / n_sub);
                for (size_t kk = 0; kk < gh.z.size(); ++kk) sh[kk] = make_shift(g, sd * gh.z[kk]);
                const double* aux[1] = {v.v0lam.data()};
                double* auxo[1] = {l2.data()};
                substep_col(g, mb, gh, sh, v.v0.data(), aux, dlam ? 1 : 0, f2.data(), auxo, vf, wt);
                v.v0.swap(f2);
                if (dlam) v.v0lam.swap(l2);
            }
        }
    }
    double slo = (v.v0[1] - v.v0[0]) / g.dx();
    double shi = (v.v0[n - 1] - v.v0[n - 2]) / g.dx();
    v.v_h = interp_cubic(g, v.v0, spec.h, slo, shi);
    if (dlam) v.vlam_h = interp_cubic(g, v.v0lam, spec.h, 0.0, 0.0);
    return v;
}

VSolution solve_v(const MixtureSpec& spec, const AtomicMeasure& mu, const USolution& u) {
    return solve_v_at(spec, mu, u, u.q);
}

GtValue gt_value(const MixtureSpec& spec, const AtomicMeasure& mu, double q, double lambda,
                 const Gt2dParams& params) {
    USolution u = solve_u2d(spec, mu, q, lambda, params);
    VSolution v = solve_v(spec, mu, u);
    GtValue r;
    r.v_h = v.v_h;
    r.correction = gt_correction(spec, mu);
    r.value = v.v_h - lambda * q - r.correction;
    r.dlambda = params.with_dlambda ? v.vlam_h - q : 0.0;
    return r;
}

void hess_eigenpair(double a, double b, double* eig, double dir[2]) {
    if (b == 0.0) throw std::invalid_argument("mixed partial must be nonzero");
    double s = std::sqrt(a * a + 4.0 * b * b);
    *eig = 0.5 * (a - s);
    dir[0] = (a - s) / b;
    dir[1] = 1.0;
}

// ---- barrier search ----------------------------------------------------------

namespace {

// P(lambda, q) - pieces reused across probes at the same q; value-only solves
struct ProbeCtx {
    const MixtureSpec& spec;
    const AtomicMeasure& mu;
    Gt2dParams pde;
    double correction;
    int n_solves = 0;

    double value(double lambda, double q) {
        USolution u = solve_u2d(spec, mu, q, lambda, pde);
        VSolution v = solve_v(spec, mu, u);
        ++n_solves;
        return v.v_h - lambda * q - correction;
    }
};

}  // namespace

GtBarrier barrier_search(const MixtureSpec& spec, const AtomicMeasure& mu, double q_star,
                         const GtBarrierOptions& opts) {
    MixtureSpec sp = spec;
    sp.validate();
    int star = -1;
    for (size_t i = 0; i < mu.q.size(); ++i)
        if (std::fabs(mu.q[i] - q_star) <= opts.support_tol) star = (int)i;
    if (star < 0) throw std::invalid_argument("q_star is not an atom of the measure");

    GtBarrier out;
    // 1D reference pipeline: free energy, replicon, and the defect curve
    // d0(q) = E(phi_x)^2(q, X_q) - q = dP/dlambda(0, q)
    ParisiSolution sol = solve_recursion(sp, mu, opts.pde1d);
    out.two_p_i = 2.0 * (sol.value0_at_h() - parisi_correction(sp, mu));
    LocalFieldStats st = local_field_stats(sol, q_star);
    out.replicon = replicon_eigenvalue(sol, q_star, st);
    out.hess_b = -out.replicon;

    Gt2dParams pp = opts.pde;
    pp.with_grad = false;
    pp.with_dlambda = false;
    ProbeCtx ctx{sp, mu, pp, gt_correction(sp, mu)};

    // curvature of P in lambda at (0, q*): second difference
    double p0s = ctx.value(0.0, q_star);
    double d = opts.fd_delta;
    out.hess_a = (ctx.value(d, q_star) - 2.0 * p0s + ctx.value(-d, q_star)) / (d * d);
    if (out.hess_b != 0.0) {
        double dir[2];
        hess_eigenpair(out.hess_a, out.hess_b, &out.neg_eig, dir);
    }

    // candidate overlaps: geometric offsets capped inside the gap to the
    // neighboring atoms (punctured neighborhood, off the support)
    double lo_cap = 1e-3, hi_cap = 1.0 - 1e-3;
    for (double a : mu.q) {
        if (a < q_star - opts.support_tol) lo_cap = std::max(lo_cap, a + 1e-3);
        if (a > q_star + opts.support_tol) hi_cap = std::min(hi_cap, a - 1e-3);
    }
    struct Cand {
        double q, d0;
    };
    std::vector<Cand> cands;
    for (int i = 0; i < opts.n_candidates; ++i) {
        double off = opts.max_offset * std::pow(0.5, i);
        for (int side = -1; side <= 1; side += 2) {
            if (opts.side != 0 && side != opts.side) continue;
            double qc = q_star + side * off;
            if (qc < lo_cap || qc > hi_cap) continue;
            if (std::fabs(qc - q_star) < 1e-6) continue;
            LocalFieldStats sc = local_field_stats(sol, qc);
            cands.push_back({qc, sc.e_phix_sq - qc});
        }
    }
    std::sort(cands.begin(), cands.end(),
              [](const Cand& a, const Cand& b) { return std::fabs(a.d0) > std::fabs(b.d0); });

    double kcap = std::max(0.5, std::fabs(out.hess_a));
    for (const Cand& cd : cands) {
        out.scanned_q.push_back(cd.q);
        double p0 = ctx.value(0.0, cd.q);
        auto gap_at = [&](double lam) { return p0 - ctx.value(lam, cd.q); };
        // constructive first step of the second-derivative test
        double lam = -cd.d0 / (2.0 * kcap);
        lam = std::max(-opts.lambda_cap, std::min(opts.lambda_cap, lam));
        if (lam == 0.0) continue;
        double gcur = gap_at(lam);
        for (int shrink = 0; gcur <= 0.0 && shrink < 3; ++shrink) {
            lam = (shrink == 0) ? -lam : 0.5 * lam;  // try the mirror, then halve
            gcur = gap_at(lam);
        }
        if (gcur <= 0.0) continue;
        // expand while the descent keeps growing, then golden refinement
        double best_l = lam, best_g = gcur;
        double l2 = lam;
        for (int e = 0; e < 8; ++e) {
            l2 *= 2.0;
            if (std::fabs(l2) > opts.lambda_cap) break;
            double g2 = gap_at(l2);
            if (g2 <= best_g) break;
            best_l = l2;
            best_g = g2;
        }
        double a = 0.0, b = 2.0 * best_l;  // bracket around the best step
        if (std::fabs(b) > opts.lambda_cap) b = (b > 0 ? 1.0 : -1.0) * opts.lambda_cap;
        const double gr = 0.61803398874989484820;
        double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
        double f1 = gap_at(x1), f2 = gap_at(x2);
        for (int it = 0; it < opts.golden_iters; ++it) {
            if (f1 < f2) {  // maximize
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + gr * (b - a);
                f2 = gap_at(x2);
            } else {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - gr * (b - a);
                f1 = gap_at(x1);
            }
            if (f1 > best_g) {
                best_g = f1;
                best_l = x1;
            }
            if (f2 > best_g) {
                best_g = f2;
                best_l = x2;
            }
        }
        if (best_g > opts.min_gap) {
            out.found = true;
            out.q = cd.q;
            out.lambda = best_l;
            out.gap = best_g;
            out.value = p0 - best_g;
            break;
        }
    }
    out.n_solves = ctx.n_solves;
    return out;
}

// ---- rate curve ---------------------------------------------------------------

std::string RateCurve::table() const {
    std::ostringstream os;
    char buf[80];
    for (const RatePoint& p : pts) {
        std::snprintf(buf, sizeof(buf), "%.6f\t%.9e\t%d\n", p.q, p.i_lb, p.is_zero ? 1 : 0);
        os << buf;
    }
    return os.str();
}

std::string RateCurve::certificate_json() const {
    nlohmann::json j;
    j["q1"] = q1;
    j["q2"] = q2;
    j["q3"] = q3;
    j["epsilon"] = zero_residual;
    j["height"] = h_cal;
    return j.dump();
}

RateCurve rate_curve(const MixtureSpec& spec, const AtomicMeasure& mu,
                     const std::vector<double>& q_grid, const RateOptions& opts) {
    MixtureSpec sp = spec;
    sp.validate();
    if (!sp.convex_on_unit_ball())
        throw std::invalid_argument("two-replica bound requires xi convex on [-1,1]");
    bool even_ok = sp.even() && sp.h == 0.0;

    std::vector<double> scan;  // q >= 0, certified by the solver
    std::vector<double> neg;   // emitted negative points
    auto push_scan = [&](double t) {
        for (double v : scan)
            if (std::fabs(v - t) < 1e-10) return;
        scan.push_back(t);
    };
    for (double qq : q_grid) {
        if (qq < -1.0 - 1e-12 || qq > 1.0 + 1e-12)
            throw std::invalid_argument("q outside [-1,1]");
        qq = std::min(1.0, std::max(-1.0, qq));
        if (qq >= 0.0) {
            push_scan(qq);
        } else {
            neg.push_back(qq);
            if (even_ok) push_scan(-qq);
        }
    }
    for (double a : mu.q) push_scan(a);
    if (even_ok && !neg.empty())
        for (double a : mu.q)
            if (a > 1e-12) neg.push_back(-a);  // mirrored zeros complete the negative side
    std::sort(scan.begin(), scan.end());
    std::sort(neg.begin(), neg.end());
    neg.erase(std::unique(neg.begin(), neg.end(),
                          [](double a, double b) { return std::fabs(a - b) < 1e-10; }),
              neg.end());

    RateCurve rc;
    rc.gfeb_tol = opts.gfeb_tol;
    {
        ParisiSolution sol = solve_recursion(sp, mu, opts.pde1d);
        rc.two_p_i = 2.0 * (sol.value0_at_h() - parisi_correction(sp, mu));
    }
    double corr = gt_correction(sp, mu);

    // shared marches: one 2D solve per lambda records every scanned q
    std::vector<double> rec(scan.begin() + 1, scan.end());
    std::map<double, std::vector<double>> table;  // lambda -> P(lambda, q) over scan
    auto solve_ladder = [&](double lam) {
        if (table.count(lam)) return;
        USolution u = solve_u2d(sp, mu, scan.front(), lam, opts.pde, rec);
        ++rc.n_solves;
        std::vector<double> p(scan.size());
        for (size_t i = 0; i < scan.size(); ++i)
            p[i] = solve_v_at(sp, mu, u, scan[i]).v_h - lam * scan[i] - corr;
        table.emplace(lam, std::move(p));
    };
    int m = std::max(5, opts.lambda_grid | 1);
    for (int i = 0; i < m; ++i) {
        double lam = -opts.lambda_cap + 2.0 * opts.lambda_cap * i / (m - 1);
        if (std::fabs(lam) < 1e-15) lam = 0.0;
        solve_ladder(lam);
    }
    for (int round = 0; round < opts.refine_rounds; ++round) {
        std::vector<double> cands;
        for (size_t i = 0; i < scan.size(); ++i) {
            auto best = table.begin();
            for (auto it = table.begin(); it != table.end(); ++it)
                if (it->second[i] < best->second[i]) best = it;
            if (best != table.begin()) {
                double mid = 0.5 * (std::prev(best)->first + best->first);
                cands.push_back(mid);
            }
            if (std::next(best) != table.end()) {
                double mid = 0.5 * (best->first + std::next(best)->first);
                cands.push_back(mid);
            }
        }
        std::sort(cands.begin(), cands.end());
        cands.erase(std::unique(cands.begin(), cands.end(),
                                [](double a, double b) { return std::fabs(a - b) < 1e-5; }),
                    cands.end());
        for (double lam : cands) {
            auto near = table.lower_bound(lam - 1e-5);
            if (near != table.end() && std::fabs(near->first - lam) < 1e-5) continue;
            solve_ladder(lam);
        }
    }

    // descent depths; lambda = 0 is in the ladder, so the raw value is >= 0
    const std::vector<double>& p0 = table.at(0.0);
    std::vector<double> raw(scan.size());
    std::vector<double> lbest(scan.size(), 0.0);
    for (size_t i = 0; i < scan.size(); ++i) {
        double best = kInf;
        for (const auto& [lam, vec] : table)
            if (vec[i] < best) {
                best = vec[i];
                lbest[i] = lam;
            }
        raw[i] = p0[i] - best;
    }

    auto near_atom = [&](double t) {
        for (double a : mu.q)
            if (std::fabs(std::fabs(t) - a) <= opts.zero_tol) return true;
        return false;
    };
    for (size_t i = 0; i < scan.size(); ++i) {
        RatePoint p;
        p.q = scan[i];
        p.i_lb = std::max(0.0, raw[i]);
        p.is_zero = near_atom(scan[i]);
        p.lambda_best = lbest[i];
        if (p.is_zero) rc.zero_residual = std::max(rc.zero_residual, std::fabs(raw[i]));
        rc.pts.push_back(p);
    }
    for (double qn : neg) {
        RatePoint p;
        p.q = qn;
        size_t i = 0;
        while (i < scan.size() && std::fabs(scan[i] + qn) > 1e-10) ++i;
        if (even_ok && i < scan.size()) {
            p.i_lb = std::max(0.0, raw[i]);
            p.is_zero = near_atom(qn);
            p.lambda_best = lbest[i];
        } else {
            p.certified = false;  // trivial bound only
        }
        rc.pts.push_back(p);
    }
    std::sort(rc.pts.begin(), rc.pts.end(),
              [](const RatePoint& a, const RatePoint& b) { return a.q < b.q; });

    // best passage with endpoints at certified zeros; I substituted by 0 there
    for (size_t i = 0; i < rc.pts.size(); ++i) {
        if (!rc.pts[i].is_zero) continue;
        for (size_t kk = i + 2; kk < rc.pts.size(); ++kk) {
            if (!rc.pts[kk].is_zero) continue;
            for (size_t j = i + 1; j < kk; ++j) {
                double h = rc.pts[j].is_zero ? 0.0 : rc.pts[j].i_lb;
                if (h > rc.h_cal) {
                    rc.h_cal = h;
                    rc.q1 = rc.pts[i].q;
                    rc.q2 = rc.pts[j].q;
                    rc.q3 = rc.pts[kk].q;
                }
            }
        }
    }
    rc.gfeb = rc.h_cal > opts.gfeb_tol;
    return rc;
}

}  // namespace sg
