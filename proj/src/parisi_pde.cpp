#include "sg/parisi_pde.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "sg/quadrature.hpp"
#include "sg/rng.hpp"
#include "sg/tridiag.hpp"

namespace sg {

namespace {

double log_cosh(double x) {
    double a = std::fabs(x);
    return a - std::log(2.0) + std::log1p(std::exp(-2.0 * a));
}

// knots = {0, 1} plus atoms and requested times in (0,1)
std::vector<double> assemble_knots(const AtomicMeasure& nu, const std::vector<double>& extra) {
    std::vector<double> k{0.0, 1.0};
    auto push = [&](double t) {
        if (t <= 1e-14 || t >= 1.0 - 1e-14) return;
        for (double v : k)
            if (std::fabs(v - t) < 1e-13) return;
        k.push_back(t);
    };
    for (double q : nu.q) push(q);
    for (double t : extra) {
        if (t < -1e-12 || t > 1.0 + 1e-12) throw std::invalid_argument("knot outside [0,1]");
        push(t);
    }
    std::sort(k.begin(), k.end());
    return k;
}

std::vector<double> interval_cdf(const AtomicMeasure& nu, const std::vector<double>& knots) {
    std::vector<double> mb(knots.size() - 1);
    for (size_t j = 0; j + 1 < knots.size(); ++j)
        mb[j] = nu.cdf(0.5 * (knots[j] + knots[j + 1]));
    return mb;
}

// evaluation of a grid function at x_i + off for all i, using precomputed
// shift-invariant cubic weights; linear slope extension outside the domain
struct ShiftedEval {
    int base = 0;  // index offset of the leftmost stencil node
    double w[4] = {0, 0, 0, 0};
    double off = 0.0;
};

ShiftedEval make_shift(const Grid1D& g, double off) {
    ShiftedEval s;
    s.off = off;
    double u = off / g.dx();
    int i0 = (int)std::floor(u);
    double f = u - i0;  // in [0,1)
    s.base = i0 - 1;
    // Lagrange weights on nodes {-1, 0, 1, 2} at position f
    s.w[0] = -f * (f - 1.0) * (f - 2.0) / 6.0;
    s.w[1] = (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0;
    s.w[2] = -(f + 1.0) * f * (f - 2.0) / 2.0;
    s.w[3] = (f + 1.0) * f * (f - 1.0) / 6.0;
    return s;
}

double eval_shift(const ShiftedEval& s, const Grid1D& g, const std::vector<double>& y, int i,
                  double slope_lo, double slope_hi) {
    int j = i + s.base;
    if (j >= 0 && j + 3 < g.n)
        return s.w[0] * y[j] + s.w[1] * y[j + 1] + s.w[2] * y[j + 2] + s.w[3] * y[j + 3];
    double x = g.x(i) + s.off;
    if (x <= g.lo) return y[0] + slope_lo * (x - g.lo);
    if (x >= g.hi) return y[g.n - 1] + slope_hi * (x - g.hi);
    CubicStencil st = make_stencil(g, x);
    return apply_stencil(st, y.data(), g.n, slope_lo, slope_hi);
}

SolutionSlice terminal_slice(const Grid1D& g) {
    SolutionSlice s;
    s.f.resize(g.n);
    s.fx.resize(g.n);
    s.fxx.resize(g.n);
    for (int i = 0; i < g.n; ++i) {
        double x = g.x(i), th = std::tanh(x);
        s.f[i] = log_cosh(x);
        s.fx[i] = th;
        s.fxx[i] = 1.0 - th * th;
    }
    return s;
}

// One Gaussian smoothing step of variance var. The derivatives propagate by
// differentiating e^{mb phi(a,x)} = E e^{mb phi(b, x+sZ)}:
//   fx(a)  = E~ fx(b),   fxx(a) = E~ [fxx(b) + mb fx(b)^2] - mb fx(a)^2,
// with E~ the reweighted quadrature expectation. expm1/log1p keep the value
// update stable down to mb -> 0.
SolutionSlice recursion_substep(const Grid1D& g, const SolutionSlice& next, double mb, double var,
                                int quad_order) {
    double s = std::sqrt(var);
    double slo = (next.f[1] - next.f[0]) / g.dx();
    double shi = (next.f[g.n - 1] - next.f[g.n - 2]) / g.dx();
    GaussHermite gh(quad_order);
    size_t nq = gh.z.size();
    std::vector<ShiftedEval> sh(nq);
    for (size_t k = 0; k < nq; ++k) sh[k] = make_shift(g, s * gh.z[k]);
    SolutionSlice out;
    out.f.resize(g.n);
    out.fx.resize(g.n);
    out.fxx.resize(g.n);
    std::vector<double> vf(nq), vx(nq), vxx(nq);
    for (int i = 0; i < g.n; ++i) {
        for (size_t k = 0; k < nq; ++k) {
            vf[k] = eval_shift(sh[k], g, next.f, i, slo, shi);
            vx[k] = eval_shift(sh[k], g, next.fx, i, 0.0, 0.0);
            vxx[k] = eval_shift(sh[k], g, next.fxx, i, 0.0, 0.0);
        }
        if (mb == 0.0) {
            double af = 0, ax = 0, axx = 0;
            for (size_t k = 0; k < nq; ++k) {
                af += gh.w[k] * vf[k];
                ax += gh.w[k] * vx[k];
                axx += gh.w[k] * vxx[k];
            }
            out.f[i] = af;
            out.fx[i] = ax;
            out.fxx[i] = axx;
        } else {
            double c = vf[0];
            for (size_t k = 1; k < nq; ++k) c = std::max(c, vf[k]);
            double em = 0;
            for (size_t k = 0; k < nq; ++k) em += gh.w[k] * std::expm1(mb * (vf[k] - c));
            double acc = 1.0 + em;
            out.f[i] = c + std::log1p(em) / mb;
            double ax = 0, axx = 0;
            for (size_t k = 0; k < nq; ++k) {
                double wt = gh.w[k] * std::exp(mb * (vf[k] - c)) / acc;
                ax += wt * vx[k];
                axx += wt * (vxx[k] + mb * vx[k] * vx[k]);
            }
            out.fx[i] = ax;
            out.fxx[i] = axx - mb * ax * ax;
        }
    }
    return out;
}

}  // namespace

double auto_domain_halfwidth(const MixtureSpec& spec) {
    return 10.0 + std::fabs(spec.h) + 4.0 * std::sqrt(spec.xi(1.0, 1));
}

SolutionSlice recursion_step(const Grid1D& g, const SolutionSlice& next, double mb, double var,
                             int quad_order) {
    if (var < 0) throw std::invalid_argument("negative step variance");
    if (var == 0.0) return next;
    // Splitting is exact for constant mb (the step is a heat flow after the
    // exponential substitution); capping each substep keeps the quadrature in
    // its fast-convergence regime.
    const double v_max = 1.0;
    int n_sub = std::max(1, (int)std::ceil(var / v_max));
    SolutionSlice cur = next;
    for (int s = 0; s < n_sub; ++s) cur = recursion_substep(g, cur, mb, var / n_sub, quad_order);
    return cur;
}

double ParisiSolution::edge_slope_lo(const std::vector<double>& s) const {
    return (s[1] - s[0]) / grid.dx();
}
double ParisiSolution::edge_slope_hi(const std::vector<double>& s) const {
    return (s[grid.n - 1] - s[grid.n - 2]) / grid.dx();
}

double ParisiSolution::mbar_at(double t) const {
    if (t < -1e-12 || t > 1.0 + 1e-12) throw std::invalid_argument("time outside [0,1]");
    for (size_t j = 0; j + 1 < knots.size(); ++j)
        if (t < knots[j + 1] + 1e-14) return mbar[j];
    return mbar.back();
}

SolutionSlice ParisiSolution::slice(double t) const {
    if (t < -1e-12 || t > 1.0 + 1e-12) throw std::invalid_argument("time outside [0,1]");
    t = std::min(1.0, std::max(0.0, t));
    for (size_t j = 0; j < knots.size(); ++j)
        if (std::fabs(t - knots[j]) < 1e-13) return phi[j];
    if (method != "recursion")
        throw std::runtime_error("slice at non-knot time requires the recursion solution");
    size_t j = 0;
    while (t > knots[j + 1]) ++j;
    double var = spec.xi(knots[j + 1], 1) - spec.xi(t, 1);
    return recursion_step(grid, phi[j + 1], mbar[j], var, quad);
}

double slice_value(const ParisiSolution& sol, const SolutionSlice& s, double x) {
    return interp_cubic(sol.grid, s.f, x, sol.edge_slope_lo(s.f), sol.edge_slope_hi(s.f));
}
double slice_dx(const ParisiSolution& sol, const SolutionSlice& s, double x) {
    return interp_cubic(sol.grid, s.fx, x, 0.0, 0.0);
}
double slice_dxx(const ParisiSolution& sol, const SolutionSlice& s, double x) {
    return interp_cubic(sol.grid, s.fxx, x, 0.0, 0.0);
}

double ParisiSolution::value(double t, double x) const {
    SolutionSlice s = slice(t);
    return slice_value(*this, s, x);
}

namespace {

ParisiSolution make_shell(const MixtureSpec& spec, const AtomicMeasure& nu,
                          const PdeGridParams& params, const std::vector<double>& extra) {
    MixtureSpec sp = spec;
    sp.validate();
    ParisiSolution sol(sp, nu);
    double L = params.L > 0 ? params.L : auto_domain_halfwidth(sp);
    if (params.n < 16) throw std::invalid_argument("grid too small");
    sol.grid = Grid1D{-L, L, params.n};
    sol.knots = assemble_knots(nu, extra);
    sol.mbar = interval_cdf(nu, sol.knots);
    sol.quad = params.quad;
    sol.phi.assign(sol.knots.size(), {});
    sol.phi.back() = terminal_slice(sol.grid);
    return sol;
}

void check_edge_slopes(const ParisiSolution& sol) {
    const auto& s = sol.phi.front().f;
    double lo = sol.edge_slope_lo(s), hi = sol.edge_slope_hi(s);
    if (std::fabs(lo + 1.0) > 1e-8 || std::fabs(hi - 1.0) > 1e-8) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "domain truncation detected: edge slopes %.3e / %.3e (want -1 / +1); "
                      "enlarge the domain half-width",
                      lo, hi);
        throw std::runtime_error(buf);
    }
}

}  // namespace

ParisiSolution solve_recursion(const MixtureSpec& spec, const AtomicMeasure& nu,
                               const PdeGridParams& params, const std::vector<double>& extra_knots) {
    ParisiSolution sol = make_shell(spec, nu, params, extra_knots);
    sol.method = "recursion";
    for (int j = (int)sol.knots.size() - 2; j >= 0; --j) {
        double var = sol.spec.xi(sol.knots[j + 1], 1) - sol.spec.xi(sol.knots[j], 1);
        sol.phi[j] = recursion_step(sol.grid, sol.phi[j + 1], sol.mbar[j], var, sol.quad);
    }
    check_edge_slopes(sol);
    return sol;
}

namespace {

// IMEX Crank-Nicolson in the forward variable tau = b - t:
//   d(phi)/d(tau) = xi''/2 (phi_xx + mb phi_x^2),
// diffusion implicit, nonlinearity at the midpoint via a predictor half-step.
// Neumann rows impose phi_x = -1 / +1 through ghost nodes.
struct FdWork {
    std::vector<double> a, b, c, scratch;
};

void fd_apply_rhs(const Grid1D& g, const std::vector<double>& y, double theta, double nl_w,
                  double mb, double xipp, std::vector<double>& out) {
    // out = (I + theta*dx^2*Dxx_ghost) y + nl_w * xi''/2 * mb * (y_x)^2
    int n = g.n;
    double dx = g.dx();
    for (int i = 0; i < n; ++i) {
        double lap;
        if (i == 0)
            lap = 2.0 * (y[1] - y[0] + dx) / (dx * dx);
        else if (i == n - 1)
            lap = 2.0 * (y[n - 2] - y[n - 1] + dx) / (dx * dx);
        else
            lap = (y[i - 1] - 2.0 * y[i] + y[i + 1]) / (dx * dx);
        double d1 = (i == 0) ? -1.0 : (i == n - 1) ? 1.0 : (y[i + 1] - y[i - 1]) / (2.0 * dx);
        out[i] = y[i] + theta * (dx * dx) * lap + nl_w * 0.5 * xipp * mb * d1 * d1;
    }
}

void fd_solve_implicit(const Grid1D& g, double theta, FdWork& w, std::vector<double>& rhs) {
    // (I - theta*dx^2*Dxx_ghost) x = rhs; ghost constants moved to the rhs
    int n = g.n;
    double dx = g.dx();
    w.a.assign(n, -theta);
    w.b.assign(n, 1.0 + 2.0 * theta);
    w.c.assign(n, -theta);
    w.c[0] = -2.0 * theta;
    w.a[n - 1] = -2.0 * theta;
    rhs[0] += 2.0 * theta * dx;
    rhs[n - 1] += 2.0 * theta * dx;
    solve_tridiag(w.a, w.b, w.c, rhs, w.scratch);
}

std::vector<double> fd_interval(const Grid1D& g, const std::vector<double>& phi_b, double mb,
                                const MixtureSpec& spec, double ta, double tb, double dt_target) {
    if (tb <= ta) return phi_b;
    int n_steps = std::max(1, (int)std::ceil((tb - ta) / dt_target));
    double dt = (tb - ta) / n_steps;
    std::vector<double> cur = phi_b, half(g.n), rhs(g.n), rhs2(g.n);
    FdWork w;
    for (int s = 0; s < n_steps; ++s) {
        double t1 = tb - s * dt;    // current time (known slice)
        double tm = t1 - 0.5 * dt;  // midpoint
        double xipp = spec.xi(tm, 2);
        double theta_half = 0.25 * dt * 0.5 * xipp / (g.dx() * g.dx());
        double theta_full = 0.5 * dt * 0.5 * xipp / (g.dx() * g.dx());
        // predictor: IMEX Euler over dt/2
        fd_apply_rhs(g, cur, theta_half, 0.5 * dt, mb, xipp, rhs);
        fd_solve_implicit(g, theta_half, w, rhs);
        half = rhs;
        // corrector: CN diffusion, midpoint nonlinearity
        fd_apply_rhs(g, cur, theta_full, 0.0, mb, xipp, rhs2);
        for (int i = 0; i < g.n; ++i) {
            double d1 = (i == 0) ? -1.0
                        : (i == g.n - 1) ? 1.0
                                         : (half[i + 1] - half[i - 1]) / (2.0 * g.dx());
            rhs2[i] += dt * 0.5 * xipp * mb * d1 * d1;
        }
        fd_solve_implicit(g, theta_full, w, rhs2);
        cur = rhs2;
    }
    return cur;
}

}  // namespace

ParisiSolution solve_fd(const MixtureSpec& spec, const AtomicMeasure& nu,
                        const PdeGridParams& params, const std::vector<double>& extra_knots) {
    ParisiSolution sol = make_shell(spec, nu, params, extra_knots);
    sol.method = "fd";
    for (int j = (int)sol.knots.size() - 2; j >= 0; --j) {
        sol.phi[j].f = fd_interval(sol.grid, sol.phi[j + 1].f, sol.mbar[j], sol.spec, sol.knots[j],
                                   sol.knots[j + 1], params.fd_dt);
        // derivative slices by node differences (this route is the cross-check)
        sol.phi[j].fx.resize(sol.grid.n);
        sol.phi[j].fxx.resize(sol.grid.n);
        for (int i = 0; i < sol.grid.n; ++i) {
            sol.phi[j].fx[i] = node_deriv1(sol.grid, sol.phi[j].f, i);
            sol.phi[j].fxx[i] = node_deriv2(sol.grid, sol.phi[j].f, i);
        }
    }
    check_edge_slopes(sol);
    return sol;
}

// ---- local field process -------------------------------------------------

namespace {

// cached phi_x slices on [0, q] for drift evaluation, linear in t between slices
struct DriftField {
    Grid1D grid;
    std::vector<double> times;
    std::vector<std::vector<double>> phix;

    std::pair<size_t, double> locate(double t) const {
        size_t hi = std::upper_bound(times.begin(), times.end(), t) - times.begin();
        size_t seg = std::min(std::max(hi, (size_t)1) - 1, times.size() - 2);
        double t0 = times[seg], t1 = times[seg + 1];
        double u = (t1 > t0) ? std::min(1.0, std::max(0.0, (t - t0) / (t1 - t0))) : 0.0;
        return {seg, u};
    }

    double eval(double t, double x) const {
        auto [seg, u] = locate(t);
        CubicStencil st = make_stencil(grid, x);
        double a = apply_stencil(st, phix[seg].data(), grid.n, 0.0, 0.0);
        double b = apply_stencil(st, phix[seg + 1].data(), grid.n, 0.0, 0.0);
        return (1.0 - u) * a + u * b;
    }

    // phi_x(t, x_i) for every grid node at once
    void eval_nodes(double t, std::vector<double>& out) const {
        auto [seg, u] = locate(t);
        out.resize(grid.n);
        for (int i = 0; i < grid.n; ++i)
            out[i] = (1.0 - u) * phix[seg][i] + u * phix[seg + 1][i];
    }
};

// Slices come from one backward march from q over knot-aligned sub-intervals,
// so the whole cache costs a single traversal of [0, q].
DriftField build_drift(const ParisiSolution& sol, double q, int n_slices) {
    DriftField d;
    d.grid = sol.grid;
    n_slices = std::max(2, n_slices);
    std::vector<double> ts;
    for (int k = 0; k < n_slices; ++k) ts.push_back(q * k / (n_slices - 1.0));
    for (double t : sol.knots)
        if (t > 1e-14 && t < q - 1e-14) ts.push_back(t);
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end(),
                         [](double a, double b) { return std::fabs(a - b) < 1e-14; }),
             ts.end());
    if (ts.size() == 1) ts.push_back(ts[0]);  // degenerate horizon q ~ 0
    size_t m = ts.size();
    std::vector<SolutionSlice> sl(m);
    sl[m - 1] = sol.slice(q);
    for (size_t k = m - 1; k-- > 0;) {
        double mb = sol.nu.cdf(0.5 * (ts[k] + ts[k + 1]));
        double var = sol.spec.xi(ts[k + 1], 1) - sol.spec.xi(ts[k], 1);
        sl[k] = recursion_step(sol.grid, sl[k + 1], mb, var, sol.quad);
    }
    d.times = ts;
    d.phix.resize(m);
    for (size_t k = 0; k < m; ++k) d.phix[k] = std::move(sl[k].fx);
    return d;
}

LocalFieldStats stats_from_pointmass(const ParisiSolution& sol, double q) {
    LocalFieldStats st;
    st.q = q;
    SolutionSlice s = sol.slice(q);
    double px = slice_dx(sol, s, sol.spec.h);
    double pxx = slice_dxx(sol, s, sol.spec.h);
    st.e_phix = px;
    st.e_phix_sq = px * px;
    st.e_phixx_sq = pxx * pxx;
    st.method = "point";
    return st;
}

LocalFieldStats stats_mc(const ParisiSolution& sol, double q, const LocalFieldOptions& opts) {
    const MixtureSpec& spec = sol.spec;
    int n_steps = opts.n_steps > 0 ? opts.n_steps : 1000;
    if (opts.n_paths < 1000) throw std::invalid_argument("need at least 1000 paths");
    DriftField drift = build_drift(sol, q, opts.n_drift_slices);
    SolutionSlice sf = sol.slice(q);
    double ds = q / n_steps;

    const int n_blocks = 20;
    std::vector<double> b_px(n_blocks, 0.0), b_px2(n_blocks, 0.0), b_pxx2(n_blocks, 0.0);
    std::vector<int> b_cnt(n_blocks, 0);
    RngStream rng(opts.seed, 0x10c4);
    for (int p = 0; p < opts.n_paths; ++p) {
        double x = spec.h;
        for (int s = 0; s < n_steps; ++s) {
            double t = s * ds;
            double mb = sol.mbar_at(t);
            double xipp = spec.xi(t + 0.5 * ds, 2);
            double b = xipp * mb * drift.eval(t, x);
            x += b * ds + std::sqrt(xipp * ds) * rng.normal();
        }
        double px = slice_dx(sol, sf, x);
        double pxx = slice_dxx(sol, sf, x);
        int blk = p % n_blocks;
        b_px[blk] += px;
        b_px2[blk] += px * px;
        b_pxx2[blk] += pxx * pxx;
        b_cnt[blk] += 1;
    }
    auto combine = [&](std::vector<double>& sums, double* mean, double* se) {
        std::vector<double> m(n_blocks);
        double tot = 0.0;
        for (int b = 0; b < n_blocks; ++b) {
            m[b] = sums[b] / b_cnt[b];
            tot += m[b];
        }
        *mean = tot / n_blocks;
        double var = 0.0;
        for (int b = 0; b < n_blocks; ++b) var += (m[b] - *mean) * (m[b] - *mean);
        *se = std::sqrt(var / (n_blocks * (n_blocks - 1.0)));
    };
    LocalFieldStats st;
    st.q = q;
    st.n_paths = opts.n_paths;
    st.method = "mc";
    combine(b_px, &st.e_phix, &st.se_phix);
    combine(b_px2, &st.e_phix_sq, &st.se_phix_sq);
    combine(b_pxx2, &st.e_phixx_sq, &st.se_phixx_sq);
    return st;
}

// Crank-Nicolson Fokker-Planck march of the X_s density, central advection.
LocalFieldStats stats_density(const ParisiSolution& sol, double q, const LocalFieldOptions& opts) {
    const MixtureSpec& spec = sol.spec;
    const Grid1D& g = sol.grid;
    int n = g.n;
    double dx = g.dx();
    DriftField drift = build_drift(sol, q, opts.n_drift_slices);

    // start from a short exactly-Gaussian stretch so the initial density is resolved
    double var0_target = 9.0 * dx * dx;
    double t0 = 0.0;
    if (spec.xi(q, 1) - spec.xi(0.0, 1) <= var0_target) {
        t0 = q;
    } else {
        double lo = 0.0, hi = q;
        for (int it = 0; it < 200; ++it) {
            double mid = 0.5 * (lo + hi);
            if (spec.xi(mid, 1) - spec.xi(0.0, 1) < var0_target)
                lo = mid;
            else
                hi = mid;
        }
        t0 = lo;
    }
    double var0 = spec.xi(t0, 1) - spec.xi(0.0, 1);
    if (var0 <= 0.0) {
        // xi' has not moved yet, so the field is still the deterministic start
        LocalFieldStats st = stats_from_pointmass(sol, q);
        st.method = "density";
        return st;
    }
    double mean0 = spec.h + sol.mbar_at(0.5 * t0) * drift.eval(0.0, spec.h) * var0;
    if (t0 >= q) {
        // the whole horizon fits in the closed-form Gaussian stretch; the grid
        // cannot resolve such a narrow density, so integrate it by quadrature
        SolutionSlice sq = sol.slice(q);
        GaussHermite gh(64);
        double s0 = std::sqrt(var0);
        LocalFieldStats st;
        st.q = q;
        st.method = "density";
        for (size_t k = 0; k < gh.z.size(); ++k) {
            double x = mean0 + s0 * gh.z[k];
            double px = slice_dx(sol, sq, x), pxx = slice_dxx(sol, sq, x);
            st.e_phix += gh.w[k] * px;
            st.e_phix_sq += gh.w[k] * px * px;
            st.e_phixx_sq += gh.w[k] * pxx * pxx;
        }
        return st;
    }
    std::vector<double> p(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double z = g.x(i) - mean0;
        p[i] = std::exp(-0.5 * z * z / var0) / std::sqrt(2.0 * M_PI * var0);
    }

    if (t0 < q) {
        double max_xipp = 0.0;
        for (int k = 0; k <= 64; ++k)
            max_xipp = std::max(max_xipp, spec.xi(t0 + (q - t0) * k / 64.0, 2));
        double cfl_dt = 0.45 * dx / std::max(1e-12, max_xipp);  // |b| <= xi'' when |phi_x| <= 1
        int n_steps = opts.n_steps > 0 ? opts.n_steps
                                       : std::max(400, (int)std::ceil((q - t0) / cfl_dt));
        double dt = (q - t0) / n_steps;
        std::vector<double> a(n), b(n), c(n), rhs(n), scratch(n), bdrift(n), flux(n);
        for (int s = 0; s < n_steps; ++s) {
            double tm = t0 + (s + 0.5) * dt;
            double xipp = spec.xi(tm, 2);
            double mb = sol.mbar_at(tm);
            drift.eval_nodes(tm, bdrift);
            for (int i = 0; i < n; ++i) bdrift[i] *= xipp * mb;
            for (int i = 0; i < n; ++i) flux[i] = bdrift[i] * p[i];
            double theta = 0.5 * dt * 0.5 * xipp / (dx * dx);
            for (int i = 0; i < n; ++i) {
                double lap = (i == 0 || i == n - 1)
                                 ? 0.0
                                 : (p[i - 1] - 2.0 * p[i] + p[i + 1]) / (dx * dx);
                double adv = (i == 0 || i == n - 1) ? 0.0 : (flux[i + 1] - flux[i - 1]) / (2.0 * dx);
                rhs[i] = p[i] + theta * dx * dx * lap - dt * adv;
            }
            a.assign(n, -theta);
            b.assign(n, 1.0 + 2.0 * theta);
            c.assign(n, -theta);
            // absorbing edges: the density is negligible there by construction
            b[0] = 1.0;
            c[0] = 0.0;
            rhs[0] = 0.0;
            b[n - 1] = 1.0;
            a[n - 1] = 0.0;
            rhs[n - 1] = 0.0;
            solve_tridiag(a, b, c, rhs, scratch);
            p = rhs;
            double mass = 0.0;
            for (int i = 0; i < n; ++i) mass += p[i];
            mass *= dx;
            for (int i = 0; i < n; ++i) p[i] = std::max(0.0, p[i] / mass);
        }
    }

    SolutionSlice sf = sol.slice(q);
    LocalFieldStats st;
    st.q = q;
    st.method = "density";
    double m1 = 0.0, m2 = 0.0, m3 = 0.0, mass = 0.0;
    for (int i = 0; i < n; ++i) {
        double w = p[i] * dx;
        mass += w;
        m1 += w * sf.fx[i];
        m2 += w * sf.fx[i] * sf.fx[i];
        m3 += w * sf.fxx[i] * sf.fxx[i];
    }
    st.e_phix = m1 / mass;
    st.e_phix_sq = m2 / mass;
    st.e_phixx_sq = m3 / mass;
    return st;
}

}  // namespace

LocalFieldStats local_field_stats(const ParisiSolution& sol, double q, const LocalFieldOptions& opts) {
    if (q < -1e-12 || q > 1.0 + 1e-12) throw std::invalid_argument("q outside [0,1]");
    q = std::min(1.0, std::max(0.0, q));
    if (q == 0.0) {
        LocalFieldStats st = stats_from_pointmass(sol, 0.0);
        st.method = opts.method;
        return st;
    }
    if (opts.method == "mc") return stats_mc(sol, q, opts);
    if (opts.method == "density") return stats_density(sol, q, opts);
    throw std::invalid_argument("unknown local field method: " + opts.method);
}

double replicon_eigenvalue(const ParisiSolution& sol, double q, const LocalFieldStats& stats) {
    return 1.0 - sol.spec.xi(q, 2) * stats.e_phixx_sq;
}

std::string dump_solution(const ParisiSolution& sol) {
    std::ostringstream os;
    os << "# method=" << sol.method << " n=" << sol.grid.n << " L=" << sol.grid.hi
       << " knots=" << sol.knots.size() << "\n";
    for (size_t j = 0; j < sol.knots.size(); ++j) {
        os << "# t=" << sol.knots[j] << " mbar_right=" << (j < sol.mbar.size() ? sol.mbar[j] : -1.0)
           << "\n";
        char buf[96];
        for (int i = 0; i < sol.grid.n; ++i) {
            std::snprintf(buf, sizeof(buf), "%.12e %.12e %.12e %.12e\n", sol.grid.x(i),
                          sol.phi[j].f[i], sol.phi[j].fx[i], sol.phi[j].fxx[i]);
            os << buf;
        }
    }
    return os.str();
}

}  // namespace sg
