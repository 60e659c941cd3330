#include "sg/spherical.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "sg/optim.hpp"
#include "sg/quadrature.hpp"
#include "sg/rng.hpp"

namespace sg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// t xi'(t) - xi(t): antiderivative of t xi''(t)
double xis_anti(const MixtureSpec& spec, double t) { return t * spec.xi(t, 1) - spec.xi(t); }

// Piecewise data for an atomic order parameter: on each piece [knot[j],
// knot[j+1]) the cdf m is constant, so psi(t) = psi(knot[j+1]) +
// m_j (xi'(knot[j+1]) - xi'(t)) and phi(t) is affine. All functionals below
// integrate rational functions of psi exactly on this decomposition.
struct Shape {
    std::vector<double> knot;   // 0 = knot[0] < ... < knot[P] = 1
    std::vector<double> m;      // cdf level per piece, size P
    std::vector<double> xip;    // xi' at knots
    std::vector<double> psi_k;  // psi at knots (psi_k[P] = 0)
    std::vector<double> phi_k;  // phi at knots (phi_k[P] = 0)
};

// atoms ascending in [0,1); levels[j] = nu([0, atoms[j]]), levels.back() = 1
Shape build_shape(const MixtureSpec& spec, const std::vector<double>& atoms,
                  const std::vector<double>& levels) {
    Shape sh;
    sh.knot.push_back(0.0);
    for (double a : atoms)
        if (a > sh.knot.back() + 1e-15) sh.knot.push_back(a);
    if (sh.knot.back() < 1.0 - 1e-15) sh.knot.push_back(1.0);
    int P = static_cast<int>(sh.knot.size()) - 1;
    sh.m.assign(P, 0.0);
    for (int j = 0; j < P; ++j) {
        double t = sh.knot[j];
        double level = 0.0;
        for (size_t i = 0; i < atoms.size(); ++i)
            if (atoms[i] <= t + 1e-14) level = levels[i];
        sh.m[j] = level;
    }
    sh.xip.resize(P + 1);
    for (int j = 0; j <= P; ++j) sh.xip[j] = spec.xi(sh.knot[j], 1);
    sh.psi_k.assign(P + 1, 0.0);
    sh.phi_k.assign(P + 1, 0.0);
    for (int j = P - 1; j >= 0; --j) {
        sh.psi_k[j] = sh.psi_k[j + 1] + sh.m[j] * (sh.xip[j + 1] - sh.xip[j]);
        sh.phi_k[j] = sh.phi_k[j + 1] + sh.m[j] * (sh.knot[j + 1] - sh.knot[j]);
    }
    return sh;
}

Shape shape_of(const MixtureSpec& spec, const AtomicMeasure& nu) {
    std::vector<double> levels(nu.w.size());
    double acc = 0.0;
    for (size_t i = 0; i < nu.w.size(); ++i) {
        acc += nu.w[i];
        levels[i] = acc;
    }
    // normalize so the final level is exactly one; the last piece then has
    // phi(s) = 1 - s identically, which cs_functional relies on
    for (double& v : levels) v /= acc;
    return build_shape(spec, nu.q, levels);
}

int locate(const Shape& sh, double t) {
    int j = static_cast<int>(std::upper_bound(sh.knot.begin(), sh.knot.end(), t) -
                             sh.knot.begin()) -
            1;
    return std::clamp(j, 0, static_cast<int>(sh.m.size()) - 1);
}

double shape_psi(const MixtureSpec& spec, const Shape& sh, double t) {
    int j = locate(sh, t);
    return sh.psi_k[j + 1] + sh.m[j] * (sh.xip[j + 1] - spec.xi(t, 1));
}

double shape_phi(const Shape& sh, double t) {
    int j = locate(sh, t);
    return sh.phi_k[j + 1] + sh.m[j] * (sh.knot[j + 1] - t);
}

// int_a^c xi''(t) / (B - psi(t))^r dt, r in {1,2,3}, exact per piece
double int_pow(const MixtureSpec& spec, const Shape& sh, double a, double c, double B, int r) {
    double acc = 0.0;
    int P = static_cast<int>(sh.m.size());
    for (int j = 0; j < P; ++j) {
        double lo = std::max(a, sh.knot[j]), hi = std::min(c, sh.knot[j + 1]);
        if (hi <= lo) continue;
        double glo = B - shape_psi(spec, sh, lo);
        double ghi = B - shape_psi(spec, sh, hi);
        if (glo <= 0.0 || ghi <= 0.0)
            throw std::domain_error("int_pow: shifted denominator not positive");
        double mj = sh.m[j];
        if (mj < 1e-14) {
            double dxi = spec.xi(hi, 1) - spec.xi(lo, 1);
            acc += dxi / std::pow(glo, r);
        } else if (r == 1) {
            acc += std::log(ghi / glo) / mj;
        } else if (r == 2) {
            acc += (1.0 / glo - 1.0 / ghi) / mj;
        } else {
            acc += 0.5 * (1.0 / (glo * glo) - 1.0 / (ghi * ghi)) / mj;
        }
    }
    return acc;
}

double int_t_xi2_m(const MixtureSpec& spec, const Shape& sh) {
    double acc = 0.0;
    for (size_t j = 0; j < sh.m.size(); ++j)
        acc += sh.m[j] * (xis_anti(spec, sh.knot[j + 1]) - xis_anti(spec, sh.knot[j]));
    return acc;
}

double int_xi2_phi(const MixtureSpec& spec, const Shape& sh) {
    double acc = 0.0;
    for (size_t j = 0; j < sh.m.size(); ++j) {
        double lo = sh.knot[j], hi = sh.knot[j + 1];
        double alpha = sh.phi_k[j + 1] + sh.m[j] * hi;  // phi(t) = alpha - m t
        acc += alpha * (sh.xip[j + 1] - sh.xip[j]) -
               sh.m[j] * (xis_anti(spec, hi) - xis_anti(spec, lo));
    }
    return acc;
}

// int_0^1 (1/phi - 1/(1-s)) ds; the last piece has phi = 1-s and drops out
double int_phi_defect(const Shape& sh) {
    double acc = 0.0;
    int P = static_cast<int>(sh.m.size());
    for (int j = 0; j < P; ++j) {
        double lo = sh.knot[j], hi = sh.knot[j + 1];
        if (j == P - 1) break;  // phi(s) = 1 - s exactly: integrand vanishes
        double plo = shape_phi(sh, lo), phi_hi = shape_phi(sh, hi);
        double mj = sh.m[j];
        double log_ref = std::log((1.0 - lo) / (1.0 - hi));
        if (mj < 1e-14)
            acc += (hi - lo) / plo - log_ref;
        else
            acc += std::log(plo / phi_hi) / mj - log_ref;
    }
    return acc;
}

// xi'(1) - xi'(q_EA) + 1/(1 - q_EA): the stationarity value of b
double b_formula(const MixtureSpec& spec, double q_ea) {
    return spec.xi(1.0, 1) - spec.xi(q_ea, 1) + 1.0 / (1.0 - q_ea);
}

// the spherical Parisi display (two-replica normalization, = 2 * sph_parisi)
double display_ps(const MixtureSpec& spec, const Shape& sh, double b) {
    if (b < 1.0 || b - sh.psi_k[0] <= 0.0) return kInf;
    double val = spec.h * spec.h / (b - sh.psi_k[0]);
    val += int_pow(spec, sh, 0.0, 1.0, b, 1);
    val += b - 1.0 - std::log(b);
    val -= int_t_xi2_m(spec, sh);
    return val;
}

double inner_min_b(const MixtureSpec& spec, const Shape& sh, double q_ea, double* fmin) {
    double lo = std::max(1.0, sh.psi_k[0]) + 1e-9;
    double hi = spec.xi(1.0, 1) + 2.0 + 1.0 / (1.0 - q_ea);
    return golden_min([&](double b) { return display_ps(spec, sh, b); }, lo, hi, 1e-11, fmin);
}

// d/dlambda P(0, s): the q-optimality defect, also -G'(s)/xi''(s)
double opt_defect(const MixtureSpec& spec, const Shape& sh, double b, double s) {
    double h = spec.h;
    return h * h / ((b - sh.psi_k[0]) * (b - sh.psi_k[0])) + int_pow(spec, sh, 0.0, s, b, 2) - s;
}

struct PolishState {
    std::vector<double> atoms;   // support atoms, ascending
    std::vector<double> levels;  // cdf at atoms, levels.back() = 1
    bool pin0 = false;           // first atom held at zero (h = 0)
};

// Square system with b eliminated through b_formula(q_EA): q-optimality at
// every free atom, phi-psi at all but the top atom (where it reduces to the
// b equation).
std::vector<double> polish_residual(const MixtureSpec& spec, const PolishState& st,
                                    const std::vector<double>& x) {
    int m = static_cast<int>(st.atoms.size());
    int na = m - (st.pin0 ? 1 : 0);
    std::vector<double> atoms(st.atoms), levels(st.levels);
    for (int i = 0; i < na; ++i) atoms[(st.pin0 ? 1 : 0) + i] = x[i];
    for (int i = 0; i + 1 < m; ++i) levels[i] = x[na + i];
    levels[m - 1] = 1.0;

    auto penalty = [&](double viol) {
        return std::vector<double>(x.size(), 1e3 * (1.0 + viol));
    };
    double prev = st.pin0 ? 0.0 : 1e-12;
    for (int i = (st.pin0 ? 1 : 0); i < m; ++i) {
        if (atoms[i] <= prev || atoms[i] > 1.0 - 1e-6) return penalty(std::abs(atoms[i]));
        prev = atoms[i];
    }
    double lprev = 0.0;
    for (int i = 0; i < m; ++i) {
        if (levels[i] <= lprev || levels[i] > 1.0 + 1e-12) return penalty(std::abs(levels[i]));
        lprev = levels[i];
    }

    Shape sh = build_shape(spec, atoms, levels);
    double b = b_formula(spec, atoms[m - 1]);
    if (b - sh.psi_k[0] <= 1e-12 || b < 1.0) return penalty(sh.psi_k[0] - b);

    std::vector<double> F;
    F.reserve(x.size());
    for (int i = (st.pin0 ? 1 : 0); i < m; ++i) F.push_back(-opt_defect(spec, sh, b, atoms[i]));
    for (int i = 0; i + 1 < m; ++i) {
        double q = atoms[i];
        F.push_back(shape_phi(sh, q) - 1.0 / (b - shape_psi(spec, sh, q)));
    }
    return F;
}

// Appendix first-variation function G(t) = int_t^1 xi''(s) * defect(s) ds;
// its minimum must sit on the support of the optimizer. defect is smooth
// within pieces, so per-piece adaptive quadrature is exact enough here.
struct GCurve {
    const MixtureSpec& spec;
    const Shape& sh;
    double b;
    std::vector<double> g_knot;  // G at shape knots

    GCurve(const MixtureSpec& s, const Shape& shape, double b_) : spec(s), sh(shape), b(b_) {
        int P = static_cast<int>(sh.m.size());
        g_knot.assign(P + 1, 0.0);
        for (int j = P - 1; j >= 0; --j)
            g_knot[j] = g_knot[j + 1] + segment(sh.knot[j], sh.knot[j + 1]);
    }
    double segment(double a, double c) const {
        if (c <= a) return 0.0;
        return integrate_adaptive(
            [&](double s) { return spec.xi(s, 2) * opt_defect(spec, sh, b, s); }, a, c, 1e-12);
    }
    double operator()(double t) const {
        int j = locate(sh, t);
        return g_knot[j + 1] + segment(t, sh.knot[j + 1]);
    }
};

}  // namespace

double psi_nu(const MixtureSpec& spec, const AtomicMeasure& nu, double t) {
    Shape sh = shape_of(spec, nu);
    return shape_psi(spec, sh, t);
}

double phi_nu(const MixtureSpec& spec, const AtomicMeasure& nu, double t) {
    Shape sh = shape_of(spec, nu);
    return shape_phi(sh, t);
}

double cs_functional(const MixtureSpec& spec, const AtomicMeasure& nu) {
    spec.validate();
    if (nu.max_atom() > 1.0 - 1e-12)
        throw std::domain_error("cs_functional: top atom at 1 degenerates phi");
    Shape sh = shape_of(spec, nu);
    double val = int_xi2_phi(spec, sh) + int_phi_defect(sh) + spec.h * spec.h * sh.phi_k[0];
    return 0.5 * val;
}

double sph_parisi(const MixtureSpec& spec, const SphericalAnsatz& ansatz) {
    spec.validate();
    Shape sh = shape_of(spec, ansatz.nu);
    return 0.5 * display_ps(spec, sh, ansatz.b);
}

double replicon_sph(const MixtureSpec& spec, const AtomicMeasure& nu, double q) {
    Shape sh = shape_of(spec, nu);
    double phi = shape_phi(sh, q);
    if (phi <= 0.0) throw std::domain_error("replicon_sph: phi vanishes at q");
    return 1.0 / (phi * phi) - spec.xi(q, 2);
}

bool atom_criterion_pure_p(const MixtureSpec& spec, double* g_max, double* s_max) {
    spec.validate();
    if (spec.h != 0.0)
        throw std::invalid_argument("atom_criterion_pure_p: requires h = 0");
    auto g = [&](double s) { return spec.xi(s) + std::log1p(-s) + s; };
    const int n = 4000;
    double best_s = 0.5, best_g = -kInf;
    for (int i = 1; i <= n; ++i) {
        double s = static_cast<double>(i) / (n + 1);
        double v = g(s);
        if (v > best_g) {
            best_g = v;
            best_s = s;
        }
    }
    double step = 1.0 / (n + 1);
    double lo = std::max(0.0, best_s - step), hi = std::min(1.0 - 1e-12, best_s + step);
    double fneg = 0.0;
    double s_ref = golden_min([&](double s) { return -g(s); }, lo, hi, 1e-12, &fneg);
    if (-fneg > best_g) {
        best_g = -fneg;
        best_s = s_ref;
    }
    if (g_max) *g_max = best_g;
    if (s_max) *s_max = best_s;
    return best_g < 0.0;
}

SphericalOptReport minimize_spherical(const MixtureSpec& spec, int k, const SphOptOptions& opts) {
    spec.validate();
    if (k < 1) throw std::invalid_argument("minimize_spherical: k must be positive");

    auto objective = [&](const std::vector<double>& theta) {
        AtomicMeasure nu = measure_from_theta(theta, k);
        if (nu.max_atom() > 1.0 - 1e-9) return 1e6;
        Shape sh = shape_of(spec, nu);
        double fmin = kInf;
        inner_min_b(spec, sh, nu.max_atom(), &fmin);
        return fmin;
    };

    struct Start {
        std::vector<double> theta;
        double value = 0.0;
        bool converged = false;
    };
    RngStream rng(opts.seed, 0x5f3e);
    std::vector<Start> starts;
    int total_eval = 0;
    for (int s = 0; s < opts.n_starts; ++s) {
        std::vector<double> theta(2 * k);
        for (int i = 0; i < k; ++i) {
            double target = (i + 0.6 + 0.3 * (rng.uniform() - 0.5)) / (k + 0.5);
            theta[i] = std::log(target / (1.0 - target));
            theta[k + i] = 0.5 * (rng.uniform() - 0.5);
        }
        NmResult r = nelder_mead(objective, theta, std::vector<double>(2 * k, 0.8), 1e-12,
                                 opts.max_eval);
        NmResult r2 = nelder_mead(objective, r.x, std::vector<double>(2 * k, 0.05), 1e-13,
                                  opts.max_eval / 2);
        starts.push_back({r2.x, r2.fval, r.converged && r2.converged});
        total_eval += r.n_eval + r2.n_eval;
    }
    std::sort(starts.begin(), starts.end(),
              [](const Start& a, const Start& b) { return a.value < b.value; });
    int n_top = std::min<int>(3, starts.size());
    double spread = 0.5 * (starts[n_top - 1].value - starts[0].value);

    AtomicMeasure nu = measure_from_theta(starts[0].theta, k).simplified(opts.merge_tol, 1e-8);

    // Newton polish of the stationarity system on the simplified support
    PolishState st;
    st.atoms = nu.q;
    st.levels.assign(nu.w.size(), 0.0);
    double acc = 0.0;
    for (size_t i = 0; i < nu.w.size(); ++i) {
        acc += nu.w[i];
        st.levels[i] = acc;
    }
    st.levels.back() = 1.0;
    st.pin0 = (spec.h == 0.0 && st.atoms.front() < 1e-3);
    if (st.pin0) st.atoms.front() = 0.0;
    int m = static_cast<int>(st.atoms.size());
    int na = m - (st.pin0 ? 1 : 0);
    bool polish_ok = true;
    if (na + m - 1 > 0) {
        std::vector<double> x;
        for (int i = (st.pin0 ? 1 : 0); i < m; ++i) x.push_back(st.atoms[i]);
        for (int i = 0; i + 1 < m; ++i) x.push_back(st.levels[i]);
        auto F = [&](const std::vector<double>& xx) { return polish_residual(spec, st, xx); };
        double res = newton_system(F, x, 1e-12, 60);
        polish_ok = res < 1e-8;
        if (polish_ok) {
            for (int i = 0; i < na; ++i) st.atoms[(st.pin0 ? 1 : 0) + i] = x[i];
            for (int i = 0; i + 1 < m; ++i) st.levels[i] = x[na + i];
        }
    }

    std::vector<double> w(m);
    double prevl = 0.0;
    for (int i = 0; i < m; ++i) {
        w[i] = st.levels[i] - prevl;
        prevl = st.levels[i];
    }
    AtomicMeasure mu(st.atoms, w);
    Shape sh = build_shape(spec, st.atoms, st.levels);
    double b = b_formula(spec, st.atoms[m - 1]);

    SphericalOptReport rep{SphericalAnsatz{mu, b}};
    rep.cs_value = cs_functional(spec, mu);
    rep.ps_value = 0.5 * display_ps(spec, sh, b);
    rep.b_residual = b - b_formula(spec, mu.max_atom());
    rep.margin_psi = b - sh.psi_k[0];
    rep.margin_one = b - 1.0;
    for (int i = 0; i < m; ++i) {
        double q = st.atoms[i];
        rep.q_opt_residual.push_back(-opt_defect(spec, sh, b, q));
        rep.phi_psi_residual.push_back(shape_phi(sh, q) - 1.0 / (b - shape_psi(spec, sh, q)));
        double phi = shape_phi(sh, q);
        rep.replicon.push_back(1.0 / (phi * phi) - spec.xi(q, 2));
    }

    GCurve gc(spec, sh, b);
    double grid_min = kInf;
    for (int i = 0; i < opts.g_grid_n; ++i) {
        double t = static_cast<double>(i) / (opts.g_grid_n - 1);
        grid_min = std::min(grid_min, gc(t));
    }
    double atom_min = kInf;
    for (double q : st.atoms) atom_min = std::min(atom_min, gc(q));
    rep.g_diag = {grid_min, atom_min, atom_min - grid_min,
                  atom_min - grid_min <= opts.g_tol};

    rep.converged = starts[0].converged && polish_ok;
    rep.multistart_spread = spread;
    rep.n_eval = total_eval;
    return rep;
}

double gt_value_sph(const MixtureSpec& spec, const SphericalOptReport& report, double lambda,
                    double q) {
    if (q < 0.0 || q > 1.0) throw std::invalid_argument("gt_value_sph: q outside [0,1]");
    const double b = report.minimizer.b, h = spec.h;
    Shape sh = shape_of(spec, report.minimizer.nu);
    if (b - std::abs(lambda) - sh.psi_k[0] <= 0.0) return kInf;
    double bm = b - lambda, bp = b + lambda;
    double val = std::log(b * b / (b * b - lambda * lambda));
    val += int_pow(spec, sh, 0.0, q, bm, 1);
    val += 0.5 * (int_pow(spec, sh, q, 1.0, bm, 1) + int_pow(spec, sh, q, 1.0, bp, 1));
    val += -lambda * q + b - 1.0 - std::log(b);
    val -= int_t_xi2_m(spec, sh);
    val += h * h / (bm - sh.psi_k[0]);
    return val;
}

double gt_dlambda_sph(const MixtureSpec& spec, const SphericalOptReport& report, double lambda,
                      double q) {
    if (q < 0.0 || q > 1.0) throw std::invalid_argument("gt_dlambda_sph: q outside [0,1]");
    const double b = report.minimizer.b, h = spec.h;
    Shape sh = shape_of(spec, report.minimizer.nu);
    if (b - std::abs(lambda) - sh.psi_k[0] <= 0.0)
        throw std::domain_error("gt_dlambda_sph: inadmissible lambda");
    double bm = b - lambda, bp = b + lambda;
    double val = 2.0 * lambda / (b * b - lambda * lambda);
    val += int_pow(spec, sh, 0.0, q, bm, 2);
    val += 0.5 * (int_pow(spec, sh, q, 1.0, bm, 2) - int_pow(spec, sh, q, 1.0, bp, 2));
    val += -q;
    double g0 = bm - sh.psi_k[0];
    val += h * h / (g0 * g0);
    return val;
}

double gt_d2lambda_sph(const MixtureSpec& spec, const SphericalOptReport& report, double lambda,
                       double q) {
    if (q < 0.0 || q > 1.0) throw std::invalid_argument("gt_d2lambda_sph: q outside [0,1]");
    const double b = report.minimizer.b, h = spec.h;
    Shape sh = shape_of(spec, report.minimizer.nu);
    if (b - std::abs(lambda) - sh.psi_k[0] <= 0.0)
        throw std::domain_error("gt_d2lambda_sph: inadmissible lambda");
    double bm = b - lambda, bp = b + lambda;
    double b2l = b * b - lambda * lambda;
    double val = 2.0 * (b * b + lambda * lambda) / (b2l * b2l);
    val += 2.0 * int_pow(spec, sh, 0.0, q, bm, 3);
    val += int_pow(spec, sh, q, 1.0, bm, 3) + int_pow(spec, sh, q, 1.0, bp, 3);
    double g0 = bm - sh.psi_k[0];
    val += 2.0 * h * h / (g0 * g0 * g0);
    return val;
}

std::optional<SphBarrier> barrier_search_sph(const MixtureSpec& spec,
                                             const SphericalOptReport& report, double q_star,
                                             const SphBarrierOptions& opts) {
    const AtomicMeasure& mu = report.minimizer.nu;
    int idx = -1;
    for (int i = 0; i < mu.k(); ++i)
        if (std::abs(mu.q[i] - q_star) < 1e-9) idx = i;
    if (idx < 0)
        throw std::invalid_argument("barrier_search_sph: q_star is not a support atom");
    if (report.replicon[idx] <= 0.0) return std::nullopt;

    const double b = report.minimizer.b;
    Shape sh = shape_of(spec, mu);
    double lam_max = 0.999 * (b - sh.psi_k[0]);
    double two_ps = 2.0 * report.ps_value;

    // Hessian of P at (0, q*): [[a, c], [c, 0]] has a negative eigenpair
    // whenever the mixed partial c = xi''(b-psi)^{-2} - 1 is nonzero
    double hess_a = gt_d2lambda_sph(spec, report, 0.0, q_star);
    double gq = b - shape_psi(spec, sh, q_star);
    double hess_b = spec.xi(q_star, 2) / (gq * gq) - 1.0;
    double hess_neg = 0.5 * (hess_a - std::sqrt(hess_a * hess_a + 4.0 * hess_b * hess_b));

    auto min_over_lambda = [&](double q, double* lam_out) {
        double best_l = 0.0, best_v = gt_value_sph(spec, report, 0.0, q);
        for (int i = 0; i < opts.lambda_grid; ++i) {
            double l = -lam_max + 2.0 * lam_max * i / (opts.lambda_grid - 1);
            double v = gt_value_sph(spec, report, l, q);
            if (v < best_v) {
                best_v = v;
                best_l = l;
            }
        }
        double step = 2.0 * lam_max / (opts.lambda_grid - 1);
        double lo = std::max(-lam_max, best_l - step), hi = std::min(lam_max, best_l + step);
        double fmin = best_v;
        double l_ref =
            golden_min([&](double l) { return gt_value_sph(spec, report, l, q); }, lo, hi,
                       1e-11, &fmin);
        if (fmin < best_v) {
            best_v = fmin;
            best_l = l_ref;
        }
        if (lam_out) *lam_out = best_l;
        return best_v;
    };

    double room_lo = (idx > 0) ? 0.5 * (q_star - mu.q[idx - 1]) : q_star;
    double room_hi = (idx + 1 < mu.k()) ? 0.5 * (mu.q[idx + 1] - q_star) : 1.0 - 1e-6 - q_star;
    SphBarrier best;
    bool found = false;
    for (int side = 0; side < 2; ++side) {
        double room = (side == 0) ? room_lo : room_hi;
        double max_off = std::min(opts.max_offset, 0.9 * room);
        if (max_off < 1e-6) continue;
        for (int j = 0; j < opts.n_offsets; ++j) {
            double off = max_off * std::pow(0.5, j);
            double q = q_star + (side == 0 ? -off : off);
            if (q <= 1e-9 || q >= 1.0 - 1e-9) continue;
            double lam = 0.0;
            double v = min_over_lambda(q, &lam);
            double gap = two_ps - v;
            if (gap > best.gap) {
                best = SphBarrier{q, lam, gap, gap, hess_a, hess_b, hess_neg};
                found = true;
            }
        }
    }
    if (!found || best.gap <= opts.min_gap) return std::nullopt;
    return best;
}

double manifold_gap_bound(double K, double eps, double D) {
    double e = std::exp(-D);
    double denom = 1.0 - 4.0 * e;
    if (denom <= 0.0) return kInf;
    return (K / eps) * (K / eps) * e / denom;
}

double poincare_stability_lower(double osc_u, int n) {
    if (n < 2) throw std::invalid_argument("poincare_stability_lower: need n >= 2");
    return std::exp(-2.0 * osc_u) * (1.0 - 1.0 / n);
}

}  // namespace sg
