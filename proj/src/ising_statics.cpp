#include "sg/ising_statics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sg/optim.hpp"
#include "sg/rng.hpp"

namespace sg {

namespace {

// antiderivative of xi''(s) s
double xis_anti(const MixtureSpec& spec, double s) { return s * spec.xi(s, 1) - spec.xi(s, 0); }

std::vector<double> merged_breakpoints(const AtomicMeasure& a, const AtomicMeasure& b) {
    std::vector<double> pts{0.0, 1.0};
    pts.insert(pts.end(), a.q.begin(), a.q.end());
    pts.insert(pts.end(), b.q.begin(), b.q.end());
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

}  // namespace

double parisi_correction(const MixtureSpec& spec, const AtomicMeasure& nu) {
    double acc = 0.0;
    std::vector<double> pts{0.0, 1.0};
    for (double q : nu.q)
        if (q > 0.0 && q < 1.0) pts.push_back(q);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    for (size_t j = 0; j + 1 < pts.size(); ++j) {
        double m = nu.cdf(0.5 * (pts[j] + pts[j + 1]));
        acc += m * (xis_anti(spec, pts[j + 1]) - xis_anti(spec, pts[j]));
    }
    return 0.5 * acc;
}

ParisiValue parisi_functional(const MixtureSpec& spec, const AtomicMeasure& nu,
                              const PdeGridParams& params) {
    ParisiValue out;
    ParisiSolution sol = solve_recursion(spec, nu, params);
    out.phi0 = sol.value0_at_h();
    out.correction = parisi_correction(spec, nu);
    out.value = out.phi0 - out.correction;
    return out;
}

double parisi_lipschitz_bound(const MixtureSpec& spec, const AtomicMeasure& a,
                              const AtomicMeasure& b) {
    std::vector<double> pts = merged_breakpoints(a, b);
    double acc = 0.0;
    for (size_t j = 0; j + 1 < pts.size(); ++j) {
        double mid = 0.5 * (pts[j] + pts[j + 1]);
        double dm = std::fabs(a.cdf(mid) - b.cdf(mid));
        // int over the interval of xi''(s)(1+s) ds = [xi' + s xi' - xi]
        double seg = (spec.xi(pts[j + 1], 1) - spec.xi(pts[j], 1)) +
                     (xis_anti(spec, pts[j + 1]) - xis_anti(spec, pts[j]));
        acc += dm * seg;
    }
    return 0.5 * acc;
}

namespace {

struct StartResult {
    std::vector<double> theta;
    double value = 0.0;
    bool converged = false;
    int n_eval = 0;
};

}  // namespace

PhaseReport minimize_krsb(const MixtureSpec& spec, int k, const KrsbOptions& opts) {
    if (k < 1) throw std::invalid_argument("minimize_krsb: k must be positive");
    MixtureSpec sp = spec;
    sp.validate();

    PdeGridParams search_params, polish_params, final_params;
    search_params.n = opts.search_n;
    search_params.quad = opts.search_quad;
    polish_params.n = opts.polish_n;
    polish_params.quad = opts.search_quad;
    final_params.n = opts.final_n;
    final_params.quad = opts.final_quad;

    auto objective = [&](const PdeGridParams& pp) {
        return [&sp, k, pp](const std::vector<double>& theta) {
            AtomicMeasure nu = measure_from_theta(theta, k);
            return parisi_functional(sp, nu, pp).value;
        };
    };

    RngStream rng(opts.seed, 0x414b);
    std::vector<StartResult> starts;
    int total_eval = 0;
    for (int s = 0; s < opts.n_starts; ++s) {
        std::vector<double> theta(2 * k);
        for (int i = 0; i < k; ++i) {
            // spread initial atoms over (0,1) with jitter
            double target = (i + 0.6 + 0.3 * (rng.uniform() - 0.5)) / (k + 0.5);
            theta[i] = std::log(target / (1.0 - target));
            theta[k + i] = 0.5 * (rng.uniform() - 0.5);
        }
        NmResult r = nelder_mead(objective(search_params), theta,
                                 std::vector<double>(2 * k, 0.8), 1e-11, opts.max_eval);
        // restart with a fresh simplex to escape degenerate geometry
        NmResult r2 = nelder_mead(objective(search_params), r.x,
                                  std::vector<double>(2 * k, 0.05), 1e-12, opts.max_eval / 2);
        starts.push_back({r2.x, r2.fval, r.converged && r2.converged, r.n_eval + r2.n_eval});
        total_eval += r.n_eval + r2.n_eval;
    }
    std::sort(starts.begin(), starts.end(),
              [](const StartResult& a, const StartResult& b) { return a.value < b.value; });

    // refine the leading starts at the polish resolution and measure agreement
    int n_refine = std::min<int>(3, starts.size());
    double best_val = 0.0, worst_val = 0.0;
    std::vector<double> best_theta;
    for (int i = 0; i < n_refine; ++i) {
        NmResult r = nelder_mead(objective(polish_params), starts[i].theta,
                                 std::vector<double>(2 * k, 0.02), 1e-13, opts.max_eval / 2);
        total_eval += r.n_eval;
        if (i == 0 || r.fval < best_val) {
            best_val = r.fval;
            best_theta = r.x;
        }
        if (i == 0 || r.fval > worst_val) worst_val = r.fval;
    }
    double spread = worst_val - best_val;

    AtomicMeasure nu = measure_from_theta(best_theta, k).simplified(opts.merge_tol);
    PhaseReport rep(nu);
    rep.k_used = k;
    rep.n_eval = total_eval;
    rep.multistart_spread = spread;
    rep.converged = !starts.empty() && starts.front().converged;
    rep.free_energy = parisi_functional(sp, nu, final_params).value;

    // diagnostics at the surviving atoms
    ParisiSolution sol = solve_recursion(sp, nu, final_params);
    LocalFieldOptions lf;
    lf.method = opts.lf_method;
    lf.seed = opts.seed;
    for (int i = 0; i < nu.k(); ++i) {
        LocalFieldStats st = local_field_stats(sol, nu.q[i], lf);
        AtomDiagnostic d;
        d.q = nu.q[i];
        d.w = nu.w[i];
        d.replicon = replicon_eigenvalue(sol, nu.q[i], st);
        d.fixed_point_residual = std::fabs(st.e_phix_sq - nu.q[i]);
        d.mc_stderr = st.se_phix_sq;
        rep.atoms.push_back(d);
    }

    int support = 0;
    double second_mass = 0.0;
    std::vector<double> masses = nu.w;
    std::sort(masses.begin(), masses.end(), std::greater<double>());
    if (masses.size() > 1) second_mass = masses[1];
    for (double wv : nu.w)
        if (wv > opts.support_w_tol) ++support;
    rep.is_atom = second_mass < opts.support_w_tol;
    rep.grsb = support >= 2;
    rep.gprev = check_gprev(rep, opts.gprev_tol);
    return rep;
}

bool check_gprev(const PhaseReport& report, double tol, double* witness) {
    for (const AtomDiagnostic& d : report.atoms) {
        if (d.replicon > tol) {
            if (witness) *witness = d.q;
            return true;
        }
    }
    return false;
}

double free_energy_beta_derivative(const MixtureSpec& spec, const AtomicMeasure& nu) {
    if (!spec.beta) throw std::invalid_argument("beta-derivative requires the beta^2 xi0 form");
    double acc = 0.0;
    for (int i = 0; i < nu.k(); ++i) acc += nu.w[i] * (spec.xi0(1.0) - spec.xi0(nu.q[i]));
    return *spec.beta * acc;
}

double best_single_atom(const MixtureSpec& spec, double* q_best, const PdeGridParams& params) {
    auto f = [&](double q) {
        AtomicMeasure nu = q <= 0.0 ? AtomicMeasure::dirac(0.0) : AtomicMeasure::dirac(q);
        return parisi_functional(spec, nu, params).value;
    };
    int n_scan = 33;
    double best_q = 0.0, best_v = f(0.0);
    for (int i = 1; i < n_scan; ++i) {
        double q = i / (n_scan - 1.0) * 0.99;
        double v = f(q);
        if (v < best_v) {
            best_v = v;
            best_q = q;
        }
    }
    double lo = std::max(0.0, best_q - 1.0 / (n_scan - 1.0));
    double hi = std::min(0.99, best_q + 1.0 / (n_scan - 1.0));
    double fmin = best_v;
    double qg = golden_min(f, lo, hi, 1e-6, &fmin);
    if (fmin < best_v) {
        best_v = fmin;
        best_q = qg;
    }
    if (q_best) *q_best = best_q;
    return best_v;
}

}  // namespace sg
