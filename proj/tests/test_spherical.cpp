#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "../vendor/doctest.h"
#include "sg/rng.hpp"
#include "sg/spherical.hpp"

using namespace sg;

namespace {

MixtureSpec sk(double beta, double h) { return MixtureSpec::from_xi0({{2, 1.0}}, beta, h); }
MixtureSpec p4(double beta, double h) { return MixtureSpec::from_xi0({{4, 1.0}}, beta, h); }

// closed form for a single atom under xi = beta^2 t^2:
// C(delta_q) = 1/2 [beta^2 (1-q^2) + q/(1-q) + log(1-q) + h^2 (1-q)]
double cs_delta_q_sk(double beta, double h, double q) {
    return 0.5 * (beta * beta * (1.0 - q * q) + q / (1.0 - q) + std::log1p(-q) +
                  h * h * (1.0 - q));
}

AtomicMeasure random_measure(RngStream& rng, int kmax) {
    int k = 1 + (int)rng.integer(kmax);
    std::vector<double> q, w;
    double acc = 0.0;
    for (int i = 0; i < k; ++i) {
        acc += 0.05 + 0.22 * rng.uniform();
        if (acc >= 0.97) break;
        q.push_back(acc);
        w.push_back(0.1 + rng.uniform());
    }
    if (q.empty()) {
        q.push_back(0.4);
        w.push_back(1.0);
    }
    double tot = 0.0;
    for (double v : w) tot += v;
    for (double& v : w) v /= tot;
    return AtomicMeasure(q, w);
}

}  // namespace

TEST_CASE("crisanti-sommers closed forms at single atoms") {
    // delta_0 with xi'(0) = 0: C = xi(1)/2 by parts
    for (double beta : {0.3, 1.0, 2.0}) {
        MixtureSpec spec = sk(beta, 0.0);
        CHECK(cs_functional(spec, AtomicMeasure::dirac(0.0)) ==
              doctest::Approx(0.5 * beta * beta).epsilon(1e-12));
    }
    MixtureSpec mixed = MixtureSpec{{{3, 0.5}, {4, 0.2}}, 0.0, {}, {}};
    CHECK(cs_functional(mixed, AtomicMeasure::dirac(0.0)) ==
          doctest::Approx(0.5 * mixed.xi(1.0)).epsilon(1e-12));

    // delta_q closed form, with and without a field
    for (double h : {0.0, 0.4}) {
        MixtureSpec spec = sk(0.9, h);
        for (double q : {0.0, 0.15, 0.5, 0.8}) {
            CHECK(cs_functional(spec, AtomicMeasure::dirac(q)) ==
                  doctest::Approx(cs_delta_q_sk(0.9, h, q)).epsilon(1e-12));
        }
    }

    // the field contributes exactly h^2 (1-q)/2 at a single atom
    for (double q : {0.0, 0.3, 0.7}) {
        double with = cs_functional(sk(1.1, 0.6), AtomicMeasure::dirac(q));
        double without = cs_functional(sk(1.1, 0.0), AtomicMeasure::dirac(q));
        CHECK(with - without == doctest::Approx(0.5 * 0.36 * (1.0 - q)).epsilon(1e-12));
    }

    // below the SK glass point 2 beta^2 < 1 the flat atom wins the delta scan
    MixtureSpec cold = sk(0.7, 0.0);
    double at0 = cs_functional(cold, AtomicMeasure::dirac(0.0));
    for (int i = 1; i <= 40; ++i) {
        double q = 0.024 * i;
        CHECK(at0 <= cs_functional(cold, AtomicMeasure::dirac(q)) + 1e-14);
    }

    CHECK_THROWS_AS(cs_functional(sk(1.0, 0.0), AtomicMeasure::dirac(1.0)), std::domain_error);
}

TEST_CASE("spherical parisi value matches hand reduction at delta_0") {
    // display for delta_0 under xi = beta^2 t^2 reduces to
    // -log(b - 2 beta^2) + b - 1 - beta^2; the function returns half of it
    double beta = 0.8;
    MixtureSpec spec = sk(beta, 0.0);
    AtomicMeasure d0 = AtomicMeasure::dirac(0.0);
    for (double b : {1.5, 2.0, 3.0, 5.0}) {
        double disp = -std::log(b - 2.0 * beta * beta) + b - 1.0 - beta * beta;
        CHECK(sph_parisi(spec, {d0, b}) == doctest::Approx(0.5 * disp).epsilon(1e-12));
    }
    // minimized at b = 2 beta^2 + 1 where the value hits cs_functional
    double bstar = 2.0 * beta * beta + 1.0;
    CHECK(sph_parisi(spec, {d0, bstar}) ==
          doctest::Approx(cs_functional(spec, d0)).epsilon(1e-12));
    CHECK(sph_parisi(spec, {d0, bstar}) < sph_parisi(spec, {d0, bstar + 0.1}));
    CHECK(sph_parisi(spec, {d0, bstar}) < sph_parisi(spec, {d0, bstar - 0.1}));

    // inadmissible pairs hit the +infinity sentinel: b below 1, and b in
    // [1, psi(0)) when psi(0) = 2 beta^2 exceeds one
    CHECK(std::isinf(sph_parisi(spec, {d0, 0.5})));
    CHECK(std::isinf(sph_parisi(spec, {d0, 1.2})));

    // with a field the value blows up at the psi(0) boundary
    MixtureSpec spech = sk(0.8, 0.5);
    double psi0 = psi_nu(spech, d0, 0.0);
    double near = sph_parisi(spech, {d0, psi0 + 1e-6});
    double far = sph_parisi(spech, {d0, psi0 + 1e-2});
    CHECK(near > far);
    CHECK(near > 1e4);
}

TEST_CASE("psi and phi piecewise parametrization") {
    MixtureSpec spec = sk(1.2, 0.0);
    AtomicMeasure nu({0.2, 0.6}, {0.3, 0.7});
    // phi(t) = int_t^1 m: at t=1 zero, at t=0 equals sum of piece areas
    CHECK(phi_nu(spec, nu, 1.0) == doctest::Approx(0.0));
    double phi0 = 0.2 * 0.0 + 0.4 * 0.3 + 0.4 * 1.0;
    CHECK(phi_nu(spec, nu, 0.0) == doctest::Approx(phi0).epsilon(1e-14));
    // psi via Riemann sums split at the cdf jumps so each piece is smooth
    for (double t : {0.0, 0.1, 0.35, 0.61, 0.9}) {
        std::vector<double> cuts{t};
        for (double a : nu.q)
            if (a > t) cuts.push_back(a);
        cuts.push_back(1.0);
        double acc = 0.0;
        for (size_t c = 0; c + 1 < cuts.size(); ++c) {
            int n = 5000;
            for (int i = 0; i < n; ++i) {
                double s = cuts[c] + (cuts[c + 1] - cuts[c]) * (i + 0.5) / n;
                acc += spec.xi(s, 2) * nu.cdf(s) * (cuts[c + 1] - cuts[c]) / n;
            }
        }
        CHECK(psi_nu(spec, nu, t) == doctest::Approx(acc).epsilon(1e-7));
    }
}

TEST_CASE("replica symmetric minimizer lands on the closed-form pair") {
    MixtureSpec spec = sk(0.5, 0.0);
    SphericalOptReport rep = minimize_spherical(spec, 2);
    CHECK(rep.converged);
    CHECK(rep.minimizer.nu.max_atom() < 1e-8);
    CHECK(rep.minimizer.b == doctest::Approx(1.5).epsilon(1e-10));  // 2 beta^2 + 1
    CHECK(rep.ps_value == doctest::Approx(0.125).epsilon(1e-9));    // beta^2 / 2
    CHECK(rep.cs_value == doctest::Approx(0.125).epsilon(1e-9));
    CHECK(std::abs(rep.b_residual) < 1e-10);
    CHECK(rep.margin_psi > 0.0);
    CHECK(rep.margin_one > 0.0);
    for (double r : rep.q_opt_residual) CHECK(std::abs(r) < 1e-8);
    for (double r : rep.phi_psi_residual) CHECK(std::abs(r) < 1e-8);
    CHECK(rep.replicon[0] == doctest::Approx(1.0 - 2.0 * 0.25).epsilon(1e-10));
    CHECK(rep.g_diag.ok);
}

TEST_CASE("pure 4-spin at beta 2 is one-step rsb with machine residuals") {
    MixtureSpec spec = p4(2.0, 0.0);
    SphericalOptReport rep = minimize_spherical(spec, 2);
    CHECK(rep.converged);
    REQUIRE(rep.minimizer.nu.k() == 2);
    CHECK(rep.minimizer.nu.q[0] == doctest::Approx(0.0));
    CHECK(rep.minimizer.nu.q[1] > 0.5);
    CHECK(rep.minimizer.nu.w[1] > 1e-3);
    CHECK(std::abs(rep.cs_value - rep.ps_value) < 1e-9);
    for (double r : rep.q_opt_residual) CHECK(std::abs(r) < 1e-8);
    for (double r : rep.phi_psi_residual) CHECK(std::abs(r) < 1e-8);
    CHECK(std::abs(rep.b_residual) < 1e-12);
    CHECK(rep.margin_psi > 0.0);
    CHECK(rep.margin_one > 0.0);
    CHECK(rep.multistart_spread < 1e-7);
    CHECK(rep.g_diag.ok);
    // the flat atom of a pure model keeps a strictly positive replicon
    CHECK(rep.replicon[0] > 0.0);
    CHECK(rep.replicon[0] == doctest::Approx(1.0 / (phi_nu(spec, rep.minimizer.nu, 0.0) *
                                                    phi_nu(spec, rep.minimizer.nu, 0.0)))
                                 .epsilon(1e-10));
    // 1RSB beats the best single atom
    double best1 = 1e9;
    for (int i = 0; i <= 60; ++i)
        best1 = std::min(best1, cs_functional(spec, AtomicMeasure::dirac(i / 61.0)));
    CHECK(rep.cs_value < best1 - 1e-4);

    // optimality ties 1/phi^2 to (b - psi)^2 at the atoms
    for (double q : rep.minimizer.nu.q) {
        double lhs = 1.0 / (phi_nu(spec, rep.minimizer.nu, q) * phi_nu(spec, rep.minimizer.nu, q));
        double g = rep.minimizer.b - psi_nu(spec, rep.minimizer.nu, q);
        CHECK(lhs == doctest::Approx(g * g).epsilon(1e-8));
    }
}

TEST_CASE("field variants keep residuals small and atoms interior") {
    for (double beta : {0.5, 2.0}) {
        MixtureSpec spec = p4(beta, 0.1);
        SphericalOptReport rep = minimize_spherical(spec, 2);
        CHECK(rep.converged);
        CHECK(rep.minimizer.nu.q[0] > 1e-6);  // a field pulls the bottom atom off zero
        for (double r : rep.q_opt_residual) CHECK(std::abs(r) < 1e-6);
        for (double r : rep.phi_psi_residual) CHECK(std::abs(r) < 1e-6);
        CHECK(std::abs(rep.b_residual) < 1e-8);
        CHECK(rep.margin_psi > 0.0);
        CHECK(rep.margin_one > 0.0);
        CHECK(std::abs(rep.cs_value - rep.ps_value) < 1e-6);
        CHECK(rep.g_diag.ok);
    }
}

TEST_CASE("inner b objective is unimodal on the search bracket") {
    RngStream rng(41);
    for (int trial = 0; trial < 10; ++trial) {
        double beta = 0.4 + 1.4 * rng.uniform();
        double h = (trial % 2) ? 0.3 * rng.uniform() : 0.0;
        MixtureSpec spec = (trial % 3 == 0) ? p4(beta, h) : sk(beta, h);
        AtomicMeasure nu = random_measure(rng, 3);
        double psi0 = psi_nu(spec, nu, 0.0);
        double lo = std::max(1.0, psi0) + 1e-7;
        double hi = spec.xi(1.0, 1) + 2.0 + 1.0 / (1.0 - nu.max_atom());
        int n = 240;
        std::vector<double> v(n);
        for (int i = 0; i < n; ++i)
            v[i] = sph_parisi(spec, {nu, lo + (hi - lo) * i / (n - 1.0)});
        int sign_changes = 0;
        for (int i = 2; i < n; ++i) {
            bool was_down = v[i - 1] < v[i - 2];
            bool now_up = v[i] > v[i - 1];
            if (was_down && now_up) ++sign_changes;
        }
        CHECK(sign_changes <= 1);
    }
}

TEST_CASE("single atom criterion brackets the pure 4-spin onset") {
    double gmax = 0.0, smax = 0.0;
    CHECK(atom_criterion_pure_p(p4(0.1, 0.0), &gmax, &smax));
    CHECK(gmax < 0.0);
    CHECK(atom_criterion_pure_p(p4(1.0, 0.0)));
    CHECK_FALSE(atom_criterion_pure_p(p4(1.76, 0.0)));
    // the paper's s = 1/2 witness gives the upper end of the bracket
    double witness = std::sqrt(16.0 * (std::log(2.0) - 0.5));
    CHECK_FALSE(atom_criterion_pure_p(p4(witness + 1e-6, 0.0), &gmax, &smax));
    CHECK(gmax >= -1e-9);

    // bisect the criterion transition and require it inside (1.0, 1.758]
    double lo = 1.0, hi = witness;
    for (int it = 0; it < 40; ++it) {
        double mid = 0.5 * (lo + hi);
        if (atom_criterion_pure_p(p4(mid, 0.0)))
            lo = mid;
        else
            hi = mid;
    }
    double beta_c = 0.5 * (lo + hi);
    CHECK(beta_c > 1.0);
    CHECK(beta_c <= witness);

    // optimizer collapse agrees with the criterion away from the transition
    for (double beta : {0.6, 1.1, beta_c - 0.1, beta_c + 0.1, 2.0, 2.6}) {
        MixtureSpec spec = p4(beta, 0.0);
        SphericalOptReport rep = minimize_spherical(spec, 2);
        int support = 0;
        for (double w : rep.minimizer.nu.w)
            if (w >= 1e-3) ++support;
        bool single = (support <= 1);
        CHECK(single == atom_criterion_pure_p(spec));
    }
    CHECK_THROWS_AS(atom_criterion_pure_p(p4(1.0, 0.3)), std::invalid_argument);
}

TEST_CASE("two-replica functional identities at lambda zero") {
    for (int which = 0; which < 3; ++which) {
        MixtureSpec spec = (which == 0) ? sk(0.5, 0.0) : p4(2.0, which == 2 ? 0.1 : 0.0);
        SphericalOptReport rep = minimize_spherical(spec, 2);

        // P(0, q) equals twice the minimal Parisi value for every q
        for (double q : {0.0, 0.3, 0.62, 0.9, rep.minimizer.nu.max_atom()})
            CHECK(gt_value_sph(spec, rep, 0.0, q) ==
                  doctest::Approx(2.0 * rep.ps_value).epsilon(1e-12));

        // analytic lambda derivative against central differences
        RngStream rng(97 + which);
        for (int trial = 0; trial < 8; ++trial) {
            double q = rng.uniform();
            double lam_cap = 0.4 * (rep.margin_psi);
            double lam = (rng.uniform() - 0.5) * lam_cap;
            double eps = 1e-5;
            double fd = (gt_value_sph(spec, rep, lam + eps, q) -
                         gt_value_sph(spec, rep, lam - eps, q)) /
                        (2.0 * eps);
            CHECK(gt_dlambda_sph(spec, rep, lam, q) == doctest::Approx(fd).epsilon(1e-6));
            double fd2 = (gt_dlambda_sph(spec, rep, lam + eps, q) -
                          gt_dlambda_sph(spec, rep, lam - eps, q)) /
                         (2.0 * eps);
            CHECK(gt_d2lambda_sph(spec, rep, lam, q) == doctest::Approx(fd2).epsilon(1e-5));
        }

        // stationarity in lambda at the support atoms
        for (double q : rep.minimizer.nu.q)
            CHECK(std::abs(gt_dlambda_sph(spec, rep, 0.0, q)) < 1e-8);

        // mixed partial at atoms: d_q d_lambda P(0,q) = -phi^2 Lambda_R(q)
        for (int i = 0; i < rep.minimizer.nu.k(); ++i) {
            double q = rep.minimizer.nu.q[i];
            double eps = 1e-6;
            double qm = std::max(0.0, q - eps), qp = std::min(1.0, q + eps);
            double fd = (gt_dlambda_sph(spec, rep, 0.0, qp) -
                         gt_dlambda_sph(spec, rep, 0.0, qm)) /
                        (qp - qm);
            double phi = phi_nu(spec, rep.minimizer.nu, q);
            CHECK(fd == doctest::Approx(-phi * phi * rep.replicon[i]).epsilon(1e-5));
        }
    }
}

TEST_CASE("two-replica functional is even in lambda at q zero without field") {
    MixtureSpec spec = p4(2.0, 0.0);
    SphericalOptReport rep = minimize_spherical(spec, 2);
    for (double lam : {0.1, 0.5, 1.0, 2.0}) {
        if (lam >= rep.margin_psi) continue;
        double a = gt_value_sph(spec, rep, lam, 0.0);
        double b = gt_value_sph(spec, rep, -lam, 0.0);
        CHECK(std::abs(a - b) < 1e-10);
    }
}

TEST_CASE("barrier search certifies the pure 4-spin free energy barrier") {
    MixtureSpec spec = p4(2.0, 0.0);
    SphericalOptReport rep = minimize_spherical(spec, 2);
    REQUIRE(rep.minimizer.nu.k() == 2);

    // no gap at the puncture itself: the lambda minimum sits at zero
    double q_top = rep.minimizer.nu.q[1];
    CHECK(std::abs(gt_dlambda_sph(spec, rep, 0.0, q_top)) < 1e-9);
    CHECK(gt_d2lambda_sph(spec, rep, 0.0, q_top) > 0.0);

    for (double q_star : rep.minimizer.nu.q) {
        auto cert = barrier_search_sph(spec, rep, q_star);
        REQUIRE(cert.has_value());
        CHECK(cert->gap > 0.0);
        CHECK(cert->rate_c == doctest::Approx(cert->gap));
        CHECK(cert->hess_neg < 0.0);
        // the certificate states P(lambda*, q) < 2 ps_value strictly
        double v = gt_value_sph(spec, rep, cert->lambda, cert->q);
        CHECK(v < 2.0 * rep.ps_value);
        CHECK(2.0 * rep.ps_value - v == doctest::Approx(cert->gap).epsilon(1e-9));
        // certified q stays off the support
        for (double qa : rep.minimizer.nu.q) CHECK(std::abs(cert->q - qa) > 1e-6);
    }

    CHECK_THROWS_AS(barrier_search_sph(spec, rep, 0.123), std::invalid_argument);
}

TEST_CASE("manifold bound formula and poincare stability evaluator") {
    // vacuous below the log 4 difficulty threshold
    CHECK(std::isinf(manifold_gap_bound(0.1, 0.05, std::log(4.0))));
    CHECK(std::isinf(manifold_gap_bound(0.1, 0.05, 0.5)));
    double d1 = manifold_gap_bound(0.1, 0.05, 3.0);
    double d2 = manifold_gap_bound(0.1, 0.05, 4.0);
    CHECK(d1 > d2);  // monotone decreasing in the difficulty
    CHECK(d2 > 0.0);
    // hand value: (K/eps)^2 e^{-D} / (1 - 4 e^{-D})
    double e = std::exp(-3.0);
    CHECK(d1 == doctest::Approx(4.0 * e / (1.0 - 4.0 * e)).epsilon(1e-12));

    CHECK(poincare_stability_lower(0.0, 4) == doctest::Approx(0.75));
    CHECK(poincare_stability_lower(1.0, 10) ==
          doctest::Approx(std::exp(-2.0) * 0.9).epsilon(1e-12));
    CHECK(poincare_stability_lower(2.0, 10) < poincare_stability_lower(1.0, 10));
    CHECK_THROWS_AS(poincare_stability_lower(1.0, 1), std::invalid_argument);
}

TEST_CASE("replicon closed form at flat measures") {
    CHECK(replicon_sph(sk(0.6, 0.0), AtomicMeasure::dirac(0.0), 0.0) ==
          doctest::Approx(1.0 - 2.0 * 0.36).epsilon(1e-12));
    CHECK(replicon_sph(sk(1.2, 0.0), AtomicMeasure::dirac(0.0), 0.0) ==
          doctest::Approx(1.0 - 2.0 * 1.44).epsilon(1e-12));
    // pure 4-spin: xi''(0) = 0, so the flat replicon is 1/phi(0)^2 > 0
    CHECK(replicon_sph(p4(2.0, 0.0), AtomicMeasure::dirac(0.0), 0.0) ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(replicon_sph(sk(1.0, 0.0), AtomicMeasure::dirac(1.0), 1.0),
                    std::domain_error);
}
