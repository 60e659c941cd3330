#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "../vendor/doctest.h"
#include "sg/grid.hpp"
#include "sg/hamiltonian.hpp"
#include "sg/measure.hpp"
#include "sg/mixture.hpp"
#include "sg/optim.hpp"
#include "sg/quadrature.hpp"
#include "sg/rng.hpp"
#include "sg/tridiag.hpp"

using namespace sg;

TEST_CASE("rng streams are deterministic and decorrelated") {
    RngStream a(42), b(42), c(43);
    RngStream s0(42, 0), s1(42, 1);
    for (int i = 0; i < 16; ++i) {
        double va = a.uniform();
        CHECK(va == b.uniform());
        CHECK(va >= 0.0);
        CHECK(va < 1.0);
    }
    CHECK(RngStream(42).uniform() != c.uniform());
    CHECK(s0.uniform() != s1.uniform());
}

TEST_CASE("gauss-hermite rule integrates gaussian moments") {
    for (int order : {2, 4, 8, 16, 64, 128}) {
        GaussHermite gh(order);
        REQUIRE((int)gh.z.size() == order);
        double w_sum = 0, m2 = 0, m4 = 0, m6 = 0;
        for (size_t k = 0; k < gh.z.size(); ++k) {
            w_sum += gh.w[k];
            m2 += gh.w[k] * gh.z[k] * gh.z[k];
            m4 += gh.w[k] * std::pow(gh.z[k], 4);
            m6 += gh.w[k] * std::pow(gh.z[k], 6);
        }
        CHECK(w_sum == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(m2 == doctest::Approx(1.0).epsilon(1e-12));
        if (order >= 3) CHECK(m4 == doctest::Approx(3.0).epsilon(1e-12));
        if (order >= 4) CHECK(m6 == doctest::Approx(15.0).epsilon(1e-12));
    }
    CHECK_THROWS(GaussHermite(0));
}

TEST_CASE("adaptive simpson matches closed forms") {
    double v1 = integrate_adaptive([](double x) { return x * x * x; }, 0.0, 1.0, 1e-12);
    CHECK(v1 == doctest::Approx(0.25).epsilon(1e-11));
    double v2 = integrate_adaptive([](double x) { return std::exp(x); }, -1.0, 2.0, 1e-12);
    CHECK(v2 == doctest::Approx(std::exp(2.0) - std::exp(-1.0)).epsilon(1e-11));
}

// Gaussian log-cosh expectations; reference values from high-precision
// quadrature done outside this codebase.
TEST_CASE("gaussian log cosh expectations agree across two quadratures") {
    struct Case {
        double h, s, want;
    };
    const Case cases[] = {
        {0.0, std::sqrt(2.0), 0.642248865688279849},
        {0.5, std::sqrt(2.0), 0.701795383294165843},
        {0.3, 1.0, 0.401701932106871585},
    };
    GaussHermite gh(64);
    for (const Case& c : cases) {
        double acc = 0;
        for (size_t k = 0; k < gh.z.size(); ++k) {
            double u = c.h + c.s * gh.z[k];
            acc += gh.w[k] * (std::fabs(u) - std::log(2.0) + std::log1p(std::exp(-2 * std::fabs(u))));
        }
        CHECK(acc == doctest::Approx(c.want).epsilon(5e-8));
        double simpson = integrate_adaptive(
            [&](double z) {
                double u = c.h + c.s * z;
                double lc = std::fabs(u) - std::log(2.0) + std::log1p(std::exp(-2 * std::fabs(u)));
                return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI) * lc;
            },
            -14.0, 14.0, 1e-12);
        CHECK(simpson == doctest::Approx(c.want).epsilon(1e-10));
    }
}

TEST_CASE("cubic stencil is exact on cubics and extends linearly") {
    Grid1D g{-2.0, 3.0, 41};
    auto f = [](double x) { return 0.3 * x * x * x - x * x + 2.0 * x - 0.7; };
    std::vector<double> y(g.n);
    for (int i = 0; i < g.n; ++i) y[i] = f(g.x(i));
    RngStream rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        double x = -2.0 + 5.0 * rng.uniform();
        CHECK(interp_cubic(g, y, x, 0, 0) == doctest::Approx(f(x)).epsilon(1e-11));
    }
    // outside: linear with the given slopes
    CHECK(interp_cubic(g, y, 3.5, 0.0, 2.0) == doctest::Approx(f(3.0) + 0.5 * 2.0));
    CHECK(interp_cubic(g, y, -2.25, -1.0, 0.0) == doctest::Approx(f(-2.0) + 0.25));

    // node derivatives on a quadratic are exact in the interior
    for (int i = 0; i < g.n; ++i) y[i] = 2.0 * g.x(i) * g.x(i) - g.x(i);
    for (int i = 1; i + 1 < g.n; ++i) {
        CHECK(node_deriv1(g, y, i) == doctest::Approx(4.0 * g.x(i) - 1.0).epsilon(1e-10));
        CHECK(node_deriv2(g, y, i) == doctest::Approx(4.0).epsilon(1e-9));
    }
}

TEST_CASE("tridiagonal solver handles random dominant systems") {
    RngStream rng(11);
    for (int trial = 0; trial < 30; ++trial) {
        int n = 2 + (int)rng.integer(40);
        std::vector<double> a(n), b(n), c(n), d(n), x_true(n), scratch;
        for (int i = 0; i < n; ++i) {
            a[i] = rng.uniform() - 0.5;
            c[i] = rng.uniform() - 0.5;
            b[i] = 2.0 + rng.uniform();
            x_true[i] = 2.0 * rng.uniform() - 1.0;
        }
        for (int i = 0; i < n; ++i) {
            d[i] = b[i] * x_true[i];
            if (i > 0) d[i] += a[i] * x_true[i - 1];
            if (i + 1 < n) d[i] += c[i] * x_true[i + 1];
        }
        solve_tridiag(a, b, c, d, scratch);
        for (int i = 0; i < n; ++i) CHECK(d[i] == doctest::Approx(x_true[i]).epsilon(1e-10));
    }
}

TEST_CASE("optimizers reach known minima") {
    auto rosen = [](const std::vector<double>& v) {
        double a = 1.0 - v[0], b = v[1] - v[0] * v[0];
        return a * a + 100.0 * b * b;
    };
    NmResult r = nelder_mead(rosen, {-1.2, 1.0}, {0.5, 0.5}, 1e-14, 20000);
    CHECK(r.converged);
    CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-4));

    double fmin = 0;
    double xm = golden_min([](double x) { return (x - 1.3) * (x - 1.3) + 0.2; }, -4, 4, 1e-10, &fmin);
    CHECK(xm == doctest::Approx(1.3).epsilon(1e-8));
    CHECK(fmin == doctest::Approx(0.2).epsilon(1e-12));

    std::vector<double> x{0.3, 0.7};
    double res = newton_system(
        [](const std::vector<double>& v) {
            return std::vector<double>{v[0] * v[0] + v[1] - 1.2, v[0] - v[1] * v[1] + 0.3};
        },
        x, 1e-13, 80);
    CHECK(res < 1e-12);
    CHECK(x[0] * x[0] + x[1] == doctest::Approx(1.2).epsilon(1e-10));
}

TEST_CASE("mixture evaluation matches the direct power sum") {
    RngStream rng(5);
    for (int trial = 0; trial < 60; ++trial) {
        int nt = 1 + (int)rng.integer(4);
        MixtureSpec spec;
        std::vector<int> ps;
        for (int k = 0; k < nt; ++k) {
            int p;
            do {
                p = 1 + (int)rng.integer(6);
            } while (std::count(ps.begin(), ps.end(), p));
            ps.push_back(p);
            spec.terms.push_back({p, 0.05 + 2.0 * rng.uniform()});
        }
        spec.h = rng.uniform();
        spec.validate();
        double t = 2.0 * rng.uniform() - 1.0;
        double direct0 = 0, direct1 = 0, direct2 = 0;
        for (auto& tm : spec.terms) {
            direct0 += tm.c * std::pow(t, tm.p);
            direct1 += tm.c * tm.p * std::pow(t, tm.p - 1);
            if (tm.p >= 2) direct2 += tm.c * tm.p * (tm.p - 1) * std::pow(t, tm.p - 2);
        }
        CHECK(spec.xi(t, 0) == doctest::Approx(direct0).epsilon(1e-12));
        CHECK(spec.xi(t, 1) == doctest::Approx(direct1).epsilon(1e-12));
        CHECK(spec.xi(t, 2) == doctest::Approx(direct2).epsilon(1e-12));
    }
}

TEST_CASE("mixture validation rejects malformed input") {
    MixtureSpec bad;
    bad.terms = {{2, -1.0}};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad.terms = {{2, 1.0}, {2, 0.5}};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad.terms = {{0, 1.0}};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad.terms = {{2, 1.0}};
    bad.h = -0.2;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    MixtureSpec sk = MixtureSpec::from_xi0({{2, 1.0}}, 1.5, 0.3);
    sk.validate();
    CHECK(sk.xi(0.7) == doctest::Approx(1.5 * 1.5 * 0.49).epsilon(1e-13));
    CHECK(sk.xi0(0.7) == doctest::Approx(0.49).epsilon(1e-13));
    CHECK(sk.even());
    CHECK(sk.convex_on_unit_ball());

    MixtureSpec odd;
    odd.terms = {{3, 1.0}};
    odd.validate();
    CHECK_FALSE(odd.even());
    CHECK_FALSE(odd.convex_on_unit_ball());  // xi'' < 0 at t < 0

    MixtureSpec mixed;  // 2 c2 >= 6 c3 keeps xi'' >= 0 down to t = -1
    mixed.terms = {{2, 1.0}, {3, 0.3}};
    CHECK(mixed.convex_on_unit_ball());
    mixed.terms = {{2, 1.0}, {3, 0.5}};
    CHECK_FALSE(mixed.convex_on_unit_ball());
}

TEST_CASE("atomic measures validate, merge, and measure cdf distance") {
    CHECK_THROWS(AtomicMeasure({0.5, 0.2}, {0.5, 0.5}));      // not ascending
    CHECK_THROWS(AtomicMeasure({0.2, 0.5}, {0.5, 0.6}));      // mass sum
    CHECK_THROWS(AtomicMeasure({-0.1}, {1.0}));               // outside [0,1]
    CHECK_THROWS(AtomicMeasure({0.2, 0.5}, {1.0, 0.0}));      // nonpositive mass

    AtomicMeasure m({0.2, 0.2001, 0.8}, {0.3, 0.3, 0.4});
    AtomicMeasure s = m.simplified(1e-3);
    CHECK(s.k() == 2);
    CHECK(s.q[0] == doctest::Approx(0.20005).epsilon(1e-12));
    CHECK(s.w[0] == doctest::Approx(0.6).epsilon(1e-12));

    CHECK(m.cdf(0.1) == doctest::Approx(0.0));
    CHECK(m.cdf(0.5) == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(m.cdf(1.0) == doctest::Approx(1.0).epsilon(1e-12));

    // cdf distance against a brute Riemann sum
    RngStream rng(19);
    for (int trial = 0; trial < 20; ++trial) {
        auto rand_measure = [&]() {
            int k = 1 + (int)rng.integer(4);
            std::vector<double> q, w;
            double acc = 0;
            for (int i = 0; i < k; ++i) {
                acc += 0.02 + rng.uniform() * 0.2;
                q.push_back(std::min(acc, 1.0));
                w.push_back(rng.uniform() + 0.1);
            }
            double tot = 0;
            for (double v : w) tot += v;
            for (double& v : w) v /= tot;
            return AtomicMeasure(q, w);
        };
        AtomicMeasure a = rand_measure(), b = rand_measure();
        double exact = AtomicMeasure::cdf_distance(a, b);
        int steps = 200000;
        double riemann = 0;
        for (int i = 0; i < steps; ++i) {
            double s0 = (i + 0.5) / steps;
            riemann += std::fabs(a.cdf(s0) - b.cdf(s0)) / steps;
        }
        CHECK(exact == doctest::Approx(riemann).epsilon(5e-4));
        CHECK(AtomicMeasure::cdf_distance(a, a) == doctest::Approx(0.0));
    }
}

TEST_CASE("hamiltonian table matches tensor evaluation and flip deltas") {
    RngStream rng(23);
    for (int trial = 0; trial < 8; ++trial) {
        MixtureSpec spec;
        spec.terms = {{1, 0.3 + rng.uniform()}, {2, 0.5 + rng.uniform()}, {3, 0.2 + rng.uniform()}};
        spec.h = 0.4 * rng.uniform();
        int n = 3 + (int)rng.integer(6);
        CouplingTensors ct = CouplingTensors::sample(spec, n, 1000 + trial);
        HamiltonianTable table = HamiltonianTable::build(ct);
        for (int rep = 0; rep < 20; ++rep) {
            uint32_t idx = (uint32_t)rng.integer(1u << n);
            std::vector<int> sigma(n);
            for (int i = 0; i < n; ++i) sigma[i] = (idx >> i) & 1 ? 1 : -1;
            double e = ct.energy(sigma);
            CHECK(table.val[idx] == doctest::Approx(e).epsilon(1e-10));
            int k = (int)rng.integer(n);
            double delta = ct.flip_delta(sigma, k);
            std::vector<int> flipped = sigma;
            flipped[k] = -flipped[k];
            CHECK(delta == doctest::Approx(ct.energy(flipped) - e).epsilon(1e-9));
        }
    }
}

TEST_CASE("overlap popcount equals the direct spin sum") {
    RngStream rng(29);
    for (int trial = 0; trial < 50; ++trial) {
        int n = 1 + (int)rng.integer(14);
        uint32_t a = (uint32_t)rng.integer(1u << n), b = (uint32_t)rng.integer(1u << n);
        double direct = 0;
        for (int i = 0; i < n; ++i) {
            int sa = (a >> i) & 1 ? 1 : -1, sb = (b >> i) & 1 ? 1 : -1;
            direct += sa * sb;
        }
        CHECK(overlap_of_states(a, b, n) == doctest::Approx(direct / n).epsilon(1e-13));
    }
}

TEST_CASE("sampled hamiltonian covariance matches N xi(R)") {
    MixtureSpec spec;
    spec.terms = {{2, 0.8}, {3, 0.4}};
    spec.h = 0.0;
    CovarianceCheckReport rep = covariance_check(spec, 4, 4000, 99);
    CHECK(rep.pass);
    CHECK(rep.max_abs_dev <= rep.max_allowed);

    MixtureSpec sk = MixtureSpec::from_xi0({{2, 1.0}}, 1.0, 0.0);
    rep = covariance_check(sk, 3, 4000, 17);
    CHECK(rep.pass);
}
