#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "../vendor/doctest.h"
#include "sg/dynamics.hpp"
#include "sg/rng.hpp"

using namespace sg;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

MixtureSpec sk(double beta, double h) { return MixtureSpec::from_xi0({{2, 1.0}}, beta, h); }

HamiltonianTable zero_table(int n) {
    HamiltonianTable t;
    t.n = n;
    t.val.assign(size_t(1) << n, 0.0);
    return t;
}

// Curie-Weiss table H = -(beta N / 2) m^2 with m = (2 popcount - N)/N: a deep
// symmetric double well in the magnetization, used to exercise the barrier
// bounds in a regime where they are actually applicable.
HamiltonianTable curie_weiss_table(int n, double beta) {
    HamiltonianTable t;
    t.n = n;
    t.val.resize(size_t(1) << n);
    for (uint32_t s = 0; s < (1u << n); ++s) {
        double m = (2.0 * __builtin_popcount(s) - n) / n;
        t.val[s] = -0.5 * beta * n * m * m;
    }
    return t;
}

Eigen::MatrixXd dense_of(const ChainKernel& k) { return Eigen::MatrixXd(k.Q); }

// Oracle for the gap of I - Q: unsymmetrized dense eigensolve. Reversibility
// makes the spectrum real; no similarity transform involved.
double gap_by_general_eig(const ChainKernel& k) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(k.n_states, k.n_states) - dense_of(k);
    Eigen::EigenSolver<Eigen::MatrixXd> es(a);
    std::vector<double> ev(k.n_states);
    for (int i = 0; i < k.n_states; ++i) ev[i] = es.eigenvalues()[i].real();
    std::sort(ev.begin(), ev.end());
    return ev[1];
}

double binom(int n, int k) {
    double v = 1.0;
    for (int i = 1; i <= k; ++i) v *= double(n - k + i) / i;
    return v;
}

std::vector<double> random_weights(RngStream& rng, int m, double zero_frac) {
    std::vector<double> w(m);
    double tot = 0.0;
    for (double& v : w) {
        v = rng.uniform() < zero_frac ? 0.0 : 0.05 + rng.uniform();
        tot += v;
    }
    if (tot == 0.0) {
        w[0] = 1.0;
        tot = 1.0;
    }
    for (double& v : w) v /= tot;
    return w;
}

// Brute-force difficulty oracle: same grid convention, cubic triple scan.
double brute_difficulty(const std::vector<double>& f, const std::vector<double>& w,
                        double eps, bool finite_mid_only) {
    double lo = *std::min_element(f.begin(), f.end());
    double hi = *std::max_element(f.begin(), f.end());
    std::vector<double> e, s;
    for (int g = 0;; ++g) {
        double x = lo + g * (eps / 4);
        if (x > hi + 1e-12) break;
        double mass = 0.0;
        for (size_t i = 0; i < f.size(); ++i)
            if (f[i] > x - eps && f[i] < x + eps) mass += w[i];
        e.push_back(x);
        s.push_back(mass > 0 ? std::log(mass) : -kInf);
    }
    double best = -kInf;
    int g = (int)e.size();
    for (int i = 0; i < g; ++i)
        for (int j = i + 17; j < g; ++j)
            for (int k = j + 17; k < g; ++k) {
                if (s[i] == -kInf || s[k] == -kInf) continue;
                if (finite_mid_only && s[j] == -kInf) continue;
                double phi = s[i] + s[k] - s[j];  // +inf when the mid window is empty
                best = std::max(best, phi);
            }
    return best;
}

}  // namespace

TEST_CASE("zero Hamiltonian gives the simple random walk with gap 2/N") {
    for (int n : {4, 8}) {  // powers of two so the diagonal complement is exactly zero
        ChainKernel k = build_metropolis(zero_table(n));
        CHECK(k.n_states == (1 << n));
        CHECK(k.pi.size() == k.n_states);
        for (int x = 0; x < k.n_states; ++x) CHECK(k.pi[x] == doctest::Approx(1.0 / k.n_states).epsilon(1e-14));
        Eigen::MatrixXd q = dense_of(k);
        for (int x = 0; x < k.n_states; ++x)
            for (int y = 0; y < k.n_states; ++y) {
                int d = __builtin_popcount(unsigned(x) ^ unsigned(y));
                if (d == 1) CHECK(q(x, y) == doctest::Approx(1.0 / n).epsilon(1e-15));
                else CHECK(q(x, y) == 0.0);  // diagonal is exactly the zero complement
            }
        CHECK(k.row_sum_defect() <= 1e-13);
        CHECK(k.detailed_balance_defect() <= 1e-13);
        CHECK(k.nearest_neighbor());
        SpectralResult sr = spectral_gap(k);
        CHECK(sr.lambda1 == doctest::Approx(2.0 / n).epsilon(1e-12));
        CHECK(sr.residual <= 1e-10);
        CHECK(sr.method == "dense");
    }
}

TEST_CASE("one-spin chain matches the 2x2 brute-force gap") {
    for (double hh : {0.3, 1.2, -0.7}) {
        HamiltonianTable t;
        t.n = 1;
        t.val = {hh, -hh};  // state 0 is sigma=-1, state 1 is sigma=+1
        ChainKernel k = build_metropolis(t);
        double a = std::min(1.0, std::exp(t.val[0] - t.val[1]));  // 0 -> 1
        double b = std::min(1.0, std::exp(t.val[1] - t.val[0]));  // 1 -> 0
        // I - Q has eigenvalues {0, a + b}
        CHECK(spectral_gap(k).lambda1 == doctest::Approx(a + b).epsilon(1e-14));
        Eigen::MatrixXd q = dense_of(k);
        CHECK(q(0, 1) == doctest::Approx(a).epsilon(1e-15));
        CHECK(q(1, 0) == doctest::Approx(b).epsilon(1e-15));
    }
}

TEST_CASE("metropolis kernels satisfy detailed balance and structure exactly") {
    for (uint64_t seed : {11u, 12u, 13u}) {
        HamiltonianTable t = HamiltonianTable::sample(sk(1.3, 0.4), 4, seed);
        ChainKernel k = build_metropolis(t);
        CHECK(k.row_sum_defect() <= 1e-14);
        CHECK(k.detailed_balance_defect() <= 1e-13);
        CHECK(k.nearest_neighbor());
        CHECK(k.pi.minCoeff() > 0.0);
        CHECK(k.pi.sum() == doctest::Approx(1.0).epsilon(1e-14));
        // stationarity: pi^T Q = pi^T
        Eigen::VectorXd piq = dense_of(k).transpose() * k.pi;
        CHECK((piq - k.pi).cwiseAbs().maxCoeff() <= 1e-14);
    }
}

TEST_CASE("dense gap agrees with the unsymmetrized eigensolver oracle") {
    for (uint64_t seed : {5u, 6u}) {
        HamiltonianTable t = HamiltonianTable::sample(sk(1.5, 0.2), 3, seed);
        ChainKernel k = build_metropolis(t);
        SpectralResult sr = spectral_gap(k);
        CHECK(sr.lambda1 == doctest::Approx(gap_by_general_eig(k)).epsilon(1e-11));
        CHECK(sr.lambda1 > 0.0);
        CHECK(sr.lambda1 <= 2.0);
        CHECK(sr.residual <= 1e-10);
    }
}

TEST_CASE("lazy chain halves the gap") {
    HamiltonianTable t = HamiltonianTable::sample(sk(1.1, 0.0), 4, 21);
    ChainKernel k = build_metropolis(t);
    ChainKernel lz = make_lazy(k);
    CHECK(lz.row_sum_defect() <= 1e-14);
    CHECK(lz.detailed_balance_defect() <= 1e-13);
    CHECK(spectral_gap(lz).lambda1 == doctest::Approx(0.5 * spectral_gap(k).lambda1).epsilon(1e-12));
}

TEST_CASE("iterative path reproduces the dense gap") {
    HamiltonianTable t = HamiltonianTable::sample(sk(1.4, 0.3), 8, 31);
    ChainKernel k = build_metropolis(t);
    SpectralResult dn = spectral_gap(k);
    SpectralOptions so;
    so.force_iterative = true;
    SpectralResult it = spectral_gap(k, so);
    CHECK(it.method == "lanczos");
    CHECK(it.converged);
    CHECK(it.lambda1 == doctest::Approx(dn.lambda1).epsilon(1e-9));
    CHECK(it.residual <= 1e-8);
}

TEST_CASE("replicated kernel: structure, entries, and the half-gap identity") {
    HamiltonianTable t = HamiltonianTable::sample(sk(1.2, 0.1), 3, 44);
    ChainKernel k = build_metropolis(t);
    ChainKernel r = build_replicated(k);
    int n = k.n_states;
    CHECK(r.n_states == n * n);
    CHECK(r.replicated);
    CHECK(r.row_sum_defect() <= 1e-13);
    CHECK(r.detailed_balance_defect() <= 1e-12);
    CHECK(r.nearest_neighbor());

    Eigen::MatrixXd q = dense_of(k), qr = dense_of(r);
    // pi_r = pi (x) pi and Q_r((i,j),(i,l)) = Q(j,l)/2, Q_r((i,j),(k,j)) = Q(i,k)/2
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            CHECK(r.pi[i + n * j] == doctest::Approx(k.pi[i] * k.pi[j]).epsilon(1e-14));
            for (int l = 0; l < n; ++l) {
                if (l != j) CHECK(qr(i + n * j, i + n * l) == doctest::Approx(0.5 * q(j, l)).epsilon(1e-14));
                if (l != i) CHECK(qr(i + n * j, l + n * j) == doctest::Approx(0.5 * q(i, l)).epsilon(1e-14));
            }
            CHECK(qr(i + n * j, i + n * j) == doctest::Approx(0.5 * (q(i, i) + q(j, j))).epsilon(1e-14));
        }

    double l1 = spectral_gap(k).lambda1;
    CHECK(spectral_gap(r).lambda1 == doctest::Approx(0.5 * l1).epsilon(1e-10));
}

TEST_CASE("matvec replicated gap matches the materialized kernel and lambda1/2") {
    for (double beta : {0.5, 1.5}) {
        for (int n : {3, 4, 5}) {
            HamiltonianTable t = HamiltonianTable::sample(sk(beta, 0.0), n, 17 + n);
            ChainKernel k = build_metropolis(t);
            SpectralResult op = replicated_gap(k);
            CHECK(op.converged);
            CHECK(std::fabs(op.lambda1 - spectral_gap(build_replicated(k)).lambda1) <= 1e-9);
            CHECK(std::fabs(op.lambda1 - 0.5 * spectral_gap(k).lambda1) <= 1e-8);
            CHECK(op.residual <= 1e-8);
        }
    }
    // zero Hamiltonian: replicated walk gap is (2/N)/2 = 1/N
    ChainKernel srw = build_metropolis(zero_table(6));
    CHECK(replicated_gap(srw).lambda1 == doctest::Approx(1.0 / 6).epsilon(1e-10));
}

TEST_CASE("overlap law at N=2 equals the 16-pair brute force") {
    HamiltonianTable t = HamiltonianTable::sample(sk(1.7, 0.5), 2, 99);
    std::vector<double> w(4);
    double z = 0.0;
    for (int s = 0; s < 4; ++s) z += w[s] = std::exp(-(t.val[s] - t.val[0]));
    for (double& v : w) v /= z;
    std::vector<double> mass(3, 0.0);  // overlap levels -1, 0, +1
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
            int d = __builtin_popcount(unsigned(a) ^ unsigned(b));
            mass[2 - d] += w[a] * w[b];
        }
    OverlapHistogram h = overlap_distribution(t);
    REQUIRE(h.r.size() == 3);
    for (int j = 0; j < 3; ++j) {
        CHECK(h.r[j] == doctest::Approx(-1.0 + j).epsilon(1e-15));
        CHECK(h.p[j] == doctest::Approx(mass[j]).epsilon(1e-13));
    }
}

TEST_CASE("overlap law through the transform equals the direct pair sum at N=6") {
    HamiltonianTable t = HamiltonianTable::sample(sk(1.9, 0.3), 6, 7);
    std::vector<double> w(64);
    double z = 0.0, mn = *std::min_element(t.val.begin(), t.val.end());
    for (int s = 0; s < 64; ++s) z += w[s] = std::exp(-(t.val[s] - mn));
    std::vector<double> mass(7, 0.0);
    for (int a = 0; a < 64; ++a)
        for (int b = 0; b < 64; ++b)
            mass[6 - __builtin_popcount(unsigned(a) ^ unsigned(b))] += w[a] / z * (w[b] / z);
    OverlapHistogram h = overlap_distribution(t);
    REQUIRE(h.r.size() == 7);
    for (int j = 0; j <= 6; ++j) {
        CHECK(h.r[j] == doctest::Approx(-1.0 + 2.0 * j / 6).epsilon(1e-14));
        CHECK(std::fabs(h.p[j] - mass[j]) <= 1e-13);
    }
    CHECK(std::fabs(h.total() - 1.0) <= 1e-10);
}

TEST_CASE("free overlap law is binomial") {
    int n = 10;
    OverlapHistogram h = overlap_distribution(zero_table(n));
    REQUIRE(h.r.size() == size_t(n + 1));
    for (int j = 0; j <= n; ++j)
        CHECK(h.p[j] == doctest::Approx(binom(n, j) / std::pow(2.0, n)).epsilon(1e-12));
    // and so is the free magnetization law
    OverlapHistogram m = magnetization_distribution(zero_table(n));
    for (int j = 0; j <= n; ++j)
        CHECK(m.p[j] == doctest::Approx(binom(n, j) / std::pow(2.0, n)).epsilon(1e-12));
    CHECK(m.statistic == "magnetization");
}

TEST_CASE("magnetization law matches a direct state sum") {
    HamiltonianTable t = HamiltonianTable::sample(sk(1.2, 0.6), 5, 3);
    std::vector<double> w(32);
    double z = 0.0, mn = *std::min_element(t.val.begin(), t.val.end());
    for (int s = 0; s < 32; ++s) z += w[s] = std::exp(-(t.val[s] - mn));
    std::vector<double> mass(6, 0.0);
    for (int s = 0; s < 32; ++s) mass[__builtin_popcount(unsigned(s))] += w[s] / z;
    OverlapHistogram m = magnetization_distribution(t);
    for (int j = 0; j <= 5; ++j) CHECK(m.p[j] == doctest::Approx(mass[j]).epsilon(1e-13));
    // h > 0 tilts the law toward +1
    CHECK(m.p[5] > m.p[0]);
}

TEST_CASE("disorder-averaged overlap law: symmetry and normalization") {
    OverlapHistogram z = disorder_averaged_overlap(sk(1.5, 0.0), 6, 6, 123);
    CHECK(std::fabs(z.total() - 1.0) <= 1e-10);
    CHECK_FALSE(z.exact);
    REQUIRE(z.se.size() == z.p.size());
    int n = 6;
    for (int j = 0; j <= n; ++j) {
        // h = 0: sigma -> -sigma makes each per-disorder law exactly symmetric
        CHECK(std::fabs(z.p[j] - z.p[n - j]) <= 1e-13);
        CHECK(z.se[j] >= 0.0);
        CHECK(z.se[j] < 0.2);
    }
}

TEST_CASE("difficulty arithmetic: the log 16 sanity triple") {
    // masses 0.4 / 0.01 / 0.4 in the three windows, 0.19 parked far right
    double eps = 0.1;
    std::vector<double> f = {0.0, 5 * eps, 10 * eps, 20 * eps};
    std::vector<double> w = {0.4, 0.01, 0.4, 0.19};
    DifficultyReport rep = difficulty(f, w, eps, 1.0, "toy");
    CHECK(rep.admissible);
    CHECK(rep.phi == doctest::Approx(2.7725887222397811).epsilon(1e-12));  // log 16
    // atoms this far apart leave empty middle windows, so the sup is infinite
    CHECK(rep.difficulty == kInf);
    CHECK(rep.difficult());
    // the reported triple realizes phi: window masses 0.4 / 0.01 / 0.4
    auto window_mass = [&](double x) {
        double m = 0.0;
        for (size_t i = 0; i < f.size(); ++i)
            if (f[i] > x - eps && f[i] < x + eps) m += w[i];
        return m;
    };
    CHECK(window_mass(rep.e1) == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(window_mass(rep.e2) == doctest::Approx(0.01).epsilon(1e-14));
    CHECK(window_mass(rep.e3) == doctest::Approx(0.4).epsilon(1e-14));
    // reported triple satisfies the separation constraints strictly
    CHECK(rep.e2 - rep.e1 > 4 * eps);
    CHECK(rep.e3 - rep.e2 > 4 * eps);
}

TEST_CASE("free overlap at N=10 is not difficult at eps 0.25") {
    OverlapHistogram h = overlap_distribution(zero_table(10));
    DifficultyReport rep = difficulty(h, 0.25);
    CHECK(rep.lipschitz == doctest::Approx(0.2));
    double oracle = brute_difficulty(h.r, h.p, 0.25, false);
    if (std::isfinite(oracle) && std::isfinite(rep.difficulty))
        CHECK(rep.difficulty == doctest::Approx(oracle).epsilon(1e-12));
    else
        CHECK(rep.difficulty == oracle);  // infinities compare exactly
    CHECK_FALSE(rep.difficult());
    CHECK(rep.difficulty < std::log(4.0));
}

TEST_CASE("difficulty reports no triple when the range cannot hold one") {
    std::vector<double> f = {0.0, 0.5, 1.0};
    std::vector<double> w = {0.3, 0.4, 0.3};
    DifficultyReport rep = difficulty(f, w, 0.4, 1.0);  // gaps needed: > 1.6 on range 1
    CHECK_FALSE(rep.admissible);
    CHECK(rep.difficulty == -kInf);
    CHECK_FALSE(rep.difficult());
}

TEST_CASE("difficulty maximization agrees with the cubic scan on random histograms") {
    RngStream rng(2024);
    for (int rep_i = 0; rep_i < 60; ++rep_i) {
        int m = 5 + (int)rng.integer(22);
        double span = 0.5 + 2.0 * rng.uniform();
        std::vector<double> f(m);
        for (int i = 0; i < m; ++i) f[i] = span * i / (m - 1);
        std::vector<double> w = random_weights(rng, m, 0.35);
        double eps = span * (0.02 + 0.05 * rng.uniform());
        DifficultyReport rep = difficulty(f, w, eps, 1.0);
        double oracle = brute_difficulty(f, w, eps, false);
        if (oracle == -kInf || oracle == kInf) {
            CHECK(rep.difficulty == oracle);
        } else {
            CHECK(rep.difficulty == doctest::Approx(oracle).epsilon(1e-12));
        }
        if (rep.admissible) {
            CHECK(rep.phi == doctest::Approx(brute_difficulty(f, w, eps, true)).epsilon(1e-12));
            CHECK(rep.e2 - rep.e1 > 4 * eps);
            CHECK(rep.e3 - rep.e2 > 4 * eps);
        }
    }
}

TEST_CASE("difficulty map is decreasing past log 4 and rejected at log 4") {
    double prev = kInf;
    for (double d = std::log(4.0) + 1e-3; d < 25.0; d += 0.37) {
        double v = difficulty_map(d);
        CHECK(v > 0.0);
        CHECK(v < prev);
        prev = v;
        CHECK(manifold_difficulty_bound(0.5, 1.0, d) == doctest::Approx(0.25 * v).epsilon(1e-13));
    }
    // at d = log 4 the denominator vanishes: no finite bound is claimed
    OverlapHistogram h = overlap_distribution(zero_table(4));
    DifficultyReport rep = difficulty(h, 1.01);  // eps > 2K = 1 with K = 1/2
    rep.difficulty = std::log(4.0);
    CheegerBounds cb = cheeger_bound_check(h, rep);
    CHECK_FALSE(cb.difficulty_form.applicable);
}

TEST_CASE("test-function bound arithmetic on a hand histogram") {
    // nine levels on the N = 8 grid, twin peaks with a thin valley
    OverlapHistogram h;
    h.n_spins = 8;
    h.r = {-1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 1.0};
    h.p = {0.44, 0.01, 0.004, 0.002, 0.001, 0.002, 0.004, 0.01, 0.527};
    DifficultyReport rep;
    rep.statistic = h.statistic;
    rep.epsilon = 0.6;  // delta = eps/(2K) = 1.2 with K = 1/4
    rep.lipschitz = 0.25;
    rep.admissible = true;
    rep.e1 = -1.0;
    rep.e2 = -0.05;
    rep.e3 = 1.0;
    rep.difficulty = rep.phi = std::log(0.44 * 0.527 / 0.001);
    CheegerBounds cb = cheeger_bound_check(h, rep);
    // A = {r >= 0} (level 4 up); inflation of floor(1.2) = 1 level plus the
    // outer boundary puts B exactly on levels 2..4
    double nb = 0.004 + 0.002 + 0.001;
    double na = 0.001 + 0.002 + 0.004 + 0.01 + 0.527;
    double nc = 0.44 + 0.01 + 0.004;
    double expect = (1.0 / (2 * 1.2 * 1.2)) * nb / (na * nc - 4 * nb * nb);
    CHECK(cb.delta == doctest::Approx(1.2).epsilon(1e-14));
    CHECK(cb.testfn_form.applicable);
    CHECK(cb.testfn_form.value == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("barrier bounds dominate the exact gap on a deep double well") {
    // Curie-Weiss at N = 18, beta = 3: magnetization concentrates near +-1 and
    // the difficulty window constraints are satisfiable (range/K = N > 16).
    int n = 18;
    HamiltonianTable t = curie_weiss_table(n, 3.0);
    ChainKernel k = build_metropolis(t);
    OverlapHistogram h = magnetization_distribution(t);
    DifficultyReport rep = difficulty(h, 0.235);
    CHECK(rep.admissible);
    CHECK(rep.difficult());
    CHECK(rep.difficulty > 8.0);

    CheegerBounds cb = cheeger_bound_check(h, rep);
    CHECK(cb.difficulty_form.applicable);
    CHECK(cb.testfn_form.applicable);

    SpectralResult sr = spectral_gap(k);  // iterative: n = 262144 states
    CHECK(sr.method == "lanczos");
    CHECK(sr.converged);
    CHECK(sr.lambda1 > 1e-12);
    CHECK(sr.lambda1 < 1e-4);
    CHECK(sr.lambda1 <= cb.difficulty_form.value);
    CHECK(sr.lambda1 <= cb.testfn_form.value);
    CHECK(coercive_lower_bound(t, k) <= sr.lambda1);
}

TEST_CASE("coercive lower bound: equality at zero coupling, domination otherwise") {
    for (int n : {4, 6}) {
        ChainKernel srw = build_metropolis(zero_table(n));
        CHECK(coercive_lower_bound(zero_table(n), srw) == doctest::Approx(2.0 / n).epsilon(1e-15));
    }
    for (uint64_t seed : {1u, 2u, 3u, 4u}) {
        HamiltonianTable t = HamiltonianTable::sample(sk(1.5, 0.2), 6, seed);
        ChainKernel k = build_metropolis(t);
        double lower = coercive_lower_bound(t, k);
        CHECK(lower > 0.0);
        CHECK(lower <= spectral_gap(k).lambda1);
    }
}

TEST_CASE("overlap Lipschitz constant over product edges is exactly 2/N") {
    for (int n : {3, 5, 6}) {
        double worst = 0.0;
        uint32_t states = 1u << n;
        for (uint32_t a = 0; a < states; ++a)
            for (uint32_t b = 0; b < states; ++b) {
                double r0 = overlap_of_states(a, b, n);
                for (int bit = 0; bit < n; ++bit) {
                    worst = std::max(worst, std::fabs(overlap_of_states(a ^ (1u << bit), b, n) - r0));
                    worst = std::max(worst, std::fabs(overlap_of_states(a, b ^ (1u << bit), n) - r0));
                }
            }
        // popcount changes by exactly one; the quotient rounds within an ulp
        CHECK(worst == doctest::Approx(2.0 / n).epsilon(1e-14));
    }
}

TEST_CASE("triplet export round-trips the kernel") {
    HamiltonianTable t = HamiltonianTable::sample(sk(1.0, 0.1), 3, 8);
    ChainKernel k = build_metropolis(t);
    std::istringstream in(k.triplet_text());
    Eigen::MatrixXd back = Eigen::MatrixXd::Zero(k.n_states, k.n_states);
    int row, col;
    double v;
    int lines = 0;
    while (in >> row >> col >> v) {
        back(row, col) = v;
        ++lines;
    }
    CHECK(lines == k.Q.nonZeros());
    CHECK((back - dense_of(k)).cwiseAbs().maxCoeff() <= 1e-15);
}
