#include "sg/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <stdexcept>

#include "sg/rng.hpp"

namespace sg {

namespace {

const double kInf = std::numeric_limits<double>::infinity();
const double kLog4 = 1.3862943611198906;

using RowSparse = Eigen::SparseMatrix<double, Eigen::RowMajor>;

Eigen::VectorXd gibbs_from(const std::vector<double>& val) {
    double mn = *std::min_element(val.begin(), val.end());
    Eigen::VectorXd w(Eigen::Index(val.size()));
    for (size_t s = 0; s < val.size(); ++s) w[Eigen::Index(s)] = std::exp(-(val[s] - mn));
    w /= w.sum();
    return w;
}

// pi-weighted similarity transform D^{1/2} Q D^{-1/2}, averaged with its
// transpose so reversibility holds exactly in floating point.
Eigen::SparseMatrix<double> symmetrized(const ChainKernel& k) {
    Eigen::VectorXd sq = k.pi.cwiseSqrt();
    std::vector<Eigen::Triplet<double>> tr;
    tr.reserve(size_t(k.Q.nonZeros()));
    for (int i = 0; i < k.n_states; ++i)
        for (RowSparse::InnerIterator it(k.Q, i); it; ++it)
            tr.emplace_back(i, int(it.col()), it.value() * sq[i] / sq[it.col()]);
    Eigen::SparseMatrix<double> s(k.n_states, k.n_states);
    s.setFromTriplets(tr.begin(), tr.end());
    Eigen::SparseMatrix<double> st = s.transpose();
    return 0.5 * (s + st);
}

struct LanczosOut {
    double theta = 0.0;  // top eigenvalue of the deflated operator
    Eigen::VectorXd v;
    int iters = 0;
    bool converged = false;
};

// Top eigenpair of a symmetric operator on the orthogonal complement of
// `deflate` (a unit eigenvector): full-reorthogonalization Lanczos with
// explicit restarts from the best Ritz vector when the basis cap is hit.
LanczosOut lanczos_top(const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>& apply,
                       int n, const Eigen::VectorXd& deflate, const SpectralOptions& opts) {
    int cap = n <= (1 << 16) ? 400 : (n <= (1 << 18) ? 160 : 56);
    cap = std::min(cap, n);
    RngStream rng(opts.seed);
    Eigen::VectorXd start(n);
    for (int i = 0; i < n; ++i) start[i] = rng.normal();

    Eigen::MatrixXd basis(n, cap);
    Eigen::VectorXd av(n), w(n);
    std::vector<double> alpha, beta;
    LanczosOut out;

    auto reorth = [&](Eigen::VectorXd& x, int k) {
        x -= deflate * deflate.dot(x);
        if (k > 0) x -= basis.leftCols(k) * (basis.leftCols(k).transpose() * x).eval();
    };
    auto ritz_top = [&](int k, Eigen::VectorXd& y) {
        Eigen::MatrixXd t = Eigen::MatrixXd::Zero(k, k);
        for (int i = 0; i < k; ++i) {
            t(i, i) = alpha[size_t(i)];
            if (i + 1 < k) t(i, i + 1) = t(i + 1, i) = beta[size_t(i)];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
        y = es.eigenvectors().col(k - 1);
        return es.eigenvalues()[k - 1];
    };

    while (out.iters < opts.max_iters) {
        Eigen::VectorXd v = start;
        reorth(v, 0);
        reorth(v, 0);
        double nv = v.norm();
        if (nv < 1e-280) break;  // nothing left outside the deflation space
        v /= nv;
        alpha.clear();
        beta.clear();
        int k = 0;
        bool restarted = false;
        while (k < cap && out.iters < opts.max_iters) {
            basis.col(k) = v;
            apply(v, av);
            alpha.push_back(v.dot(av));
            w = av;
            reorth(w, k + 1);
            reorth(w, k + 1);
            double b = w.norm();
            ++k;
            ++out.iters;
            bool breakdown = b < 1e-13;
            if (k <= 48 || k % 5 == 0 || breakdown || k == cap) {
                Eigen::VectorXd y;
                double theta = ritz_top(k, y);
                double res = breakdown ? b : b * std::fabs(y[k - 1]);
                if (res <= opts.tol || breakdown) {
                    out.theta = theta;
                    out.v = basis.leftCols(k) * y;
                    out.v -= deflate * deflate.dot(out.v);
                    out.v.normalize();
                    out.converged = true;
                    return out;
                }
                if (k == cap) {  // restart from the current best Ritz vector
                    start = basis.leftCols(k) * y;
                    restarted = true;
                    break;
                }
            }
            beta.push_back(b);
            v = w / b;
        }
        if (!restarted) break;  // iteration budget exhausted mid-sweep
    }
    // best effort: return the last Ritz data even though unconverged
    if (!alpha.empty()) {
        int k = int(alpha.size());
        Eigen::VectorXd y;
        out.theta = ritz_top(k, y);
        out.v = basis.leftCols(k) * y;
        out.v.normalize();
    }
    return out;
}

// ||(I - Q) v - lambda v|| in L2(pi) for a pi-unit v: the natural norm for a
// reversible kernel, checked against the original unsymmetrized Q.
double gap_residual(const RowSparse& q, const Eigen::VectorXd& pi, const Eigen::VectorXd& v,
                    double lambda) {
    Eigen::VectorXd r = v - q * v - lambda * v;
    return std::sqrt(r.cwiseProduct(r).dot(pi));
}

int popcount32(uint32_t x) { return __builtin_popcount(x); }

}  // namespace

double ChainKernel::row_sum_defect() const {
    double worst = 0.0;
    for (int i = 0; i < n_states; ++i) {
        double s = 0.0;
        for (RowSparse::InnerIterator it(Q, i); it; ++it) s += it.value();
        worst = std::max(worst, std::fabs(s - 1.0));
    }
    return worst;
}

double ChainKernel::detailed_balance_defect() const {
    double worst = 0.0;
    for (int i = 0; i < n_states; ++i)
        for (RowSparse::InnerIterator it(Q, i); it; ++it) {
            int j = int(it.col());
            if (j <= i) continue;
            double fwd = pi[i] * it.value();
            double bwd = pi[j] * Q.coeff(j, i);
            double scale = std::max({fwd, bwd, 1e-300});
            worst = std::max(worst, std::fabs(fwd - bwd) / scale);
        }
    return worst;
}

bool ChainKernel::nearest_neighbor() const {
    for (int i = 0; i < n_states; ++i)
        for (RowSparse::InnerIterator it(Q, i); it; ++it) {
            int j = int(it.col());
            if (it.value() != 0.0 && j != i && popcount32(uint32_t(i) ^ uint32_t(j)) != 1)
                return false;
        }
    return true;
}

std::string ChainKernel::triplet_text() const {
    std::string out;
    out.reserve(size_t(Q.nonZeros()) * 24);
    char buf[64];
    for (int i = 0; i < n_states; ++i)
        for (RowSparse::InnerIterator it(Q, i); it; ++it) {
            std::snprintf(buf, sizeof buf, "%d\t%d\t%.17g\n", i, int(it.col()), it.value());
            out += buf;
        }
    return out;
}

ChainKernel build_metropolis(const HamiltonianTable& table) {
    if (table.n < 1 || table.n > 20)
        throw std::invalid_argument("build_metropolis: need 1 <= n <= 20");
    int n = table.n;
    int states = 1 << n;
    if (table.val.size() != size_t(states))
        throw std::invalid_argument("build_metropolis: table size mismatch");
    ChainKernel k;
    k.n_states = states;
    k.n_spins = n;
    k.kind = "metropolis";
    k.pi = gibbs_from(table.val);
    k.Q.resize(states, states);
    k.Q.reserve(Eigen::VectorXi::Constant(states, n + 1));
    for (uint32_t x = 0; x < uint32_t(states); ++x) {
        double out = 0.0;
        for (int b = 0; b < n; ++b) {
            uint32_t y = x ^ (1u << b);
            double dh = table.val[y] - table.val[x];
            double r = (dh > 0 ? std::exp(-dh) : 1.0) / n;
            out += r;
            k.Q.insert(x, y) = r;
        }
        double diag = 1.0 - out;
        if (diag > 0.0) k.Q.insert(x, x) = diag;
    }
    k.Q.makeCompressed();
    return k;
}

ChainKernel make_lazy(const ChainKernel& k) {
    ChainKernel lz = k;
    lz.kind = "lazy(" + k.kind + ")";
    std::vector<Eigen::Triplet<double>> tr;
    tr.reserve(size_t(k.Q.nonZeros()) + size_t(k.n_states));
    for (int i = 0; i < k.n_states; ++i)
        for (RowSparse::InnerIterator it(k.Q, i); it; ++it)
            tr.emplace_back(i, int(it.col()), 0.5 * it.value());
    for (int i = 0; i < k.n_states; ++i) tr.emplace_back(i, i, 0.5);
    lz.Q.resize(k.n_states, k.n_states);
    lz.Q.setFromTriplets(tr.begin(), tr.end());
    return lz;
}

ChainKernel build_replicated(const ChainKernel& k) {
    if (k.replicated)
        throw std::invalid_argument("build_replicated: kernel is already replicated");
    if (k.n_spins > 7)
        throw std::invalid_argument("build_replicated: materialization needs n <= 7; use replicated_gap");
    int n = k.n_states;
    ChainKernel r;
    r.n_states = n * n;
    r.n_spins = k.n_spins;
    r.replicated = true;
    r.kind = "replicated(" + k.kind + ")";
    r.pi.resize(Eigen::Index(n) * n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) r.pi[i + Eigen::Index(n) * j] = k.pi[i] * k.pi[j];
    std::vector<Eigen::Triplet<double>> tr;
    tr.reserve(size_t(k.Q.nonZeros()) * size_t(2 * n));
    for (int row = 0; row < n; ++row)
        for (RowSparse::InnerIterator it(k.Q, row); it; ++it) {
            int col = int(it.col());
            double half = 0.5 * it.value();
            for (int other = 0; other < n; ++other) {
                tr.emplace_back(other + n * row, other + n * col, half);  // second replica moves
                tr.emplace_back(row + n * other, col + n * other, half);  // first replica moves
            }
        }
    r.Q.resize(r.n_states, r.n_states);
    r.Q.setFromTriplets(tr.begin(), tr.end());
    return r;
}

SpectralResult spectral_gap(const ChainKernel& k, const SpectralOptions& opts) {
    SpectralResult out;
    if (!opts.force_iterative && k.n_states <= opts.dense_cutoff) {
        Eigen::MatrixXd s(symmetrized(k));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
        Eigen::VectorXd w = es.eigenvectors().col(k.n_states - 2);
        out.lambda1 = 1.0 - es.eigenvalues()[k.n_states - 2];
        out.method = "dense";
        Eigen::VectorXd v = (w.array() / k.pi.array().sqrt()).matrix();  // pi-unit
        out.residual = gap_residual(k.Q, k.pi, v, out.lambda1);
        return out;
    }
    // Lanczos on the lazy symmetrized map (I + S)/2: spectrum in [0, 1] with
    // the order of the top preserved, sqrt(pi) deflated exactly.
    Eigen::SparseMatrix<double> s = symmetrized(k);
    Eigen::VectorXd deflate = k.pi.cwiseSqrt().normalized();
    auto apply = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
        y = 0.5 * x + 0.5 * (s * x);
    };
    LanczosOut lz = lanczos_top(apply, k.n_states, deflate, opts);
    out.lambda1 = 2.0 * (1.0 - lz.theta);
    out.iterations = lz.iters;
    out.converged = lz.converged;
    out.method = "lanczos";
    Eigen::VectorXd v = (lz.v.array() / k.pi.array().sqrt()).matrix();  // pi-unit
    out.residual = gap_residual(k.Q, k.pi, v, out.lambda1);
    return out;
}

SpectralResult replicated_gap(const ChainKernel& single, const SpectralOptions& opts) {
    if (single.replicated)
        throw std::invalid_argument("replicated_gap: pass the single-replica kernel");
    if (single.n_spins > 10)
        throw std::invalid_argument("replicated_gap: needs n <= 10");
    int n = single.n_states;
    Eigen::Index nn = Eigen::Index(n) * n;
    Eigen::SparseMatrix<double> s = symmetrized(single);
    Eigen::VectorXd sq = single.pi.cwiseSqrt();
    Eigen::VectorXd deflate(nn);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) deflate[i + Eigen::Index(n) * j] = sq[i] * sq[j];
    deflate.normalize();

    // lazy symmetrized product map: X -> X/2 + (S X + X S)/4
    auto apply = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
        Eigen::Map<const Eigen::MatrixXd> xm(x.data(), n, n);
        y.resize(nn);
        Eigen::Map<Eigen::MatrixXd> ym(y.data(), n, n);
        ym = 0.5 * xm + 0.25 * (s * xm) + 0.25 * (s * xm.transpose()).transpose();
    };
    SpectralResult out;
    LanczosOut lz = lanczos_top(apply, int(nn), deflate, opts);
    out.lambda1 = 2.0 * (1.0 - lz.theta);
    out.iterations = lz.iters;
    out.converged = lz.converged;
    out.method = "lanczos";

    // residual of (I - Q_r) v = v - (Q V + V Q^T)/2 on the unsymmetrized
    // kernel, measured in L2(pi x pi); v = w / sqrt(pi_r) is already pi_r-unit
    Eigen::VectorXd v = lz.v;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) v[i + Eigen::Index(n) * j] /= sq[i] * sq[j];
    Eigen::Map<const Eigen::MatrixXd> vm(v.data(), n, n);
    Eigen::MatrixXd qv = 0.5 * (single.Q * vm) + 0.5 * (single.Q * vm.transpose()).transpose();
    Eigen::MatrixXd resid = vm - qv - out.lambda1 * vm;
    resid.array() *= (sq * sq.transpose()).array();  // back to the symmetric frame norm
    out.residual = resid.norm();
    return out;
}

double OverlapHistogram::total() const {
    double t = 0.0;
    for (double v : p) t += v;
    return t;
}

double OverlapHistogram::prob_in(double lo, double hi) const {
    double t = 0.0;
    for (size_t j = 0; j < r.size(); ++j)
        if (r[j] >= lo - 1e-12 && r[j] <= hi + 1e-12) t += p[j];
    return t;
}

std::string OverlapHistogram::table() const {
    std::string out;
    char buf[96];
    for (size_t j = 0; j < r.size(); ++j) {
        if (se.empty())
            std::snprintf(buf, sizeof buf, "%.10f\t%.12e\n", r[j], p[j]);
        else
            std::snprintf(buf, sizeof buf, "%.10f\t%.12e\t%.3e\n", r[j], p[j], se[j]);
        out += buf;
    }
    return out;
}

namespace {

// in-place unnormalized Walsh-Hadamard transform
void fwht(std::vector<double>& a) {
    size_t n = a.size();
    for (size_t len = 1; len < n; len <<= 1)
        for (size_t i = 0; i < n; i += len << 1)
            for (size_t j = i; j < i + len; ++j) {
                double u = a[j], v = a[j + len];
                a[j] = u + v;
                a[j + len] = u - v;
            }
}

std::vector<double> level_grid(int n) {
    std::vector<double> r(size_t(n) + 1);
    for (int j = 0; j <= n; ++j) r[size_t(j)] = double(2 * j - n) / n;
    return r;
}

}  // namespace

OverlapHistogram overlap_distribution(const HamiltonianTable& table) {
    if (table.n < 1 || table.n > 14)
        throw std::invalid_argument("overlap_distribution: exact mode needs 1 <= n <= 14");
    int n = table.n;
    size_t m = size_t(1) << n;
    Eigen::VectorXd pi = gibbs_from(table.val);
    std::vector<double> a(pi.data(), pi.data() + m);
    // pi-autocorrelation over xor classes: c(u) = sum_s pi_s pi_{s xor u}
    fwht(a);
    for (double& v : a) v *= v;
    fwht(a);
    OverlapHistogram h;
    h.n_spins = n;
    h.r = level_grid(n);
    h.p.assign(size_t(n) + 1, 0.0);
    for (uint32_t u = 0; u < m; ++u) h.p[size_t(n - popcount32(u))] += a[u] / double(m);
    for (double& v : h.p) v = std::max(v, 0.0);
    return h;
}

OverlapHistogram magnetization_distribution(const HamiltonianTable& table) {
    if (table.n < 1 || table.n > 24)
        throw std::invalid_argument("magnetization_distribution: needs 1 <= n <= 24");
    int n = table.n;
    Eigen::VectorXd pi = gibbs_from(table.val);
    OverlapHistogram h;
    h.statistic = "magnetization";
    h.n_spins = n;
    h.r = level_grid(n);
    h.p.assign(size_t(n) + 1, 0.0);
    for (uint32_t s = 0; s < (uint32_t(1) << n); ++s) h.p[size_t(popcount32(s))] += pi[s];
    return h;
}

OverlapHistogram disorder_averaged_overlap(const MixtureSpec& spec, int n, int n_seeds,
                                           uint64_t seed0) {
    if (n_seeds < 2) throw std::invalid_argument("disorder_averaged_overlap: need >= 2 seeds");
    std::vector<std::vector<double>> laws;
    laws.reserve(size_t(n_seeds));
    for (int i = 0; i < n_seeds; ++i) {
        HamiltonianTable t = HamiltonianTable::sample(spec, n, splitmix64(seed0) + uint64_t(i));
        laws.push_back(overlap_distribution(t).p);
    }
    OverlapHistogram h;
    h.n_spins = n;
    h.exact = false;
    h.r = level_grid(n);
    h.p.assign(size_t(n) + 1, 0.0);
    h.se.assign(size_t(n) + 1, 0.0);
    for (int j = 0; j <= n; ++j) {
        double mean = 0.0;
        for (auto& l : laws) mean += l[size_t(j)];
        mean /= n_seeds;
        double var = 0.0;
        for (auto& l : laws) var += (l[size_t(j)] - mean) * (l[size_t(j)] - mean);
        h.p[size_t(j)] = mean;
        h.se[size_t(j)] = std::sqrt(var / (double(n_seeds) * (n_seeds - 1)));
    }
    return h;
}

bool DifficultyReport::difficult() const { return difficulty > kLog4; }

std::string DifficultyReport::table() const {
    std::string out;
    char buf[96];
    for (size_t i = 0; i < e_grid.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.10f\t%.10f\n", e_grid[i], s_grid[i]);
        out += buf;
    }
    return out;
}

DifficultyReport difficulty(const std::vector<double>& f_values,
                            const std::vector<double>& weights, double epsilon,
                            double lipschitz_k, const std::string& name) {
    if (f_values.empty() || f_values.size() != weights.size())
        throw std::invalid_argument("difficulty: values/weights mismatch");
    if (!(epsilon > 0.0)) throw std::invalid_argument("difficulty: epsilon must be positive");
    double lo = *std::min_element(f_values.begin(), f_values.end());
    double hi = *std::max_element(f_values.begin(), f_values.end());
    double step = epsilon / 4;
    if ((hi - lo) / step > 5e6) throw std::invalid_argument("difficulty: grid too fine");

    DifficultyReport rep;
    rep.statistic = name;
    rep.epsilon = epsilon;
    rep.lipschitz = lipschitz_k;
    for (int i = 0;; ++i) {
        double x = lo + i * step;
        if (x > hi + 1e-12) break;
        double mass = 0.0;
        for (size_t j = 0; j < f_values.size(); ++j)
            if (f_values[j] > x - epsilon && f_values[j] < x + epsilon) mass += weights[j];
        rep.e_grid.push_back(x);
        rep.s_grid.push_back(mass > 0.0 ? std::log(mass) : -kInf);
    }

    // triples on the grid with both gaps strictly above 4 eps: index gap >= 17
    int g = int(rep.e_grid.size());
    const int sep = 17;
    rep.phi = rep.difficulty = -kInf;
    if (g >= 2 * sep + 1) {
        std::vector<int> pre(static_cast<size_t>(g));
        std::vector<int> suf(static_cast<size_t>(g));
        pre[0] = 0;
        for (int i = 1; i < g; ++i)
            pre[size_t(i)] = rep.s_grid[size_t(i)] > rep.s_grid[size_t(pre[size_t(i) - 1])]
                                 ? i
                                 : pre[size_t(i) - 1];
        suf[size_t(g) - 1] = g - 1;
        for (int i = g - 2; i >= 0; --i)
            suf[size_t(i)] = rep.s_grid[size_t(i)] >= rep.s_grid[size_t(suf[size_t(i) + 1])]
                                 ? i
                                 : suf[size_t(i) + 1];
        bool empty_mid = false;
        int b1 = -1, b2 = -1, b3 = -1;
        for (int mid = sep; mid + sep < g; ++mid) {
            int i1 = pre[size_t(mid - sep)], i3 = suf[size_t(mid + sep)];
            double outer = rep.s_grid[size_t(i1)] + rep.s_grid[size_t(i3)];
            if (outer == -kInf) continue;
            if (rep.s_grid[size_t(mid)] == -kInf) {
                empty_mid = true;  // sup Phi is infinite over such triples
                continue;
            }
            double phi = outer - rep.s_grid[size_t(mid)];
            if (phi > rep.phi) {
                rep.phi = phi;
                b1 = i1;
                b2 = mid;
                b3 = i3;
            }
        }
        if (b2 >= 0) {
            rep.admissible = true;
            rep.e1 = rep.e_grid[size_t(b1)];
            rep.e2 = rep.e_grid[size_t(b2)];
            rep.e3 = rep.e_grid[size_t(b3)];
        }
        rep.difficulty = empty_mid ? kInf : rep.phi;
    }
    return rep;
}

DifficultyReport difficulty(const OverlapHistogram& h, double epsilon) {
    return difficulty(h.r, h.p, epsilon, 2.0 / h.n_spins, h.statistic);
}

double difficulty_map(double d) {
    double e = std::exp(-d);
    double den = 1.0 - 4.0 * e;
    return den > 0.0 ? e / den : kInf;
}

double manifold_difficulty_bound(double k_lip, double eps, double d) {
    return (k_lip / eps) * (k_lip / eps) * difficulty_map(d);
}

CheegerBounds cheeger_bound_check(const OverlapHistogram& h, const DifficultyReport& rep) {
    CheegerBounds out;
    double k = rep.lipschitz, eps = rep.epsilon;
    const double edge = 1.0;  // hypercube edge length
    out.delta = eps / (2.0 * k);

    if (!(eps > 2.0 * k * edge)) {
        out.difficulty_form.reason = "eps <= 2 K D";
    } else if (!std::isfinite(rep.difficulty)) {
        out.difficulty_form.reason = "difficulty not finite";
    } else if (!(rep.difficulty > kLog4)) {
        out.difficulty_form.reason = "difficulty <= log 4";
    } else {
        out.difficulty_form.applicable = true;
        out.difficulty_form.value =
            2.0 * (k * edge / eps) * (k * edge / eps) * difficulty_map(rep.difficulty);
    }

    if (!rep.admissible) {
        out.testfn_form.reason = "no admissible triple";
        return out;
    }
    // cutoff function of A = {f >= E2}: with every level occupied and single
    // steps moving f by exactly 2/N, the inflation of A by delta and both
    // boundaries are unions of consecutive levels, so their masses are exact.
    int levels = int(h.r.size());
    int ja = 0;
    while (ja < levels && h.r[size_t(ja)] < rep.e2 - 1e-12) ++ja;
    if (ja >= levels) {
        out.testfn_form.reason = "A empty";
        return out;
    }
    int m = int(std::floor(out.delta));
    int jc = ja - (m + 1);
    if (jc < 0) {
        out.testfn_form.reason = "inflated set covers everything";
        return out;
    }
    double mass_a = 0.0, mass_c = 0.0, mass_b = 0.0;
    for (int j = 0; j < levels; ++j) {
        if (j >= ja) mass_a += h.p[size_t(j)];
        if (j <= jc) mass_c += h.p[size_t(j)];
        if (j >= jc && j <= ja) mass_b += h.p[size_t(j)];
    }
    double den = mass_a * mass_c - 4.0 * mass_b * mass_b;
    if (!(den > 0.0)) {
        out.testfn_form.reason = "variance denominator not positive";
        return out;
    }
    out.testfn_form.applicable = true;
    out.testfn_form.value = edge * edge / (2.0 * out.delta * out.delta) * mass_b / den;
    return out;
}

double coercive_lower_bound(const HamiltonianTable& table, const ChainKernel& kernel) {
    if (kernel.kind != "metropolis" || kernel.replicated)
        throw std::invalid_argument("coercive_lower_bound: needs the plain metropolis kernel");
    double range = table.range();
    return std::exp(-3.0 * range) * 2.0 / table.n;
}

}  // namespace sg
