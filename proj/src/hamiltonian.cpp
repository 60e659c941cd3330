#include "sg/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sg/rng.hpp"

namespace sg {

namespace {
int64_t ipow_checked(int64_t base, int exp, int64_t cap) {
    int64_t r = 1;
    for (int k = 0; k < exp; ++k) {
        r *= base;
        if (r > cap) throw std::invalid_argument("coupling tensor too large for this n, p");
    }
    return r;
}
}  // namespace

CouplingTensors CouplingTensors::sample(const MixtureSpec& spec, int n, uint64_t seed) {
    spec.validate();
    if (n < 1) throw std::invalid_argument("CouplingTensors: n must be >= 1");
    CouplingTensors ct;
    ct.n = n;
    ct.spec = spec;
    ct.flat.resize(spec.terms.size());
    ct.odd_tuples.resize(spec.terms.size());
    RngStream rng(seed);
    std::vector<int> idx;
    for (size_t k = 0; k < spec.terms.size(); ++k) {
        const auto& [p, c] = spec.terms[k];
        ct.odd_tuples[k].assign(n, {});
        if (c == 0.0) continue;
        int64_t size = ipow_checked(n, p, int64_t(1) << 26);
        double scale = std::sqrt(c) * std::pow(static_cast<double>(n), 0.5 * (1 - p));
        ct.flat[k].resize(size);
        for (int64_t j = 0; j < size; ++j) ct.flat[k][j] = scale * rng.normal();
        // flip support: tuples where index i appears an odd number of times
        idx.assign(p, 0);
        std::vector<int> count(n);
        for (int64_t j = 0; j < size; ++j) {
            std::fill(count.begin(), count.end(), 0);
            int64_t rem = j;
            for (int d = 0; d < p; ++d) {
                ++count[rem % n];
                rem /= n;
            }
            for (int i = 0; i < n; ++i)
                if (count[i] % 2 == 1) ct.odd_tuples[k][i].push_back(static_cast<int>(j));
        }
    }
    return ct;
}

double CouplingTensors::energy(const std::vector<int>& sigma) const {
    double e = 0.0;
    for (size_t k = 0; k < spec.terms.size(); ++k) {
        if (flat[k].empty()) continue;
        int p = spec.terms[k].p;
        int64_t size = static_cast<int64_t>(flat[k].size());
        for (int64_t j = 0; j < size; ++j) {
            int64_t rem = j;
            int prod = 1;
            for (int d = 0; d < p; ++d) {
                prod *= sigma[rem % n];
                rem /= n;
            }
            e += flat[k][j] * prod;
        }
    }
    for (int i = 0; i < n; ++i) e -= spec.h * sigma[i];
    return e;
}

double CouplingTensors::flip_delta(const std::vector<int>& sigma, int kflip) const {
    double d = 0.0;
    for (size_t k = 0; k < spec.terms.size(); ++k) {
        if (flat[k].empty()) continue;
        int p = spec.terms[k].p;
        double s = 0.0;
        for (int j : odd_tuples[k][kflip]) {
            int64_t rem = j;
            int prod = 1;
            for (int dd = 0; dd < p; ++dd) {
                prod *= sigma[rem % n];
                rem /= n;
            }
            s += flat[k][j] * prod;
        }
        d += -2.0 * s;
    }
    d += 2.0 * spec.h * sigma[kflip];  // field term: -h*sigma flips sign
    return d;
}

HamiltonianTable HamiltonianTable::build(const CouplingTensors& ct) {
    if (ct.n > 24) throw std::invalid_argument("HamiltonianTable: n too large for full table");
    HamiltonianTable t;
    t.n = ct.n;
    t.val.assign(size_t(1) << ct.n, 0.0);
    std::vector<int> sigma(ct.n, -1);  // state for Gray code 0...0
    double e = ct.energy(sigma);
    t.val[0] = e;
    uint32_t gray = 0;
    for (uint32_t m = 1; m < (1u << ct.n); ++m) {
        int b = __builtin_ctz(m);
        e += ct.flip_delta(sigma, b);
        sigma[b] = -sigma[b];
        gray ^= (1u << b);
        t.val[gray] = e;
    }
    return t;
}

HamiltonianTable HamiltonianTable::sample(const MixtureSpec& spec, int n, uint64_t seed) {
    return build(CouplingTensors::sample(spec, n, seed));
}

double HamiltonianTable::range() const {
    auto [mn, mx] = std::minmax_element(val.begin(), val.end());
    return *mx - *mn;
}

CovarianceCheckReport covariance_check(const MixtureSpec& spec, int n, int n_samples,
                                       uint64_t seed) {
    spec.validate();
    if (n < 1 || n > 6) throw std::invalid_argument("covariance_check: n must be in 1..6");
    if (n_samples < 100) throw std::invalid_argument("covariance_check: too few samples");
    CovarianceCheckReport rep;
    rep.n = n;
    rep.n_samples = n_samples;

    const int n_conf = 1 << n;
    // sign of each tuple product per configuration, per term
    std::vector<std::vector<std::vector<int8_t>>> signs(spec.terms.size());
    std::vector<double> scale(spec.terms.size(), 0.0);
    std::vector<int64_t> tsize(spec.terms.size(), 0);
    for (size_t k = 0; k < spec.terms.size(); ++k) {
        const auto& [p, c] = spec.terms[k];
        if (c == 0.0) continue;
        tsize[k] = ipow_checked(n, p, 1 << 20);
        scale[k] = std::sqrt(c) * std::pow(static_cast<double>(n), 0.5 * (1 - p));
        signs[k].assign(n_conf, std::vector<int8_t>(tsize[k]));
        for (int cfg = 0; cfg < n_conf; ++cfg) {
            for (int64_t j = 0; j < tsize[k]; ++j) {
                int64_t rem = j;
                int prod = 1;
                for (int d = 0; d < p; ++d) {
                    prod *= ((cfg >> (rem % n)) & 1) ? 1 : -1;
                    rem /= n;
                }
                signs[k][cfg][j] = static_cast<int8_t>(prod);
            }
        }
    }

    RngStream rng(seed);
    std::vector<double> g;
    std::vector<double> sum(n_conf, 0.0);
    std::vector<std::vector<double>> sum2(n_conf, std::vector<double>(n_conf, 0.0));
    std::vector<double> hval(n_conf);
    for (int s = 0; s < n_samples; ++s) {
        std::fill(hval.begin(), hval.end(), 0.0);
        for (size_t k = 0; k < spec.terms.size(); ++k) {
            if (tsize[k] == 0) continue;
            g.resize(tsize[k]);
            for (auto& v : g) v = rng.normal();
            for (int cfg = 0; cfg < n_conf; ++cfg) {
                double acc = 0.0;
                const auto& sg_row = signs[k][cfg];
                for (int64_t j = 0; j < tsize[k]; ++j) acc += g[j] * sg_row[j];
                hval[cfg] += scale[k] * acc;
            }
        }
        for (int a = 0; a < n_conf; ++a) {
            sum[a] += hval[a];
            for (int b = a; b < n_conf; ++b) sum2[a][b] += hval[a] * hval[b];
        }
    }

    rep.pass = true;
    double worst_ratio = 0.0;
    for (int a = 0; a < n_conf; ++a) {
        for (int b = a; b < n_conf; ++b) {
            double emp = sum2[a][b] / n_samples - (sum[a] / n_samples) * (sum[b] / n_samples);
            double r = overlap_of_states(a, b, n);
            double theory = n * spec.xi(r);
            double var = n * spec.xi(1.0);
            double se = std::sqrt((theory * theory + var * var) / n_samples) + 1e-12;
            double dev = std::abs(emp - theory);
            if (dev / se > worst_ratio) {
                worst_ratio = dev / se;
                rep.max_abs_dev = dev;
                rep.max_allowed = 4.0 * se;
            }
            if (dev > 4.0 * se) rep.pass = false;
        }
    }
    return rep;
}

}  // namespace sg
