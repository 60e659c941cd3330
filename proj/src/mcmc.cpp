#include "sg/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "sg/hamiltonian.hpp"
#include "sg/parallel.hpp"
#include "sg/rng.hpp"

namespace sg {

namespace {

struct Chain {
    uint32_t mask = 0;       // state on the table path
    std::vector<int> sigma;  // state on the generic path
    double energy = 0.0;
    RngStream rng;
    explicit Chain(RngStream r) : rng(r) {}
};

std::vector<double> build_ladder(const McmcOptions& opts) {
    if (!opts.ladder.empty()) {
        const std::vector<double>& l = opts.ladder;
        for (size_t i = 0; i < l.size(); ++i) {
            if (!(l[i] > 0.0 && l[i] <= 1.0))
                throw std::invalid_argument("mcmc_overlap: ladder entries must lie in (0, 1]");
            if (i > 0 && !(l[i] > l[i - 1]))
                throw std::invalid_argument("mcmc_overlap: ladder must be ascending");
        }
        if (std::fabs(l.back() - 1.0) > 1e-12)
            throw std::invalid_argument("mcmc_overlap: ladder must end at the target gamma = 1");
        return l;
    }
    if (opts.n_temps < 1) throw std::invalid_argument("mcmc_overlap: need n_temps >= 1");
    if (!(opts.gamma_min > 0.0 && opts.gamma_min <= 1.0))
        throw std::invalid_argument("mcmc_overlap: gamma_min must lie in (0, 1]");
    int m = opts.n_temps;
    std::vector<double> l(static_cast<size_t>(m));
    for (int t = 0; t < m; ++t)
        l[size_t(t)] = m == 1 ? 1.0 : std::pow(opts.gamma_min, double(m - 1 - t) / (m - 1));
    l.back() = 1.0;
    return l;
}

}  // namespace

McmcResult mcmc_overlap(const MixtureSpec& spec, int n, const McmcOptions& opts) {
    if (n < 1 || n > 200) throw std::invalid_argument("mcmc_overlap: need 1 <= N <= 200");
    if (opts.n_batches < 2) throw std::invalid_argument("mcmc_overlap: need >= 2 batches");
    if (opts.n_sweeps < opts.n_batches)
        throw std::invalid_argument("mcmc_overlap: need n_sweeps >= n_batches");
    std::vector<double> gamma = build_ladder(opts);
    int n_temps = int(gamma.size());
    long burnin = opts.burnin >= 0 ? opts.burnin : opts.n_sweeps / 5;

    CouplingTensors ct = CouplingTensors::sample(spec, n, opts.disorder_seed);
    bool table_path = n <= 20 && !opts.force_generic;
    HamiltonianTable table;
    if (table_path) table = HamiltonianTable::build(ct);

    // two independent replica systems; chain c = sys * n_temps + t runs at gamma[t]
    std::vector<Chain> chains;
    chains.reserve(size_t(2 * n_temps));
    for (int c = 0; c < 2 * n_temps; ++c) {
        Chain ch(RngStream(opts.seed, uint64_t(c)));
        if (table_path) {
            ch.mask = uint32_t(ch.rng.integer(uint64_t(1) << n));
            ch.energy = table.val[ch.mask];
        } else {
            ch.sigma.resize(size_t(n));
            for (int i = 0; i < n; ++i) ch.sigma[size_t(i)] = ch.rng.uniform() < 0.5 ? -1 : 1;
            ch.energy = ct.energy(ch.sigma);
        }
        chains.push_back(std::move(ch));
    }
    RngStream swap_rng(opts.seed, uint64_t(2 * n_temps));

    // heat-bath flips, not metropolis: accepting every zero-cost proposal
    // would freeze the parity of the replica distance at weak coupling (the
    // hypercube is bipartite) and alias sweep-boundary measurements
    auto sweep = [&](Chain& ch, double g) {
        for (int u = 0; u < n; ++u) {
            int site = int(ch.rng.integer(uint64_t(n)));
            double dh;
            if (table_path) {
                uint32_t next = ch.mask ^ (1u << site);
                dh = table.val[next] - table.val[ch.mask];
                if (ch.rng.uniform() * (1.0 + std::exp(g * dh)) < 1.0) {
                    ch.mask = next;
                    ch.energy += dh;
                }
            } else {
                dh = ct.flip_delta(ch.sigma, site);
                if (ch.rng.uniform() * (1.0 + std::exp(g * dh)) < 1.0) {
                    ch.sigma[size_t(site)] = -ch.sigma[size_t(site)];
                    ch.energy += dh;
                }
            }
        }
    };

    std::vector<std::vector<long>> counts(size_t(opts.n_batches),
                                          std::vector<long>(size_t(n) + 1, 0));
    std::vector<long> batch_len(size_t(opts.n_batches), 0);
    long tried = 0, accepted = 0;
    long total = burnin + opts.n_sweeps;
    for (long s = 0; s < total; ++s) {
        for (int c = 0; c < 2 * n_temps; ++c) sweep(chains[size_t(c)], gamma[size_t(c % n_temps)]);
        // synchronized swap phase, alternating pair parity between sweeps
        for (int sys = 0; sys < 2; ++sys)
            for (int t = int(s & 1); t + 1 < n_temps; t += 2) {
                Chain& a = chains[size_t(sys * n_temps + t)];
                Chain& b = chains[size_t(sys * n_temps + t + 1)];
                double logr = (gamma[size_t(t)] - gamma[size_t(t) + 1]) * (a.energy - b.energy);
                ++tried;
                if (logr >= 0.0 || swap_rng.uniform() < std::exp(logr)) {
                    ++accepted;
                    std::swap(a.mask, b.mask);
                    std::swap(a.sigma, b.sigma);
                    std::swap(a.energy, b.energy);
                }
            }
        if (!table_path && (s & 0xffff) == 0xffff)  // damp incremental-energy drift
            for (auto& ch : chains) ch.energy = ct.energy(ch.sigma);
        if (s >= burnin) {
            int batch = int((s - burnin) * opts.n_batches / opts.n_sweeps);
            const Chain& x = chains[size_t(n_temps) - 1];
            const Chain& y = chains[size_t(2 * n_temps) - 1];
            int agree;
            if (table_path) {
                agree = n - __builtin_popcount(x.mask ^ y.mask);
            } else {
                int dot = 0;
                for (int i = 0; i < n; ++i) dot += x.sigma[size_t(i)] * y.sigma[size_t(i)];
                agree = (n + dot) / 2;
            }
            ++counts[size_t(batch)][size_t(agree)];
            ++batch_len[size_t(batch)];
        }
    }

    McmcResult out;
    out.n_sweeps = opts.n_sweeps;
    out.n_temps = n_temps;
    out.swap_acceptance = tried > 0 ? double(accepted) / double(tried) : 1.0;
    out.poor_mixing = tried > 0 && out.swap_acceptance < 0.05;
    OverlapHistogram& h = out.hist;
    h.n_spins = n;
    h.exact = false;
    h.r.resize(size_t(n) + 1);
    for (int j = 0; j <= n; ++j) h.r[size_t(j)] = double(2 * j - n) / n;
    h.p.assign(size_t(n) + 1, 0.0);
    h.se.assign(size_t(n) + 1, 0.0);
    for (int j = 0; j <= n; ++j) {
        long tot = 0;
        for (int b = 0; b < opts.n_batches; ++b) tot += counts[size_t(b)][size_t(j)];
        double mean = double(tot) / double(opts.n_sweeps);
        double var = 0.0;
        for (int b = 0; b < opts.n_batches; ++b) {
            double mb = double(counts[size_t(b)][size_t(j)]) / double(batch_len[size_t(b)]);
            var += (mb - mean) * (mb - mean);
        }
        h.p[size_t(j)] = mean;
        h.se[size_t(j)] = std::sqrt(var / (double(opts.n_batches) * (opts.n_batches - 1)));
    }
    return out;
}

std::vector<McmcResult> mcmc_overlap_many(const MixtureSpec& spec, int n, int n_seeds,
                                          const McmcOptions& opts) {
    if (n_seeds < 1) throw std::invalid_argument("mcmc_overlap_many: need n_seeds >= 1");
    std::vector<McmcResult> out(static_cast<size_t>(n_seeds));
    parallel_for(n_seeds, [&](int i) {
        McmcOptions o = opts;
        o.disorder_seed = splitmix64(opts.disorder_seed) + uint64_t(i);
        o.seed = splitmix64(opts.seed) + uint64_t(i);
        out[size_t(i)] = mcmc_overlap(spec, n, o);
    });
    return out;
}

std::vector<RatePointEstimate> empirical_rate(const std::vector<OverlapHistogram>& per_seed,
                                              const std::vector<double>& q_grid,
                                              double half_width) {
    if (per_seed.empty())
        throw std::invalid_argument("empirical_rate: need at least one histogram");
    if (!(half_width > 0.0)) throw std::invalid_argument("empirical_rate: need half_width > 0");
    int n = per_seed[0].n_spins;
    for (const auto& h : per_seed)
        if (h.n_spins != n) throw std::invalid_argument("empirical_rate: mixed system sizes");
    std::vector<RatePointEstimate> out;
    out.reserve(q_grid.size());
    size_t n_seeds = per_seed.size();
    for (double q : q_grid) {
        RatePointEstimate pt;
        pt.q = q;
        std::vector<double> mass(n_seeds);
        double mean = 0.0;
        for (size_t s = 0; s < n_seeds; ++s) {
            mass[s] = per_seed[s].prob_in(q - half_width, q + half_width);
            mean += mass[s];
        }
        mean /= double(n_seeds);
        double var = 0.0;
        for (double m : mass) var += (m - mean) * (m - mean);
        pt.zeta = mean;
        pt.sigma_zeta = n_seeds > 1 ? std::sqrt(var / (double(n_seeds) * double(n_seeds - 1))) : 0.0;
        if (mean > 0.0) {
            pt.rate = -std::log(mean) / n;
            pt.sigma_rate = pt.sigma_zeta / (n * mean);
        } else {
            pt.rate = std::numeric_limits<double>::infinity();
            pt.sigma_rate = 0.0;
        }
        out.push_back(pt);
    }
    return out;
}

}  // namespace sg
