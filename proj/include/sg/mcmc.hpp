#pragma once
#include <cstdint>
#include <vector>

#include "sg/dynamics.hpp"
#include "sg/mixture.hpp"

namespace sg {

// Parallel-tempering overlap sampler. The inverse temperature is already
// folded into the mixture coefficients, so ladder entries are multipliers
// gamma in (0, 1] applied to H, ascending and ending at the target gamma = 1.
struct McmcOptions {
    std::vector<double> ladder;  // empty = auto-geometric from gamma_min to 1
    int n_temps = 8;             // ladder size when auto-generated
    double gamma_min = 0.25;     // hottest multiplier of the auto ladder
    long n_sweeps = 100000;      // measurement sweeps; one sweep = N site updates per chain
    long burnin = -1;            // -1 = n_sweeps / 5
    int n_batches = 32;          // batch means behind the histogram standard errors
    uint64_t seed = 1;           // dynamics streams (one per chain, plus the swap stream)
    uint64_t disorder_seed = 1;  // coupling sample, shared with HamiltonianTable::sample
    bool force_generic = false;  // take the O(N) flip path even when a table fits
};

struct McmcResult {
    OverlapHistogram hist;          // overlap law of the two gamma = 1 replicas
    double swap_acceptance = 1.0;   // accepted fraction over all attempted adjacent swaps
    bool poor_mixing = false;       // swap acceptance below 5%: do not trust the run
    long n_sweeps = 0;
    int n_temps = 0;
};

// Two independent replica systems per temperature; overlap recorded between
// the two gamma = 1 chains each sweep after burn-in.
McmcResult mcmc_overlap(const MixtureSpec& spec, int n, const McmcOptions& opts = {});

// Independent disorder samples run concurrently; run i uses
// splitmix64(disorder_seed) + i and splitmix64(seed) + i.
std::vector<McmcResult> mcmc_overlap_many(const MixtureSpec& spec, int n, int n_seeds,
                                          const McmcOptions& opts = {});

// -(1/N) log of the across-disorder mean window mass zeta_hat(q +- half_width)
// with a delta-method standard error from the across-seed spread. An empty
// window reports rate = +inf with sigma_rate = 0.
struct RatePointEstimate {
    double q;
    double zeta;        // mean window mass across seeds
    double sigma_zeta;  // standard error of that mean
    double rate;        // -(1/N) log zeta
    double sigma_rate;  // sigma_zeta / (N zeta)
};

std::vector<RatePointEstimate> empirical_rate(const std::vector<OverlapHistogram>& per_seed,
                                              const std::vector<double>& q_grid,
                                              double half_width);

}  // namespace sg
