#pragma once
#include <cstdint>
#include <vector>

#include "sg/mixture.hpp"

namespace sg {

// One i.i.d. Gaussian coupling tensor per mixture term, unsymmetrized:
//   H(sigma) = sum_p sqrt(c_p) N^{(1-p)/2} sum_{i_1..i_p} g_{i_1..i_p} sigma_{i_1}...sigma_{i_p}
//              - h * sum_i sigma_i,
// which gives Cov(H(s), H(t)) = N xi(R(s,t)) exactly for the Gaussian part.
struct CouplingTensors {
    int n = 0;
    MixtureSpec spec;
    // flat[k][j]: tensor for terms[k], row-major over (i_1,...,i_p), already
    // scaled by sqrt(c_p) N^{(1-p)/2}
    std::vector<std::vector<double>> flat;
    // tuples containing index i an odd number of times, per term (flip support)
    std::vector<std::vector<std::vector<int>>> odd_tuples;

    static CouplingTensors sample(const MixtureSpec& spec, int n, uint64_t seed);

    double energy(const std::vector<int>& sigma) const;  // sigma_i in {-1,+1}
    // H(sigma with spin k flipped) - H(sigma)
    double flip_delta(const std::vector<int>& sigma, int k) const;
};

// Exact energy table over all 2^n configurations; bit i of the index set
// means sigma_i = +1.
struct HamiltonianTable {
    int n = 0;
    std::vector<double> val;

    static HamiltonianTable build(const CouplingTensors& ct);
    static HamiltonianTable sample(const MixtureSpec& spec, int n, uint64_t seed);

    double range() const;  // max - min
};

inline double overlap_of_states(uint32_t a, uint32_t b, int n) {
    return (n - 2.0 * __builtin_popcount((a ^ b) & ((n >= 32 ? ~0u : (1u << n) - 1u)))) / n;
}

struct CovarianceCheckReport {
    int n = 0;
    int n_samples = 0;
    double max_abs_dev = 0.0;   // worst |empirical - N xi(R)| over config pairs
    double max_allowed = 0.0;   // 4 standard errors at the worst pair
    bool pass = false;
};

// Monte Carlo verification of Cov H = N xi(R12) over all configuration pairs.
CovarianceCheckReport covariance_check(const MixtureSpec& spec, int n, int n_samples,
                                       uint64_t seed);

}  // namespace sg
