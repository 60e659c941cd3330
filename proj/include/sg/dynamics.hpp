#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "sg/hamiltonian.hpp"
#include "sg/mixture.hpp"

namespace sg {

// Reversible row-stochastic transition kernel on {0,...,n_states-1}. States
// are spin configurations encoded as bit patterns (bit i set <=> sigma_i = +1);
// for replicated kernels the pattern is the concatenation of both replicas, so
// Hamming distance between state indices is graph distance in either case.
struct ChainKernel {
    int n_states = 0;
    Eigen::SparseMatrix<double, Eigen::RowMajor> Q;
    Eigen::VectorXd pi;      // stationary law, sums to 1
    int n_spins = 0;         // spins per replica
    bool replicated = false;
    std::string kind;        // "metropolis", "lazy(...)", "replicated(...)"

    double row_sum_defect() const;          // max_x |sum_y Q(x,y) - 1|
    double detailed_balance_defect() const; // max relative |pi_x Q_xy - pi_y Q_yx|
    bool nearest_neighbor() const;          // off-diagonal entries only on Hamming-1 edges
    std::string triplet_text() const;       // "row\tcol\tvalue" per line, for external checks
};

// Metropolis chain with single-spin-flip base walk: off-diagonal rate
// (1/N) min(1, e^{-(H(y)-H(x))}) on Hamming neighbors, diagonal the
// complement, stationary pi propto e^{-H}. Requires n <= 20.
ChainKernel build_metropolis(const HamiltonianTable& table);

ChainKernel make_lazy(const ChainKernel& k);  // (I + Q)/2

// Product chain (Q (x) Id + Id (x) Q)/2, materialized sparse; stationary
// pi (x) pi. State (i, j) -> index i + 2^N j. Requires n <= 7; beyond that use
// replicated_gap, which applies the same operator without materializing it.
ChainKernel build_replicated(const ChainKernel& k);

struct SpectralOptions {
    int dense_cutoff = 4096;    // dense symmetric solve up to this many states
    bool force_iterative = false;
    int max_iters = 4000;       // total Lanczos steps across restarts
    double tol = 1e-10;         // residual target in the symmetrized frame
    uint64_t seed = 7;          // start-vector stream
};

struct SpectralResult {
    double lambda1 = 0.0;   // second-smallest eigenvalue of I - Q
    double residual = 0.0;  // ||(I - Q) v - lambda1 v|| in L2(pi), ||v||_pi = 1
    int iterations = 0;     // Lanczos steps (0 on the dense path)
    bool converged = true;
    std::string method;     // "dense" or "lanczos"
};

// Gap of I - Q through the pi-weighted similarity transform
// S = D^{1/2} Q D^{-1/2}: dense spectrum for small kernels, deflated Lanczos
// on the lazy map (I + S)/2 for large ones.
SpectralResult spectral_gap(const ChainKernel& k, const SpectralOptions& opts = {});

// Replicated gap Lambda_1 of I - (Q (x) Id + Id (x) Q)/2 computed from the
// single-chain kernel via the Kronecker-structured matvec X -> (SX + XS)/2;
// never builds the squared state space. Independent of the tensor-eigenbasis
// identity Lambda_1 = lambda_1/2, so it can be used to verify it.
SpectralResult replicated_gap(const ChainKernel& single, const SpectralOptions& opts = {});

// Distribution of a 2/N-resolution statistic of the Gibbs law on the
// hypercube: the overlap R_12 under pi (x) pi by default, the magnetization
// under pi for the single-chain variant. Levels r are -1, -1+2/N, ..., 1.
struct OverlapHistogram {
    std::string statistic = "overlap";
    int n_spins = 0;
    std::vector<double> r;   // support levels, ascending
    std::vector<double> p;   // probabilities (exact) or estimates
    std::vector<double> se;  // standard errors; empty in exact mode
    bool exact = true;

    double total() const;                      // sum of p
    double prob_in(double lo, double hi) const;  // mass of [lo, hi]
    std::string table() const;                 // "r\tp(\tse)" per line
};

// Exact overlap law: pi-autocorrelation over xor classes via a fast
// Walsh-Hadamard transform, bucketed by popcount. Requires n <= 14.
OverlapHistogram overlap_distribution(const HamiltonianTable& table);

// Exact magnetization law under pi (single chain), same level layout.
OverlapHistogram magnetization_distribution(const HamiltonianTable& table);

// Disorder-averaged overlap law (zeta_N estimate): exact per-sample laws
// averaged over n_seeds independent coupling draws; se is the across-seed
// standard error of each level mass.
OverlapHistogram disorder_averaged_overlap(const MixtureSpec& spec, int n, int n_seeds,
                                           uint64_t seed0);

// Landscape difficulty of a statistic with values f_i carrying weights nu_i.
// S(E) = log nu(f in (E-eps, E+eps)) on a grid of pitch eps/4; the report
// maximizes Phi = S(E1) + S(E3) - S(E2) over triples E1 < E2 < E3 with both
// gaps strictly greater than 4 eps and finite window masses.
struct DifficultyReport {
    std::string statistic;
    double epsilon = 0.0;
    double lipschitz = 0.0;     // Lipschitz constant K of the statistic
    std::vector<double> e_grid;
    std::vector<double> s_grid; // -inf where the window carries no mass
    double e1 = 0.0, e2 = 0.0, e3 = 0.0;
    double phi = 0.0;           // Phi at the best admissible triple
    double difficulty = 0.0;    // sup Phi; -inf when no triple is admissible
    bool admissible = false;

    bool difficult() const;     // difficulty > log 4
    std::string table() const;  // "E\tS" per line
};

DifficultyReport difficulty(const std::vector<double>& f_values,
                            const std::vector<double>& weights, double epsilon,
                            double lipschitz_k, const std::string& name = "statistic");
// Overlap/magnetization histograms: K = 2/N per unit Hamming step.
DifficultyReport difficulty(const OverlapHistogram& h, double epsilon);

// e^{-d} / (1 - 4 e^{-d}), the difficulty-to-gap map; decreasing for
// d > log 4, infinite at d = log 4 where the denominator vanishes.
double difficulty_map(double d);

// Upper bounds on the spectral gap of a nearest-neighbor reversible chain
// whose stationary law pushes forward to the histogram under a K-Lipschitz
// statistic. Hypercube edge length D = 1 throughout.
struct BoundCheck {
    bool applicable = false;
    double value = 0.0;      // upper bound on the gap when applicable
    std::string reason;      // why not, when not
};
struct CheegerBounds {
    BoundCheck difficulty_form;  // 2 (K D / eps)^2 e^{-D_eps}/(1 - 4 e^{-D_eps})
    BoundCheck testfn_form;      // Rayleigh quotient bound of the explicit cutoff
                                 // function of A = {f >= E2}, inflation delta = eps/(2K)
    double delta = 0.0;          // metric inflation radius used by testfn_form
};

// Evaluates both bounds from the exact level masses and a difficulty report
// on the same statistic. The difficulty form needs eps > 2K and
// difficulty > log 4; the test-function form needs an admissible triple and a
// positive variance denominator. Each reports applicability instead of
// failing. Both bound the gap of the chain the histogram lives on (the
// replicated chain for overlap, the single chain for magnetization).
CheegerBounds cheeger_bound_check(const OverlapHistogram& h, const DifficultyReport& rep);

// (K/eps)^2 e^{-d}/(1 - 4 e^{-d}): the continuous-dynamics analogue of the
// difficulty form (no edge-length factor), exposed for monotonicity checks.
double manifold_difficulty_bound(double k_lip, double eps, double d);

// Lower bound e^{-3 (max H - min H)} 2/N on the Metropolis gap: base-walk
// comparison constant e^{-(max H - min H)} times the Holley-Stroock factor
// e^{-2 (max H - min H)} times the walk gap 2/N. Equals 2/N when H == 0.
double coercive_lower_bound(const HamiltonianTable& table, const ChainKernel& kernel);

}  // namespace sg
