#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "sg/measure.hpp"
#include "sg/mixture.hpp"
#include "sg/parisi_pde.hpp"

namespace sg {

// P_I(nu) = phi_nu(0,h) - 1/2 int_0^1 xi''(s) s m(s) ds
struct ParisiValue {
    double value = 0.0;
    double phi0 = 0.0;
    double correction = 0.0;
};

// the correction integral, exact piecewise: int xi'' s ds = [s xi' - xi]
double parisi_correction(const MixtureSpec& spec, const AtomicMeasure& nu);
ParisiValue parisi_functional(const MixtureSpec& spec, const AtomicMeasure& nu,
                              const PdeGridParams& params = {});

// 1/2 int xi''(s)(1+s)|m_a - m_b|(s) ds: comparison bound on |P_I(a) - P_I(b)|
double parisi_lipschitz_bound(const MixtureSpec& spec, const AtomicMeasure& a,
                              const AtomicMeasure& b);

struct AtomDiagnostic {
    double q = 0.0, w = 0.0;
    double replicon = 0.0;            // Lambda_R(q_i)
    double fixed_point_residual = 0.0;  // |E(phi_x)^2(q_i, X_{q_i}) - q_i|
    double mc_stderr = 0.0;           // 0 for the density route
};

struct PhaseReport {
    AtomicMeasure minimizer;
    int k_used = 0;          // requested k
    double free_energy = 0.0;  // P_I at the minimizer
    std::vector<AtomDiagnostic> atoms;
    bool is_atom = false;  // second-largest mass below the support threshold
    bool grsb = false;     // at least two support points
    bool gprev = false;    // some support point with Lambda_R > gprev_tol
    bool converged = false;
    double multistart_spread = 0.0;  // value agreement across refined starts
    int n_eval = 0;

    explicit PhaseReport(AtomicMeasure m) : minimizer(std::move(m)) {}
};

struct KrsbOptions {
    int n_starts = 8;
    uint64_t seed = 2024;
    double merge_tol = 1e-4;
    double support_w_tol = 1e-3;  // masses below this do not count as support
    double gprev_tol = 1e-3;
    int search_n = 513;
    int polish_n = 1025;
    int final_n = 2049;
    int search_quad = 48;
    int final_quad = 64;
    int max_eval = 3000;
    std::string lf_method = "density";
};

PhaseReport minimize_krsb(const MixtureSpec& spec, int k, const KrsbOptions& opts = {});

// true iff some atom of the report has Lambda_R above tol; q of the witness
// atom written through witness if given
bool check_gprev(const PhaseReport& report, double tol = 1e-3, double* witness = nullptr);

// F'(beta) = beta sum_i w_i (xi0(1) - xi0(q_i)); requires the factored form
double free_energy_beta_derivative(const MixtureSpec& spec, const AtomicMeasure& nu);

// best P_I over single atoms delta_q, grid scan plus golden refinement
double best_single_atom(const MixtureSpec& spec, double* q_best = nullptr,
                        const PdeGridParams& params = {});

}  // namespace sg
