#pragma once
#include <vector>

namespace sg {

// Atomic probability measure on [0,1] used as the Parisi order parameter.
// Atoms strictly ascending, masses positive and summing to one.
struct AtomicMeasure {
    std::vector<double> q;
    std::vector<double> w;

    AtomicMeasure(std::vector<double> atoms, std::vector<double> masses);
    static AtomicMeasure dirac(double atom);

    int k() const { return static_cast<int>(q.size()); }
    double cdf(double s) const;         // m(s) = sum of masses at atoms <= s
    double max_atom() const { return q.back(); }
    // merge atoms closer than tol (mass-weighted position), drop masses < wtol
    AtomicMeasure simplified(double tol, double wtol = 1e-10) const;
    // L1 distance between the cdfs: integral over [0,1] of |m1 - m2|
    static double cdf_distance(const AtomicMeasure& a, const AtomicMeasure& b);
};

// Unconstrained parametrization for optimizers: theta = (a_1..a_k, b_1..b_k)
// with stick-breaking atoms q_i = q_{i-1} + (1 - q_{i-1})*sigmoid(a_i) and
// softmax masses. Coincident atoms are merged so the result stays valid.
AtomicMeasure measure_from_theta(const std::vector<double>& theta, int k);

}  // namespace sg
