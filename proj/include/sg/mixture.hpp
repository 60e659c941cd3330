#pragma once
#include <optional>
#include <string>
#include <vector>

namespace sg {

struct MixtureTerm {
    int p;       // interaction order, p >= 1
    double c;    // coefficient beta_p^2 >= 0
};

// Mixture xi(t) = sum_p c_p t^p with covariance convention Cov H = N xi(R12),
// plus a deterministic external-field part -h * sum_i sigma_i.
// Optionally carries the factored form xi = beta^2 * xi0 for temperature scans.
struct MixtureSpec {
    std::vector<MixtureTerm> terms;
    double h = 0.0;
    std::optional<double> beta;
    std::vector<MixtureTerm> xi0_terms;

    static MixtureSpec from_xi0(std::vector<MixtureTerm> xi0, double beta, double h);

    void validate() const;  // throws std::invalid_argument on malformed input

    // derivative of order 0..3 at t in [-1,1]
    double xi(double t, int order = 0) const;
    double xi0(double t, int order = 0) const;  // requires the factored form

    bool even() const;                  // all p even
    bool convex_on_unit_ball() const;   // xi'' >= 0 on [-1,1]
    int max_p() const;

    std::string describe() const;
};

double eval_terms(const std::vector<MixtureTerm>& terms, double t, int order);

}  // namespace sg
