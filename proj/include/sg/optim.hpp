#pragma once
#include <functional>
#include <vector>

namespace sg {

struct NmResult {
    std::vector<double> x;
    double fval = 0.0;
    int n_eval = 0;
    bool converged = false;
};

// Nelder-Mead simplex minimization. step sets the initial simplex scale per
// coordinate; stops when the simplex f-spread falls below ftol or max_eval hits.
NmResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                     const std::vector<double>& x0, const std::vector<double>& step,
                     double ftol = 1e-10, int max_eval = 4000);

// Golden-section minimization on [a,b] for unimodal f.
double golden_min(const std::function<double(double)>& f, double a, double b, double xtol,
                  double* fmin = nullptr);

// Damped Newton for F(x)=0 with forward-difference Jacobian. Returns final
// max-abs residual; iterates until below rtol or max_iter.
double newton_system(const std::function<std::vector<double>(const std::vector<double>&)>& F,
                     std::vector<double>& x, double rtol = 1e-12, int max_iter = 60);

}  // namespace sg
