#pragma once
#include <functional>
#include <vector>

namespace sg {

// Gaussian expectation rule: E f(Z) ~ sum w_k f(z_k), Z ~ N(0,1).
// Nodes/weights from Golub-Welsch on the probabilists' Hermite Jacobi matrix;
// weights sum to 1.
struct GaussHermite {
    std::vector<double> z, w;
    explicit GaussHermite(int order);
};

// Adaptive Simpson on [a,b] to absolute tolerance tol.
double integrate_adaptive(const std::function<double(double)>& f, double a,
                          double b, double tol, int max_depth = 40);

}  // namespace sg
