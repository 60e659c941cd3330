#include "sg/quadrature.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace sg {

GaussHermite::GaussHermite(int order) {
    if (order < 1 || order > 512) throw std::invalid_argument("GaussHermite: order out of range");
    // Jacobi matrix for probabilists' Hermite: off-diagonal b_k = sqrt(k).
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(order, order);
    for (int k = 1; k < order; ++k) {
        double b = std::sqrt(static_cast<double>(k));
        J(k, k - 1) = b;
        J(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    if (es.info() != Eigen::Success) throw std::runtime_error("GaussHermite: eigensolve failed");
    z.resize(order);
    w.resize(order);
    for (int k = 0; k < order; ++k) {
        z[k] = es.eigenvalues()(k);
        double v0 = es.eigenvectors()(0, k);
        w[k] = v0 * v0;  // first-component-squared rule; weights sum to 1
    }
}

namespace {
double simpson(const std::function<double(double)>& f, double a, double fa, double b, double fb,
               double m, double fm) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adapt(const std::function<double(double)>& f, double a, double fa, double b, double fb,
             double m, double fm, double whole, double tol, int depth) {
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = simpson(f, a, fa, m, fm, lm, flm);
    double right = simpson(f, m, fm, b, fb, rm, frm);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adapt(f, a, fa, m, fm, lm, flm, left, tol / 2, depth - 1) +
           adapt(f, m, fm, b, fb, rm, frm, right, tol / 2, depth - 1);
}
}  // namespace

double integrate_adaptive(const std::function<double(double)>& f, double a, double b, double tol,
                          int max_depth) {
    if (a == b) return 0.0;
    double m = 0.5 * (a + b);
    double fa = f(a), fb = f(b), fm = f(m);
    double whole = simpson(f, a, fa, b, fb, m, fm);
    return adapt(f, a, fa, b, fb, m, fm, whole, tol, max_depth);
}

}  // namespace sg
