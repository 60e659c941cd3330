#include "sg/mixture.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace sg {

double eval_terms(const std::vector<MixtureTerm>& terms, double t, int order) {
    if (order < 0 || order > 3) throw std::invalid_argument("eval_terms: order must be 0..3");
    if (t < -1.0 - 1e-12 || t > 1.0 + 1e-12)
        throw std::invalid_argument("eval_terms: t outside [-1,1]");
    double s = 0.0;
    for (const auto& [p, c] : terms) {
        double f = 1.0;
        int q = p;
        for (int k = 0; k < order; ++k) f *= q--;
        if (q < 0) continue;  // derivative killed the term
        s += c * f * std::pow(t, q);
    }
    return s;
}

MixtureSpec MixtureSpec::from_xi0(std::vector<MixtureTerm> xi0, double beta, double h) {
    MixtureSpec m;
    m.xi0_terms = xi0;
    m.beta = beta;
    m.h = h;
    for (auto& tm : xi0) tm.c *= beta * beta;
    m.terms = std::move(xi0);
    m.validate();
    return m;
}

void MixtureSpec::validate() const {
    std::set<int> seen;
    for (const auto& [p, c] : terms) {
        if (p < 1) throw std::invalid_argument("MixtureSpec: p must be >= 1");
        if (!(c >= 0.0)) throw std::invalid_argument("MixtureSpec: coefficients must be >= 0");
        if (!seen.insert(p).second) throw std::invalid_argument("MixtureSpec: duplicate power");
    }
    if (!(h >= 0.0)) throw std::invalid_argument("MixtureSpec: h must be >= 0");
    if (beta) {
        if (!(*beta >= 0.0)) throw std::invalid_argument("MixtureSpec: beta must be >= 0");
        if (xi0_terms.empty()) throw std::invalid_argument("MixtureSpec: beta given without xi0");
        double b2 = (*beta) * (*beta);
        for (const auto& [p, c] : xi0_terms) {
            double expect = b2 * c;
            bool found = false;
            for (const auto& [p2, c2] : terms)
                if (p2 == p && std::abs(c2 - expect) <= 1e-12 * (1.0 + expect)) found = true;
            if (!found && expect != 0.0)
                throw std::invalid_argument("MixtureSpec: terms inconsistent with beta^2*xi0");
        }
    }
}

double MixtureSpec::xi(double t, int order) const { return eval_terms(terms, t, order); }

double MixtureSpec::xi0(double t, int order) const {
    if (xi0_terms.empty()) throw std::logic_error("MixtureSpec: no factored xi0 form");
    return eval_terms(xi0_terms, t, order);
}

bool MixtureSpec::even() const {
    for (const auto& [p, c] : terms)
        if (c > 0.0 && p % 2 != 0) return false;
    return true;
}

int MixtureSpec::max_p() const {
    int m = 0;
    for (const auto& [p, c] : terms)
        if (c > 0.0) m = std::max(m, p);
    return m;
}

namespace {
// real roots of sum a_k t^k in [lo,hi] via the companion matrix
std::vector<double> poly_roots_in(const std::vector<double>& a, double lo, double hi) {
    int deg = static_cast<int>(a.size()) - 1;
    while (deg > 0 && a[deg] == 0.0) --deg;
    std::vector<double> roots;
    if (deg < 1) return roots;
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(deg, deg);
    for (int i = 1; i < deg; ++i) C(i, i - 1) = 1.0;
    for (int i = 0; i < deg; ++i) C(i, deg - 1) = -a[i] / a[deg];
    Eigen::EigenSolver<Eigen::MatrixXd> es(C);
    for (int i = 0; i < deg; ++i) {
        auto z = es.eigenvalues()(i);
        if (std::abs(z.imag()) < 1e-9 && z.real() >= lo - 1e-12 && z.real() <= hi + 1e-12)
            roots.push_back(std::clamp(z.real(), lo, hi));
    }
    return roots;
}
}  // namespace

bool MixtureSpec::convex_on_unit_ball() const {
    // xi'' >= 0 holds automatically on [0,1]; check [-1,0] at the endpoints
    // and the critical points of xi'' (roots of xi''').
    int mp = max_p();
    if (mp <= 2) return true;  // xi'' constant and nonneg by coefficient sign
    std::vector<double> d3(std::max(0, mp - 2), 0.0);  // coefficients of xi''' in t^k
    for (const auto& [p, c] : terms)
        if (p >= 3) d3[p - 3] += c * p * (p - 1) * (p - 2);
    std::vector<double> pts = poly_roots_in(d3, -1.0, 0.0);
    pts.push_back(-1.0);
    pts.push_back(0.0);
    for (double t : pts)
        if (xi(t, 2) < 0.0) return false;
    return true;
}

std::string MixtureSpec::describe() const {
    std::ostringstream os;
    os << "xi(t) =";
    bool first = true;
    for (const auto& [p, c] : terms) {
        if (c == 0.0) continue;
        os << (first ? " " : " + ") << c << "*t^" << p;
        first = false;
    }
    if (first) os << " 0";
    os << ", h = " << h;
    if (beta) os << ", beta = " << *beta;
    return os.str();
}

}  // namespace sg
