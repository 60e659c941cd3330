#pragma once
#include <stdexcept>
#include <vector>

namespace sg {

// Thomas algorithm for a(i) x(i-1) + b(i) x(i) + c(i) x(i+1) = d(i).
// a[0] and c[n-1] are ignored. d is overwritten with the solution.
inline void solve_tridiag(const std::vector<double>& a, const std::vector<double>& b,
                          const std::vector<double>& c, std::vector<double>& d,
                          std::vector<double>& scratch) {
    size_t n = b.size();
    scratch.resize(n);
    double beta = b[0];
    if (beta == 0.0) throw std::runtime_error("solve_tridiag: zero pivot");
    d[0] /= beta;
    for (size_t i = 1; i < n; ++i) {
        scratch[i] = c[i - 1] / beta;
        beta = b[i] - a[i] * scratch[i];
        if (beta == 0.0) throw std::runtime_error("solve_tridiag: zero pivot");
        d[i] = (d[i] - a[i] * d[i - 1]) / beta;
    }
    for (size_t i = n - 1; i-- > 0;) d[i] -= scratch[i + 1] * d[i + 1];
}

}  // namespace sg
