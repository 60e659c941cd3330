#include "sg/optim.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace sg {

NmResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                     const std::vector<double>& x0, const std::vector<double>& step, double ftol,
                     int max_eval) {
    const int n = static_cast<int>(x0.size());
    const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;
    NmResult res;

    std::vector<std::vector<double>> pts(n + 1, x0);
    std::vector<double> fv(n + 1);
    for (int i = 1; i <= n; ++i) pts[i][i - 1] += step[i - 1];
    for (int i = 0; i <= n; ++i) fv[i] = f(pts[i]);
    res.n_eval = n + 1;

    std::vector<int> order(n + 1);
    std::vector<double> xc(n), xr(n), xe(n), xk(n);
    while (res.n_eval < max_eval) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) { return fv[a] < fv[b]; });
        int best = order[0], worst = order[n], second = order[n - 1];
        if (std::abs(fv[worst] - fv[best]) < ftol * (1.0 + std::abs(fv[best]))) {
            res.converged = true;
            break;
        }
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int i = 0; i <= n; ++i)
                if (i != worst) s += pts[i][j];
            xc[j] = s / n;
        }
        for (int j = 0; j < n; ++j) xr[j] = xc[j] + alpha * (xc[j] - pts[worst][j]);
        double fr = f(xr);
        ++res.n_eval;
        if (fr < fv[order[0]]) {
            for (int j = 0; j < n; ++j) xe[j] = xc[j] + gamma * (xr[j] - xc[j]);
            double fe = f(xe);
            ++res.n_eval;
            if (fe < fr) {
                pts[worst] = xe;
                fv[worst] = fe;
            } else {
                pts[worst] = xr;
                fv[worst] = fr;
            }
        } else if (fr < fv[second]) {
            pts[worst] = xr;
            fv[worst] = fr;
        } else {
            bool outside = fr < fv[worst];
            const std::vector<double>& base = outside ? xr : pts[worst];
            for (int j = 0; j < n; ++j) xk[j] = xc[j] + rho * (base[j] - xc[j]);
            double fk = f(xk);
            ++res.n_eval;
            if (fk < std::min(fr, fv[worst])) {
                pts[worst] = xk;
                fv[worst] = fk;
            } else {  // shrink toward best
                for (int i = 0; i <= n; ++i) {
                    if (i == best) continue;
                    for (int j = 0; j < n; ++j)
                        pts[i][j] = pts[best][j] + sigma * (pts[i][j] - pts[best][j]);
                    fv[i] = f(pts[i]);
                    ++res.n_eval;
                }
            }
        }
    }
    int best = static_cast<int>(std::min_element(fv.begin(), fv.end()) - fv.begin());
    res.x = pts[best];
    res.fval = fv[best];
    return res;
}

double golden_min(const std::function<double(double)>& f, double a, double b, double xtol,
                  double* fmin) {
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > xtol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
    }
    double xm = 0.5 * (a + b);
    if (fmin) *fmin = f(xm);
    return xm;
}

double newton_system(const std::function<std::vector<double>(const std::vector<double>&)>& F,
                     std::vector<double>& x, double rtol, int max_iter) {
    const int n = static_cast<int>(x.size());
    auto resid_norm = [](const std::vector<double>& r) {
        double m = 0.0;
        for (double v : r) m = std::max(m, std::abs(v));
        return m;
    };
    std::vector<double> r = F(x);
    double rn = resid_norm(r);
    for (int it = 0; it < max_iter && rn > rtol; ++it) {
        Eigen::MatrixXd J(n, n);
        for (int j = 0; j < n; ++j) {
            double hj = 1e-7 * (1.0 + std::abs(x[j]));
            std::vector<double> xp = x;
            xp[j] += hj;
            std::vector<double> rp = F(xp);
            for (int i = 0; i < n; ++i) J(i, j) = (rp[i] - r[i]) / hj;
        }
        Eigen::VectorXd rv(n);
        for (int i = 0; i < n; ++i) rv(i) = r[i];
        Eigen::VectorXd dx = J.fullPivLu().solve(-rv);
        if (!dx.allFinite()) break;
        double t = 1.0;
        std::vector<double> xt(n), rt;
        double rt_n = std::numeric_limits<double>::infinity();
        for (int ls = 0; ls < 30; ++ls) {
            for (int i = 0; i < n; ++i) xt[i] = x[i] + t * dx(i);
            rt = F(xt);
            rt_n = resid_norm(rt);
            if (rt_n < rn) break;
            t *= 0.5;
        }
        if (rt_n >= rn) break;  // no descent found
        x = xt;
        r = rt;
        rn = rt_n;
    }
    return rn;
}

}  // namespace sg
