#include "sg/measure.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sg {

AtomicMeasure::AtomicMeasure(std::vector<double> atoms, std::vector<double> masses)
    : q(std::move(atoms)), w(std::move(masses)) {
    if (q.empty() || q.size() != w.size())
        throw std::invalid_argument("AtomicMeasure: size mismatch or empty");
    double tot = 0.0;
    for (size_t i = 0; i < q.size(); ++i) {
        if (q[i] < 0.0 || q[i] > 1.0) throw std::invalid_argument("AtomicMeasure: atom outside [0,1]");
        if (i > 0 && q[i] <= q[i - 1]) throw std::invalid_argument("AtomicMeasure: atoms not ascending");
        if (!(w[i] > 0.0)) throw std::invalid_argument("AtomicMeasure: masses must be positive");
        tot += w[i];
    }
    if (std::abs(tot - 1.0) > 1e-12) throw std::invalid_argument("AtomicMeasure: masses must sum to 1");
}

AtomicMeasure AtomicMeasure::dirac(double atom) { return AtomicMeasure({atom}, {1.0}); }

double AtomicMeasure::cdf(double s) const {
    double m = 0.0;
    for (size_t i = 0; i < q.size() && q[i] <= s; ++i) m += w[i];
    return m;
}

AtomicMeasure AtomicMeasure::simplified(double tol, double wtol) const {
    std::vector<double> nq, nw;
    for (size_t i = 0; i < q.size(); ++i) {
        if (!nq.empty() && q[i] - nq.back() < tol) {
            double wsum = nw.back() + w[i];
            nq.back() = (nq.back() * nw.back() + q[i] * w[i]) / wsum;
            nw.back() = wsum;
        } else {
            nq.push_back(q[i]);
            nw.push_back(w[i]);
        }
    }
    std::vector<double> fq, fw;
    double dropped = 0.0;
    for (size_t i = 0; i < nq.size(); ++i) {
        if (nw[i] < wtol)
            dropped += nw[i];
        else {
            fq.push_back(nq[i]);
            fw.push_back(nw[i]);
        }
    }
    if (fq.empty()) return dirac(nq.front());
    double tot = 0.0;
    for (double v : fw) tot += v;
    for (double& v : fw) v /= tot;
    (void)dropped;
    return AtomicMeasure(std::move(fq), std::move(fw));
}

double AtomicMeasure::cdf_distance(const AtomicMeasure& a, const AtomicMeasure& b) {
    std::vector<double> cuts{0.0, 1.0};
    cuts.insert(cuts.end(), a.q.begin(), a.q.end());
    cuts.insert(cuts.end(), b.q.begin(), b.q.end());
    std::sort(cuts.begin(), cuts.end());
    double d = 0.0;
    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
        double len = cuts[i + 1] - cuts[i];
        if (len <= 0.0) continue;
        double mid = 0.5 * (cuts[i] + cuts[i + 1]);
        d += len * std::abs(a.cdf(mid) - b.cdf(mid));
    }
    return d;
}

AtomicMeasure measure_from_theta(const std::vector<double>& theta, int k) {
    auto sigmoid = [](double a) { return 1.0 / (1.0 + std::exp(-a)); };
    std::vector<double> q(k), w(k);
    double prev = 0.0;
    for (int i = 0; i < k; ++i) {
        prev = prev + (1.0 - prev) * sigmoid(theta[i]);
        q[i] = prev;
    }
    double bmax = theta[k];
    for (int i = 1; i < k; ++i) bmax = std::max(bmax, theta[k + i]);
    double tot = 0.0;
    for (int i = 0; i < k; ++i) {
        w[i] = std::exp(theta[k + i] - bmax);
        tot += w[i];
    }
    for (int i = 0; i < k; ++i) w[i] /= tot;
    // collapse numerically coincident atoms so the measure stays valid
    std::vector<double> fq, fw;
    for (int i = 0; i < k; ++i) {
        if (!fq.empty() && q[i] - fq.back() < 1e-12)
            fw.back() += w[i];
        else {
            fq.push_back(std::min(q[i], 1.0));
            fw.push_back(w[i]);
        }
    }
    return AtomicMeasure(fq, fw);
}

}  // namespace sg
