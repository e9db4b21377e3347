#pragma once

// Test-only oracles, independent of the library implementation paths they
// check: closed-form dyadic interval arithmetic, naive DFT summation, brute
// maxima, fine-grid Riemann averages.

#include <cmath>
#include <complex>
#include <vector>

namespace oracle {

// 1-D dyadic calculus for A = [2]: B_k = (-2^{k-1}, 2^{k-1}).
inline bool dyadic_in_ball(double x, int k) { return std::fabs(x) < std::pow(2.0, k - 1); }

inline double dyadic_rho(double x) {
    if (x == 0.0) return 0.0;
    // rho = 2^k with x in B_{k+1} \ B_k, i.e. 2^{k-1} <= |x| < 2^k
    const double k = std::floor(std::log2(std::fabs(x))) + 1.0;
    double rho = std::pow(2.0, k);
    // guard the edges of floor/log2 rounding
    while (std::fabs(x) >= std::pow(2.0, k)) rho *= 2.0;
    while (std::fabs(x) < std::pow(2.0, k - 1.0)) rho /= 2.0;
    return rho;
}

// naive continuous-FT sum F(xi) = h * sum_j f(x_j) e^{-i x_j xi} in 1-D
inline std::complex<double> naive_ft(const std::vector<double>& f, double L, double xi) {
    const int n = static_cast<int>(f.size());
    const double h = 2.0 * L / n;
    std::complex<double> acc(0.0, 0.0);
    for (int j = 0; j < n; ++j) {
        const double x = -L + j * h;
        acc += f[j] * std::exp(std::complex<double>(0.0, -x * xi));
    }
    return acc * h;
}

// periodic brute sliding max with window [-r, r]
inline std::vector<double> brute_sliding_max(const std::vector<double>& v, int r) {
    const int n = static_cast<int>(v.size());
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) {
        double m = -1e300;
        for (int d = -r; d <= r; ++d) m = std::max(m, v[((i + d) % n + n) % n]);
        out[i] = m;
    }
    return out;
}

// A_p product of averages for w = rho^alpha over x + B_k on a fine 1-D grid
inline double dyadic_power_ap(double alpha, double p, double x, int k, int fine) {
    const double rad = std::pow(2.0, k - 1);
    double sw = 0.0, si = 0.0;
    for (int i = 0; i < fine; ++i) {
        const double y = x - rad + (i + 0.5) * (2.0 * rad / fine);
        const double w = std::pow(dyadic_rho(y), alpha);
        sw += w;
        si += std::pow(w, -1.0 / (p - 1.0));
    }
    return (sw / fine) * std::pow(si / fine, p - 1.0);
}

// PV integral c = int sign(y) psi(y) / rho(y) dy on a fine symmetric lattice
template <typename F>
double dyadic_pv_sign_over_rho(const F& psi, double reach, int fine) {
    double acc = 0.0;
    const double h = 2.0 * reach / fine;
    for (int i = 0; i < fine; ++i) {
        const double y = -reach + (i + 0.5) * h;
        acc += (y > 0 ? 1.0 : -1.0) * psi(y) / dyadic_rho(y) * h;
    }
    return acc;
}

}  // namespace oracle
