#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace irslab::numerics {

namespace detail {

inline constexpr double kEulerGamma = 0.57721566490153286060651209008240;

// log(n!) for integer n, table-backed so hot paths never touch std::lgamma
// (whose signgam side effect is not thread-safe on all libms).
inline double log_factorial(int n) {
    static const std::vector<double> table = [] {
        std::vector<double> t(513, 0.0);
        for (int k = 2; k < 513; ++k) t[k] = t[k - 1] + std::log(static_cast<double>(k));
        return t;
    }();
    if (n < 0) throw std::domain_error("log_factorial: negative argument");
    if (n < static_cast<int>(table.size())) return table[n];
    return std::lgamma(static_cast<double>(n) + 1.0);
}

// Harmonic number H_n = sum_{k=1..n} 1/k; H_0 = 0. digamma(n+1) = H_n - gamma.
inline double harmonic(int n) {
    static const std::vector<double> table = [] {
        std::vector<double> t(513, 0.0);
        for (int k = 1; k < 513; ++k) t[k] = t[k - 1] + 1.0 / k;
        return t;
    }();
    if (n < static_cast<int>(table.size())) return table[n];
    double h = table.back();
    for (int k = static_cast<int>(table.size()); k <= n; ++k) h += 1.0 / k;
    return h;
}

// Ascending series for K0 and K1, accurate for x <= 2.
inline void k0_k1_series(double x, double& log_k0, double& log_k1) {
    const double q = 0.25 * x * x;       // (x/2)^2
    const double lh = std::log(0.5 * x); // log(x/2)

    // I0, I1 and the companion psi-weighted sums.
    double i0 = 1.0, i1 = 1.0;           // i1 holds I1/(x/2)
    double s0 = 0.0;                     // sum H_k q^k / (k!)^2
    double s1 = harmonic(0) + harmonic(1); // sum (H_k + H_{k+1}) q^k / (k! (k+1)!)
    double term0 = 1.0, term1 = 1.0;
    for (int k = 1; k < 64; ++k) {
        term0 *= q / (static_cast<double>(k) * k);
        term1 *= q / (static_cast<double>(k) * (k + 1));
        i0 += term0;
        i1 += term1;
        s0 += term0 * harmonic(k);
        s1 += term1 * (harmonic(k) + harmonic(k + 1));
        if (term0 < 1e-18 * i0 && term1 < 1e-18 * i1) break;
    }
    const double k0 = -(lh + kEulerGamma) * i0 + s0;
    const double k1 = 1.0 / x + (0.5 * x) * (lh * i1 - 0.5 * (s1 - 2.0 * kEulerGamma * i1));
    log_k0 = std::log(k0);
    log_k1 = std::log(k1);
}

// Steed/Thompson-Barnett continued fraction (CF2) at order mu = 0 for x >= 2,
// evaluated on the e^{+x} scale so only the log leaves this routine.
inline void k0_k1_cf2(double x, double& log_k0, double& log_k1) {
    constexpr double eps = std::numeric_limits<double>::epsilon();
    constexpr int max_iter = 30000;
    const double a1 = 0.25;  // 1/4 - mu^2 with mu = 0
    double b = 2.0 * (1.0 + x);
    double d = 1.0 / b;
    double h = d, delh = d;
    double q1 = 0.0, q2 = 1.0;
    double q = a1, c = a1, a = -a1;
    double s = 1.0 + q * delh;
    for (int i = 2; i <= max_iter; ++i) {
        a -= 2.0 * (i - 1);
        c = -a * c / i;
        const double qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        const double dels = q * delh;
        s += dels;
        if (std::abs(dels / s) < eps) {
            h = a1 * h;
            const double pref = 0.5 * std::log(M_PI / (2.0 * x)) - x;
            log_k0 = pref - std::log(s);
            log_k1 = log_k0 + std::log((0.5 + x - h) / x);
            return;
        }
    }
    throw std::runtime_error("bessel: CF2 failed to converge");
}

inline double log_add_exp(double a, double b) {
    if (a < b) std::swap(a, b);
    if (b == -std::numeric_limits<double>::infinity()) return a;
    return a + std::log1p(std::exp(b - a));
}

}  // namespace detail

// log K_n(x) for integer n >= 0, x > 0. Stable for any (n, x) where the log is
// representable; K_n itself may overflow or underflow a double, the log never
// does in the supported range (n <= a few hundred, x in [1e-8, 700]).
inline double log_bessel_k_int(int order, double x) {
    if (!(x > 0.0)) throw std::domain_error("log_bessel_k_int: requires x > 0");
    if (order < 0) throw std::domain_error("log_bessel_k_int: requires order >= 0");
    double lk0, lk1;
    if (x <= 2.0)
        detail::k0_k1_series(x, lk0, lk1);
    else
        detail::k0_k1_cf2(x, lk0, lk1);
    if (order == 0) return lk0;
    if (order == 1) return lk1;
    // Upward recurrence K_{n+1} = K_{n-1} + (2n/x) K_n on the log scale; all
    // terms are positive so the recurrence is stable in this direction.
    const double lx = std::log(x);
    double prev = lk0, cur = lk1;
    for (int n = 1; n < order; ++n) {
        const double next = detail::log_add_exp(prev, std::log(2.0 * n) - lx + cur);
        prev = cur;
        cur = next;
    }
    return cur;
}

// K_n(x); overflows to +inf where the value exceeds double range (use the log
// variant there).
inline double bessel_k_int(int order, double x) {
    return std::exp(log_bessel_k_int(order, x));
}

}  // namespace irslab::numerics
