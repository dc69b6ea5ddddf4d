#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <span>
#include <stdexcept>
#include <vector>

namespace irslab::numerics {

struct QuadratureSpec {
    int node_count = 24;        // Gauss-Legendre nodes per panel (per axis)
    int max_subdivisions = 24;  // bisection depth budget per axis
    double abs_tol = 1e-10;
    double rel_tol = 1e-8;

    void validate() const {
        if (node_count < 2) throw std::invalid_argument("QuadratureSpec: node_count >= 2");
        if (max_subdivisions < 1) throw std::invalid_argument("QuadratureSpec: max_subdivisions >= 1");
        if (!(abs_tol > 0.0) || !(rel_tol > 0.0))
            throw std::invalid_argument("QuadratureSpec: tolerances must be positive");
    }
};

namespace detail {

struct GaussRule {
    std::vector<double> node;    // on (-1, 1)
    std::vector<double> weight;
};

// Nodes/weights by Newton iteration on the Legendre polynomial.
inline const GaussRule& gauss_legendre(int n) {
    static std::map<int, GaussRule> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;

    GaussRule rule;
    rule.node.resize(n);
    rule.weight.resize(n);
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        rule.node[i] = -x;
        rule.node[n - 1 - i] = x;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.weight[i] = w;
        rule.weight[n - 1 - i] = w;
    }
    return cache.emplace(n, std::move(rule)).first->second;
}

template <typename F>
double gauss_panel(F&& f, double a, double b, const GaussRule& rule) {
    const double mid = 0.5 * (a + b);
    const double hw = 0.5 * (b - a);
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.node.size(); ++i)
        acc += rule.weight[i] * f(mid + hw * rule.node[i]);
    return acc * hw;
}

template <typename F>
double integrate_rec(F&& f, double a, double b, const GaussRule& rule, double coarse,
                     double abs_tol, double rel_tol, int depth, bool* converged) {
    const double mid = 0.5 * (a + b);
    const double left = gauss_panel(f, a, mid, rule);
    const double right = gauss_panel(f, mid, b, rule);
    const double fine = left + right;
    const double err = std::abs(fine - coarse);
    if (err <= std::max(abs_tol, rel_tol * std::abs(fine)) || depth <= 0) {
        if (depth <= 0 && err > std::max(abs_tol, rel_tol * std::abs(fine))) *converged = false;
        return fine;
    }
    return integrate_rec(f, a, mid, rule, left, 0.5 * abs_tol, rel_tol, depth - 1, converged) +
           integrate_rec(f, mid, b, rule, right, 0.5 * abs_tol, rel_tol, depth - 1, converged);
}

}  // namespace detail

// Adaptive Gauss-Legendre on [a, b].
template <typename F>
double integrate(F&& f, double a, double b, const QuadratureSpec& spec) {
    spec.validate();
    if (!(b > a)) return 0.0;
    const auto& rule = detail::gauss_legendre(spec.node_count);
    bool converged = true;
    const double coarse = detail::gauss_panel(f, a, b, rule);
    const double v = detail::integrate_rec(f, a, b, rule, coarse, spec.abs_tol, spec.rel_tol,
                                           spec.max_subdivisions, &converged);
    if (!converged) throw std::runtime_error("integrate: subdivision budget exhausted");
    return v;
}

// Nested integral over x[0..dim-1], innermost axis last. Every axis starts at
// lower limit 1; the upper limit of axis k is upper(k, outer) where outer
// spans x[0..k-1]. Slices whose upper limit falls at or below the lower limit
// contribute zero (the feasible region simply ends there).
template <typename UpperFn, typename Integrand>
double nested_integral(int dim, UpperFn&& upper, Integrand&& f, const QuadratureSpec& spec) {
    spec.validate();
    if (dim < 1 || dim > 6) throw std::invalid_argument("nested_integral: 1 <= dim <= 6");
    std::vector<double> x(dim, 0.0);
    std::function<double(int)> level = [&](int k) -> double {
        const double ub = upper(k, std::span<const double>(x.data(), k));
        if (!(ub > 1.0)) return 0.0;
        auto slice = [&](double xi) {
            x[k] = xi;
            return (k + 1 == dim) ? f(std::span<const double>(x.data(), dim)) : level(k + 1);
        };
        return integrate(slice, 1.0, ub, spec);
    };
    return level(0);
}

// Integral over [a, inf) for integrands that eventually decay: fixed-ratio
// doubling panels, each integrated adaptively, until two consecutive panels
// are negligible against the running total.
template <typename F>
double integrate_to_infinity(F&& f, double a, const QuadratureSpec& spec, double first_len = 1.0) {
    spec.validate();
    double total = 0.0;
    double lo = a, len = first_len;
    int quiet = 0;
    for (int k = 0; k < 200; ++k) {
        const double hi = lo + len;
        const double piece = integrate(f, lo, hi, spec);
        total += piece;
        if (std::abs(piece) <= std::max(spec.abs_tol, spec.rel_tol * std::abs(total)))
            ++quiet;
        else
            quiet = 0;
        if (quiet >= 2) return total;
        lo = hi;
        len *= 2.0;
    }
    throw std::runtime_error("integrate_to_infinity: tail did not settle");
}

}  // namespace irslab::numerics
