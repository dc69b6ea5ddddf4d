#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <vector>

#include "irslab/bessel.hpp"
#include "irslab/quadrature.hpp"

namespace irslab::numerics {

struct SeriesSpec {
    int start_index = 2;    // first retained Taylor order (2M for the CT cf)
    int max_terms = 400;
    double term_tol = 1e-15;

    void validate() const {
        if (start_index < 0) throw std::invalid_argument("SeriesSpec: start_index >= 0");
        if (max_terms < 1) throw std::invalid_argument("SeriesSpec: max_terms >= 1");
        if (!(term_tol > 0.0)) throw std::invalid_argument("SeriesSpec: term_tol > 0");
    }
};

struct GilPelaezResult {
    double value = 0.0;     // clamped to [0, 1]
    double raw = 0.0;       // before clamping
    bool clamp_warning = false;
};

// Tail of the exponential series: sum_{i>=s} (-1)^{i+1} (j u)^i / i!, which
// equals Q_{s-1}(u) - e^{-ju} with Q the order-(s-1) Taylor polynomial of
// e^{-ju}. Small u sums the tail directly under the SeriesSpec truncation
// rule; large u uses the closed form, where the partial sum dominates and no
// cancellation digits are lost.
inline std::complex<double> exp_tail_series(int start_index, double u, const SeriesSpec& spec) {
    spec.validate();
    const std::complex<double> mju(0.0, -u);  // -ju
    // Direct summation is safe while the first retained term dominates the
    // tail (u below the start index) or the whole series stays small; past
    // that the growing terms cancel and the closed form wins.
    if (u < std::max(10.0, 0.8 * start_index)) {
        // c_i = (-ju)^i / i!, summed from i = start_index; S = -sum c_i.
        std::complex<double> c;
        if (start_index == 0) {
            c = 1.0;
        } else {
            const double logmag =
                start_index * std::log(u) - detail::log_factorial(start_index);
            const double ang = -0.5 * M_PI * start_index;
            c = std::exp(logmag) * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        std::complex<double> sum = c;
        int quiet = 0;
        for (int i = start_index; i < start_index + spec.max_terms; ++i) {
            c *= mju / static_cast<double>(i + 1);
            sum += c;
            if (std::abs(c) < spec.term_tol * std::abs(sum)) {
                if (++quiet >= 3) break;
            } else {
                quiet = 0;
            }
        }
        return -sum;
    }
    std::complex<double> q = 1.0, term = 1.0;
    for (int i = 1; i < start_index; ++i) {
        term *= mju / static_cast<double>(i);
        q += term;
    }
    return q - std::exp(mju);
}

// Lower-tail probability P{X < x} recovered from the characteristic function
// of a nonnegative X, in the series-rearranged form
//   (1/pi) Int_0^inf Im{ cf(t) * sum_{i>=s} (-1)^{i+1} (jtx)^i / i! } / t dt .
// Writing the series tail as Q_{s-1}(tx) - e^{-jtx}, the polynomial block
// integrates to pi/2 exactly: its order-zero term is the Gil-Pelaez constant
// and the orders 1..s-1 are the Taylor-moment integrals that vanish when cf
// decays at least as fast as t^{-s} (the precondition for starting the series
// at s in the first place). Numerically quadraturing those vanishing blocks
// would spend the entire budget cancelling slowly-decaying lobes, so only the
// oscillatory factor is integrated: half-period panels on the dominant
// e^{-jtx} oscillation, with Euler acceleration of the panel sums.
inline GilPelaezResult gil_pelaez_series_tail(const std::function<std::complex<double>(double)>& cf,
                                              double x, int start_index, const SeriesSpec& sspec,
                                              const QuadratureSpec& qspec) {
    sspec.validate();
    qspec.validate();
    if (!(x >= 0.0)) throw std::domain_error("gil_pelaez_series_tail: x >= 0");
    if (std::abs(cf(0.0) - 1.0) > 1e-6)
        throw std::invalid_argument("gil_pelaez_series_tail: cf(0) must be 1");
    if (x < 1e-12) return {0.0, 0.0, false};

    // Mean of X from the cf slope; sets the width of the transient region
    // where the cf's own phase still rotates.
    const double eps = 1e-4;
    const double mu = std::max(0.0, std::imag(cf(eps)) / eps);

    auto integrand = [&](double t) {
        const std::complex<double> v = cf(t) * std::exp(std::complex<double>(0.0, -t * x));
        return std::imag(v) / t;
    };

    const double w = M_PI / x;  // half period of the dominant oscillation
    const int transient_panels =
        std::clamp(static_cast<int>(std::ceil(12.0 * x / (x + mu))), 1, 12);

    QuadratureSpec panel_spec = qspec;
    panel_spec.abs_tol = std::max(1e-15, 0.02 * qspec.abs_tol);

    double integral = 0.0;
    double t0 = 0.0;
    for (int k = 0; k < transient_panels; ++k) {
        integral += integrate(integrand, t0, t0 + w, panel_spec);
        t0 += w;
    }

    // Tail panels: partial sums accelerated by repeated averaging (Euler
    // transform), which collapses the alternating panel series.
    constexpr int kWindow = 28;
    constexpr int kMaxPanels = 20000;
    std::vector<double> partial;
    partial.reserve(256);
    partial.push_back(integral);

    auto accelerated = [&]() {
        const int n = std::min<int>(kWindow, static_cast<int>(partial.size()));
        std::vector<double> a(partial.end() - n, partial.end());
        while (a.size() > 1) {
            for (std::size_t i = 0; i + 1 < a.size(); ++i) a[i] = 0.5 * (a[i] + a[i + 1]);
            a.pop_back();
        }
        return a[0];
    };

    double est_prev = integral;
    int stable = 0;
    for (int k = 0; k < kMaxPanels; ++k) {
        const double piece = integrate(integrand, t0, t0 + w, panel_spec);
        t0 += w;
        partial.push_back(partial.back() + piece);
        const double est = accelerated();
        const double prob_scale = std::abs(0.5 - est / M_PI);
        const double tol = std::max(qspec.abs_tol, qspec.rel_tol * prob_scale) * M_PI;
        if (std::abs(est - est_prev) < 0.25 * tol && std::abs(piece) < 4.0 * tol) {
            if (++stable >= 3) {
                const double raw = 0.5 - est / M_PI;
                GilPelaezResult r;
                r.raw = raw;
                r.value = std::clamp(raw, 0.0, 1.0);
                r.clamp_warning = std::abs(raw - r.value) >
                                  std::max(qspec.abs_tol, qspec.rel_tol * std::abs(raw)) * 10.0;
                return r;
            }
        } else {
            stable = 0;
        }
        est_prev = est;
    }
    throw std::runtime_error("gil_pelaez_series_tail: oscillatory tail did not converge");
}

}  // namespace irslab::numerics
