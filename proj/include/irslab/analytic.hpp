#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <stdexcept>

#include "irslab/channel.hpp"
#include "irslab/numerics.hpp"

namespace irslab::analytic {

using channel::SystemParams;

struct RateThreshold {
    double rho = 1.0;  // bits/s/Hz

    double theta() const { return std::exp2(rho) - 1.0; }

    void validate() const {
        if (!(rho >= 0.0)) throw std::invalid_argument("RateThreshold: rho >= 0");
    }
};

// Partition of the surface into N sub-surfaces of m elements (m*N = M of the
// enclosing SystemParams) plus the ATD acceptance threshold psi.
struct SelectionConfig {
    int n_subsurfaces = 1;           // N
    int elements_per_subsurface = 1; // m
    double threshold_psi = 0.0;      // bits/s/Hz

    void validate() const {
        if (n_subsurfaces < 1 || elements_per_subsurface < 1)
            throw std::invalid_argument("SelectionConfig: N, m >= 1");
        if (!(threshold_psi >= 0.0)) throw std::invalid_argument("SelectionConfig: psi >= 0");
    }
};

// Coding-side controls: coherence block length T, training length tau, OBF
// perturbation cap Delta, and the feedback-effectiveness constant kappa.
struct CodingConfig {
    int t_channel_uses = 1;  // T
    int tau_training = 0;    // tau
    double max_step = M_PI;  // Delta
    double kappa = 1.0;

    void validate() const {
        if (t_channel_uses < 1) throw std::invalid_argument("CodingConfig: T >= 1");
        if (tau_training < 0 || tau_training > t_channel_uses)
            throw std::invalid_argument("CodingConfig: 0 <= tau <= T");
        if (!(max_step > 0.0) || max_step > M_PI)
            throw std::invalid_argument("CodingConfig: Delta in (0, pi]");
        if (!(kappa > 0.0) || kappa > 1.0) throw std::invalid_argument("CodingConfig: kappa in (0, 1]");
    }
};

struct DiversityResult {
    double order = 1.0;
    double coding_gain = 0.0;
};

namespace detail {

using numerics::detail::harmonic;
using numerics::detail::kEulerGamma;
using numerics::detail::log_factorial;

// Ascending-series CDF of the M-element gain, cancellation free for small
// y = x / sigma^2. Needed because 1 - (2/Gamma(m)) y^{m/2} K_m(2 sqrt(y))
// loses every digit once the tail probability drops below ~1e-13 (the deep
// coding-gain regime lives there).
inline double cascade_cdf_series(int m, double y) {
    double poly = 0.0;
    double term = (m > 1) ? y / (m - 1.0) : 0.0;
    for (int k = 1; k <= m - 1; ++k) {
        poly += (k % 2 ? 1.0 : -1.0) * term;
        if (k == m - 1 || term < 1e-18 * std::abs(poly)) break;  // factorially decaying
        term *= y / (static_cast<double>(k + 1) * (m - k - 1));
    }
    // y^m [ ln(y) S_I - S_2 ] block from the log part of K_m.
    double si = 0.0, s2 = 0.0;
    double t = std::exp(-log_factorial(m));  // 1/(0! m!)
    for (int k = 0; k < 400; ++k) {
        si += t;
        s2 += t * (harmonic(k) + harmonic(m + k) - 2.0 * kEulerGamma);
        const double tn = t * y / (static_cast<double>(k + 1) * (m + k + 1));
        if (tn < 1e-18 * std::abs(si) && k > 2) break;
        t = tn;
    }
    const double sign = (m % 2 == 0) ? 1.0 : -1.0;
    const double logpart =
        sign * std::exp(m * std::log(y) - log_factorial(m - 1)) * (std::log(y) * si - s2);
    return poly + logpart;
}

inline double series_cut(int m) { return 0.25 * std::max(1.0, static_cast<double>(m - 1)); }

// log of (2/Gamma(m)) y^{m/2} K_m(2 sqrt(y)) -- the survival function of the
// m-element gain at y = x / sigma^2.
inline double log_cascade_sf(int m, double y) {
    return M_LN2 - log_factorial(m - 1) + 0.5 * m * std::log(y) +
           numerics::log_bessel_k_int(m, 2.0 * std::sqrt(y));
}

}  // namespace detail

// CDF of the channel gain H = |sum_i h_i g_i e^{j phi_i}|^2 for m elements
// with per-element cascade scale sigma_sq.
inline double cascade_cdf(double x, int m, double sigma_sq) {
    if (m < 1) throw std::invalid_argument("cascade_cdf: m >= 1");
    if (!(sigma_sq > 0.0)) throw std::invalid_argument("cascade_cdf: sigma_sq > 0");
    if (x <= 0.0) return 0.0;
    const double y = x / sigma_sq;
    if (y < detail::series_cut(m)) return detail::cascade_cdf_series(m, y);
    return -std::expm1(detail::log_cascade_sf(m, y));
}

// Survival function 1 - CDF, accurate in the deep upper tail.
inline double cascade_sf(double x, int m, double sigma_sq) {
    if (x <= 0.0) return 1.0;
    const double y = x / sigma_sq;
    if (y < detail::series_cut(m)) return 1.0 - detail::cascade_cdf_series(m, y);
    return std::exp(detail::log_cascade_sf(m, y));
}

inline double cascade_pdf(double x, int m, double sigma_sq) {
    if (m < 1) throw std::invalid_argument("cascade_pdf: m >= 1");
    if (!(sigma_sq > 0.0)) throw std::invalid_argument("cascade_pdf: sigma_sq > 0");
    if (x < 0.0) return 0.0;
    if (x == 0.0) {
        if (m == 1) return std::numeric_limits<double>::infinity();
        if (m == 2) return 1.0 / sigma_sq;
        return 0.0;
    }
    const double y = x / sigma_sq;
    const double lf = M_LN2 - detail::log_factorial(m - 1) + 0.5 * (m - 1) * std::log(y) +
                      numerics::log_bessel_k_int(m - 1, 2.0 * std::sqrt(y)) - std::log(sigma_sq);
    return std::exp(lf);
}

// Outage of a single random-rotation channel use with M elements.
inline double outage_random(const RateThreshold& rt, const SystemParams& sp) {
    rt.validate();
    sp.validate();
    const double theta = rt.theta();
    if (theta == 0.0) return 0.0;
    return cascade_cdf(theta * sp.noise_var / sp.tx_power, sp.m_elements, sp.sigma_sq());
}

namespace detail {

// (T-1)-fold integral shared by the two RRC outage approximations. cdf/pdf
// are the gain CDF/PDF evaluated in gain units.
template <typename Cdf, typename Pdf>
double rrc_outage_integral(double rho, int t_uses, double noise_over_p, Cdf&& cdf, Pdf&& pdf) {
    const int dim = t_uses - 1;
    const double c = std::exp2(rho * t_uses);
    numerics::QuadratureSpec spec;
    spec.node_count = 24;
    spec.max_subdivisions = 16;
    spec.abs_tol = 1e-280;  // force relative control; outages span many decades
    spec.rel_tol = 1e-7;

    auto upper = [&](int, std::span<const double> outer) {
        double prod = 1.0;
        for (double w : outer) prod *= w;
        return c / prod;
    };
    auto f = [&](std::span<const double> w) {
        double prod = 1.0;
        double dens = 1.0;
        for (double wt : w) {
            prod *= wt;
            dens *= pdf(noise_over_p * (wt - 1.0));
        }
        const double cap = noise_over_p * (c / prod - 1.0);
        return cdf(cap) * dens;
    };
    const double pref = std::pow(noise_over_p, dim);
    return pref * numerics::nested_integral(dim, upper, f, spec);
}

}  // namespace detail

// RRC outage over T uses under the independence approximation (exact cascade
// marginals). Reduces to outage_random at T = 1.
inline double outage_rrc_ind(const RateThreshold& rt, const SystemParams& sp, int t_uses) {
    rt.validate();
    sp.validate();
    if (t_uses < 1 || t_uses > 7) throw std::invalid_argument("outage_rrc_ind: 1 <= T <= 7");
    if (rt.theta() == 0.0) return 0.0;
    if (t_uses == 1) return outage_random(rt, sp);
    const int m = sp.m_elements;
    const double s2 = sp.sigma_sq();
    return detail::rrc_outage_integral(
        rt.rho, t_uses, sp.noise_var / sp.tx_power,
        [&](double x) { return cascade_cdf(x, m, s2); },
        [&](double x) { return cascade_pdf(x, m, s2); });
}

// RRC outage over T uses with the gain approximated as exponential of mean
// sigma^2 M (CLT form).
inline double outage_rrc_clt(const RateThreshold& rt, const SystemParams& sp, int t_uses) {
    rt.validate();
    sp.validate();
    if (t_uses < 1 || t_uses > 7) throw std::invalid_argument("outage_rrc_clt: 1 <= T <= 7");
    if (rt.theta() == 0.0) return 0.0;
    const double mean = sp.sigma_sq() * sp.m_elements;
    if (t_uses == 1) return -std::expm1(-rt.theta() * sp.noise_var / (mean * sp.tx_power));
    return detail::rrc_outage_integral(
        rt.rho, t_uses, sp.noise_var / sp.tx_power,
        [&](double x) { return -std::expm1(-x / mean); },
        [&](double x) { return std::exp(-x / mean) / mean; });
}

namespace detail {

// Expected rate via E{R} = Int_0^inf P{rate > rho} d rho, with the upper
// limit found by doubling until the survival probability is negligible.
// noise_floor must sit above the evaluation noise of the survival function,
// or the adaptive refinement chases noise it can never integrate away.
inline double rate_from_survival(const std::function<double(double)>& survival,
                                 double noise_floor = 1e-10) {
    double rho_max = 1.0;
    int guard = 0;
    while (survival(rho_max) > 1e-8) {
        rho_max *= 2.0;
        if (++guard > 60) throw std::runtime_error("rate integral: no decay in survival");
    }
    numerics::QuadratureSpec spec;
    spec.node_count = 24;
    spec.max_subdivisions = 14;
    spec.abs_tol = std::max(1e-10, noise_floor);
    spec.rel_tol = std::max(1e-7, noise_floor);
    return numerics::integrate(survival, 0.0, rho_max, spec);
}

}  // namespace detail

// Expected rate of a random-rotation link (independent of T).
inline double rate_random(const SystemParams& sp) {
    sp.validate();
    const int m = sp.m_elements;
    const double s2 = sp.sigma_sq();
    const double np = sp.noise_var / sp.tx_power;
    return detail::rate_from_survival([&](double rho) {
        const double theta = std::exp2(rho) - 1.0;
        if (theta <= 0.0) return 1.0;
        return cascade_sf(theta * np, m, s2);
    });
}

// Mean SNR under perfect phase alignment.
inline double expected_bf_snr(const SystemParams& sp) {
    sp.validate();
    const double m = sp.m_elements;
    const double pairs = 0.5 * m * (m - 1.0);
    return sp.snr_scale() * sp.sigma_sq() * (m + pairs * M_PI * M_PI / 8.0);
}

// Jensen upper bound on the expected rate after t feedback bits with
// effectiveness kappa; an analytic approximation only, never a stand-in for
// the simulated OBF rate. Follows the usual unit-variance convention of the
// quantized-feedback bound.
inline double rate_obf_bound(int t, const CodingConfig& cc, const SystemParams& sp) {
    cc.validate();
    sp.validate();
    if (t < 1) throw std::invalid_argument("rate_obf_bound: t >= 1");
    const int m = sp.m_elements;
    if (m < 2) throw std::domain_error("rate_obf_bound: requires M >= 2");
    const double pairs = 0.5 * m * (m - 1.0);
    const double mean_bf = m + pairs * M_PI * M_PI / 8.0;
    const double fill = -std::expm1(-M_LN2 * cc.kappa * t / (m - 1.0));  // 1 - 2^{-kt/(M-1)}
    return std::log2(1.0 + sp.snr_scale() * mean_bf * fill);
}

// Per-use analytic rate approximation for the whole OBF block: bound(t) over
// the training uses, then the tau-th bound for the frozen remainder.
inline double rate_obf_bound_block(const CodingConfig& cc, const SystemParams& sp) {
    cc.validate();
    if (cc.tau_training < 1) throw std::invalid_argument("rate_obf_bound_block: tau >= 1");
    double sum = 0.0;
    for (int t = 1; t <= cc.tau_training; ++t) sum += rate_obf_bound(t, cc, sp);
    sum += (cc.t_channel_uses - cc.tau_training) * rate_obf_bound(cc.tau_training, cc, sp);
    return sum / cc.t_channel_uses;
}

// ---- selection-based schemes; sp.m_elements is ignored in favor of sel ----

namespace detail {

inline SystemParams subsurface_params(const SystemParams& sp, const SelectionConfig& sel) {
    SystemParams sub = sp;
    sub.m_elements = sel.elements_per_subsurface;
    return sub;
}

}  // namespace detail

// Best-of-N selection outage: the single-use outage raised to the N.
inline double outage_td(const RateThreshold& rt, const SelectionConfig& sel,
                        const SystemParams& sp) {
    sel.validate();
    const double p = outage_random(rt, detail::subsurface_params(sp, sel));
    return std::pow(p, sel.n_subsurfaces);
}

// Same under the exponential (CLT) gain approximation; this is the parent the
// Gumbel limit below is taken of.
inline double outage_td_clt(const RateThreshold& rt, const SelectionConfig& sel,
                            const SystemParams& sp) {
    rt.validate();
    sel.validate();
    sp.validate();
    const double mean = sp.sigma_sq() * sel.elements_per_subsurface;
    const double p = -std::expm1(-rt.theta() * sp.noise_var / (mean * sp.tx_power));
    return std::pow(p, sel.n_subsurfaces);
}

// Gumbel limiting form of the TD outage for large N.
inline double outage_td_gumbel(const RateThreshold& rt, const SelectionConfig& sel,
                               const SystemParams& sp) {
    rt.validate();
    sel.validate();
    sp.validate();
    const double mean = sp.sigma_sq() * sel.elements_per_subsurface;
    const double y = rt.theta() * sp.noise_var / (mean * sp.tx_power);
    return std::exp(-sel.n_subsurfaces * std::exp(-y));
}

// Expected rate of the selected (maximum-SNR) sub-surface.
inline double rate_td(const SelectionConfig& sel, const SystemParams& sp) {
    sel.validate();
    sp.validate();
    const int m = sel.elements_per_subsurface;
    const int n = sel.n_subsurfaces;
    const double s2 = sp.sigma_sq();
    const double snr = sp.snr_scale();
    numerics::QuadratureSpec spec;
    spec.node_count = 24;
    spec.max_subdivisions = 16;
    spec.abs_tol = 1e-11;
    spec.rel_tol = 1e-7;
    auto integrand = [&](double h) {
        const double f = cascade_pdf(h, m, s2);
        if (f == 0.0) return 0.0;
        const double cpow = (n == 1) ? 1.0 : std::pow(cascade_cdf(h, m, s2), n - 1);
        return std::log2(1.0 + snr * h) * cpow * f;
    };
    return n * numerics::integrate_to_infinity(integrand, 0.0, spec, s2 * m);
}

// ATD outage: try sub-surfaces until one clears psi, fall through to the last.
inline double outage_atd(const RateThreshold& rt, const SelectionConfig& sel,
                         const SystemParams& sp) {
    rt.validate();
    sel.validate();
    const SystemParams sub = detail::subsurface_params(sp, sel);
    const double p_psi = outage_random({sel.threshold_psi}, sub);
    const double p_rho = outage_random(rt, sub);
    const int n = sel.n_subsurfaces;
    double out = std::pow(p_psi, n - 1) * p_rho;
    if (rt.rho > sel.threshold_psi) {
        double geom = 0.0, pk = 1.0;
        for (int k = 0; k <= n - 2; ++k) {
            geom += pk;
            pk *= p_psi;
        }
        out += (p_rho - p_psi) * geom;
    }
    return out;
}

// Mean feedback bits of the ATD protocol under the per-sub-surface bit
// accounting (one bit for the first probe plus one per below-threshold probe
// among the next N-2).
inline double atd_feedback_bits(double psi, const SelectionConfig& sel, const SystemParams& sp) {
    sel.validate();
    if (sel.n_subsurfaces == 1) return 0.0;  // nothing to signal
    const double p = outage_random({psi}, detail::subsurface_params(sp, sel));
    return 1.0 + (sel.n_subsurfaces - 2) * p;
}

// Expected ATD rate; the selection threshold psi (a rate) maps to the gain
// h(psi) = (2^psi - 1) sigma_n^2 / P on the integration axis.
inline double rate_atd(const SelectionConfig& sel, const SystemParams& sp) {
    sel.validate();
    sp.validate();
    const int m = sel.elements_per_subsurface;
    const int n = sel.n_subsurfaces;
    const double s2 = sp.sigma_sq();
    const double snr = sp.snr_scale();
    const double p_psi = outage_random({sel.threshold_psi}, detail::subsurface_params(sp, sel));
    const double h_psi = (std::exp2(sel.threshold_psi) - 1.0) / snr;

    numerics::QuadratureSpec spec;
    spec.node_count = 24;
    spec.max_subdivisions = 16;
    spec.abs_tol = 1e-11;
    spec.rel_tol = 1e-7;
    auto integrand = [&](double h) {
        const double f = cascade_pdf(h, m, s2);
        return f == 0.0 ? 0.0 : std::log2(1.0 + snr * h) * f;
    };
    const double above = numerics::integrate_to_infinity(integrand, h_psi, spec, s2 * m + h_psi);
    const double whole = numerics::integrate_to_infinity(integrand, 0.0, spec, s2 * m);

    double geom = 0.0, pk = 1.0;
    for (int k = 0; k <= n - 2; ++k) {
        geom += pk;
        pk *= p_psi;
    }
    return geom * above + std::pow(p_psi, n - 1) * whole;
}

// ---- diversity orders and coding gains (unit sigma^2 convention) ----

inline DiversityResult diversity_rrc(int t_uses, int m, const RateThreshold& rt,
                                     const SystemParams& sp) {
    rt.validate();
    sp.validate();
    if (t_uses < 1 || m < 1) throw std::invalid_argument("diversity_rrc: T, M >= 1");
    DiversityResult r;
    r.order = std::min(t_uses, m);
    const double l = rt.rho * t_uses * M_LN2;  // log(2^{rho T})
    double sum = 0.0, term = 1.0;
    for (int t = 0; t < t_uses; ++t) {
        sum += term;  // (-1)^t log^t / t!
        term *= -l / (t + 1);
    }
    const double sign = (t_uses % 2 == 0) ? 1.0 : -1.0;
    r.coding_gain = std::pow(sp.noise_var / m, t_uses) * sign *
                    (1.0 - std::exp2(rt.rho * t_uses) * sum);
    return r;
}

inline DiversityResult diversity_td(int n, int m, const RateThreshold& rt,
                                    const SystemParams& sp) {
    rt.validate();
    sp.validate();
    DiversityResult r;
    r.order = n;
    r.coding_gain = std::pow(sp.noise_var * rt.theta() / m, n);
    return r;
}

inline DiversityResult diversity_atd(int n, int m, const RateThreshold& rt, double psi,
                                     const SystemParams& sp) {
    rt.validate();
    sp.validate();
    DiversityResult r;
    if (rt.rho <= psi) {
        r.order = n;
        r.coding_gain = std::pow(sp.noise_var / m, n) *
                        std::pow(std::exp2(psi) - 1.0, n - 1) * rt.theta();
    } else {
        // Below-threshold selections dominate; single-order slope with the
        // exponential-approximation intercept.
        r.order = 1;
        r.coding_gain = sp.noise_var * (rt.theta() - (std::exp2(psi) - 1.0)) / m;
    }
    return r;
}

// ---- coherent transmission under imperfect CSI ----

// MMSE training error variance for pilot power po over tau uses split across
// M elements.
inline double sigma_e_sq(double tau, double po, int m) {
    if (tau < 0.0 || po < 0.0 || m < 1) throw std::invalid_argument("sigma_e_sq: bad arguments");
    return 1.0 / (1.0 + tau * po / m);
}

// Characteristic function of one estimated cascade magnitude |h^ g| with
// product scale s.
inline std::complex<double> ct_element_cf(double t, double s) {
    const double a = t * std::sqrt(s);
    const double d = a * a + 4.0;
    const double num_re = 4.0 * std::sqrt(d) - 4.0 * a * std::asinh(0.5 * a);
    const double num_im = 2.0 * M_PI * a;
    const double den = d * std::sqrt(d);
    return {num_re / den, num_im / den};
}

inline std::function<std::complex<double>(double)> ct_characteristic_function(int m, double s) {
    return [m, s](double t) {
        const std::complex<double> base = ct_element_cf(t, s);
        return std::pow(base, m);
    };
}

// Outage of coherent (aligned-phase) transmission with estimation error
// sigma_e2, by characteristic-function inversion.
inline double outage_ct(const RateThreshold& rt, const SystemParams& sp, double sigma_e2) {
    rt.validate();
    sp.validate();
    if (!(sigma_e2 >= 0.0) || sigma_e2 >= 1.0) throw std::domain_error("outage_ct: sigma_e2 in [0, 1)");
    const double theta = rt.theta();
    if (theta == 0.0) return 0.0;
    const int m = sp.m_elements;
    const double s = sp.sigma_sq() * (1.0 - sigma_e2);
    const double x = std::sqrt(theta * (sp.noise_var + sigma_e2) / sp.tx_power);

    // P{sum < x} <= P{every term < x}; skip the inversion when even that
    // bound is below resolution.
    const double single = cascade_cdf(x * x, 1, s);
    if (m * std::log(std::max(single, 1e-300)) < std::log(1e-14)) return 0.0;

    numerics::SeriesSpec sspec;
    sspec.start_index = 2 * m;
    numerics::QuadratureSpec qspec;
    qspec.node_count = 16;
    qspec.max_subdivisions = 18;
    qspec.abs_tol = 1e-9;
    qspec.rel_tol = 1e-7;
    return numerics::gil_pelaez_series_tail(ct_characteristic_function(m, s), x, 2 * m, sspec,
                                            qspec)
        .value;
}

inline double rate_ct(const SystemParams& sp, double sigma_e2) {
    sp.validate();
    // The survival values carry the inversion's quadrature noise (~1e-8).
    return detail::rate_from_survival(
        [&](double rho) {
            if (rho <= 0.0) return 1.0;
            return 1.0 - outage_ct({rho}, sp, sigma_e2);
        },
        1e-5);
}

}  // namespace irslab::analytic
