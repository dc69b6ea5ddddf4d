#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "irslab/rng.hpp"

namespace irslab::channel {

// Physical link parameters, all in linear units. dB handling belongs to the
// config layer; nothing in here converts.
struct SystemParams {
    int m_elements = 1;        // M
    double tx_power = 1.0;     // P [W]
    double noise_var = 1.0;    // sigma_n^2 [W]
    double var_h = 1.0;        // sigma_h^2
    double var_g = 1.0;        // sigma_g^2

    double sigma_sq() const { return var_h * var_g; }
    double snr_scale() const { return tx_power / noise_var; }

    void validate() const {
        if (m_elements < 1) throw std::invalid_argument("SystemParams: m_elements >= 1");
        if (!(tx_power > 0.0) || !(noise_var > 0.0) || !(var_h > 0.0) || !(var_g > 0.0))
            throw std::invalid_argument("SystemParams: powers and variances must be positive");
    }
};

// One draw of the source->element and element->destination fading vectors.
struct ChannelRealization {
    std::vector<std::complex<double>> h;
    std::vector<std::complex<double>> g;

    int size() const { return static_cast<int>(h.size()); }
};

// Per-element reflection setting: phase in [0, 2pi), amplitude in [0, 1]
// (zero switches the element off).
struct PhaseConfig {
    std::vector<double> phases;
    std::vector<double> amplitudes;

    static PhaseConfig uniform_random(int m, rng::Stream& rs) {
        PhaseConfig c;
        c.phases.resize(m);
        c.amplitudes.assign(m, 1.0);
        for (int i = 0; i < m; ++i) c.phases[i] = rs.phase();
        return c;
    }

    static PhaseConfig zeros(int m) {
        PhaseConfig c;
        c.phases.assign(m, 0.0);
        c.amplitudes.assign(m, 1.0);
        return c;
    }
};

inline ChannelRealization draw_channel(const SystemParams& sp, rng::Stream& rs) {
    sp.validate();
    ChannelRealization ch;
    ch.h.resize(sp.m_elements);
    ch.g.resize(sp.m_elements);
    for (int i = 0; i < sp.m_elements; ++i) ch.h[i] = rs.complex_normal(sp.var_h);
    for (int i = 0; i < sp.m_elements; ++i) ch.g[i] = rs.complex_normal(sp.var_g);
    return ch;
}

// |sum_i beta_i h_i g_i e^{j phi_i}|^2
inline double channel_gain(const ChannelRealization& ch, const PhaseConfig& cfg) {
    const int m = ch.size();
    if (static_cast<int>(cfg.phases.size()) != m || static_cast<int>(cfg.amplitudes.size()) != m)
        throw std::invalid_argument("channel_gain: dimension mismatch");
    std::complex<double> acc = 0.0;
    for (int i = 0; i < m; ++i) {
        const double p = cfg.phases[i];
        acc += cfg.amplitudes[i] * ch.h[i] * ch.g[i] *
               std::complex<double>(std::cos(p), std::sin(p));
    }
    return std::norm(acc);
}

// (sum_i |h_i||g_i|)^2 -- the gain under perfect phase alignment; an upper
// bound on channel_gain over every PhaseConfig with unit amplitudes.
inline double beamforming_gain(const ChannelRealization& ch) {
    double s = 0.0;
    for (int i = 0; i < ch.size(); ++i) s += std::abs(ch.h[i]) * std::abs(ch.g[i]);
    return s * s;
}

// One |h^ g| magnitude under MMSE estimation error: both Rayleigh factors are
// shrunk by (1-sigma_e^2)^{1/4} so the product keeps the stated double-
// Rayleigh marginal with scale s = sigma^2 (1-sigma_e^2).
inline double estimated_cascade_magnitude(const SystemParams& sp, double sigma_e2,
                                          rng::Stream& rs) {
    const double shrink = std::sqrt(1.0 - sigma_e2);
    return rs.rayleigh_mag(sp.var_h * shrink) * rs.rayleigh_mag(sp.var_g * shrink);
}

inline std::vector<double> draw_estimated_cascade(const SystemParams& sp, double sigma_e2,
                                                  rng::Stream& rs) {
    sp.validate();
    if (!(sigma_e2 >= 0.0) || sigma_e2 >= 1.0)
        throw std::domain_error("draw_estimated_cascade: sigma_e2 in [0, 1)");
    std::vector<double> mags(sp.m_elements);
    for (int i = 0; i < sp.m_elements; ++i)
        mags[i] = estimated_cascade_magnitude(sp, sigma_e2, rs);
    return mags;
}

// Sample Pearson correlation between the gains of two independent random
// phase configurations applied to the same channel draw.
inline double empirical_gain_correlation(const SystemParams& sp, std::uint64_t trials,
                                         std::uint64_t seed) {
    sp.validate();
    if (trials < 10000) throw std::invalid_argument("empirical_gain_correlation: trials >= 1e4");
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (std::uint64_t t = 0; t < trials; ++t) {
        rng::Stream rs(seed, t);
        const ChannelRealization ch = draw_channel(sp, rs);
        const PhaseConfig c1 = PhaseConfig::uniform_random(sp.m_elements, rs);
        const PhaseConfig c2 = PhaseConfig::uniform_random(sp.m_elements, rs);
        const double x = channel_gain(ch, c1);
        const double y = channel_gain(ch, c2);
        sx += x;
        sy += y;
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
    }
    const double n = static_cast<double>(trials);
    const double cov = sxy / n - (sx / n) * (sy / n);
    const double vx = sxx / n - (sx / n) * (sx / n);
    const double vy = syy / n - (sy / n) * (sy / n);
    return cov / std::sqrt(vx * vy);
}

}  // namespace irslab::channel
