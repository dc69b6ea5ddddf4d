#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "irslab/analytic.hpp"
#include "irslab/channel.hpp"
#include "irslab/scheme.hpp"

namespace irslab::energy {

// Power-consumption constants, linear units (watts).
struct PowerModel {
    double amp_efficiency = 1.2;  // xi
    double p_source = 0.0;        // P_S
    double p_dest = 0.0;          // P_D
    double p_element = 0.0;       // P_E, per active element
    double p_pilot = 0.0;         // P_o

    void validate() const {
        if (!(amp_efficiency > 0.0)) throw std::invalid_argument("PowerModel: xi > 0");
        if (p_source < 0.0 || p_dest < 0.0 || p_element < 0.0 || p_pilot < 0.0)
            throw std::invalid_argument("PowerModel: powers >= 0");
    }
};

// Energy efficiency in bits/Joule (per Hz, since the rate input is per Hz).
// The denominator is scheme specific: full-surface schemes power all M
// elements, selection schemes only the m active ones, and CT carries the
// pilot energy and the training-time rate loss.
inline double energy_efficiency(double expected_rate, Scheme scheme,
                                const channel::SystemParams& sp, const PowerModel& pm,
                                const analytic::CodingConfig* coding = nullptr,
                                const analytic::SelectionConfig* sel = nullptr) {
    if (!(expected_rate >= 0.0)) throw std::invalid_argument("energy_efficiency: rate >= 0");
    sp.validate();
    pm.validate();
    const double amp = sp.tx_power / pm.amp_efficiency;
    const double fixed = pm.p_source + pm.p_dest;
    switch (scheme) {
        case Scheme::Random:
        case Scheme::RRC:
        case Scheme::OBF:
            return expected_rate / (amp + fixed + sp.m_elements * pm.p_element);
        case Scheme::TD:
        case Scheme::ATD: {
            if (sel == nullptr) throw std::invalid_argument("energy_efficiency: TD/ATD need selection");
            return expected_rate /
                   (amp + fixed + sel->elements_per_subsurface * pm.p_element);
        }
        case Scheme::CT: {
            double frac = 1.0;  // 1 - tau/T
            double train = 0.0; // tau M P_o / T
            if (coding != nullptr && coding->t_channel_uses > 0) {
                frac = 1.0 - static_cast<double>(coding->tau_training) / coding->t_channel_uses;
                train = static_cast<double>(coding->tau_training) * sp.m_elements * pm.p_pilot /
                        coding->t_channel_uses;
            }
            return frac * expected_rate /
                   (frac * (amp + sp.m_elements * pm.p_element) + train + fixed);
        }
    }
    throw std::logic_error("unreachable");
}

// One row of the scheme-comparison summary.
struct SchemeSummary {
    std::string diversity;    // symbolic order
    double diversity_order;   // evaluated for the given configuration
    double signaling_bits;    // per selection/training round
    int active_elements;
    bool has_training;
    double prelog;            // fraction of the block carrying payload
};

inline SchemeSummary scheme_summary(Scheme scheme, const channel::SystemParams& sp,
                                    const analytic::CodingConfig& coding,
                                    const analytic::SelectionConfig& sel, double rho) {
    sp.validate();
    coding.validate();
    const int m_total = sp.m_elements;
    const double prelog_train =
        1.0 - static_cast<double>(coding.tau_training) / coding.t_channel_uses;
    switch (scheme) {
        case Scheme::CT:
            return {"M", static_cast<double>(m_total), static_cast<double>(m_total), m_total,
                    true, prelog_train};
        case Scheme::RRC:
            return {"min(T,M)", static_cast<double>(std::min(coding.t_channel_uses, m_total)),
                    0.0, m_total, false, 1.0};
        case Scheme::OBF:
            return {"min(tau,M)", static_cast<double>(std::min(coding.tau_training, m_total)),
                    static_cast<double>(coding.tau_training), m_total, false, 1.0};
        case Scheme::TD: {
            sel.validate();
            return {"N", static_cast<double>(sel.n_subsurfaces),
                    std::ceil(std::log2(static_cast<double>(sel.n_subsurfaces))),
                    sel.elements_per_subsurface, true, prelog_train};
        }
        case Scheme::ATD: {
            sel.validate();
            const double order = (rho <= sel.threshold_psi) ? sel.n_subsurfaces : 1.0;
            return {"N if rho <= psi, 1 otherwise", order,
                    analytic::atd_feedback_bits(sel.threshold_psi, sel, sp),
                    sel.elements_per_subsurface, true, prelog_train};
        }
        case Scheme::Random:
            return {"1", 1.0, 0.0, m_total, false, 1.0};
    }
    throw std::logic_error("unreachable");
}

}  // namespace irslab::energy
