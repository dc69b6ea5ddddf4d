#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "irslab/analytic.hpp"
#include "irslab/channel.hpp"
#include "irslab/rng.hpp"
#include "irslab/scheme.hpp"

namespace irslab::sim {

enum class MetricKind { Outage, Rate, EnergyEfficiency, FeedbackBits, MeanSnr };

struct MetricEstimate {
    double value = 0.0;
    double half_width_95 = 0.0;
    std::uint64_t trials = 0;
    MetricKind kind = MetricKind::Outage;
};

struct SimRequest {
    Scheme scheme = Scheme::Random;
    channel::SystemParams sp;
    analytic::RateThreshold threshold;  // outage threshold rho
    std::optional<analytic::CodingConfig> coding;       // RRC, OBF, CT
    std::optional<analytic::SelectionConfig> selection; // TD, ATD
    double training_power = 0.0;                        // P_o (CT)
    std::optional<double> sigma_e2;  // direct override; perfect CSI = 0
    std::uint64_t trials = 1;
    std::uint64_t seed = 0;
    int threads = 0;  // 0 = hardware concurrency

    void validate() const {
        sp.validate();
        threshold.validate();
        if (trials < 1) throw std::invalid_argument("SimRequest: trials >= 1");
        switch (scheme) {
            case Scheme::RRC:
            case Scheme::OBF:
                if (!coding) throw std::invalid_argument("SimRequest: scheme needs coding config");
                coding->validate();
                break;
            case Scheme::TD:
            case Scheme::ATD:
                if (!selection) throw std::invalid_argument("SimRequest: scheme needs selection config");
                selection->validate();
                if (selection->n_subsurfaces * selection->elements_per_subsurface != sp.m_elements)
                    throw std::invalid_argument("SimRequest: m * N must equal M");
                break;
            case Scheme::CT:
                if (!sigma_e2 && !(training_power >= 0.0 && coding))
                    throw std::invalid_argument("SimRequest: CT needs sigma_e2 or (tau, P_o)");
                if (sigma_e2 && (*sigma_e2 < 0.0 || *sigma_e2 >= 1.0))
                    throw std::invalid_argument("SimRequest: sigma_e2 in [0, 1)");
                break;
            default:
                break;
        }
    }
};

struct SimResult {
    MetricEstimate outage;
    MetricEstimate rate;
    std::optional<MetricEstimate> feedback_bits;
    std::optional<MetricEstimate> mean_snr;   // OBF: final accepted SNR
    std::vector<double> snr_trajectory;       // OBF: mean best-so-far per training use
};

// Mean with a 95% half-width. Outage streams near the boundary get a Wilson
// interval; everything else uses the normal approximation.
inline MetricEstimate estimate_from_moments(MetricKind kind, double sum, double sumsq,
                                            std::uint64_t n) {
    if (n < 1) throw std::invalid_argument("estimate: trials >= 1");
    MetricEstimate e;
    e.kind = kind;
    e.trials = n;
    const double dn = static_cast<double>(n);
    const double mean = sum / dn;
    e.value = mean;
    constexpr double z = 1.959963984540054;
    if (kind == MetricKind::Outage) {
        const double successes = sum;
        if (successes <= 100.0 || dn - successes <= 100.0) {
            const double z2 = z * z;
            const double denom = 1.0 + z2 / dn;
            const double rad =
                z * std::sqrt(mean * (1.0 - mean) / dn + z2 / (4.0 * dn * dn)) / denom;
            e.half_width_95 = rad;
            return e;
        }
    }
    if (n == 1) {
        e.half_width_95 = 0.0;
        return e;
    }
    double var = (sumsq - sum * sum / dn) / (dn - 1.0);
    if (var < 0.0) var = 0.0;
    e.half_width_95 = z * std::sqrt(var / dn);
    return e;
}

inline MetricEstimate estimate(MetricKind kind, std::span<const double> values) {
    double sum = 0.0, sumsq = 0.0, c = 0.0, c2 = 0.0;
    for (double v : values) {  // Kahan, matching the chunked accumulator
        double t = v - c;
        double s = sum + t;
        c = (s - sum) - t;
        sum = s;
        double t2 = v * v - c2;
        double s2 = sumsq + t2;
        c2 = (s2 - sumsq) - t2;
        sumsq = s2;
    }
    return estimate_from_moments(kind, sum, sumsq, values.size());
}

namespace detail {

constexpr std::uint64_t kChunk = 8192;

struct KahanSum {
    double sum = 0.0;
    double c = 0.0;
    void add(double v) {
        const double t = v - c;
        const double s = sum + t;
        c = (s - sum) - t;
        sum = s;
    }
};

// Runs `trial(state, index, metrics)` for every trial index, accumulating
// per-metric sums and sums of squares plus an optional trajectory. Trials are
// grouped into fixed-size chunks; workers claim chunks atomically but chunk
// partials are combined in chunk order, so the result is bit-identical for
// any worker count.
template <typename MakeState, typename TrialFn>
void run_trials(std::uint64_t trials, int threads, int n_metrics, int traj_len,
                MakeState&& make_state, TrialFn&& trial, std::vector<double>& sums,
                std::vector<double>& sumsqs, std::vector<double>& traj) {
    const std::uint64_t n_chunks = (trials + kChunk - 1) / kChunk;
    struct Partial {
        std::vector<double> sum, sumsq, traj;
    };
    std::vector<Partial> partials(n_chunks);

    int n_workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    if (n_workers < 1) n_workers = 1;
    if (static_cast<std::uint64_t>(n_workers) > n_chunks)
        n_workers = static_cast<int>(n_chunks);

    std::atomic<std::uint64_t> next{0};
    auto worker = [&]() {
        auto state = make_state();
        std::vector<double> metrics(n_metrics);
        std::vector<double> traj_buf(traj_len);
        for (;;) {
            const std::uint64_t c = next.fetch_add(1);
            if (c >= n_chunks) break;
            const std::uint64_t lo = c * kChunk;
            const std::uint64_t hi = std::min(trials, lo + kChunk);
            std::vector<KahanSum> ks(n_metrics), kq(n_metrics), kt(traj_len);
            for (std::uint64_t i = lo; i < hi; ++i) {
                std::fill(traj_buf.begin(), traj_buf.end(), 0.0);
                trial(state, i, metrics.data(), traj_buf.data());
                for (int k = 0; k < n_metrics; ++k) {
                    ks[k].add(metrics[k]);
                    kq[k].add(metrics[k] * metrics[k]);
                }
                for (int k = 0; k < traj_len; ++k) kt[k].add(traj_buf[k]);
            }
            Partial& p = partials[c];
            p.sum.resize(n_metrics);
            p.sumsq.resize(n_metrics);
            p.traj.resize(traj_len);
            for (int k = 0; k < n_metrics; ++k) {
                p.sum[k] = ks[k].sum;
                p.sumsq[k] = kq[k].sum;
            }
            for (int k = 0; k < traj_len; ++k) p.traj[k] = kt[k].sum;
        }
    };

    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    sums.assign(n_metrics, 0.0);
    sumsqs.assign(n_metrics, 0.0);
    traj.assign(traj_len, 0.0);
    std::vector<KahanSum> ms(n_metrics), mq(n_metrics), mt(traj_len);
    for (std::uint64_t c = 0; c < n_chunks; ++c) {
        for (int k = 0; k < n_metrics; ++k) {
            ms[k].add(partials[c].sum[k]);
            mq[k].add(partials[c].sumsq[k]);
        }
        for (int k = 0; k < traj_len; ++k) mt[k].add(partials[c].traj[k]);
    }
    for (int k = 0; k < n_metrics; ++k) {
        sums[k] = ms[k].sum;
        sumsqs[k] = mq[k].sum;
    }
    for (int k = 0; k < traj_len; ++k) traj[k] = mt[k].sum;
}

// Gain of one fresh-phase use over precomputed element products.
inline double rotated_gain(std::span<const std::complex<double>> prod, rng::Stream& rs) {
    std::complex<double> acc = 0.0;
    for (const auto& p : prod) {
        const double a = rs.phase();
        acc += p * std::complex<double>(std::cos(a), std::sin(a));
    }
    return std::norm(acc);
}

}  // namespace detail

// Outage counts a rate exactly on the threshold as an outage; ties are
// measure zero but the rule keeps replays unambiguous.
inline bool outage_event(double rate, double rho) { return rate <= rho; }

inline SimResult simulate_random(const SimRequest& req) {
    req.validate();
    const auto sp = req.sp;
    const double snr = sp.snr_scale();
    const double rho = req.threshold.rho;
    std::vector<double> sums, sumsqs, traj;
    detail::run_trials(
        req.trials, req.threads, 2, 0, [] { return 0; },
        [&](int&, std::uint64_t i, double* m, double*) {
            rng::Stream rs(req.seed, i);
            std::complex<double> acc = 0.0;
            for (int e = 0; e < sp.m_elements; ++e) {
                const auto h = rs.complex_normal(sp.var_h);
                const auto g = rs.complex_normal(sp.var_g);
                const double a = rs.phase();
                acc += h * g * std::complex<double>(std::cos(a), std::sin(a));
            }
            const double rate = std::log2(1.0 + snr * std::norm(acc));
            m[0] = outage_event(rate, rho) ? 1.0 : 0.0;
            m[1] = rate;
        },
        sums, sumsqs, traj);
    SimResult r;
    r.outage = estimate_from_moments(MetricKind::Outage, sums[0], sumsqs[0], req.trials);
    r.rate = estimate_from_moments(MetricKind::Rate, sums[1], sumsqs[1], req.trials);
    return r;
}

// RRC: one channel draw per trial (block fading), T independent rotations.
inline SimResult simulate_rrc(const SimRequest& req) {
    req.validate();
    if (!req.coding) throw std::invalid_argument("simulate_rrc: coding config required");
    const auto sp = req.sp;
    const int t_uses = req.coding->t_channel_uses;
    const double snr = sp.snr_scale();
    const double rho = req.threshold.rho;
    struct State {
        std::vector<std::complex<double>> prod;
    };
    std::vector<double> sums, sumsqs, traj;
    detail::run_trials(
        req.trials, req.threads, 2, 0,
        [&] { return State{std::vector<std::complex<double>>(sp.m_elements)}; },
        [&](State& st, std::uint64_t i, double* m, double*) {
            rng::Stream rs(req.seed, i);
            for (int e = 0; e < sp.m_elements; ++e)
                st.prod[e] = rs.complex_normal(sp.var_h) * rs.complex_normal(sp.var_g);
            double rate_sum = 0.0;
            for (int t = 0; t < t_uses; ++t)
                rate_sum += std::log2(1.0 + snr * detail::rotated_gain(st.prod, rs));
            const double rate = rate_sum / t_uses;
            m[0] = outage_event(rate, rho) ? 1.0 : 0.0;
            m[1] = rate;
        },
        sums, sumsqs, traj);
    SimResult r;
    r.outage = estimate_from_moments(MetricKind::Outage, sums[0], sumsqs[0], req.trials);
    r.rate = estimate_from_moments(MetricKind::Rate, sums[1], sumsqs[1], req.trials);
    return r;
}

// One-bit feedback ascent: perturb all phases around the best-so-far
// configuration, keep the perturbation only if the destination SNR improved.
inline SimResult simulate_obf(const SimRequest& req) {
    req.validate();
    if (!req.coding) throw std::invalid_argument("simulate_obf: coding config required");
    const auto sp = req.sp;
    const auto cc = *req.coding;
    if (cc.tau_training < 1) throw std::invalid_argument("simulate_obf: tau >= 1");
    const int t_uses = cc.t_channel_uses;
    const int tau = cc.tau_training;
    const double delta = cc.max_step;
    const double snr = sp.snr_scale();
    const double rho = req.threshold.rho;
    struct State {
        std::vector<std::complex<double>> prod;
        std::vector<double> best, trial_phase;
    };
    std::vector<double> sums, sumsqs, traj;
    detail::run_trials(
        req.trials, req.threads, 3, tau,
        [&] {
            return State{std::vector<std::complex<double>>(sp.m_elements),
                         std::vector<double>(sp.m_elements), std::vector<double>(sp.m_elements)};
        },
        [&](State& st, std::uint64_t i, double* m, double* tr) {
            rng::Stream rs(req.seed, i);
            for (int e = 0; e < sp.m_elements; ++e)
                st.prod[e] = rs.complex_normal(sp.var_h) * rs.complex_normal(sp.var_g);
            auto gain_of = [&](const std::vector<double>& ph) {
                std::complex<double> acc = 0.0;
                for (int e = 0; e < sp.m_elements; ++e)
                    acc += st.prod[e] * std::complex<double>(std::cos(ph[e]), std::sin(ph[e]));
                return std::norm(acc);
            };
            for (int e = 0; e < sp.m_elements; ++e) st.best[e] = rs.phase();
            double gamma_best = snr * gain_of(st.best);
            double rate_train = std::log2(1.0 + gamma_best);
            tr[0] = gamma_best;
            for (int t = 2; t <= tau; ++t) {
                for (int e = 0; e < sp.m_elements; ++e)
                    st.trial_phase[e] = st.best[e] + rs.symmetric(delta);
                const double gamma_t = snr * gain_of(st.trial_phase);
                rate_train += std::log2(1.0 + gamma_t);
                if (gamma_t > gamma_best) {
                    gamma_best = gamma_t;
                    std::swap(st.best, st.trial_phase);
                }
                tr[t - 1] = gamma_best;
            }
            const double rate_frozen = (t_uses - tau) * std::log2(1.0 + gamma_best);
            const double rate = (rate_train + rate_frozen) / t_uses;
            m[0] = outage_event(rate, rho) ? 1.0 : 0.0;
            m[1] = rate;
            m[2] = gamma_best;
        },
        sums, sumsqs, traj);
    SimResult r;
    r.outage = estimate_from_moments(MetricKind::Outage, sums[0], sumsqs[0], req.trials);
    r.rate = estimate_from_moments(MetricKind::Rate, sums[1], sumsqs[1], req.trials);
    r.mean_snr = estimate_from_moments(MetricKind::MeanSnr, sums[2], sumsqs[2], req.trials);
    r.snr_trajectory.resize(tau);
    for (int t = 0; t < tau; ++t) r.snr_trajectory[t] = traj[t] / static_cast<double>(req.trials);
    return r;
}

// TD: activate the sub-surface with the highest destination SNR.
inline SimResult simulate_td(const SimRequest& req) {
    req.validate();
    const auto sp = req.sp;
    const auto sel = *req.selection;
    const int n = sel.n_subsurfaces;
    const int m_sub = sel.elements_per_subsurface;
    const double snr = sp.snr_scale();
    const double rho = req.threshold.rho;
    std::vector<double> sums, sumsqs, traj;
    detail::run_trials(
        req.trials, req.threads, 2, 0, [] { return 0; },
        [&](int&, std::uint64_t i, double* m, double*) {
            rng::Stream rs(req.seed, i);
            double best = 0.0;
            for (int sidx = 0; sidx < n; ++sidx) {
                std::complex<double> acc = 0.0;
                for (int e = 0; e < m_sub; ++e) {
                    const auto h = rs.complex_normal(sp.var_h);
                    const auto g = rs.complex_normal(sp.var_g);
                    const double a = rs.phase();
                    acc += h * g * std::complex<double>(std::cos(a), std::sin(a));
                }
                best = std::max(best, std::norm(acc));
            }
            const double rate = std::log2(1.0 + snr * best);
            m[0] = outage_event(rate, rho) ? 1.0 : 0.0;
            m[1] = rate;
        },
        sums, sumsqs, traj);
    SimResult r;
    r.outage = estimate_from_moments(MetricKind::Outage, sums[0], sumsqs[0], req.trials);
    r.rate = estimate_from_moments(MetricKind::Rate, sums[1], sumsqs[1], req.trials);
    MetricEstimate bits;
    bits.kind = MetricKind::FeedbackBits;
    bits.value = std::ceil(std::log2(static_cast<double>(n)));
    bits.trials = req.trials;
    r.feedback_bits = bits;
    return r;
}

// ATD: probe sub-surfaces in order, keep the first whose rate clears psi,
// fall through to the last one unconditionally. Bits follow the
// per-sub-surface accounting (one for the first probe, one per
// below-threshold probe among the next N-2).
inline SimResult simulate_atd(const SimRequest& req) {
    req.validate();
    const auto sp = req.sp;
    const auto sel = *req.selection;
    const int n = sel.n_subsurfaces;
    const int m_sub = sel.elements_per_subsurface;
    const double snr = sp.snr_scale();
    const double rho = req.threshold.rho;
    const double psi = sel.threshold_psi;
    std::vector<double> sums, sumsqs, traj;
    detail::run_trials(
        req.trials, req.threads, 3, 0, [] { return 0; },
        [&](int&, std::uint64_t i, double* m, double*) {
            rng::Stream rs(req.seed, i);
            double selected_rate = 0.0;
            bool chosen = false;
            double bits = (n >= 2) ? 1.0 : 0.0;
            for (int sidx = 0; sidx < n; ++sidx) {
                std::complex<double> acc = 0.0;
                for (int e = 0; e < m_sub; ++e) {
                    const auto h = rs.complex_normal(sp.var_h);
                    const auto g = rs.complex_normal(sp.var_g);
                    const double a = rs.phase();
                    acc += h * g * std::complex<double>(std::cos(a), std::sin(a));
                }
                const double rate = std::log2(1.0 + snr * std::norm(acc));
                if (sidx < n - 2 && rate < psi) bits += 1.0;
                if (!chosen && (rate >= psi || sidx == n - 1)) {
                    chosen = true;
                    selected_rate = rate;
                }
            }
            m[0] = outage_event(selected_rate, rho) ? 1.0 : 0.0;
            m[1] = selected_rate;
            m[2] = bits;
        },
        sums, sumsqs, traj);
    SimResult r;
    r.outage = estimate_from_moments(MetricKind::Outage, sums[0], sumsqs[0], req.trials);
    r.rate = estimate_from_moments(MetricKind::Rate, sums[1], sumsqs[1], req.trials);
    r.feedback_bits =
        estimate_from_moments(MetricKind::FeedbackBits, sums[2], sumsqs[2], req.trials);
    return r;
}

// Coherent transmission on estimated cascades.
inline SimResult simulate_ct(const SimRequest& req) {
    req.validate();
    const auto sp = req.sp;
    const double se2 = req.sigma_e2 ? *req.sigma_e2
                                    : analytic::sigma_e_sq(req.coding ? req.coding->tau_training : 0,
                                                           req.training_power, sp.m_elements);
    if (se2 >= 1.0) throw std::invalid_argument("simulate_ct: sigma_e2 must be < 1");
    const double snr = sp.tx_power / (sp.noise_var + se2);
    const double rho = req.threshold.rho;
    std::vector<double> sums, sumsqs, traj;
    detail::run_trials(
        req.trials, req.threads, 2, 0, [] { return 0; },
        [&](int&, std::uint64_t i, double* m, double*) {
            rng::Stream rs(req.seed, i);
            double s = 0.0;
            for (int e = 0; e < sp.m_elements; ++e)
                s += channel::estimated_cascade_magnitude(sp, se2, rs);
            const double rate = std::log2(1.0 + snr * s * s);
            m[0] = outage_event(rate, rho) ? 1.0 : 0.0;
            m[1] = rate;
        },
        sums, sumsqs, traj);
    SimResult r;
    r.outage = estimate_from_moments(MetricKind::Outage, sums[0], sumsqs[0], req.trials);
    r.rate = estimate_from_moments(MetricKind::Rate, sums[1], sumsqs[1], req.trials);
    return r;
}

inline SimResult simulate(const SimRequest& req) {
    switch (req.scheme) {
        case Scheme::Random: return simulate_random(req);
        case Scheme::RRC: return simulate_rrc(req);
        case Scheme::OBF: return simulate_obf(req);
        case Scheme::TD: return simulate_td(req);
        case Scheme::ATD: return simulate_atd(req);
        case Scheme::CT: return simulate_ct(req);
    }
    throw std::logic_error("unreachable");
}

}  // namespace irslab::sim
