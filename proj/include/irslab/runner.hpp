#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "irslab/analytic.hpp"
#include "irslab/config.hpp"
#include "irslab/energy.hpp"
#include "irslab/simulate.hpp"

namespace irslab::runner {

inline const char* kVersion = "0.1.0";
inline const char* kCsvSchema = "#schema=1";

inline int log_level() {
    static const int lvl = [] {
        const char* v = std::getenv("IRSLAB_LOG");
        if (v == nullptr) return 1;
        const std::string s(v);
        if (s == "quiet") return 0;
        if (s == "debug") return 2;
        return 1;
    }();
    return lvl;
}

template <typename... Args>
void log_info(const char* fmt, Args... args) {
    if (log_level() >= 1) {
        std::fprintf(stderr, fmt, args...);
        std::fprintf(stderr, "\n");
    }
}

// One evaluated (scheme, parameter point, metric) cell.
struct ResultRecord {
    Scheme scheme = Scheme::Random;
    std::string metric;
    double rho = 0.0;
    double p_db = 0.0;
    int m_elements = 0;
    int t_uses = 0;
    int tau = 0;
    int n_subsurfaces = 0;
    int m_sub = 0;
    double psi = 0.0;
    double sigma_e2 = 0.0;
    std::uint64_t trials = 0;
    std::optional<double> analytic_value;
    std::optional<double> sim_value;
    std::optional<double> sim_half_width;
    std::optional<double> rel_gap;
    std::optional<bool> pass;

    auto sort_key() const {
        return std::make_tuple(irslab::to_string(scheme), metric, m_elements, n_subsurfaces,
                               t_uses, psi, sigma_e2, rho, p_db);
    }
};

namespace detail {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

inline std::string fmt_opt(const std::optional<double>& v) {
    return v ? fmt_double(*v) : std::string();
}

// 3-sigma agreement or 2% relative, whichever is looser.
inline bool agreement(double analytic, double sim_value, double half_width) {
    const double gap = std::abs(sim_value - analytic);
    return gap <= std::max(3.0 * half_width, 0.02 * std::abs(analytic));
}

struct Point {
    double rho, p_db;
    int m, t, n;
    double psi, sigma_e2;
    bool has_sigma_e2 = false;
};

inline channel::SystemParams make_params(const config::Grid& g, const Point& pt) {
    channel::SystemParams sp;
    sp.m_elements = pt.m;
    sp.tx_power = config::db_to_linear(pt.p_db);
    sp.noise_var = config::db_to_linear(g.sigma_n2_db);
    sp.var_h = config::db_to_linear(g.sigma_h2_db);
    sp.var_g = config::db_to_linear(g.sigma_g2_db);
    return sp;
}

inline energy::PowerModel make_power(const config::PowerConfig& pc, const config::Grid& g) {
    energy::PowerModel pm;
    pm.amp_efficiency = pc.xi;
    pm.p_source = config::db_to_linear(pc.ps_dbw);
    pm.p_dest = config::dbm_to_watt(pc.pd_dbm);
    pm.p_element = config::dbm_to_watt(pc.pe_dbm);
    pm.p_pilot = config::db_to_linear(g.po_db);
    return pm;
}

}  // namespace detail

// Expand, evaluate, and collect all records for one config. Throws on any
// configuration error before any work is done.
inline std::vector<ResultRecord> evaluate(const config::ExperimentConfig& cfg) {
    using config::Mode;
    const bool want_analytic = cfg.mode != Mode::Simulate;
    const bool want_sim = cfg.mode != Mode::Analytic;
    const bool want_pass = cfg.mode == Mode::Validate;

    std::vector<ResultRecord> records;
    for (Scheme scheme : cfg.schemes) {
        const config::Grid g = config::effective_grid(cfg, scheme);
        const energy::PowerModel pm = detail::make_power(cfg.power, g);

        // Build the per-scheme point list; irrelevant axes stay at one entry.
        std::vector<detail::Point> points;
        const bool uses_t = scheme == Scheme::RRC || scheme == Scheme::OBF;
        const bool uses_n = scheme == Scheme::TD || scheme == Scheme::ATD;
        const bool uses_psi = scheme == Scheme::ATD;
        const bool uses_se2 = scheme == Scheme::CT;
        std::vector<double> se2_axis{0.0};
        if (uses_se2) {
            if (g.sigma_e2)
                se2_axis = *g.sigma_e2;
            else
                se2_axis.clear();  // derive per M below
        }
        for (double rho : g.rho)
            for (double p_db : g.p_db)
                for (int m : g.m_elements)
                    for (int t : (uses_t ? g.t_uses : std::vector<int>{1}))
                        for (int n : (uses_n ? g.n_subsurfaces : std::vector<int>{1}))
                            for (double psi : (uses_psi ? g.psi : std::vector<double>{0.0})) {
                                if (uses_n && m % n != 0)
                                    throw std::invalid_argument(
                                        "config: N must divide M for selection schemes");
                                std::vector<double> se2s = se2_axis;
                                if (uses_se2 && se2s.empty())
                                    se2s = {analytic::sigma_e_sq(g.tau,
                                                                 config::db_to_linear(g.po_db), m)};
                                if (!uses_se2) se2s = {0.0};
                                for (double se2 : se2s)
                                    points.push_back({rho, p_db, m, t, n, psi, se2, uses_se2});
                            }

        if (log_level() >= 2)
            std::fprintf(stderr, "irslab: %s: %zu grid points\n",
                         irslab::to_string(scheme).c_str(), points.size());

        for (const auto& pt : points) {
            const channel::SystemParams sp = detail::make_params(g, pt);
            const analytic::RateThreshold rt{pt.rho};
            analytic::CodingConfig cc;
            // Schemes that do not sweep T still need a block length for the
            // training-fraction bookkeeping; they take the first T entry.
            const int t_default = g.t_uses.empty() ? 1 : g.t_uses.front();
            cc.t_channel_uses = uses_t ? pt.t : std::max({1, t_default, g.tau});
            cc.tau_training = std::min(g.tau, cc.t_channel_uses);
            cc.max_step = g.delta;
            cc.kappa = g.kappa;
            analytic::SelectionConfig sel;
            sel.n_subsurfaces = pt.n;
            sel.elements_per_subsurface = pt.m / std::max(1, pt.n);
            sel.threshold_psi = pt.psi;

            ResultRecord base;
            base.scheme = scheme;
            base.rho = pt.rho;
            base.p_db = pt.p_db;
            base.m_elements = pt.m;
            base.t_uses = uses_t ? pt.t : 0;
            base.tau = (scheme == Scheme::OBF || scheme == Scheme::CT) ? cc.tau_training : 0;
            base.n_subsurfaces = uses_n ? pt.n : 0;
            base.m_sub = uses_n ? sel.elements_per_subsurface : 0;
            base.psi = uses_psi ? pt.psi : 0.0;
            base.sigma_e2 = pt.sigma_e2;

            // Analytic values per metric; OBF's rate/EE are Jensen-bound
            // approximations and are never pass/fail scored.
            std::optional<double> an_outage, an_rate, an_bits;
            bool rate_is_bound = false;
            if (want_analytic) {
                switch (scheme) {
                    case Scheme::Random:
                        an_outage = analytic::outage_random(rt, sp);
                        an_rate = analytic::rate_random(sp);
                        break;
                    case Scheme::RRC:
                        an_outage = analytic::outage_rrc_ind(rt, sp, pt.t);
                        an_rate = analytic::rate_random(sp);
                        break;
                    case Scheme::OBF:
                        if (cc.tau_training >= 1 && sp.m_elements >= 2) {
                            an_rate = analytic::rate_obf_bound_block(cc, sp);
                            rate_is_bound = true;
                        }
                        break;
                    case Scheme::TD:
                        an_outage = analytic::outage_td(rt, sel, sp);
                        an_rate = analytic::rate_td(sel, sp);
                        an_bits = std::ceil(std::log2(static_cast<double>(sel.n_subsurfaces)));
                        break;
                    case Scheme::ATD:
                        an_outage = analytic::outage_atd(rt, sel, sp);
                        an_rate = analytic::rate_atd(sel, sp);
                        an_bits = analytic::atd_feedback_bits(pt.psi, sel, sp);
                        break;
                    case Scheme::CT:
                        an_outage = analytic::outage_ct(rt, sp, pt.sigma_e2);
                        an_rate = analytic::rate_ct(sp, pt.sigma_e2);
                        break;
                }
            }

            std::optional<sim::SimResult> sr;
            if (want_sim) {
                sim::SimRequest req;
                req.scheme = scheme;
                req.sp = sp;
                req.threshold = rt;
                if (scheme == Scheme::RRC || scheme == Scheme::OBF || scheme == Scheme::CT)
                    req.coding = cc;
                if (uses_n) req.selection = sel;
                if (scheme == Scheme::CT) req.sigma_e2 = pt.sigma_e2;
                req.training_power = config::db_to_linear(g.po_db);
                req.trials = cfg.trials;
                req.seed = cfg.seed;
                req.threads = cfg.threads;
                sr = sim::simulate(req);
            }

            auto push = [&](const char* metric, std::optional<double> an,
                            const sim::MetricEstimate* est, bool scoreable) {
                if (!an && est == nullptr) return;
                ResultRecord r = base;
                r.metric = metric;
                r.analytic_value = an;
                if (est != nullptr) {
                    r.sim_value = est->value;
                    r.sim_half_width = est->half_width_95;
                    r.trials = est->trials;
                }
                if (an && est != nullptr && *an != 0.0)
                    r.rel_gap = (est->value - *an) / std::abs(*an);
                if (want_pass && scoreable && an && est != nullptr)
                    r.pass = detail::agreement(*an, est->value, est->half_width_95);
                records.push_back(std::move(r));
            };

            push("outage", an_outage, sr ? &sr->outage : nullptr, true);
            push("rate", an_rate, sr ? &sr->rate : nullptr, !rate_is_bound);
            if (sr && sr->feedback_bits)
                push("feedback_bits", an_bits, &*sr->feedback_bits, true);
            else if (an_bits)
                push("feedback_bits", an_bits, nullptr, true);
            if (sr && sr->mean_snr) push("mean_snr", std::nullopt, &*sr->mean_snr, false);

            // Energy efficiency from whichever rates exist.
            std::optional<double> an_ee, sim_ee;
            const analytic::SelectionConfig* selp = uses_n ? &sel : nullptr;
            if (an_rate)
                an_ee = energy::energy_efficiency(*an_rate, scheme, sp, pm, &cc, selp);
            if (sr)
                sim_ee = energy::energy_efficiency(sr->rate.value, scheme, sp, pm, &cc, selp);
            if (an_ee || sim_ee) {
                ResultRecord r = base;
                r.metric = "energy_efficiency";
                r.analytic_value = an_ee;
                if (sim_ee) {
                    r.sim_value = sim_ee;
                    // Half-width scales with the rate interval through the
                    // constant denominator.
                    if (sr && sr->rate.value > 0.0)
                        r.sim_half_width = *sim_ee * sr->rate.half_width_95 / sr->rate.value;
                    r.trials = cfg.trials;
                }
                if (an_ee && sim_ee && *an_ee != 0.0) r.rel_gap = (*sim_ee - *an_ee) / *an_ee;
                if (want_pass && !rate_is_bound && an_ee && sim_ee && r.sim_half_width)
                    r.pass = detail::agreement(*an_ee, *sim_ee, *r.sim_half_width);
                records.push_back(std::move(r));
            }
        }
    }
    std::sort(records.begin(), records.end(),
              [](const ResultRecord& a, const ResultRecord& b) { return a.sort_key() < b.sort_key(); });
    return records;
}

inline std::string records_to_csv(const std::vector<ResultRecord>& records) {
    std::ostringstream os;
    os << kCsvSchema << "\n";
    os << "scheme,metric,rho,P_dB,M,T,tau,N,m,psi,sigma_e2,trials,analytic_value,"
          "sim_value,sim_half_width,rel_gap,pass\n";
    for (const auto& r : records) {
        os << irslab::to_string(r.scheme) << ',' << r.metric << ',' << detail::fmt_double(r.rho)
           << ',' << detail::fmt_double(r.p_db) << ',' << r.m_elements << ','
           << (r.t_uses ? std::to_string(r.t_uses) : std::string()) << ','
           << (r.tau ? std::to_string(r.tau) : std::string()) << ','
           << (r.n_subsurfaces ? std::to_string(r.n_subsurfaces) : std::string()) << ','
           << (r.m_sub ? std::to_string(r.m_sub) : std::string()) << ','
           << detail::fmt_double(r.psi) << ',' << detail::fmt_double(r.sigma_e2) << ','
           << (r.trials ? std::to_string(r.trials) : std::string()) << ','
           << detail::fmt_opt(r.analytic_value) << ',' << detail::fmt_opt(r.sim_value) << ','
           << detail::fmt_opt(r.sim_half_width) << ',' << detail::fmt_opt(r.rel_gap) << ',';
        if (r.pass) os << (*r.pass ? "1" : "0");
        os << "\n";
    }
    return os.str();
}

inline config::json records_to_json(const std::vector<ResultRecord>& records) {
    config::json arr = config::json::array();
    for (const auto& r : records) {
        config::json j;
        j["scheme"] = irslab::to_string(r.scheme);
        j["metric"] = r.metric;
        j["rho"] = r.rho;
        j["P_dB"] = r.p_db;
        j["M"] = r.m_elements;
        if (r.t_uses) j["T"] = r.t_uses;
        if (r.tau) j["tau"] = r.tau;
        if (r.n_subsurfaces) {
            j["N"] = r.n_subsurfaces;
            j["m"] = r.m_sub;
        }
        j["psi"] = r.psi;
        j["sigma_e2"] = r.sigma_e2;
        if (r.trials) j["trials"] = r.trials;
        if (r.analytic_value) j["analytic_value"] = *r.analytic_value;
        if (r.sim_value) j["sim_value"] = *r.sim_value;
        if (r.sim_half_width) j["sim_half_width"] = *r.sim_half_width;
        if (r.rel_gap) j["rel_gap"] = *r.rel_gap;
        if (r.pass) j["pass"] = *r.pass;
        arr.push_back(std::move(j));
    }
    return arr;
}

// Full run: evaluate and write results.csv + report.json. Returns the exit
// code contract: 0 success, 1 validation failures present, 2 config/runtime
// error. Nothing is written unless evaluation completed.
inline int run(const config::ExperimentConfig& cfg) {
    std::vector<ResultRecord> records;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        records = evaluate(cfg);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    int failures = 0;
    for (const auto& r : records)
        if (r.pass && !*r.pass) ++failures;

    try {
        std::filesystem::create_directories(cfg.out_dir);
        const auto csv_path = std::filesystem::path(cfg.out_dir) / "results.csv";
        const auto json_path = std::filesystem::path(cfg.out_dir) / "report.json";
        {
            std::ofstream os(csv_path, std::ios::binary);
            if (!os) throw std::runtime_error("cannot write " + csv_path.string());
            os << records_to_csv(records);
        }
        config::json report;
        report["version"] = kVersion;
        report["wall_clock_s"] = wall;
        report["config"] = config::config_to_json(cfg);
        report["failures"] = failures;
        report["records"] = records_to_json(records);
        {
            std::ofstream os(json_path, std::ios::binary);
            if (!os) throw std::runtime_error("cannot write " + json_path.string());
            os << report.dump(2) << "\n";
        }
        log_info("irslab: %zu records -> %s (failures: %d, %.1fs)", records.size(),
                 cfg.out_dir.c_str(), failures, wall);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return failures > 0 ? 1 : 0;
}

// Ready-made sweep configurations reproducing the headline experiments at
// desk scale.
inline config::ExperimentConfig figure_recipe(const std::string& name) {
    using config::json;
    config::ExperimentConfig c;
    c.power = {};
    c.seed = 20240915;
    if (name == "fig3") {
        // Outage vs transmit power: random baseline, RRC over T, CT with and
        // without estimation error.
        c.mode = config::Mode::Validate;
        c.schemes = {Scheme::Random, Scheme::RRC, Scheme::CT};
        c.grid.rho = {1.0};
        c.grid.p_db = {-20, -15, -10, -5, 0, 5, 10, 15, 20, 25, 30};
        c.grid.m_elements = {4, 10};
        c.grid.t_uses = {1, 2, 3};
        c.scheme_grids["ct"] = json{{"M", {10}}, {"sigma_e2", {0.0, 0.3}}};
        c.trials = 200000;
        c.out_dir = "out/fig3";
        return c;
    }
    if (name == "fig5") {
        // TD selection vs power, against the random baseline and CT.
        c.mode = config::Mode::Validate;
        c.schemes = {Scheme::Random, Scheme::TD, Scheme::CT};
        c.grid.rho = {1.0};
        c.grid.p_db = {-20, -15, -10, -5, 0, 5, 10, 15, 20, 25, 30};
        c.grid.m_elements = {4};
        c.scheme_grids["td"] = json{{"M", {20}}, {"N", {1, 2, 5}}};
        c.scheme_grids["ct"] = json{{"M", {4, 10}}, {"sigma_e2", {0.0}}};
        c.trials = 200000;
        c.out_dir = "out/fig5";
        return c;
    }
    if (name == "fig6") {
        // Selection schemes vs number of sub-surfaces at fixed element budget.
        c.mode = config::Mode::Validate;
        c.schemes = {Scheme::TD, Scheme::ATD};
        c.grid.rho = {1.0};
        c.grid.p_db = {-10};
        c.grid.m_elements = {240};
        c.grid.n_subsurfaces = {1, 2, 3, 4, 5, 6, 8};
        c.grid.psi = {0.9, 1.1};
        c.trials = 400000;
        c.out_dir = "out/fig6";
        return c;
    }
    if (name == "fig7-like" || name == "fig7") {
        // Energy efficiency vs number of elements with the standard power
        // constants; analytic-only sweep.
        c.mode = config::Mode::Analytic;
        c.schemes = {Scheme::Random, Scheme::OBF, Scheme::TD, Scheme::CT};
        c.grid.rho = {1.0};
        c.grid.p_db = {0};
        c.grid.m_elements = [] {
            std::vector<int> m;
            for (int v = 10; v <= 200; v += 10) m.push_back(v);
            return m;
        }();
        c.grid.t_uses = {500};
        c.grid.tau = 20;
        c.grid.delta = 0.1;
        c.grid.kappa = 0.6;
        c.grid.po_db = 0.0;
        c.scheme_grids["td"] = json{{"N", {5}}};
        c.scheme_grids["ct"] = json{{"M", {20, 60, 100, 140, 180}}};
        c.trials = 1;
        c.out_dir = "out/fig7";
        return c;
    }
    throw std::invalid_argument("unknown recipe: " + name +
                                " (expected fig3, fig5, fig6, fig7-like)");
}

}  // namespace irslab::runner
