#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "irslab/scheme.hpp"

namespace irslab::config {

using json = nlohmann::json;

// dB helpers -- the one place in the artifact where units are converted.
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double dbm_to_watt(double dbm) { return db_to_linear(dbm) / 1000.0; }

enum class Mode { Analytic, Simulate, Validate, Sweep };

inline std::string to_string(Mode m) {
    switch (m) {
        case Mode::Analytic: return "analytic";
        case Mode::Simulate: return "simulate";
        case Mode::Validate: return "validate";
        case Mode::Sweep: return "sweep";
    }
    throw std::logic_error("unreachable");
}

inline Mode mode_from_string(const std::string& s) {
    if (s == "analytic") return Mode::Analytic;
    if (s == "simulate") return Mode::Simulate;
    if (s == "validate") return Mode::Validate;
    if (s == "sweep") return Mode::Sweep;
    throw std::invalid_argument("unknown mode: " + s);
}

// Parameter grid, dB where noted. Axes are lists; block-level controls are
// scalars. A scheme sweeps only the axes it consumes.
struct Grid {
    std::vector<double> rho{1.0};
    std::vector<double> p_db{0.0};
    std::vector<int> m_elements{1};
    std::vector<int> t_uses{1};
    std::vector<int> n_subsurfaces{1};
    std::vector<double> psi{0.0};
    std::optional<std::vector<double>> sigma_e2;  // CT; derived from tau/Po when absent
    int tau = 0;
    double delta = 0.1;
    double kappa = 1.0;
    double sigma_h2_db = 0.0;
    double sigma_g2_db = 0.0;
    double sigma_n2_db = 0.0;
    double po_db = 0.0;
};

struct PowerConfig {
    double xi = 1.2;
    double ps_dbw = 9.0;
    double pd_dbm = 10.0;
    double pe_dbm = 10.0;
};

struct ExperimentConfig {
    Mode mode = Mode::Analytic;
    std::vector<Scheme> schemes;
    Grid grid;
    std::map<std::string, json> scheme_grids;  // per-scheme overrides, merged over `grid`
    PowerConfig power;
    std::uint64_t trials = 100000;
    std::uint64_t seed = 1;
    int threads = 0;
    std::string out_dir = "out";
};

namespace detail {

template <typename T>
void read_into(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

inline Grid grid_from_json(const json& j, Grid base = Grid{}) {
    Grid g = std::move(base);
    read_into(j, "rho", g.rho);
    read_into(j, "P_dB", g.p_db);
    read_into(j, "M", g.m_elements);
    read_into(j, "T", g.t_uses);
    read_into(j, "N", g.n_subsurfaces);
    read_into(j, "psi", g.psi);
    if (j.contains("sigma_e2")) g.sigma_e2 = j.at("sigma_e2").get<std::vector<double>>();
    read_into(j, "tau", g.tau);
    read_into(j, "Delta", g.delta);
    read_into(j, "kappa", g.kappa);
    read_into(j, "sigma_h2_dB", g.sigma_h2_db);
    read_into(j, "sigma_g2_dB", g.sigma_g2_db);
    read_into(j, "sigma_n2_dB", g.sigma_n2_db);
    read_into(j, "Po_dB", g.po_db);
    return g;
}

inline json grid_to_json(const Grid& g) {
    json j;
    j["rho"] = g.rho;
    j["P_dB"] = g.p_db;
    j["M"] = g.m_elements;
    j["T"] = g.t_uses;
    j["N"] = g.n_subsurfaces;
    j["psi"] = g.psi;
    if (g.sigma_e2) j["sigma_e2"] = *g.sigma_e2;
    j["tau"] = g.tau;
    j["Delta"] = g.delta;
    j["kappa"] = g.kappa;
    j["sigma_h2_dB"] = g.sigma_h2_db;
    j["sigma_g2_dB"] = g.sigma_g2_db;
    j["sigma_n2_dB"] = g.sigma_n2_db;
    j["Po_dB"] = g.po_db;
    return j;
}

}  // namespace detail

inline ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig c;
    if (!j.contains("mode")) throw std::invalid_argument("config: missing 'mode'");
    c.mode = mode_from_string(j.at("mode").get<std::string>());
    if (!j.contains("schemes") || j.at("schemes").empty())
        throw std::invalid_argument("config: missing or empty 'schemes'");
    for (const auto& s : j.at("schemes")) c.schemes.push_back(scheme_from_string(s.get<std::string>()));
    if (j.contains("grid")) c.grid = detail::grid_from_json(j.at("grid"));
    if (j.contains("scheme_grids"))
        for (const auto& [k, v] : j.at("scheme_grids").items()) {
            scheme_from_string(k);  // reject unknown scheme keys up front
            c.scheme_grids[k] = v;
        }
    if (j.contains("power")) {
        const json& p = j.at("power");
        detail::read_into(p, "xi", c.power.xi);
        detail::read_into(p, "PS_dBW", c.power.ps_dbw);
        detail::read_into(p, "PD_dBm", c.power.pd_dbm);
        detail::read_into(p, "PE_dBm", c.power.pe_dbm);
    }
    detail::read_into(j, "trials", c.trials);
    detail::read_into(j, "seed", c.seed);
    detail::read_into(j, "threads", c.threads);
    detail::read_into(j, "out_dir", c.out_dir);
    if (c.trials < 1) throw std::invalid_argument("config: trials >= 1");
    if (c.grid.rho.empty() || c.grid.p_db.empty() || c.grid.m_elements.empty() ||
        c.grid.t_uses.empty() || c.grid.n_subsurfaces.empty() || c.grid.psi.empty())
        throw std::invalid_argument("config: grid axes must be non-empty");
    return c;
}

inline json config_to_json(const ExperimentConfig& c) {
    json j;
    j["mode"] = to_string(c.mode);
    json schemes = json::array();
    for (Scheme s : c.schemes) schemes.push_back(irslab::to_string(s));
    j["schemes"] = schemes;
    j["grid"] = detail::grid_to_json(c.grid);
    if (!c.scheme_grids.empty()) {
        json sg;
        for (const auto& [k, v] : c.scheme_grids) sg[k] = v;
        j["scheme_grids"] = sg;
    }
    j["power"] = {{"xi", c.power.xi},
                  {"PS_dBW", c.power.ps_dbw},
                  {"PD_dBm", c.power.pd_dbm},
                  {"PE_dBm", c.power.pe_dbm}};
    j["trials"] = c.trials;
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    j["out_dir"] = c.out_dir;
    return j;
}

// Grid seen by one scheme: the shared grid with that scheme's overrides.
inline Grid effective_grid(const ExperimentConfig& c, Scheme s) {
    auto it = c.scheme_grids.find(irslab::to_string(s));
    if (it == c.scheme_grids.end()) return c.grid;
    return detail::grid_from_json(it->second, c.grid);
}

}  // namespace irslab::config
