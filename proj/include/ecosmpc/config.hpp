#ifndef ECOSMPC_CONFIG_HPP
#define ECOSMPC_CONFIG_HPP

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ecosmpc/harness.hpp"

namespace ecosmpc {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace toml {

// Minimal TOML reader covering the config surface used here: [section]
// headers, key = value pairs, numbers, booleans, quoted strings, and
// (possibly nested, possibly multi-line) arrays. Parsed values are
// returned as a two-level JSON object {section: {key: value}}.

inline std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_string = !in_string;
        if (line[i] == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline nlohmann::json parse_value(const std::string& raw, const std::string& context);

inline nlohmann::json parse_array(const std::string& raw, const std::string& context) {
    nlohmann::json arr = nlohmann::json::array();
    std::size_t depth = 0;
    bool in_string = false;
    std::string current;
    for (std::size_t i = 1; i + 1 <= raw.size(); ++i) {
        const char c = raw[i];
        const bool last = (i + 1 == raw.size());
        if (c == '"') in_string = !in_string;
        if (!in_string) {
            if (c == '[') ++depth;
            if (c == ']' && !last) --depth;
        }
        if ((c == ',' && depth == 0 && !in_string) || last) {
            const std::string item = trim(current);
            if (!item.empty()) arr.push_back(parse_value(item, context));
            current.clear();
        } else {
            current += c;
        }
    }
    return arr;
}

inline nlohmann::json parse_value(const std::string& raw, const std::string& context) {
    const std::string v = trim(raw);
    if (v.empty()) throw ConfigError("empty value for " + context);
    if (v.front() == '[') {
        if (v.back() != ']') throw ConfigError("unterminated array for " + context);
        return parse_array(v, context);
    }
    if (v.front() == '"') {
        if (v.size() < 2 || v.back() != '"')
            throw ConfigError("unterminated string for " + context);
        return v.substr(1, v.size() - 2);
    }
    if (v == "true") return true;
    if (v == "false") return false;
    try {
        std::size_t pos = 0;
        if (v.find_first_of(".eE") == std::string::npos ||
            (v.size() > 1 && (v.substr(0, 2) == "0x"))) {
            const long long i = std::stoll(v, &pos);
            if (pos == v.size()) return i;
        }
        const double d = std::stod(v, &pos);
        if (pos == v.size()) return d;
    } catch (const std::exception&) {
    }
    throw ConfigError("cannot parse value '" + v + "' for " + context);
}

inline nlohmann::json parse(std::istream& is) {
    nlohmann::json doc = nlohmann::json::object();
    std::string section;
    std::string line;
    while (std::getline(is, line)) {
        std::string text = trim(strip_comment(line));
        if (text.empty()) continue;
        if (text.front() == '[' && text.back() == ']' &&
            text.find('=') == std::string::npos) {
            section = trim(text.substr(1, text.size() - 2));
            if (section.empty()) throw ConfigError("empty section header");
            doc[section] = nlohmann::json::object();
            continue;
        }
        const std::size_t eq = text.find('=');
        if (eq == std::string::npos) throw ConfigError("expected key = value, got: " + text);
        const std::string key = trim(text.substr(0, eq));
        std::string value = trim(text.substr(eq + 1));
        // Multi-line array: read until brackets balance.
        if (!value.empty() && value.front() == '[') {
            auto balance = [](const std::string& s) {
                long b = 0;
                bool q = false;
                for (char c : s) {
                    if (c == '"') q = !q;
                    if (q) continue;
                    if (c == '[') ++b;
                    if (c == ']') --b;
                }
                return b;
            };
            while (balance(value) != 0 && std::getline(is, line))
                value += " " + trim(strip_comment(line));
        }
        const std::string context =
            section.empty() ? key : section + "." + key;
        if (section.empty())
            doc[key] = parse_value(value, context);
        else
            doc[section][key] = parse_value(value, context);
    }
    return doc;
}

inline nlohmann::json parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    return parse(in);
}

}  // namespace toml

namespace detail {

template <typename T>
T require(const nlohmann::json& section, const std::string& sec_name, const std::string& key) {
    if (!section.contains(key))
        throw ConfigError("missing required field " + sec_name + "." + key);
    try {
        return section.at(key).get<T>();
    } catch (const std::exception&) {
        throw ConfigError("bad type for field " + sec_name + "." + key);
    }
}

template <typename T>
T optional(const nlohmann::json& section, const std::string& sec_name, const std::string& key,
           T fallback) {
    if (!section.contains(key)) return fallback;
    try {
        return section.at(key).get<T>();
    } catch (const std::exception&) {
        throw ConfigError("bad type for field " + sec_name + "." + key);
    }
}

}  // namespace detail

inline SimConfig config_from_toml(const nlohmann::json& doc) {
    using detail::optional;
    using detail::require;
    for (const char* sec : {"sim", "vehicles", "signals", "driver", "weights", "solver"})
        if (!doc.contains(sec)) throw ConfigError(std::string("missing section [") + sec + "]");

    const auto& sim = doc.at("sim");
    const auto& veh = doc.at("vehicles");
    const auto& sig = doc.at("signals");
    const auto& drv = doc.at("driver");
    const auto& wts = doc.at("weights");
    const auto& sol = doc.at("solver");

    SimConfig cfg;
    cfg.dt = optional(sim, "sim", "dt", 0.5);
    cfg.horizon_T = optional(sim, "sim", "horizon_s", 5.0);
    cfg.total_time = optional(sim, "sim", "total_time_s", 400.0);
    cfg.master_seed = static_cast<std::uint64_t>(
        optional<long long>(sim, "sim", "seed", 1));
    cfg.monte_carlo_runs = static_cast<std::size_t>(
        optional<long long>(sim, "sim", "monte_carlo_runs", 30));
    if (sim.contains("schedule_seed"))
        cfg.schedule_seed = static_cast<std::uint64_t>(sim.at("schedule_seed").get<long long>());

    const auto pos = require<std::vector<double>>(veh, "vehicles", "initial_positions");
    const auto vel = require<std::vector<double>>(veh, "vehicles", "initial_velocities");
    const auto ctrls = require<std::vector<std::string>>(veh, "vehicles", "controllers");
    if (pos.size() != vel.size() || pos.size() != ctrls.size())
        throw ConfigError("vehicles: initial_positions, initial_velocities, controllers "
                          "must have equal lengths");
    if (pos.empty()) throw ConfigError("vehicles: controllers list is empty");
    cfg.n_vehicles = pos.size();
    cfg.initial_states.clear();
    for (std::size_t i = 0; i < pos.size(); ++i) cfg.initial_states.push_back({pos[i], vel[i]});
    cfg.kinds.clear();
    for (const auto& c : ctrls) {
        try {
            cfg.kinds.push_back(controller_kind_from_string(c));
        } catch (const std::exception& e) {
            throw ConfigError(std::string("vehicles.controllers: ") + e.what());
        }
    }

    cfg.vehicle.mass = optional(veh, "vehicles", "mass", 1200.0);
    cfg.vehicle.frontal_area = optional(veh, "vehicles", "frontal_area", 2.5);
    cfg.vehicle.drag_coeff = optional(veh, "vehicles", "drag_coeff", 0.32);
    cfg.vehicle.air_density = optional(veh, "vehicles", "air_density", 1.184);
    cfg.vehicle.rolling_coeff = optional(veh, "vehicles", "rolling_coeff", 0.015);
    cfg.vehicle.grade = optional(veh, "vehicles", "grade", 0.0);
    cfg.vehicle.gravity = optional(veh, "vehicles", "gravity", 9.8);
    cfg.vehicle.u_min = optional(veh, "vehicles", "u_min", -3.0);
    cfg.vehicle.u_max = optional(veh, "vehicles", "u_max", 2.0);
    cfg.vehicle.v_min = optional(veh, "vehicles", "v_min", 0.0);
    cfg.vehicle.v_max = optional(veh, "vehicles", "v_max", 20.0);

    const auto fb = optional<std::vector<double>>(veh, "vehicles", "fuel_b",
                                                  {0.1569, 2.450e-2, -7.415e-4, 5.975e-5});
    const auto fc = optional<std::vector<double>>(veh, "vehicles", "fuel_c",
                                                  {0.07224, 9.681e-2, 1.075e-3});
    if (fb.size() != 4) throw ConfigError("vehicles.fuel_b must have 4 entries");
    if (fc.size() != 3) throw ConfigError("vehicles.fuel_c must have 3 entries");
    cfg.fuel = {fb[0], fb[1], fb[2], fb[3], fc[0], fc[1], fc[2],
                optional(veh, "vehicles", "fuel_idle_rate", 0.1)};

    cfg.signal_spacing = optional(sig, "signals", "spacing_m", 500.0);
    const auto rr = optional<std::vector<double>>(sig, "signals", "red_range_s", {37.0, 43.0});
    const auto gr = optional<std::vector<double>>(sig, "signals", "green_range_s", {12.0, 17.0});
    if (rr.size() != 2 || gr.size() != 2)
        throw ConfigError("signals: red_range_s and green_range_s must have 2 entries");
    cfg.red_range = {rr[0], rr[1]};
    cfg.green_range = {gr[0], gr[1]};
    cfg.green_lookahead = static_cast<int>(
        optional<long long>(sig, "signals", "green_lookahead", 3));

    cfg.driver.support = require<std::vector<double>>(drv, "driver", "support");
    cfg.driver.transition =
        require<std::vector<std::vector<double>>>(drv, "driver", "transition");
    cfg.driver.jitter_halfwidth = optional(drv, "driver", "jitter_halfwidth", 0.0);
    try {
        cfg.driver.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("driver: ") + e.what());
    }

    cfg.weights.c1 = optional(wts, "weights", "c1", 1.0);
    cfg.weights.c3 = optional(wts, "weights", "c3", 0.12);
    cfg.weights.c4 = optional(wts, "weights", "c4", 0.5);
    cfg.weights.alpha = optional(wts, "weights", "alpha", 0.4);
    cfg.weights.k2 = optional(wts, "weights", "k2", 10.0);
    cfg.weights.d_floor = optional(wts, "weights", "d_floor", 1.0);
    cfg.weights.S0 = optional(wts, "weights", "s0", 5.0);
    cfg.weights.t_hd = optional(wts, "weights", "t_hd", 1.0);
    cfg.weights.v_eps = optional(wts, "weights", "v_eps", 0.1);
    cfg.weights.velocity_penalty = optional(wts, "weights", "velocity_penalty", 1.0e3);
    cfg.weights.red_crossing_penalty =
        optional(wts, "weights", "red_crossing_penalty", 2.0e2);

    cfg.solver.max_sweeps = static_cast<std::size_t>(
        optional<long long>(sol, "solver", "max_sweeps", 200));
    cfg.solver.tolerance = optional(sol, "solver", "tolerance", 1e-6);
    cfg.solver.initial_step = optional(sol, "solver", "initial_step", 0.5);
    cfg.solver.min_step = optional(sol, "solver", "min_step", 1e-4);
    cfg.scenario_max_samples = static_cast<std::size_t>(
        optional<long long>(sol, "solver", "scenario_max_samples", 200));
    cfg.scenario_threshold = optional(sol, "solver", "scenario_threshold", 1e-4);

    try {
        cfg.validate();
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

inline SimConfig load_config(const std::string& path) {
    return config_from_toml(toml::parse_file(path));
}

// Snapshot of the resolved run inputs; written next to every output so
// artifacts are reproducible from (config, seed).
inline nlohmann::json run_manifest(const SimConfig& cfg, std::uint64_t seed,
                                   const std::vector<std::string>& outputs) {
    nlohmann::json j;
    j["seed"] = seed;
    j["outputs"] = outputs;
    j["sim"] = {{"n_vehicles", cfg.n_vehicles},
                {"dt", cfg.dt},
                {"horizon_s", cfg.horizon_T},
                {"total_time_s", cfg.total_time},
                {"monte_carlo_runs", cfg.monte_carlo_runs}};
    j["signals"] = {{"spacing_m", cfg.signal_spacing},
                    {"red_range_s", {cfg.red_range.lo, cfg.red_range.hi}},
                    {"green_range_s", {cfg.green_range.lo, cfg.green_range.hi}},
                    {"green_lookahead", cfg.green_lookahead}};
    j["driver"] = {{"support", cfg.driver.support},
                   {"transition", cfg.driver.transition},
                   {"jitter_halfwidth", cfg.driver.jitter_halfwidth}};
    j["weights"] = {{"c1", cfg.weights.c1},       {"c3", cfg.weights.c3},
                    {"c4", cfg.weights.c4},       {"alpha", cfg.weights.alpha},
                    {"k2", cfg.weights.k2},       {"d_floor", cfg.weights.d_floor},
                    {"s0", cfg.weights.S0},       {"t_hd", cfg.weights.t_hd},
                    {"v_eps", cfg.weights.v_eps},
                    {"velocity_penalty", cfg.weights.velocity_penalty},
                    {"red_crossing_penalty", cfg.weights.red_crossing_penalty}};
    j["solver"] = {{"max_sweeps", cfg.solver.max_sweeps},
                   {"tolerance", cfg.solver.tolerance},
                   {"initial_step", cfg.solver.initial_step},
                   {"min_step", cfg.solver.min_step},
                   {"scenario_max_samples", cfg.scenario_max_samples},
                   {"scenario_threshold", cfg.scenario_threshold}};
    std::vector<std::string> kinds;
    for (auto k : cfg.kinds) kinds.emplace_back(to_string(k));
    j["controllers"] = kinds;
    return j;
}

}  // namespace ecosmpc

#endif  // ECOSMPC_CONFIG_HPP
