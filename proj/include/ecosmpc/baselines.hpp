#ifndef ECOSMPC_BASELINES_HPP
#define ECOSMPC_BASELINES_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "ecosmpc/controller.hpp"
#include "ecosmpc/driver.hpp"

namespace ecosmpc {

enum class ControllerKind { Ideal, Passive, CertaintyEquivalence, FrozenTime, ScenarioSmpc };

inline const char* to_string(ControllerKind k) {
    switch (k) {
        case ControllerKind::Ideal: return "ideal";
        case ControllerKind::Passive: return "passive";
        case ControllerKind::CertaintyEquivalence: return "certainty_equivalence";
        case ControllerKind::FrozenTime: return "frozen_time";
        case ControllerKind::ScenarioSmpc: return "scenario_smpc";
    }
    return "unknown";
}

inline ControllerKind controller_kind_from_string(const std::string& s) {
    if (s == "ideal") return ControllerKind::Ideal;
    if (s == "passive") return ControllerKind::Passive;
    if (s == "certainty_equivalence" || s == "ce") return ControllerKind::CertaintyEquivalence;
    if (s == "frozen_time" || s == "ft") return ControllerKind::FrozenTime;
    if (s == "scenario_smpc" || s == "proposed") return ControllerKind::ScenarioSmpc;
    throw std::invalid_argument("unknown controller kind: " + s);
}

enum class PlantErrorMode { zero, markov };

// Only the ideal case drives a perfect plant; every other controller
// faces the Markov error chain.
inline PlantErrorMode plant_error_mode(ControllerKind kind) {
    return kind == ControllerKind::Ideal ? PlantErrorMode::zero : PlantErrorMode::markov;
}

// Conditional mean error t steps ahead: E[w(k+t) | state] = W . (e_state Q^t),
// for t = 0..horizon-1. t = 0 is the measured current error itself, which
// u(0) meets directly.
inline std::vector<double> expected_error_sequence(const DriverErrorModel& model,
                                                   std::size_t current_state,
                                                   std::size_t horizon) {
    if (current_state >= model.size())
        throw std::invalid_argument("expected_error_sequence: state out of range");
    const std::size_t n = model.size();
    std::vector<double> dist(n, 0.0);
    dist[current_state] = 1.0;

    std::vector<double> seq(horizon, 0.0);
    for (std::size_t t = 0; t < horizon; ++t) {
        double mean = 0.0;
        for (std::size_t b = 0; b < n; ++b) mean += dist[b] * model.support[b];
        seq[t] = mean;
        std::vector<double> next(n, 0.0);
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b) next[b] += dist[a] * model.transition[a][b];
        dist = std::move(next);
    }
    return seq;
}

// Deterministic MPC step: the scenario machinery with one assumed error
// path of probability 1. Passive/Ideal assume all zeros, certainty
// equivalence the conditional mean sequence, frozen time the current
// error held constant.
inline ControlPlan solve_deterministic(const VehicleState& state,
                                       const std::vector<double>& assumed_errors,
                                       const NeighborInfo& neighbor, double v_target,
                                       const CostWeights& w, const VehicleParams& params,
                                       const FuelParams& fuel, double dt,
                                       const SolverSettings& settings = {},
                                       const std::optional<ControlPlan>& warm_start = std::nullopt,
                                       const StopLineInfo* stop_line = nullptr) {
    const std::size_t horizon = assumed_errors.size();
    if (horizon == 0) throw std::invalid_argument("solve_deterministic: empty error sequence");
    const ScenarioBundle bundle = single_path_bundle(assumed_errors);
    return solve_plan(bundle, state, neighbor, v_target, w, params, fuel, dt, horizon,
                      settings, warm_start, stop_line);
}

// Assumed error sequence for a deterministic controller kind.
inline std::vector<double> assumed_error_sequence(ControllerKind kind,
                                                  const DriverErrorModel& model,
                                                  std::size_t current_state,
                                                  double current_error, std::size_t horizon) {
    switch (kind) {
        case ControllerKind::Ideal:
        case ControllerKind::Passive:
            return std::vector<double>(horizon, 0.0);
        case ControllerKind::CertaintyEquivalence: {
            auto seq = expected_error_sequence(model, current_state, horizon);
            if (!seq.empty()) seq[0] = current_error;  // measured exactly
            return seq;
        }
        case ControllerKind::FrozenTime:
            return std::vector<double>(horizon, current_error);
        case ControllerKind::ScenarioSmpc:
            throw std::invalid_argument("scenario_smpc has no assumed deterministic sequence");
    }
    throw std::invalid_argument("unknown controller kind");
}

}  // namespace ecosmpc

#endif  // ECOSMPC_BASELINES_HPP
