#ifndef ECOSMPC_CONTROLLER_HPP
#define ECOSMPC_CONTROLLER_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "ecosmpc/driver.hpp"
#include "ecosmpc/dynamics.hpp"
#include "ecosmpc/signal.hpp"

namespace ecosmpc {

struct CostWeights {
    double c1{1.0};    // fuel per distance
    double c3{0.25};   // target-velocity tracking
    double c4{0.5};    // control-effort base weight
    double alpha{0.4}; // effort discount rate over the horizon
    double k2{30.0};   // spacing weight gain, c2(d) = k2 / max(d, d_floor)^2
    double d_floor{1.0};
    double S0{10.0};    // critical distance (m)
    double t_hd{1.0};   // headway time (s)
    double v_eps{0.1};  // guards the fuel-per-distance denominator at rest
    double velocity_penalty{1.0e3};      // quadratic penalty outside [v_min, v_max]
    double red_crossing_penalty{2.0e2};  // quadratic penalty past a red stop line
};

// Predecessor trajectory over the horizon, from V2V state exchange.
struct NeighborInfo {
    bool present{false};
    std::vector<double> s;  // length M
    std::vector<double> v;  // length M
};

inline NeighborInfo predict_neighbor(const VehicleState& observed, std::size_t horizon,
                                     double dt) {
    if (!std::isfinite(observed.s) || !std::isfinite(observed.v))
        throw std::invalid_argument("predict_neighbor: non-finite predecessor state");
    NeighborInfo info;
    info.present = true;
    info.s.resize(horizon);
    info.v.resize(horizon);
    double s = observed.s;
    for (std::size_t t = 0; t < horizon; ++t) {
        info.s[t] = s;
        info.v[t] = observed.v;
        s += dt * observed.v;
    }
    return info;
}

inline NeighborInfo no_neighbor() { return {}; }

struct ControlPlan {
    std::vector<double> u;  // commanded accelerations, length M
    double objective{0.0};
    std::size_t scenario_count{0};
    std::size_t iterations{0};  // coordinate-descent sweeps
    bool converged{true};
};

// Upcoming stop line, used to keep predicted trajectories from running
// a red. Optional: tests of the bare cost pass none.
struct StopLineInfo {
    double position{0.0};
    std::size_t intersection{0};
    const SignalSchedule* schedule{nullptr};
    double now{0.0};  // absolute time of the first stage
};

inline double stage_cost(const VehicleState& state, double u_f, const NeighborInfo& neighbor,
                         double v_target, const CostWeights& w, std::size_t t_offset,
                         const FuelParams& fuel, const VehicleParams& params) {
    const double v = state.v;
    double cost = w.c1 * fuel_rate(std::max(v, 0.0), u_f, params, fuel) / (v + w.v_eps);
    if (neighbor.present) {
        const double sj = neighbor.s[t_offset];
        const double vj = neighbor.v[t_offset];
        const double gap = sj - state.s;
        const double r = w.S0 + w.t_hd * (v - vj) + (state.s - sj);
        const double d = std::max(gap, w.d_floor);
        cost += (w.k2 / (d * d)) * r * r;
    }
    const double dv = v - v_target;
    cost += w.c3 * dv * dv;
    cost += (w.c4 / (1.0 + w.alpha * static_cast<double>(t_offset))) * u_f * u_f;
    return cost;
}

// One error path's worth of rollout: saturate u + w like the plant,
// integrate, accumulate stage costs plus the velocity-bound and
// red-crossing penalties.
inline double rollout_cost(const std::vector<double>& u, const std::vector<double>& errors,
                           const VehicleState& initial, const NeighborInfo& neighbor,
                           double v_target, const CostWeights& w, const VehicleParams& params,
                           const FuelParams& fuel, double dt,
                           const StopLineInfo* stop_line = nullptr) {
    const std::size_t horizon = u.size();
    const double drag_k = (0.5 / params.mass) * params.drag_coeff * params.air_density *
                          params.frontal_area;
    const double roll = params.rolling_coeff * params.gravity + params.gravity * params.grade;

    VehicleState x = initial;
    double cost = 0.0;
    for (std::size_t t = 0; t < horizon; ++t) {
        const double u_f = std::clamp(u[t] + errors[t], params.u_min, params.u_max);
        cost += stage_cost(x, u_f, neighbor, v_target, w, t, fuel, params);

        const double v_next = x.v + dt * (-drag_k * x.v * x.v - roll + u_f);
        if (v_next > params.v_max) {
            const double e = v_next - params.v_max;
            cost += w.velocity_penalty * e * e;
        } else if (v_next < params.v_min) {
            const double e = params.v_min - v_next;
            cost += w.velocity_penalty * e * e;
        }
        x.s += dt * x.v;
        x.v = std::clamp(v_next, params.v_min, params.v_max);

        if (stop_line && x.s > stop_line->position) {
            const double when = stop_line->now + dt * static_cast<double>(t + 1);
            const auto& wins = stop_line->schedule->windows[stop_line->intersection];
            if (!wins.empty() && when < wins.back().end &&
                phase_at(*stop_line->schedule, stop_line->intersection, when) == Phase::red) {
                const double over = x.s - stop_line->position;
                cost += w.red_crossing_penalty * over * over;
            }
        }
    }
    return cost;
}

// Error paths with renormalized weights; the common currency between
// the sampled scenario tree and the deterministic baselines.
struct ScenarioBundle {
    std::vector<std::vector<double>> errors;  // per scenario, length M
    std::vector<double> weights;              // sum to 1
};

inline ScenarioBundle to_bundle(const ScenarioSet& set, const std::vector<double>& support,
                                std::size_t horizon) {
    ScenarioBundle bundle;
    const double total = set.total_probability();
    if (total <= 0.0) throw std::invalid_argument("to_bundle: zero total probability");
    for (const auto& sc : set.scenarios) {
        if (sc.path.size() < horizon)
            throw std::invalid_argument("to_bundle: scenario shorter than horizon");
        // path[0] is the root: the driver error measured for the current
        // step, which u(0) meets directly. Later controls meet sampled
        // transitions.
        std::vector<double> errs(horizon);
        for (std::size_t t = 0; t < horizon; ++t) errs[t] = support[sc.path[t]];
        bundle.errors.push_back(std::move(errs));
        bundle.weights.push_back(sc.probability / total);
    }
    return bundle;
}

inline ScenarioBundle single_path_bundle(std::vector<double> errors) {
    ScenarioBundle bundle;
    bundle.errors.push_back(std::move(errors));
    bundle.weights.push_back(1.0);
    return bundle;
}

inline double bundle_objective(const std::vector<double>& u, const ScenarioBundle& bundle,
                               const VehicleState& state, const NeighborInfo& neighbor,
                               double v_target, const CostWeights& w,
                               const VehicleParams& params, const FuelParams& fuel, double dt,
                               const StopLineInfo* stop_line = nullptr) {
    double total = 0.0;
    for (std::size_t l = 0; l < bundle.errors.size(); ++l)
        total += bundle.weights[l] * rollout_cost(u, bundle.errors[l], state, neighbor,
                                                  v_target, w, params, fuel, dt, stop_line);
    return total;
}

// Expected cost of a control plan over the pruned scenario set, with
// probabilities renormalized over the retained paths.
inline double scenario_objective(const ControlPlan& plan, const ScenarioSet& scenarios,
                                 const std::vector<double>& support, const VehicleState& state,
                                 const NeighborInfo& neighbor, double v_target,
                                 const CostWeights& w, const VehicleParams& params,
                                 const FuelParams& fuel, double dt,
                                 const StopLineInfo* stop_line = nullptr) {
    const ScenarioBundle bundle = to_bundle(scenarios, support, plan.u.size());
    return bundle_objective(plan.u, bundle, state, neighbor, v_target, w, params, fuel, dt,
                            stop_line);
}

struct SolverSettings {
    std::size_t max_sweeps{200};
    double tolerance{1e-6};
    double initial_step{0.5};
    double min_step{1e-4};
};

// Derivative-free coordinate descent with a shrinking step over the
// M commanded accelerations. The fuel model's braking switch makes the
// objective nonsmooth, so no gradients are assumed.
inline ControlPlan solve_plan(const ScenarioBundle& bundle, const VehicleState& state,
                              const NeighborInfo& neighbor, double v_target,
                              const CostWeights& w, const VehicleParams& params,
                              const FuelParams& fuel, double dt, std::size_t horizon,
                              const SolverSettings& settings = {},
                              const std::optional<ControlPlan>& warm_start = std::nullopt,
                              const StopLineInfo* stop_line = nullptr) {
    if (bundle.errors.empty()) throw std::invalid_argument("solve_plan: empty scenario set");

    std::vector<double> u(horizon, 0.0);
    if (warm_start && !warm_start->u.empty()) {
        // Shift the previous solution by one step, repeating the tail.
        for (std::size_t t = 0; t < horizon; ++t) {
            const std::size_t src = std::min(t + 1, warm_start->u.size() - 1);
            u[t] = std::clamp(warm_start->u[src], params.u_min, params.u_max);
        }
    }

    auto objective = [&](const std::vector<double>& cand) {
        return bundle_objective(cand, bundle, state, neighbor, v_target, w, params, fuel, dt,
                                stop_line);
    };

    double f = objective(u);
    double step = settings.initial_step;
    std::size_t sweeps = 0;
    while (sweeps < settings.max_sweeps) {
        ++sweeps;
        const double f_before = f;
        for (std::size_t t = 0; t < horizon; ++t) {
            const double saved = u[t];
            double best_u = saved;
            double best_f = f;
            for (const double delta : {step, -step}) {
                const double cand = std::clamp(saved + delta, params.u_min, params.u_max);
                if (cand == saved) continue;
                u[t] = cand;
                const double fc = objective(u);
                if (fc < best_f) {
                    best_f = fc;
                    best_u = cand;
                }
            }
            u[t] = best_u;
            f = best_f;
        }
        if (f_before - f < settings.tolerance) {
            step *= 0.5;
            if (step < settings.min_step) break;
        }
    }

    ControlPlan plan;
    plan.u = std::move(u);
    plan.objective = f;
    plan.scenario_count = bundle.errors.size();
    plan.iterations = sweeps;
    plan.converged = sweeps < settings.max_sweeps;
    return plan;
}

// Scenario-tree stochastic MPC step: minimize the renormalized expected
// cost over one commanded control sequence shared across all scenarios.
inline ControlPlan solve_smpc(const VehicleState& state, const ScenarioSet& scenarios,
                              const std::vector<double>& support, const NeighborInfo& neighbor,
                              double v_target, const CostWeights& w,
                              const VehicleParams& params, const FuelParams& fuel, double dt,
                              std::size_t horizon, const SolverSettings& settings = {},
                              const std::optional<ControlPlan>& warm_start = std::nullopt,
                              const StopLineInfo* stop_line = nullptr,
                              std::optional<double> measured_error = std::nullopt) {
    if (scenarios.scenarios.empty())
        throw std::invalid_argument("solve_smpc: empty scenario set");
    ScenarioBundle bundle = to_bundle(scenarios, support, horizon);
    // The root node is the driver error already measured for this step;
    // when the exact value is available it replaces the quantized support
    // point so u(0) is planned against the true disturbance.
    if (measured_error)
        for (auto& errs : bundle.errors) errs[0] = *measured_error;
    return solve_plan(bundle, state, neighbor, v_target, w, params, fuel, dt, horizon,
                      settings, warm_start, stop_line);
}

}  // namespace ecosmpc

#endif  // ECOSMPC_CONTROLLER_HPP
