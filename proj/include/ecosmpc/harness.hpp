#ifndef ECOSMPC_HARNESS_HPP
#define ECOSMPC_HARNESS_HPP

#include <cmath>
#include <cstdint>
#include <cstddef>
#include <future>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ecosmpc/baselines.hpp"
#include "ecosmpc/controller.hpp"
#include "ecosmpc/driver.hpp"
#include "ecosmpc/dynamics.hpp"
#include "ecosmpc/signal.hpp"

namespace ecosmpc {

// splitmix64; used to derive independent seed streams from one master seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

struct SimConfig {
    std::size_t n_vehicles{3};
    std::vector<VehicleState> initial_states;  // front vehicle first
    double dt{0.5};
    double horizon_T{5.0};
    double total_time{400.0};
    double signal_spacing{500.0};
    UniformRange red_range{37.0, 43.0};
    UniformRange green_range{12.0, 17.0};
    int green_lookahead{3};
    VehicleParams vehicle;
    FuelParams fuel;
    std::vector<ControllerKind> kinds;  // one per vehicle
    DriverErrorModel driver;
    CostWeights weights;
    SolverSettings solver;
    std::size_t scenario_max_samples{200};  // N_max
    double scenario_threshold{1e-4};        // p_th
    std::uint64_t master_seed{1};
    std::size_t monte_carlo_runs{30};
    // When set, every run reuses this schedule seed so controller kinds
    // are compared against identical light realizations.
    std::optional<std::uint64_t> schedule_seed;

    std::size_t horizon_steps() const {
        return static_cast<std::size_t>(std::llround(horizon_T / dt));
    }
    std::size_t total_steps() const {
        return static_cast<std::size_t>(std::llround(total_time / dt));
    }

    void validate() const {
        if (n_vehicles < 1) throw std::invalid_argument("config: need at least one vehicle");
        if (!(dt > 0.0)) throw std::invalid_argument("config: dt must be positive");
        const double m = horizon_T / dt;
        if (std::abs(m - std::llround(m)) > 1e-9 || horizon_steps() < 1)
            throw std::invalid_argument("config: horizon must be an integral number of steps");
        if (initial_states.size() != n_vehicles)
            throw std::invalid_argument("config: initial state count != n_vehicles");
        if (kinds.size() != n_vehicles)
            throw std::invalid_argument("config: controller kind count != n_vehicles");
        for (std::size_t i = 1; i < initial_states.size(); ++i)
            if (initial_states[i - 1].s - initial_states[i].s <= weights.S0)
                throw std::invalid_argument("config: initial spacing must exceed S0");
        if (!vehicle.valid()) throw std::invalid_argument("config: invalid vehicle params");
        if (signal_spacing < 0.0) throw std::invalid_argument("config: negative signal spacing");
        driver.validate();
        if (scenario_max_samples < 1) throw std::invalid_argument("config: N_max must be >= 1");
        if (scenario_threshold < 0.0 || scenario_threshold >= 1.0)
            throw std::invalid_argument("config: p_th outside [0,1)");
    }
};

inline SimConfig default_config() {
    SimConfig cfg;
    cfg.initial_states = {{0.0, 10.0}, {-20.0, 10.0}, {-40.0, 10.0}};
    cfg.kinds = {ControllerKind::ScenarioSmpc, ControllerKind::ScenarioSmpc,
                 ControllerKind::ScenarioSmpc};
    cfg.driver = default_transition_model({-0.3, -0.15, 0.0, 0.15, 0.3}, 0.075);
    return cfg;
}

struct StepRecord {
    double time{0.0};
    double s{0.0};
    double v{0.0};
    double u_commanded{0.0};
    double w_realized{0.0};
    double u_f{0.0};
    double fuel_rate{0.0};
    double v_target{0.0};
    Phase upcoming_phase{Phase::green};
    bool has_upcoming{false};
};

struct VehicleSummary {
    ControllerKind kind{ControllerKind::ScenarioSmpc};
    double fuel_ml{0.0};
    double distance_m{0.0};
    double mpg{0.0};
    double idle_s{0.0};
    double min_spacing_m{0.0};  // infinity for the lead vehicle
    std::size_t red_violations{0};
    std::size_t velocity_clamps{0};
    std::size_t green_crossings{0};
};

struct TrajectoryLog {
    std::vector<std::vector<StepRecord>> steps;  // [vehicle][step]
    std::vector<VehicleSummary> summaries;
    SignalSchedule schedule;
    std::uint64_t seed{0};
};

struct GuardResult {
    VehicleState state;
    bool clamped{false};
};

// Clamp a plant step that would carry the vehicle across a red stop
// line: hold it at the line with zero velocity. Phase is evaluated at
// the crossing instant, so a light turning green mid-step is a pass.
inline GuardResult stop_line_guard(const VehicleState& before, const VehicleState& after,
                                   double line, const SignalSchedule& sched,
                                   std::size_t intersection, double step_start_time,
                                   double dt) {
    GuardResult out{after, false};
    if (!(before.s < line && after.s > line)) return out;
    const double frac = (line - before.s) / (after.s - before.s);
    const double t_cross = step_start_time + dt * frac;
    if (phase_at(sched, intersection, t_cross) == Phase::red) {
        out.state = {line, 0.0};
        out.clamped = true;
    }
    return out;
}

namespace detail {

// First stop line at or ahead of position s, if any.
inline std::optional<std::size_t> upcoming_signal(const SignalSchedule& sched, double s) {
    for (std::size_t q = 0; q < sched.positions.size(); ++q)
        if (sched.positions[q] >= s) return q;
    return std::nullopt;
}

}  // namespace detail

inline TrajectoryLog run_simulation(const SimConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const std::size_t n = cfg.n_vehicles;
    const std::size_t horizon = cfg.horizon_steps();
    const std::size_t steps = cfg.total_steps();

    // One schedule stream, distinct from every driver-error stream, so
    // the same seed shows every controller kind the same lights.
    std::mt19937_64 schedule_rng(cfg.schedule_seed ? *cfg.schedule_seed
                                                   : derive_seed(seed, 0));
    const double max_reach = cfg.initial_states.front().s +
                             cfg.total_time * cfg.vehicle.v_max + cfg.signal_spacing;
    std::vector<double> positions;
    if (cfg.signal_spacing > 0.0)
        for (double p = cfg.signal_spacing; p <= max_reach; p += cfg.signal_spacing)
            positions.push_back(p);
    const double sched_horizon = cfg.total_time + cfg.horizon_T + 150.0;

    TrajectoryLog log;
    log.seed = seed;
    log.schedule = generate_schedule(positions, cfg.red_range, cfg.green_range, sched_horizon,
                                     schedule_rng);
    log.steps.assign(n, {});
    log.summaries.assign(n, {});

    std::vector<VehicleState> states = cfg.initial_states;
    std::vector<std::mt19937_64> plant_rng;
    std::vector<std::uint64_t> scenario_rng;
    std::vector<std::size_t> chain_state(n, cfg.driver.quantize(0.0));
    std::vector<std::optional<ControlPlan>> warm(n);
    for (std::size_t i = 0; i < n; ++i) {
        plant_rng.emplace_back(derive_seed(seed, 1000 + i));
        scenario_rng.emplace_back(derive_seed(seed, 2000 + i));
        log.steps[i].reserve(steps);
        log.summaries[i].kind = cfg.kinds[i];
        log.summaries[i].min_spacing_m = std::numeric_limits<double>::infinity();
    }

    for (std::size_t k = 0; k < steps; ++k) {
        const double now = static_cast<double>(k) * cfg.dt;
        const std::vector<VehicleState> snapshot = states;  // synchronous V2V exchange

        for (std::size_t i = 0; i < n; ++i) {
            const VehicleState& x = snapshot[i];
            const NeighborInfo neighbor =
                i > 0 ? predict_neighbor(snapshot[i - 1], horizon, cfg.dt) : no_neighbor();

            const auto q = detail::upcoming_signal(log.schedule, x.s);
            double v_target = cfg.vehicle.v_max;
            StopLineInfo stop_line;
            const StopLineInfo* sl = nullptr;
            Phase upcoming_phase = Phase::green;
            if (q) {
                SpatQuery query{x.s, now, *q, log.schedule.positions[*q] - x.s};
                v_target = target_velocity(query, log.schedule, cfg.vehicle.v_min,
                                           cfg.vehicle.v_max, cfg.green_lookahead);
                upcoming_phase = phase_at(log.schedule, *q, now);
                stop_line = {log.schedule.positions[*q], *q, &log.schedule, now};
                sl = &stop_line;
            }

            // The driver's error for this step is realized before the
            // assistance system issues its command, so controllers that model
            // the driver observe the current error as the scenario-tree root.
            // The passive baseline discards exactly this measurement.
            double w_realized = 0.0;
            if (plant_error_mode(cfg.kinds[i]) == PlantErrorMode::markov) {
                const SampledError e = sample_next_error(cfg.driver, chain_state[i],
                                                         plant_rng[i]);
                chain_state[i] = e.state;
                w_realized = e.value;
            }
            const std::size_t root = cfg.driver.quantize(w_realized);
            // Controllers observe the measurement only at support-point
            // resolution; the within-bin jitter stays unknown to them and is
            // felt only through the plant.
            const double w_measured = cfg.driver.support[root];

            ControlPlan plan;
            if (cfg.kinds[i] == ControllerKind::ScenarioSmpc) {
                // Common random numbers: the sampled tree depends only on the
                // quantized root state, so successive replans from the same
                // state see the same scenarios and the plan does not churn on
                // sampling noise.
                std::mt19937_64 tree_rng(derive_seed(scenario_rng[i], root));
                const ScenarioSet set = build_scenario_set(
                    cfg.driver, root, horizon,
                    cfg.scenario_max_samples, cfg.scenario_threshold, tree_rng);
                plan = solve_smpc(x, set, cfg.driver.support, neighbor, v_target, cfg.weights,
                                  cfg.vehicle, cfg.fuel, cfg.dt, horizon, cfg.solver, warm[i],
                                  sl, w_measured);
            } else {
                const auto assumed = assumed_error_sequence(cfg.kinds[i], cfg.driver, root,
                                                            w_measured, horizon);
                plan = solve_deterministic(x, assumed, neighbor, v_target, cfg.weights,
                                           cfg.vehicle, cfg.fuel, cfg.dt, cfg.solver, warm[i],
                                           sl);
            }
            const double u_cmd = plan.u.front();
            warm[i] = plan;

            const double u_f = std::clamp(u_cmd + w_realized, cfg.vehicle.u_min,
                                          cfg.vehicle.u_max);

            const double rate = fuel_rate(x.v, u_f, cfg.vehicle, cfg.fuel);
            VehicleState next = step_dynamics(x, u_f, cfg.vehicle, cfg.dt);

            if (q) {
                const double line = log.schedule.positions[*q];
                const GuardResult guard =
                    stop_line_guard(x, next, line, log.schedule, *q, now, cfg.dt);
                if (guard.clamped) {
                    ++log.summaries[i].red_violations;
                    next = guard.state;
                } else if (x.s < line && next.s > line) {
                    ++log.summaries[i].green_crossings;
                }
            }

            auto& sum = log.summaries[i];
            sum.fuel_ml += rate * cfg.dt;
            if (x.v < 0.1 && q && upcoming_phase == Phase::red) sum.idle_s += cfg.dt;

            StepRecord rec;
            rec.time = now;
            rec.s = x.s;
            rec.v = x.v;
            rec.u_commanded = u_cmd;
            rec.w_realized = w_realized;
            rec.u_f = u_f;
            rec.fuel_rate = rate;
            rec.v_target = v_target;
            rec.upcoming_phase = upcoming_phase;
            rec.has_upcoming = q.has_value();
            log.steps[i].push_back(rec);

            states[i] = next;
        }

        for (std::size_t i = 1; i < n; ++i) {
            const double spacing = states[i - 1].s - states[i].s;
            if (spacing < log.summaries[i].min_spacing_m)
                log.summaries[i].min_spacing_m = spacing;
        }
    }

    for (std::size_t i = 0; i < n; ++i) {
        auto& sum = log.summaries[i];
        sum.distance_m = states[i].s - cfg.initial_states[i].s;
        sum.mpg = sum.fuel_ml > 0.0 ? trip_mpg(sum.fuel_ml, sum.distance_m) : 0.0;
    }
    return log;
}

struct MonteCarloReport {
    struct Aggregate {
        double mean{0.0};
        double stddev{0.0};
        double min{0.0};
        double max{0.0};
    };
    std::vector<std::vector<double>> mpg;  // [run][vehicle]
    std::vector<Aggregate> per_vehicle;
    std::vector<VehicleSummary> last_run_summaries;
    std::vector<std::uint64_t> seeds;
};

inline MonteCarloReport monte_carlo(const SimConfig& cfg, std::size_t runs) {
    if (runs < 1) throw std::invalid_argument("monte_carlo: need at least one run");
    cfg.validate();

    std::vector<std::uint64_t> seeds(runs);
    for (std::size_t r = 0; r < runs; ++r) seeds[r] = derive_seed(cfg.master_seed, 100 + r);

    std::vector<std::future<TrajectoryLog>> futures;
    futures.reserve(runs);
    for (std::size_t r = 0; r < runs; ++r)
        futures.push_back(std::async(std::launch::async,
                                     [&cfg, s = seeds[r]] { return run_simulation(cfg, s); }));

    MonteCarloReport report;
    report.seeds = seeds;
    report.mpg.resize(runs);
    for (std::size_t r = 0; r < runs; ++r) {
        TrajectoryLog log = futures[r].get();
        for (const auto& sum : log.summaries) report.mpg[r].push_back(sum.mpg);
        if (r + 1 == runs) report.last_run_summaries = log.summaries;
    }

    report.per_vehicle.resize(cfg.n_vehicles);
    for (std::size_t i = 0; i < cfg.n_vehicles; ++i) {
        auto& agg = report.per_vehicle[i];
        agg.min = report.mpg[0][i];
        agg.max = report.mpg[0][i];
        double sum = 0.0;
        for (std::size_t r = 0; r < runs; ++r) {
            const double x = report.mpg[r][i];
            sum += x;
            agg.min = std::min(agg.min, x);
            agg.max = std::max(agg.max, x);
        }
        agg.mean = sum / static_cast<double>(runs);
        double var = 0.0;
        for (std::size_t r = 0; r < runs; ++r) {
            const double d = report.mpg[r][i] - agg.mean;
            var += d * d;
        }
        agg.stddev = runs > 1 ? std::sqrt(var / static_cast<double>(runs - 1)) : 0.0;
    }
    return report;
}

// One JSON object per vehicle-step.
inline void write_jsonl(const TrajectoryLog& log, std::ostream& os) {
    for (std::size_t i = 0; i < log.steps.size(); ++i) {
        for (const auto& rec : log.steps[i]) {
            nlohmann::json j{{"vehicle", i},
                             {"time", rec.time},
                             {"s", rec.s},
                             {"v", rec.v},
                             {"u_commanded", rec.u_commanded},
                             {"w_realized", rec.w_realized},
                             {"u_f", rec.u_f},
                             {"fuel_rate", rec.fuel_rate},
                             {"v_target", rec.v_target},
                             {"upcoming_phase",
                              rec.has_upcoming ? to_string(rec.upcoming_phase) : "none"}};
            os << j.dump() << '\n';
        }
    }
}

inline void write_summary_csv_header(std::ostream& os) {
    os << "run,vehicle,controller,mpg,fuel_ml,distance_m,idle_s,min_spacing_m,violations\n";
}

inline void write_summary_csv_rows(const TrajectoryLog& log, std::size_t run_index,
                                   std::ostream& os) {
    for (std::size_t i = 0; i < log.summaries.size(); ++i) {
        const auto& s = log.summaries[i];
        os << run_index << ',' << i << ',' << to_string(s.kind) << ',' << s.mpg << ','
           << s.fuel_ml << ',' << s.distance_m << ',' << s.idle_s << ','
           << (std::isfinite(s.min_spacing_m) ? s.min_spacing_m : -1.0) << ','
           << s.red_violations << '\n';
    }
}

}  // namespace ecosmpc

#endif  // ECOSMPC_HARNESS_HPP
