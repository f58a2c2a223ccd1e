#ifndef ECOSMPC_SIGNAL_HPP
#define ECOSMPC_SIGNAL_HPP

#include <algorithm>
#include <cstddef>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace ecosmpc {

enum class Phase { red, green };

inline const char* to_string(Phase p) { return p == Phase::red ? "red" : "green"; }

// Half-open time window [start, end) with a fixed color.
struct PhaseWindow {
    double start{0.0};
    double end{0.0};
    Phase color{Phase::red};
};

struct UniformRange {
    double lo{0.0};
    double hi{0.0};
};

// Realized phase plan for a line of intersections. Cycles start red and
// alternate red/green; each cycle's durations are sampled once at
// generation time, so queries are replayable from the stored windows.
struct SignalSchedule {
    std::vector<double> positions;                   // stop-line positions (m)
    std::vector<std::vector<PhaseWindow>> windows;   // per intersection

    std::size_t num_intersections() const { return positions.size(); }

    double horizon_end(std::size_t intersection) const {
        const auto& w = windows.at(intersection);
        return w.empty() ? 0.0 : w.back().end;
    }
};

inline SignalSchedule generate_schedule(const std::vector<double>& positions,
                                        UniformRange red_s, UniformRange green_s,
                                        double time_horizon, std::mt19937_64& rng) {
    if (red_s.lo > red_s.hi || green_s.lo > green_s.hi || red_s.lo <= 0.0 || green_s.lo <= 0.0)
        throw std::invalid_argument("generate_schedule: bad duration ranges");
    SignalSchedule sched;
    sched.positions = positions;
    sched.windows.resize(positions.size());
    std::uniform_real_distribution<double> red_dist(red_s.lo, red_s.hi);
    std::uniform_real_distribution<double> green_dist(green_s.lo, green_s.hi);
    for (auto& wins : sched.windows) {
        double t = 0.0;
        while (t < time_horizon) {
            const double red_end = t + red_dist(rng);
            const double green_end = red_end + green_dist(rng);
            wins.push_back({t, red_end, Phase::red});
            wins.push_back({red_end, green_end, Phase::green});
            t = green_end;
        }
    }
    return sched;
}

// Fixed-duration schedule, handy for tests and the fixed-cycle fixtures.
inline SignalSchedule fixed_cycle_schedule(const std::vector<double>& positions,
                                           double t_red, double t_green,
                                           double time_horizon) {
    SignalSchedule sched;
    sched.positions = positions;
    sched.windows.resize(positions.size());
    for (auto& wins : sched.windows) {
        double t = 0.0;
        while (t < time_horizon) {
            const double red_end = t + t_red;
            const double green_end = red_end + t_green;
            wins.push_back({t, red_end, Phase::red});
            wins.push_back({red_end, green_end, Phase::green});
            t = green_end;
        }
    }
    return sched;
}

inline Phase phase_at(const SignalSchedule& sched, std::size_t intersection, double time) {
    const auto& wins = sched.windows.at(intersection);
    if (wins.empty() || time < wins.front().start || time >= wins.back().end)
        throw std::out_of_range("phase_at: time outside generated schedule");
    // Windows are contiguous and sorted; binary search on start.
    auto it = std::upper_bound(wins.begin(), wins.end(), time,
                               [](double t, const PhaseWindow& w) { return t < w.start; });
    return std::prev(it)->color;
}

struct SpatQuery {
    double s{0.0};               // vehicle position (m)
    double time{0.0};            // current time (s)
    std::size_t intersection{0};
    double distance{0.0};        // stop line minus vehicle position (m)
};

struct TargetVelocity {
    double v{0.0};
    int rule_case{0};     // 1: red, 2: green reachable at v_max, 3: next green
    bool clamped{false};
    bool feasible{true};  // false when the vehicle cannot make any green window
    double aim_time{0.0}; // time-from-now the uncapped velocity aims the arrival at
};

// Target velocity so the vehicle crosses the stop line during green.
// Case 1 (red now) and case 3 (green now but unreachable) aim the
// arrival at a green-window start; case 2 holds v_max. When no window
// within the look-ahead admits a legal speed the vehicle has to stop.
inline TargetVelocity target_velocity_detail(const SpatQuery& q, const SignalSchedule& sched,
                                             double v_min, double v_max,
                                             int green_lookahead = 3) {
    if (q.distance < 0.0) throw std::invalid_argument("target_velocity: negative distance");
    const auto& wins = sched.windows.at(q.intersection);
    const Phase now = phase_at(sched, q.intersection, q.time);

    TargetVelocity out;
    if (q.distance == 0.0) {
        out.v = (now == Phase::green) ? v_max : v_min;
        out.rule_case = (now == Phase::green) ? 2 : 1;
        return out;
    }

    // Upcoming green windows, starting with the current one if green.
    std::vector<const PhaseWindow*> greens;
    for (const auto& w : wins) {
        if (w.color != Phase::green) continue;
        if (w.end <= q.time) continue;
        greens.push_back(&w);
        if (static_cast<int>(greens.size()) > green_lookahead) break;
    }
    if (greens.empty()) throw std::out_of_range("target_velocity: schedule exhausted");

    std::size_t next = 0;
    if (now == Phase::green) {
        const PhaseWindow* cur = greens[0];
        if (q.distance / (cur->end - q.time) <= v_max) {
            out.v = v_max;
            out.rule_case = 2;
            out.aim_time = q.distance / v_max;
            return out;
        }
        next = 1;  // cannot make the current green legally; aim at the next one
        out.rule_case = 3;
    } else {
        out.rule_case = 1;
    }

    if (out.rule_case == 1) {
        // Red phase: aim the next green start and clamp. A clamped-high target
        // still tends to arrive inside the window; the optimizer and the
        // stop-line logic handle the residual timing.
        const double dt_start = greens[0]->start - q.time;
        const double v = q.distance / dt_start;
        out.aim_time = dt_start;
        if (v > v_max) {
            out.v = v_max;
            out.clamped = true;
        } else if (v < v_min) {
            out.v = v_min;
            out.clamped = true;
            out.feasible = false;
        } else {
            out.v = v;
        }
        return out;
    }

    for (std::size_t g = next; g < greens.size(); ++g) {
        const double dt_start = greens[g]->start - q.time;
        if (dt_start <= 0.0) continue;
        const double v = q.distance / dt_start;
        if (v <= v_max) {
            out.aim_time = dt_start;
            if (v < v_min) {
                out.v = v_min;
                out.clamped = true;
            } else {
                out.v = v;
            }
            return out;
        }
        out.rule_case = 3;  // had to skip at least one window
    }

    // Too fast for every window in the look-ahead: stop at the light.
    out.v = v_min;
    out.clamped = true;
    out.feasible = false;
    return out;
}

inline double target_velocity(const SpatQuery& q, const SignalSchedule& sched,
                              double v_min, double v_max, int green_lookahead = 3) {
    return target_velocity_detail(q, sched, v_min, v_max, green_lookahead).v;
}

inline nlohmann::json to_json(const SignalSchedule& sched) {
    nlohmann::json j;
    j["intersections"] = nlohmann::json::array();
    for (std::size_t i = 0; i < sched.positions.size(); ++i) {
        nlohmann::json wins = nlohmann::json::array();
        for (const auto& w : sched.windows[i])
            wins.push_back({{"start", w.start}, {"end", w.end}, {"color", to_string(w.color)}});
        j["intersections"].push_back({{"position", sched.positions[i]}, {"windows", wins}});
    }
    return j;
}

inline SignalSchedule schedule_from_json(const nlohmann::json& j) {
    SignalSchedule sched;
    for (const auto& inter : j.at("intersections")) {
        sched.positions.push_back(inter.at("position").get<double>());
        std::vector<PhaseWindow> wins;
        for (const auto& w : inter.at("windows")) {
            PhaseWindow pw;
            pw.start = w.at("start").get<double>();
            pw.end = w.at("end").get<double>();
            pw.color = (w.at("color").get<std::string>() == "red") ? Phase::red : Phase::green;
            wins.push_back(pw);
        }
        sched.windows.push_back(std::move(wins));
    }
    return sched;
}

}  // namespace ecosmpc

#endif  // ECOSMPC_SIGNAL_HPP
