#ifndef ECOSMPC_DYNAMICS_HPP
#define ECOSMPC_DYNAMICS_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ecosmpc {

struct VehicleState {
    double s{0.0};  // position along road (m)
    double v{0.0};  // velocity (m/s)
};

struct VehicleParams {
    double mass{1200.0};          // kg
    double frontal_area{2.5};     // m^2
    double drag_coeff{0.32};
    double air_density{1.184};    // kg/m^3
    double rolling_coeff{0.015};
    double grade{0.0};            // rad, small-angle
    double gravity{9.8};          // m/s^2
    double u_min{-3.0};           // m/s^2
    double u_max{2.0};            // m/s^2
    double v_min{0.0};            // m/s, plant clamp
    double v_max{20.0};           // m/s, plant clamp

    bool valid() const {
        return mass > 0.0 && frontal_area > 0.0 && u_min < 0.0 && 0.0 < u_max &&
               v_min < v_max;
    }
};

// Fuel-rate polynomial coefficients (ml/s). Defaults are a mid-size
// gasoline sedan fit.
struct FuelParams {
    double b0{0.1569};
    double b1{2.450e-2};
    double b2{-7.415e-4};
    double b3{5.975e-5};
    double c0{0.07224};
    double c1{9.681e-2};
    double c2{1.075e-3};
    double idle_rate{0.1};  // F_d, ml/s while braking or idling
};

struct ControlInput {
    double u{0.0};  // commanded acceleration (m/s^2)
    double w{0.0};  // driver error injection (m/s^2)

    double effective(const VehicleParams& p) const {
        return std::clamp(u + w, p.u_min, p.u_max);
    }
};

// Deceleration from aerodynamic drag at velocity v (negative of the
// drag force per unit mass).
inline double drag_decel(double v, const VehicleParams& p) {
    return (0.5 / p.mass) * p.drag_coeff * p.air_density * p.frontal_area * v * v;
}

// One forward-Euler step of the longitudinal dynamics. Velocity is
// clamped to [v_min, v_max] after integration; the optimizer handles
// velocity bounds separately.
inline VehicleState step_dynamics(const VehicleState& state, double u_f,
                                  const VehicleParams& p, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("step_dynamics: dt must be positive");
    if (!p.valid()) throw std::invalid_argument("step_dynamics: invalid vehicle params");
    if (!std::isfinite(state.s) || !std::isfinite(state.v) || !std::isfinite(u_f))
        throw std::invalid_argument("step_dynamics: non-finite state or control");

    const double accel = -drag_decel(state.v, p) - p.rolling_coeff * p.gravity -
                         p.gravity * p.grade + u_f;
    VehicleState next;
    next.s = state.s + dt * state.v;
    next.v = std::clamp(state.v + dt * accel, p.v_min, p.v_max);
    return next;
}

// Instantaneous fuel rate (ml/s). Braking (effective control < 0) and
// standstill consume the idle rate; otherwise a cruise polynomial plus
// an acceleration-proportional term.
inline double fuel_rate(double v, double u_f, const VehicleParams& p,
                        const FuelParams& f) {
    if (!(v >= 0.0)) throw std::invalid_argument("fuel_rate: negative velocity");
    if (v == 0.0 || u_f < 0.0) return f.idle_rate;

    const double a_hat = -drag_decel(v, p) - p.rolling_coeff * p.gravity + u_f;
    const double cruise = f.b0 + f.b1 * v + f.b2 * v * v + f.b3 * v * v * v;
    const double accel = a_hat * (f.c0 + f.c1 * v + f.c2 * v * v);
    return std::max(0.0, cruise + accel);
}

inline double trip_mpg(double fuel_ml, double distance_m) {
    if (!(fuel_ml > 0.0)) throw std::invalid_argument("trip_mpg: fuel must be positive");
    if (distance_m < 0.0) throw std::invalid_argument("trip_mpg: negative distance");
    constexpr double meters_per_mile = 1609.344;
    constexpr double ml_per_gallon = 3785.41;
    return (distance_m / meters_per_mile) / (fuel_ml / ml_per_gallon);
}

}  // namespace ecosmpc

#endif  // ECOSMPC_DYNAMICS_HPP
