#ifndef OCCLUSIM_WORLD_HPP
#define OCCLUSIM_WORLD_HPP

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "occlusim/geometry.hpp"

namespace occlusim {

struct AgentState {
    double x = 0.0;        // position east [m]
    double y = 0.0;        // position north [m]
    double heading = 0.0;  // yaw [rad], in (-pi, pi]
    double speed = 0.0;    // longitudinal speed [m/s], >= 0

    Vec2 position() const { return {x, y}; }

    bool finite() const {
        return std::isfinite(x) && std::isfinite(y) && std::isfinite(heading) &&
               std::isfinite(speed);
    }
};

struct Control {
    double accel = 0.0;  // longitudinal acceleration [m/s^2]
    double steer = 0.0;  // front-wheel steering angle [rad]

    bool finite() const { return std::isfinite(accel) && std::isfinite(steer); }
};

using ControlSequence = std::vector<Control>;
using Trajectory = std::vector<AgentState>;

struct VehicleParams {
    double lf = 1.25;         // front axle to reference point [m]
    double lr = 1.25;         // rear axle to reference point [m]
    double a_max = 4.0;       // acceleration bound [m/s^2]
    double kappa_max = 0.2;   // curvature bound [1/m]
    double steer_max = 0.6;   // steering bound [rad]
    double v_lim = 15.0;      // legal speed limit [m/s]
    double length = 4.5;      // body length [m]
    double width = 2.0;       // body width [m]

    double wheelbase() const { return lf + lr; }
};

enum class SignalPhase { kNone, kRed, kGreen };

struct EnvironmentState {
    std::optional<SignalPhase> signal;
    std::string map_id;
};

struct Pedestrian {
    Vec2 position;
    double speed = 0.0;      // [m/s] along crossing direction
    bool crossing = false;   // actively crossing the roadway
};

struct WorldState {
    AgentState robot;
    std::vector<AgentState> humans;
    std::vector<Pedestrian> pedestrians;
    EnvironmentState env;
};

/// One explicit-Euler step of the kinematic bicycle model.
/// Position uses the pre-update speed and heading; then heading, then speed.
inline AgentState step_bicycle(const AgentState& state, const Control& control,
                               const VehicleParams& params, double dt) {
    if (dt <= 0.0) throw std::domain_error("step_bicycle: dt must be positive");
    if (!state.finite() || !control.finite())
        throw std::invalid_argument("step_bicycle: non-finite input");

    const double beta =
        std::atan(params.lr * std::tan(control.steer) / (params.lf + params.lr));
    AgentState next;
    next.x = state.x + state.speed * std::cos(state.heading + beta) * dt;
    next.y = state.y + state.speed * std::sin(state.heading + beta) * dt;
    next.heading =
        normalize_angle(state.heading + state.speed / params.lr * std::sin(beta) * dt);
    next.speed = std::max(0.0, state.speed + control.accel * dt);
    return next;
}

inline Pedestrian step_pedestrian(const Pedestrian& ped, const Vec2& direction, double dt) {
    Pedestrian next = ped;
    const double n = direction.norm();
    if (ped.crossing && n > 0.0) {
        next.position = ped.position + direction * (ped.speed * dt / n);
    }
    return next;
}

/// Advance every agent independently by one step (pedestrians by a constant
/// speed point model along `ped_directions`). The environment is unchanged.
inline WorldState step_world(const WorldState& world, const Control& robot_u,
                             const std::vector<Control>& human_us,
                             const std::vector<Vec2>& ped_directions,
                             const VehicleParams& params, double dt) {
    if (human_us.size() != world.humans.size())
        throw std::invalid_argument("step_world: human control count mismatch");
    WorldState next = world;
    next.robot = step_bicycle(world.robot, robot_u, params, dt);
    for (std::size_t i = 0; i < world.humans.size(); ++i) {
        next.humans[i] = step_bicycle(world.humans[i], human_us[i], params, dt);
    }
    for (std::size_t i = 0; i < world.pedestrians.size(); ++i) {
        const Vec2 dir = i < ped_directions.size() ? ped_directions[i] : Vec2{0.0, 1.0};
        next.pedestrians[i] = step_pedestrian(world.pedestrians[i], dir, dt);
    }
    return next;
}

/// Roll a control sequence out from `state`; result has seq.size()+1 states.
inline Trajectory rollout(const AgentState& state, const ControlSequence& seq,
                          const VehicleParams& params, double dt) {
    if (seq.empty()) throw std::domain_error("rollout: empty control sequence");
    Trajectory traj;
    traj.reserve(seq.size() + 1);
    traj.push_back(state);
    for (const Control& u : seq) {
        traj.push_back(step_bicycle(traj.back(), u, params, dt));
    }
    return traj;
}

}  // namespace occlusim

#endif  // OCCLUSIM_WORLD_HPP
