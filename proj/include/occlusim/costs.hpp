#ifndef OCCLUSIM_COSTS_HPP
#define OCCLUSIM_COSTS_HPP

#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "occlusim/world.hpp"

namespace occlusim {

using FeatureVector = std::vector<double>;
using Weights = std::vector<double>;

struct SocialInfo {
    double v_traffic = 0.0;  // prevailing traffic speed [m/s]
    std::map<std::string, double> extras;
};

inline constexpr std::array<const char*, 5> kHumanFeatureNames = {
    "speed_dev", "accel", "jerk", "prox_ped", "prox_robot"};

inline constexpr std::array<const char*, 5> kRobotFeatureNames = {
    "tracking", "safety", "speed_dev", "accel", "jerk"};

struct CostParams {
    double proximity_cap = 50.0;  // distance beyond which proximity features are 0
    double vehicle_radius = 1.0;  // circle-cover radius for cars [m]
    double ped_radius = 0.3;      // circle-cover radius for pedestrians [m]
};

inline double proximity_feature(double d, double cap) {
    return d < cap ? std::exp(-d) : 0.0;
}

/// Features of human `human_index` for one step: speed deviation, squared
/// acceleration, squared jerk, pedestrian proximity, robot proximity.
/// Only crossing-active pedestrians contribute to the proximity term.
inline FeatureVector human_features(const WorldState& x, const SocialInfo& info,
                                    const Control& /*u_R*/, const Control& u_H,
                                    std::size_t human_index = 0, double prev_accel = 0.0,
                                    const CostParams& cp = {}) {
    if (human_index >= x.humans.size())
        throw std::out_of_range("human_features: no such human");
    const AgentState& h = x.humans[human_index];
    FeatureVector phi(5, 0.0);
    const double dv = h.speed - info.v_traffic;
    phi[0] = dv * dv;
    phi[1] = u_H.accel * u_H.accel;
    const double jerk = u_H.accel - prev_accel;
    phi[2] = jerk * jerk;
    double d_ped = std::numeric_limits<double>::infinity();
    for (const Pedestrian& p : x.pedestrians) {
        if (!p.crossing) continue;
        d_ped = std::min(d_ped, distance(h.position(), p.position));
    }
    phi[3] = proximity_feature(d_ped, cp.proximity_cap);
    phi[4] = proximity_feature(distance(h.position(), x.robot.position()), cp.proximity_cap);
    return phi;
}

inline double dot(const Weights& theta, const FeatureVector& phi) {
    if (theta.size() != phi.size())
        throw std::invalid_argument("weight/feature dimension mismatch");
    return std::inner_product(theta.begin(), theta.end(), phi.begin(), 0.0);
}

inline double step_cost(const WorldState& x, const SocialInfo& info, const Control& u_R,
                        const Control& u_H, const Weights& theta,
                        std::size_t human_index = 0, double prev_accel = 0.0,
                        const CostParams& cp = {}) {
    return dot(theta, human_features(x, info, u_R, u_H, human_index, prev_accel, cp));
}

/// Advance a world one step where only the subject human has an explicit
/// control; other humans coast (zero input) and pedestrians follow
/// `ped_direction` at their scripted speed.
inline WorldState advance_world(const WorldState& x, const Control& u_R, const Control& u_H,
                                std::size_t human_index, const VehicleParams& params,
                                double dt, const Vec2& ped_direction = {0.0, 1.0}) {
    std::vector<Control> hus(x.humans.size());
    if (human_index < hus.size()) hus[human_index] = u_H;
    std::vector<Vec2> dirs(x.pedestrians.size(), ped_direction);
    return step_world(x, u_R, hus, dirs, params, dt);
}

/// Cumulative human feature vector over a horizon (states rolled by the world
/// dynamics). The first step's jerk is measured against `prev_accel`.
inline FeatureVector cumulative_features(const WorldState& x0, const SocialInfo& info,
                                         const ControlSequence& u_R,
                                         const ControlSequence& u_H, std::size_t human_index,
                                         const VehicleParams& params, double dt,
                                         double prev_accel = 0.0, const CostParams& cp = {},
                                         const Vec2& ped_direction = {0.0, 1.0}) {
    if (u_R.size() != u_H.size())
        throw std::invalid_argument("cumulative_features: sequence length mismatch");
    FeatureVector total(5, 0.0);
    WorldState x = x0;
    double prev = prev_accel;
    for (std::size_t k = 0; k < u_H.size(); ++k) {
        const FeatureVector phi = human_features(x, info, u_R[k], u_H[k], human_index, prev, cp);
        for (std::size_t j = 0; j < total.size(); ++j) total[j] += phi[j];
        x = advance_world(x, u_R[k], u_H[k], human_index, params, dt, ped_direction);
        prev = u_H[k].accel;
    }
    return total;
}

inline double cumulative_cost(const WorldState& x0, const SocialInfo& info,
                              const ControlSequence& u_R, const ControlSequence& u_H,
                              const Weights& theta, std::size_t human_index,
                              const VehicleParams& params, double dt,
                              double prev_accel = 0.0, const CostParams& cp = {},
                              const Vec2& ped_direction = {0.0, 1.0}) {
    return dot(theta, cumulative_features(x0, info, u_R, u_H, human_index, params, dt,
                                          prev_accel, cp, ped_direction));
}

/// Robot planning features for one step: reference-path tracking distance,
/// safety (sum of exp(-d) over surrounding agents, distances measured
/// center-to-center minus body radii), speed deviation from the inferred
/// traffic speed, squared acceleration, squared jerk.
inline FeatureVector robot_features(const WorldState& x, const SocialInfo& info,
                                    const Control& u, const Control& u_prev,
                                    const Polyline& ref_path, const CostParams& cp = {}) {
    if (ref_path.empty()) throw std::invalid_argument("robot_features: empty reference path");
    FeatureVector phi(5, 0.0);
    phi[0] = point_polyline_distance(x.robot.position(), ref_path);
    double safety = 0.0;
    for (const AgentState& h : x.humans) {
        const double d =
            std::max(0.0, distance(x.robot.position(), h.position()) - 2.0 * cp.vehicle_radius);
        safety += proximity_feature(d, cp.proximity_cap);
    }
    for (const Pedestrian& p : x.pedestrians) {
        if (!p.crossing) continue;
        const double d = std::max(0.0, distance(x.robot.position(), p.position) -
                                           cp.vehicle_radius - cp.ped_radius);
        safety += proximity_feature(d, cp.proximity_cap);
    }
    phi[1] = safety;
    const double dv = x.robot.speed - info.v_traffic;
    phi[2] = dv * dv;
    phi[3] = u.accel * u.accel;
    const double jerk = u.accel - u_prev.accel;
    phi[4] = jerk * jerk;
    return phi;
}

inline double robot_step_cost(const WorldState& x, const SocialInfo& info, const Control& u,
                              const Control& u_prev, const Weights& theta_R,
                              const Polyline& ref_path, const CostParams& cp = {}) {
    return dot(theta_R, robot_features(x, info, u, u_prev, ref_path, cp));
}

}  // namespace occlusim

#endif  // OCCLUSIM_COSTS_HPP
