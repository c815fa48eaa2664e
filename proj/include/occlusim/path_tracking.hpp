#ifndef OCCLUSIM_PATH_TRACKING_HPP
#define OCCLUSIM_PATH_TRACKING_HPP

#include <algorithm>
#include <cmath>

#include "occlusim/world.hpp"

namespace occlusim {

/// Pure-pursuit steering toward a reference polyline. Returns 0 for an agent
/// already on a straight path segment pointing along its heading.
inline double path_following_steer(const AgentState& state, const Polyline& path,
                                   const VehicleParams& params) {
    if (path.size() < 2) return 0.0;
    const double lookahead = std::max(3.0, 0.8 * state.speed);

    // closest point on the path, then walk `lookahead` ahead of it
    double best = std::numeric_limits<double>::infinity();
    std::size_t seg = 0;
    double seg_t = 0.0;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        const Vec2 ab = path[i + 1] - path[i];
        const double len2 = ab.dot(ab);
        double t = len2 > 0.0 ? std::clamp((state.position() - path[i]).dot(ab) / len2, 0.0, 1.0)
                              : 0.0;
        const double d = distance(state.position(), path[i] + ab * t);
        if (d < best) {
            best = d;
            seg = i;
            seg_t = t;
        }
    }
    Vec2 target = path.back();
    double remaining = lookahead;
    Vec2 cur = path[seg] + (path[seg + 1] - path[seg]) * seg_t;
    for (std::size_t i = seg; i + 1 < path.size(); ++i) {
        const Vec2 start = i == seg ? cur : path[i];
        const double seg_len = distance(start, path[i + 1]);
        if (seg_len >= remaining) {
            target = seg_len > 0.0 ? start + (path[i + 1] - start) * (remaining / seg_len)
                                   : path[i + 1];
            remaining = 0.0;
            break;
        }
        remaining -= seg_len;
    }

    const Vec2 to_target = target - state.position();
    const double ld = to_target.norm();
    if (ld < 1e-6) return 0.0;
    const double alpha = normalize_angle(std::atan2(to_target.y, to_target.x) - state.heading);
    const double steer = std::atan(2.0 * params.wheelbase() * std::sin(alpha) / ld);
    const double kappa_steer = std::atan(params.kappa_max * params.wheelbase());
    return std::clamp(steer, -std::min(params.steer_max, kappa_steer),
                      std::min(params.steer_max, kappa_steer));
}

}  // namespace occlusim

#endif  // OCCLUSIM_PATH_TRACKING_HPP
