#ifndef OCCLUSIM_PERCEPTION_HPP
#define OCCLUSIM_PERCEPTION_HPP

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "occlusim/world.hpp"

namespace occlusim {

using Occluder = Polygon;

enum class Verdict { kVisible, kOccluded, kOutOfRange };

struct Observation {
    std::string observer_id;
    std::map<std::string, AgentState> visible_agents;  // id -> state
    std::vector<Verdict> query_verdicts;               // one per registered query point
};

/// Line-of-sight test: target is visible iff within range and the open
/// segment sensor->target crosses no occluder. Touching a polygon corner
/// counts as visible (endpoints exclusive, eps = 1e-9).
inline bool is_visible(const Vec2& sensor, const Vec2& target,
                       const std::vector<Occluder>& occluders, double range) {
    if (range <= 0.0) throw std::domain_error("is_visible: range must be positive");
    if (distance(sensor, target) > range) return false;
    for (const Occluder& occ : occluders) {
        if (occ.vertices.size() < 3) throw std::invalid_argument("degenerate occluder");
        if (occ.blocks_segment(sensor, target)) return false;
    }
    return true;
}

/// Occluders for a world as seen by `observer_id`: all static polygons plus
/// the footprint rectangles of every other vehicle.
inline std::vector<Occluder> world_occluders(const WorldState& world,
                                             const std::string& observer_id,
                                             const std::vector<Occluder>& static_occluders,
                                             const VehicleParams& params) {
    std::vector<Occluder> occluders = static_occluders;
    const auto add_vehicle = [&](const AgentState& a) {
        occluders.push_back(
            vehicle_footprint(a.position(), a.heading, params.length, params.width));
    };
    if (observer_id != "robot") add_vehicle(world.robot);
    for (std::size_t i = 0; i < world.humans.size(); ++i) {
        if (observer_id == "human" + std::to_string(i)) continue;
        add_vehicle(world.humans[i]);
    }
    return occluders;
}

inline Vec2 observer_position(const WorldState& world, const std::string& observer_id) {
    if (observer_id == "robot") return world.robot.position();
    for (std::size_t i = 0; i < world.humans.size(); ++i) {
        if (observer_id == "human" + std::to_string(i)) return world.humans[i].position();
    }
    throw std::out_of_range("unknown observer: " + observer_id);
}

/// Apply is_visible from the observer to every other agent's center and to
/// every registered query point (e.g. the crosswalk entry).
inline Observation observe(const WorldState& world, const std::string& observer_id,
                           const std::vector<Occluder>& static_occluders,
                           const VehicleParams& params, double range,
                           const std::vector<Vec2>& query_points = {}) {
    const Vec2 sensor = observer_position(world, observer_id);
    const std::vector<Occluder> occluders =
        world_occluders(world, observer_id, static_occluders, params);

    // a vehicle's own footprint must not occlude its own center
    const auto occluders_excluding = [&](const std::string& target_id) {
        std::vector<Occluder> out = static_occluders;
        const auto add_vehicle = [&](const AgentState& a) {
            out.push_back(vehicle_footprint(a.position(), a.heading, params.length, params.width));
        };
        if (observer_id != "robot" && target_id != "robot") add_vehicle(world.robot);
        for (std::size_t i = 0; i < world.humans.size(); ++i) {
            const std::string id = "human" + std::to_string(i);
            if (id == observer_id || id == target_id) continue;
            add_vehicle(world.humans[i]);
        }
        return out;
    };

    Observation obs;
    obs.observer_id = observer_id;
    if (observer_id != "robot" &&
        is_visible(sensor, world.robot.position(), occluders_excluding("robot"), range))
        obs.visible_agents["robot"] = world.robot;
    for (std::size_t i = 0; i < world.humans.size(); ++i) {
        const std::string id = "human" + std::to_string(i);
        if (id == observer_id) continue;
        if (is_visible(sensor, world.humans[i].position(), occluders_excluding(id), range))
            obs.visible_agents[id] = world.humans[i];
    }
    for (const Vec2& q : query_points) {
        if (distance(sensor, q) > range) {
            obs.query_verdicts.push_back(Verdict::kOutOfRange);
        } else if (is_visible(sensor, q, occluders, range)) {
            obs.query_verdicts.push_back(Verdict::kVisible);
        } else {
            obs.query_verdicts.push_back(Verdict::kOccluded);
        }
    }
    return obs;
}

}  // namespace occlusim

#endif  // OCCLUSIM_PERCEPTION_HPP
