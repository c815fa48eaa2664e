#ifndef OCCLUSIM_SIM_HPP
#define OCCLUSIM_SIM_HPP

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "occlusim/inference.hpp"
#include "occlusim/perception.hpp"
#include "occlusim/planner.hpp"
#include "occlusim/world.hpp"

namespace occlusim {

enum class PlannerKind { social, aggressive, conservative };

inline const char* to_string(PlannerKind k) {
    switch (k) {
        case PlannerKind::social: return "social";
        case PlannerKind::aggressive: return "aggressive";
        case PlannerKind::conservative: return "conservative";
    }
    return "?";
}

/// Scripted pedestrian: appears at a fixed step and walks at constant speed.
struct PedestrianScript {
    bool present = false;  // whether a pedestrian exists in the ground truth
    Vec2 start;
    Vec2 direction = {0.0, 1.0};
    double speed = 1.4;
    int appear_step = 0;
    double exit_y = 10.0;  // stops being a crossing hazard past this lateral position
};

/// A completion of the occluded part of the state: which pedestrians exist.
struct StateHypothesisSpec {
    std::string label;
    std::vector<Pedestrian> peds;
};

struct ScenarioConfig {
    // map
    Polyline robot_lane;
    Polyline human_lane;
    std::vector<Polygon> static_occluders;
    double finish_x = 100.0;

    // agents
    WorldState init;  // robot + humans; pedestrians come from the script
    VehicleParams params;

    // pedestrian script
    PedestrianScript ped;

    // hypotheses
    std::vector<StateHypothesisSpec> state_hyps;
    std::size_t ped_hyp_index = 0;     // index of the "pedestrian present" hypothesis
    SocialHypothesisSet shyps;
    std::size_t true_social_index = 0;  // ground-truth SocialInfo for scripted humans
    Belief prior_x;
    Belief prior_I;
    std::vector<Vec2> hyp_region;  // query points covering the occludable region

    // inference
    Weights theta_H;
    ActionLattice lattice;
    RationalityParams rationality;
    CostParams cost_params;
    double inference_dt = 0.5;  // human planning stride (re-planned every sim step)
    double sensor_range = 120.0;
    double informative_radius = 50.0;
    Weights theta_H_truth;  // empty: ground-truth humans use theta_H (self-consistent)

    // planner
    PlannerConfig planner;

    // sim
    double dt = 0.1;
    int max_steps = 300;
    unsigned seed = 0;
    double human_noise_sigma = 0.0;

    void validate() const {
        if (dt <= 0.0) throw std::domain_error("scenario: dt must be positive");
        if (max_steps < 1) throw std::domain_error("scenario: max_steps must be >= 1");
        if (state_hyps.empty()) throw std::domain_error("scenario: no state hypotheses");
        if (ped_hyp_index >= state_hyps.size())
            throw std::domain_error("scenario: ped_hyp_index out of range");
        if (!prior_x.valid() || prior_x.probs.size() != state_hyps.size())
            throw std::domain_error("scenario: invalid state prior");
        if (!prior_I.valid() || prior_I.probs.size() != shyps.size())
            throw std::domain_error("scenario: invalid social prior");
        if (robot_lane.size() < 2 || human_lane.size() < 2)
            throw std::domain_error("scenario: lanes need at least 2 vertices");
        if (theta_H.size() != kHumanFeatureNames.size())
            throw std::domain_error("scenario: theta_H arity mismatch");
    }
};

struct TraceRecord {
    double t = 0.0;
    AgentState robot;
    Control robot_u;
    std::vector<AgentState> humans;
    std::vector<Control> human_u;
    std::vector<Pedestrian> peds;
    bool ped_visible = false;     // direct line of sight to an actual pedestrian
    bool region_visible = false;  // direct line of sight to any hypothesis-region point
    std::vector<double> bel_x;
    std::vector<double> bel_I;
    double expected_cost = 0.0;
    double min_margin = 0.0;
    bool plan_feasible = true;
    std::vector<std::size_t> informative_humans;
};

struct Trace {
    std::vector<TraceRecord> records;
    bool collision = false;
    int goal_step = -1;  // -1: never reached the finish line
};

struct Metrics {
    bool collision = false;
    double min_gap = std::numeric_limits<double>::infinity();  // robot-pedestrian [m]
    double avg_robot_speed = 0.0;
    double peak_decel = 0.0;
    int steps_to_goal = -1;
    int belief_lead_time = -1;  // steps between belief >= 0.9 and first direct sight
};

namespace sim_detail {

inline InferenceContext make_inference_ctx(const ScenarioConfig& cfg,
                                           const ControlSequence& u_R_plan,
                                           const Weights& theta) {
    InferenceContext ctx;
    ctx.u_R_plan = u_R_plan;
    ctx.theta_H = theta;
    ctx.lattice = cfg.lattice;
    ctx.rationality = cfg.rationality;
    ctx.params = cfg.params;
    ctx.cost_params = cfg.cost_params;
    ctx.human_path = cfg.human_lane;
    ctx.ped_direction = cfg.ped.direction;
    ctx.dt = cfg.inference_dt;
    return ctx;
}

/// A hypothesis world: the directly observed agents plus one completion of the
/// occluded pedestrian state.
inline WorldState hypothesis_world(const WorldState& observed, const StateHypothesisSpec& spec) {
    WorldState w = observed;
    w.pedestrians = spec.peds;
    return w;
}

inline double ped_gap(const AgentState& robot, const Pedestrian& ped, const CostParams& cp) {
    const double d =
        distance(robot.position(), ped.position) - cp.vehicle_radius - cp.ped_radius;
    return std::max(d, 0.0);
}

}  // namespace sim_detail

/// Ground-truth human controller: best response under the true world (the
/// human sees the pedestrian), first action executed, optional seeded
/// acceleration noise.
inline Control human_policy_step(const WorldState& truth, std::size_t human_index,
                                 const ScenarioConfig& cfg, const ControlSequence& robot_plan,
                                 std::mt19937& rng) {
    if (human_index >= truth.humans.size())
        throw std::out_of_range("human_policy_step: no such human");
    const Weights& theta = cfg.theta_H_truth.empty() ? cfg.theta_H : cfg.theta_H_truth;
    const InferenceContext ctx = sim_detail::make_inference_ctx(cfg, robot_plan, theta);
    SocialInfo info;
    if (cfg.true_social_index < cfg.shyps.size())
        info = cfg.shyps.hypotheses[cfg.true_social_index].info;
    const ControlSequence resp = human_best_response(truth, info, human_index, ctx);
    Control u;
    if (!resp.empty()) u = resp.front();
    if (cfg.human_noise_sigma > 0.0) {
        std::normal_distribution<double> noise(0.0, cfg.human_noise_sigma);
        u.accel += noise(rng);
    }
    return u;
}

/// Algorithm-1 closed loop: observe, infer from human behavior while the
/// region is occluded, fuse direct observations, plan over the beliefs,
/// execute the first action, shift the plan.
inline Trace run_scenario(const ScenarioConfig& cfg, PlannerKind kind) {
    cfg.validate();
    std::mt19937 rng(cfg.seed);

    WorldState world = cfg.init;
    Belief bel_x = cfg.prior_x;
    Belief bel_I = cfg.prior_I;
    if (kind == PlannerKind::aggressive || kind == PlannerKind::conservative) {
        std::vector<double> fixed(cfg.state_hyps.size(), 0.0);
        if (kind == PlannerKind::conservative) {
            fixed[cfg.ped_hyp_index] = 1.0;  // worst case
        } else {
            // best case: all mass off the pedestrian hypothesis
            const std::size_t other =
                cfg.ped_hyp_index == 0 && cfg.state_hyps.size() > 1 ? 1 : 0;
            fixed[other == cfg.ped_hyp_index ? 0 : other] = 1.0;
        }
        bel_x = Belief{fixed};
    }

    ControlSequence robot_plan;  // shifted previous solution
    Control u_prev;
    // world snapshot + human actions from the previous step, for the Bayes update
    WorldState prev_world = world;
    ControlSequence prev_plan;
    std::vector<Control> prev_human_u;

    Trace trace;
    for (int step = 0; step < cfg.max_steps; ++step) {
        // pedestrian script: appear
        if (cfg.ped.present && step == cfg.ped.appear_step) {
            Pedestrian p;
            p.position = cfg.ped.start;
            p.speed = cfg.ped.speed;
            p.crossing = true;
            world.pedestrians.push_back(p);
        }
        // pedestrian exits the conflict zone
        for (Pedestrian& p : world.pedestrians) {
            if (p.crossing && p.position.y >= cfg.ped.exit_y) p.crossing = false;
        }

        // ---- observe ----
        const std::vector<Occluder> occluders =
            world_occluders(world, "robot", cfg.static_occluders, cfg.params);
        // the pedestrian hypothesis is only refuted when the whole region is in
        // view and empty; seeing part of it proves nothing about the rest
        bool region_visible = !cfg.hyp_region.empty();
        for (const Vec2& q : cfg.hyp_region) {
            if (!is_visible(world.robot.position(), q, occluders, cfg.sensor_range)) {
                region_visible = false;
                break;
            }
        }
        bool ped_visible = false;
        for (const Pedestrian& p : world.pedestrians) {
            if (is_visible(world.robot.position(), p.position, occluders, cfg.sensor_range)) {
                ped_visible = true;
                break;
            }
        }

        // ---- belief updates ----
        std::vector<std::size_t> informative;
        if (kind == PlannerKind::social) {
            if (ped_visible || region_visible) {
                // fusion: direct observation overrides inference
                std::vector<double> collapsed(cfg.state_hyps.size(), 0.0);
                if (ped_visible) {
                    collapsed[cfg.ped_hyp_index] = 1.0;
                } else {
                    // distribute onto hypotheses consistent with "no pedestrian seen"
                    double sum = 0.0;
                    for (std::size_t l = 0; l < cfg.state_hyps.size(); ++l) {
                        if (l != cfg.ped_hyp_index) {
                            collapsed[l] = bel_x.probs[l];
                            sum += collapsed[l];
                        }
                    }
                    if (sum <= 0.0) {
                        for (std::size_t l = 0; l < cfg.state_hyps.size(); ++l)
                            if (l != cfg.ped_hyp_index)
                                collapsed[l] = 1.0 / double(cfg.state_hyps.size() - 1);
                    } else {
                        for (double& v : collapsed) v /= sum;
                    }
                }
                bel_x = Belief{collapsed};
            } else if (step > 0 && !prev_human_u.empty()) {
                informative = select_informative_humans(prev_world, cfg.hyp_region,
                                                        cfg.static_occluders, cfg.params,
                                                        cfg.sensor_range,
                                                        cfg.informative_radius);
                const InferenceContext ictx =
                    sim_detail::make_inference_ctx(cfg, prev_plan, cfg.theta_H);
                // state update under the currently most likely social hypothesis
                SocialInfo info;
                if (!cfg.shyps.hypotheses.empty()) {
                    const std::size_t mmax = static_cast<std::size_t>(
                        std::max_element(bel_I.probs.begin(), bel_I.probs.end()) -
                        bel_I.probs.begin());
                    info = cfg.shyps.hypotheses[mmax].info;
                }
                for (std::size_t hi : informative) {
                    HypothesisSet hs;
                    for (const auto& spec : cfg.state_hyps) {
                        hs.hypotheses.push_back(
                            {spec.label, sim_detail::hypothesis_world(prev_world, spec)});
                    }
                    bel_x = update_state_belief(bel_x, hs, prev_human_u[hi].accel, info, hi,
                                                ictx)
                                .posterior;
                }
            }
            // social-variable update from every human's last action, under the
            // current maximum-likelihood state completion
            if (step > 0 && !prev_human_u.empty() && cfg.shyps.size() > 1) {
                const std::size_t lmax = static_cast<std::size_t>(
                    std::max_element(bel_x.probs.begin(), bel_x.probs.end()) -
                    bel_x.probs.begin());
                // once the pedestrian is directly seen, the real world replaces
                // the hypothesis completion
                const WorldState hw =
                    ped_visible ? prev_world
                                : sim_detail::hypothesis_world(prev_world, cfg.state_hyps[lmax]);
                const InferenceContext ictx =
                    sim_detail::make_inference_ctx(cfg, prev_plan, cfg.theta_H);
                std::vector<std::pair<std::size_t, double>> acts;
                for (std::size_t i = 0; i < prev_human_u.size(); ++i)
                    acts.push_back({i, prev_human_u[i].accel});
                bel_I = update_social_belief(bel_I, cfg.shyps, hw, acts, ictx).posterior;
            }
        } else if (kind == PlannerKind::aggressive) {
            if (ped_visible) {
                std::vector<double> collapsed(cfg.state_hyps.size(), 0.0);
                collapsed[cfg.ped_hyp_index] = 1.0;
                bel_x = Belief{collapsed};
            }
        } else {  // conservative
            if (region_visible && !ped_visible) {
                std::vector<double> collapsed(cfg.state_hyps.size(), 0.0);
                const std::size_t other = cfg.ped_hyp_index == 0 ? 1 : 0;
                collapsed[other < collapsed.size() ? other : 0] = 1.0;
                bel_x = Belief{collapsed};
            } else if (ped_visible) {
                std::vector<double> collapsed(cfg.state_hyps.size(), 0.0);
                collapsed[cfg.ped_hyp_index] = 1.0;
                bel_x = Belief{collapsed};
            }
        }

        // ---- plan ----
        PlanContext pctx;
        for (const auto& spec : cfg.state_hyps) {
            WorldState hw = sim_detail::hypothesis_world(world, spec);
            if (spec.peds.empty() && (ped_visible || region_visible)) {
                // direct observation: use the actually seen pedestrians
            }
            pctx.hyps.hypotheses.push_back({spec.label, hw});
        }
        if (ped_visible) {
            // planner must avoid the real pedestrian, not the canonical one
            pctx.hyps.hypotheses[cfg.ped_hyp_index].world.pedestrians = world.pedestrians;
        }
        pctx.shyps = cfg.shyps;
        pctx.ref_path = cfg.robot_lane;
        pctx.static_occluders = cfg.static_occluders;
        pctx.params = cfg.params;
        pctx.cost_params = cfg.cost_params;
        pctx.inference = sim_detail::make_inference_ctx(cfg, robot_plan, cfg.theta_H);
        pctx.u_prev = u_prev;

        const PlanResult plan_result = plan(bel_x, bel_I, world.robot, pctx, cfg.planner);
        const Control u_robot =
            plan_result.sequence.empty() ? Control{} : plan_result.sequence.front();

        // ---- ground-truth humans ----
        std::vector<Control> human_u(world.humans.size());
        for (std::size_t i = 0; i < world.humans.size(); ++i) {
            human_u[i] = human_policy_step(world, i, cfg, robot_plan, rng);
        }

        // ---- record ----
        TraceRecord rec;
        rec.t = step * cfg.dt;
        rec.robot = world.robot;
        rec.robot_u = u_robot;
        rec.humans = world.humans;
        rec.human_u = human_u;
        rec.peds = world.pedestrians;
        rec.ped_visible = ped_visible;
        rec.region_visible = region_visible;
        rec.bel_x = bel_x.probs;
        rec.bel_I = bel_I.probs;
        rec.expected_cost = plan_result.expected_cost;
        rec.min_margin = plan_result.constraints.min_margin();
        rec.plan_feasible = plan_result.feasible;
        rec.informative_humans = informative;
        trace.records.push_back(rec);

        // ---- collision / goal checks (on the post-step state) ----
        prev_world = world;
        prev_plan = robot_plan;
        prev_human_u = human_u;

        std::vector<Vec2> dirs(world.pedestrians.size(), cfg.ped.direction);
        world = step_world(world, u_robot, human_u, dirs, cfg.params, cfg.dt);
        u_prev = u_robot;
        robot_plan.assign(plan_result.sequence.begin() + 1, plan_result.sequence.end());

        bool hit = false;
        for (const Pedestrian& p : world.pedestrians) {
            if (distance(world.robot.position(), p.position) <
                cfg.cost_params.vehicle_radius + cfg.cost_params.ped_radius)
                hit = true;
        }
        if (hit) {
            trace.collision = true;
            break;
        }
        if (world.robot.x >= cfg.finish_x) {
            trace.goal_step = step + 1;
            break;
        }
    }
    return trace;
}

inline Metrics compute_metrics(const Trace& trace, const ScenarioConfig& cfg) {
    if (trace.records.empty()) throw std::domain_error("compute_metrics: empty trace");
    Metrics m;
    m.collision = trace.collision;
    m.steps_to_goal = trace.goal_step;
    double speed_sum = 0.0;
    int first_high_belief = -1;
    int first_sight = -1;
    for (std::size_t k = 0; k < trace.records.size(); ++k) {
        const TraceRecord& r = trace.records[k];
        speed_sum += r.robot.speed;
        m.peak_decel = std::max(m.peak_decel, -r.robot_u.accel);
        for (const Pedestrian& p : r.peds) {
            if (!p.crossing) continue;  // off the roadway, no longer a hazard
            m.min_gap = std::min(m.min_gap, sim_detail::ped_gap(r.robot, p, cfg.cost_params));
        }
        if (first_high_belief < 0 && r.bel_x[cfg.ped_hyp_index] >= 0.9)
            first_high_belief = static_cast<int>(k);
        if (first_sight < 0 && r.ped_visible) first_sight = static_cast<int>(k);
    }
    m.avg_robot_speed = speed_sum / static_cast<double>(trace.records.size());
    if (trace.collision) m.min_gap = 0.0;
    if (first_high_belief >= 0 && first_sight >= 0)
        m.belief_lead_time = first_sight - first_high_belief;
    return m;
}

}  // namespace occlusim

#endif  // OCCLUSIM_SIM_HPP
