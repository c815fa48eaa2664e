#ifndef OCCLUSIM_PLANNER_HPP
#define OCCLUSIM_PLANNER_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "occlusim/costs.hpp"
#include "occlusim/inference.hpp"
#include "occlusim/path_tracking.hpp"
#include "occlusim/world.hpp"

namespace occlusim {

struct PlannerConfig {
    int horizon = 12;
    double dt = 0.1;
    Weights theta_R = {1.0, 10.0, 0.5, 0.1, 0.05};  // tracking, safety, speed_dev, accel, jerk
    double epsilon = 0.01;                          // tailing-effect pruning threshold
    ActionLattice lattice;                          // robot acceleration candidates
    int refine_iters = 2;
    int beam_width = 50;
    std::size_t exhaustive_limit = 2000;  // full enumeration when |lattice|^N fits
    double safety_radius_vehicle = 0.5;   // hard-constraint clearance beyond body radii [m]
    double safety_radius_ped = 0.5;
    double static_margin = 0.2;
};

struct ConstraintReport {
    struct Entry {
        std::string name;
        double margin;  // >= 0 means satisfied
    };
    std::vector<Entry> entries;

    double min_margin() const {
        double m = std::numeric_limits<double>::infinity();
        for (const auto& e : entries) m = std::min(m, e.margin);
        return m;
    }
    bool ok() const { return entries.empty() || min_margin() >= 0.0; }
};

struct PlanResult {
    ControlSequence sequence;
    double expected_cost = 0.0;
    double lattice_cost = 0.0;  // best cost before coordinate-descent refinement
    std::vector<double> per_hypothesis_costs;  // row-major over (state hyp, social hyp)
    ConstraintReport constraints;
    bool feasible = false;
};

/// Per-step predicted non-robot agents within one (state, social) hypothesis.
struct PredictedWorld {
    std::vector<std::vector<AgentState>> humans;   // [step][human]
    std::vector<std::vector<Pedestrian>> peds;     // [step][ped]
};

struct PlanContext {
    HypothesisSet hyps;
    SocialHypothesisSet shyps;
    Polyline ref_path;
    std::vector<Polygon> static_occluders;
    VehicleParams params;
    CostParams cost_params;
    InferenceContext inference;  // human prediction model (theta_H, lattice, N_h, u_R_plan)
    Control u_prev;              // robot's previously executed control
};

/// Zero belief components below epsilon and renormalize. If everything is
/// below the threshold, collapse onto the single largest component.
inline Belief prune_beliefs(const Belief& belief, double epsilon) {
    if (!belief.valid()) throw std::domain_error("prune_beliefs: invalid belief");
    std::vector<double> out = belief.probs;
    double sum = 0.0;
    for (double& p : out) {
        if (p < epsilon) p = 0.0;
        sum += p;
    }
    if (sum <= 0.0) {
        const std::size_t imax = static_cast<std::size_t>(
            std::max_element(belief.probs.begin(), belief.probs.end()) - belief.probs.begin());
        std::fill(out.begin(), out.end(), 0.0);
        out[imax] = 1.0;
        return Belief{out};
    }
    for (double& p : out) p /= sum;
    return Belief{out};
}

namespace planner_detail {

/// Roll the humans of one hypothesis forward for `horizon` steps of `step_dt`
/// by receding application of their best response (first action each step);
/// pedestrians follow their scripted constant-speed model. The humans plan at
/// their own stride (ctx.inference.dt) but are advanced at the planner's.
inline PredictedWorld predict_agents(const WorldState& hyp, const SocialInfo& info,
                                     const PlanContext& ctx, int horizon, double step_dt) {
    PredictedWorld pred;
    WorldState world = hyp;
    InferenceContext inf = ctx.inference;
    for (int k = 0; k <= horizon; ++k) {
        pred.humans.push_back(world.humans);
        pred.peds.push_back(world.pedestrians);
        if (k == horizon) break;
        std::vector<Control> hus(world.humans.size());
        for (std::size_t i = 0; i < world.humans.size(); ++i) {
            // respond to the robot plan from step k on
            inf.u_R_plan.clear();
            for (std::size_t j = k; j < ctx.inference.u_R_plan.size(); ++j)
                inf.u_R_plan.push_back(ctx.inference.u_R_plan[j]);
            const ControlSequence resp = human_best_response(world, info, i, inf);
            if (!resp.empty()) hus[i] = resp.front();
        }
        std::vector<Vec2> dirs(world.pedestrians.size(), ctx.inference.ped_direction);
        world = step_world(world, detail::robot_control_at(ctx.inference, k), hus, dirs,
                           ctx.params, step_dt);
    }
    return pred;
}

inline Control robot_control(const PlanContext& ctx, const AgentState& state, double accel) {
    Control u;
    u.accel = accel;
    u.steer = path_following_steer(state, ctx.ref_path, ctx.params);
    return u;
}

}  // namespace planner_detail

/// Expected robot cost over the (independent) product of both beliefs.
/// Pruned components contribute exactly zero and are skipped.
class ExpectedCostEvaluator {
  public:
    ExpectedCostEvaluator(const Belief& bel_x, const Belief& bel_I, const AgentState& robot,
                          const PlanContext& ctx, const PlannerConfig& cfg)
        : bel_x_(bel_x), bel_I_(bel_I), robot_(robot), ctx_(ctx), cfg_(cfg) {
        if (bel_x.probs.size() != ctx.hyps.size() || bel_I.probs.size() != ctx.shyps.size())
            throw std::invalid_argument("expected_cost: belief/hypothesis arity mismatch");
        preds_.resize(ctx.hyps.size() * ctx.shyps.size());
        for (std::size_t l = 0; l < ctx.hyps.size(); ++l) {
            for (std::size_t m = 0; m < ctx.shyps.size(); ++m) {
                if (bel_x.probs[l] <= 0.0 || bel_I.probs[m] <= 0.0) continue;
                preds_[l * ctx.shyps.size() + m] = planner_detail::predict_agents(
                    ctx.hyps.hypotheses[l].world, ctx.shyps.hypotheses[m].info, ctx,
                    cfg.horizon, cfg.dt);
            }
        }
    }

    /// Total expected cost of a full-horizon acceleration sequence, plus the
    /// per-hypothesis breakdown.
    double evaluate(const std::vector<double>& accels,
                    std::vector<double>* per_hyp = nullptr) const {
        double total = 0.0;
        if (per_hyp) per_hyp->assign(preds_.size(), 0.0);
        for (std::size_t l = 0; l < ctx_.hyps.size(); ++l) {
            for (std::size_t m = 0; m < ctx_.shyps.size(); ++m) {
                const double w = bel_x_.probs[l] * bel_I_.probs[m];
                if (w <= 0.0) continue;
                const double c = hyp_cost(accels, l, m);
                if (per_hyp) (*per_hyp)[l * ctx_.shyps.size() + m] = c;
                total += w * c;
            }
        }
        return total;
    }

    const PredictedWorld& prediction(std::size_t l, std::size_t m) const {
        return preds_[l * ctx_.shyps.size() + m];
    }

    const Belief& bel_x() const { return bel_x_; }
    const Belief& bel_I() const { return bel_I_; }

  private:
    double hyp_cost(const std::vector<double>& accels, std::size_t l, std::size_t m) const {
        const PredictedWorld& pred = preds_[l * ctx_.shyps.size() + m];
        const SocialInfo& info = ctx_.shyps.hypotheses[m].info;
        AgentState state = robot_;
        double prev_accel = ctx_.u_prev.accel;
        double total = 0.0;
        for (std::size_t k = 0; k < accels.size(); ++k) {
            WorldState w;
            w.robot = state;
            w.humans = pred.humans[k];
            w.pedestrians = pred.peds[k];
            const Control u = planner_detail::robot_control(ctx_, state, accels[k]);
            Control uprev;
            uprev.accel = prev_accel;
            total += robot_step_cost(w, info, u, uprev, cfg_.theta_R, ctx_.ref_path,
                                     ctx_.cost_params);
            state = step_bicycle(state, u, ctx_.params, cfg_.dt);
            prev_accel = accels[k];
        }
        return total;
    }

    Belief bel_x_;
    Belief bel_I_;
    AgentState robot_;
    const PlanContext& ctx_;
    const PlannerConfig& cfg_;
    std::vector<PredictedWorld> preds_;
};

inline double expected_cost(const Belief& bel_x, const Belief& bel_I,
                            const std::vector<double>& accels, const AgentState& robot,
                            const PlanContext& ctx, const PlannerConfig& cfg,
                            std::vector<double>* per_hyp = nullptr) {
    return ExpectedCostEvaluator(bel_x, bel_I, robot, ctx, cfg).evaluate(accels, per_hyp);
}

/// Hard-constraint margins for a rolled-out robot trajectory. Dynamic-agent
/// clearances are generated only for hypotheses retained in the evaluator's
/// (pruned) beliefs.
inline ConstraintReport check_constraints(const Trajectory& traj, const ControlSequence& seq,
                                          const ExpectedCostEvaluator& eval,
                                          const PlanContext& ctx, const PlannerConfig& cfg) {
    ConstraintReport report;
    double acc_m = std::numeric_limits<double>::infinity();
    double kap_m = std::numeric_limits<double>::infinity();
    double spd_m = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < seq.size(); ++k) {
        acc_m = std::min(acc_m, ctx.params.a_max - std::abs(seq[k].accel));
        const double kappa = std::abs(std::tan(seq[k].steer)) / ctx.params.wheelbase();
        kap_m = std::min(kap_m, ctx.params.kappa_max - kappa);
        spd_m = std::min(spd_m, ctx.params.v_lim - traj[k + 1].speed);
    }
    report.entries.push_back({"accel", acc_m});
    report.entries.push_back({"curvature", kap_m});
    report.entries.push_back({"speed", spd_m});

    double stat_m = std::numeric_limits<double>::infinity();
    for (const Polygon& poly : ctx.static_occluders) {
        for (const AgentState& s : traj) {
            stat_m = std::min(stat_m, poly.distance_to(s.position()) - cfg.static_margin);
        }
    }
    if (!ctx.static_occluders.empty()) report.entries.push_back({"static", stat_m});

    double dyn_m = std::numeric_limits<double>::infinity();
    bool any_dyn = false;
    for (std::size_t l = 0; l < ctx.hyps.size(); ++l) {
        for (std::size_t m = 0; m < ctx.shyps.size(); ++m) {
            if (eval.bel_x().probs[l] <= 0.0 || eval.bel_I().probs[m] <= 0.0) continue;
            const PredictedWorld& pred = eval.prediction(l, m);
            for (std::size_t k = 0; k < traj.size() && k < pred.humans.size(); ++k) {
                for (const AgentState& h : pred.humans[k]) {
                    any_dyn = true;
                    const double d = distance(traj[k].position(), h.position()) -
                                     2.0 * ctx.cost_params.vehicle_radius -
                                     cfg.safety_radius_vehicle;
                    dyn_m = std::min(dyn_m, d);
                }
                for (const Pedestrian& p : pred.peds[k]) {
                    if (!p.crossing) continue;
                    any_dyn = true;
                    const double d = distance(traj[k].position(), p.position) -
                                     ctx.cost_params.vehicle_radius -
                                     ctx.cost_params.ped_radius - cfg.safety_radius_ped;
                    dyn_m = std::min(dyn_m, d);
                }
            }
        }
    }
    if (any_dyn) report.entries.push_back({"dynamic", dyn_m});
    return report;
}

namespace planner_detail {

inline Trajectory roll_robot(const AgentState& start, const std::vector<double>& accels,
                             const PlanContext& ctx, double dt, ControlSequence* seq_out) {
    Trajectory traj;
    traj.push_back(start);
    if (seq_out) seq_out->clear();
    AgentState state = start;
    for (double a : accels) {
        const Control u = robot_control(ctx, state, a);
        if (seq_out) seq_out->push_back(u);
        state = step_bicycle(state, u, ctx.params, dt);
        traj.push_back(state);
    }
    return traj;
}

struct Candidate {
    std::vector<double> accels;
    double cost = 0.0;
};

inline bool candidate_less(const Candidate& a, const Candidate& b) {
    if (a.cost != b.cost) return a.cost < b.cost;
    return a.accels < b.accels;
}

}  // namespace planner_detail

/// Receding-horizon solve: lattice search over acceleration sequences (exact
/// enumeration at desk scale, beam search otherwise), feasibility filtering by
/// the hard constraints, then coordinate-descent refinement of the best
/// candidate. Falls back to maximum braking, flagged infeasible, when no
/// candidate satisfies the constraints.
inline PlanResult plan(const Belief& bel_x, const Belief& bel_I, const AgentState& robot,
                       const PlanContext& ctx, const PlannerConfig& cfg) {
    if (cfg.horizon < 1) throw std::domain_error("plan: horizon must be >= 1");
    const Belief px = prune_beliefs(bel_x, cfg.epsilon);
    const Belief pI = prune_beliefs(bel_I, cfg.epsilon);
    ExpectedCostEvaluator eval(px, pI, robot, ctx, cfg);

    const std::vector<double>& lat = cfg.lattice.accels;
    const std::size_t n = static_cast<std::size_t>(cfg.horizon);

    const auto feasible_report = [&](const std::vector<double>& accels, ControlSequence* seq,
                                     Trajectory* traj) {
        ControlSequence s;
        Trajectory t = planner_detail::roll_robot(robot, accels, ctx, cfg.dt, &s);
        ConstraintReport r = check_constraints(t, s, eval, ctx, cfg);
        if (seq) *seq = std::move(s);
        if (traj) *traj = std::move(t);
        return r;
    };

    // candidate generation
    std::vector<planner_detail::Candidate> finals;
    double total_seqs = 1.0;
    for (std::size_t i = 0; i < n && total_seqs <= 1e9; ++i) total_seqs *= lat.size();
    const bool exhaustive = total_seqs <= static_cast<double>(cfg.exhaustive_limit);

    if (exhaustive) {
        std::vector<std::size_t> idx(n, 0);
        for (;;) {
            planner_detail::Candidate c;
            c.accels.resize(n);
            for (std::size_t i = 0; i < n; ++i) c.accels[i] = lat[idx[i]];
            if (feasible_report(c.accels, nullptr, nullptr).ok()) {
                c.cost = eval.evaluate(c.accels);
                finals.push_back(std::move(c));
            }
            std::size_t i = n;
            while (i > 0) {
                if (++idx[i - 1] < lat.size()) break;
                idx[i - 1] = 0;
                --i;
            }
            if (i == 0) break;
        }
    } else {
        // beam search; partial scores are exact prefix expected costs because
        // agent predictions do not depend on the robot candidate
        std::vector<planner_detail::Candidate> beam{{{}, 0.0}};
        for (std::size_t k = 0; k < n; ++k) {
            std::vector<planner_detail::Candidate> next;
            for (const auto& cand : beam) {
                for (double a : lat) {
                    planner_detail::Candidate c = cand;
                    c.accels.push_back(a);
                    // constraints are per-step, so prefix feasibility is exact
                    // and infeasible branches can be cut early
                    if (!feasible_report(c.accels, nullptr, nullptr).ok()) continue;
                    c.cost = eval.evaluate(c.accels);
                    next.push_back(std::move(c));
                }
            }
            std::sort(next.begin(), next.end(), planner_detail::candidate_less);
            if (next.size() > static_cast<std::size_t>(cfg.beam_width))
                next.resize(static_cast<std::size_t>(cfg.beam_width));
            beam = std::move(next);
            if (beam.empty()) break;
        }
        for (auto& c : beam) {
            if (c.accels.size() == n && feasible_report(c.accels, nullptr, nullptr).ok())
                finals.push_back(std::move(c));
        }
        // the beam ranks by cost, which can starve out the hard-braking
        // prefixes that stay feasible; always offer a brake-to-stop plan so a
        // feasible stop is never lost to cost-based truncation
        planner_detail::Candidate stop;
        double v = robot.speed;
        const double lat_min = *std::min_element(lat.begin(), lat.end());
        for (std::size_t k = 0; k < n; ++k) {
            const double a = v > 0.0 ? lat_min : 0.0;
            stop.accels.push_back(a);
            v = std::max(0.0, v + a * cfg.dt);
        }
        if (feasible_report(stop.accels, nullptr, nullptr).ok()) {
            stop.cost = eval.evaluate(stop.accels);
            finals.push_back(std::move(stop));
        }
    }

    PlanResult result;
    if (finals.empty()) {
        // maximum-braking fallback
        std::vector<double> brake(n, -ctx.params.a_max);
        ControlSequence seq;
        Trajectory traj;
        ConstraintReport rep = feasible_report(brake, &seq, &traj);
        result.sequence = seq;
        result.expected_cost = eval.evaluate(brake, &result.per_hypothesis_costs);
        result.lattice_cost = result.expected_cost;
        result.constraints = rep;
        result.feasible = false;
        return result;
    }

    const auto best_it =
        std::min_element(finals.begin(), finals.end(), planner_detail::candidate_less);
    std::vector<double> best = best_it->accels;
    double best_cost = best_it->cost;
    result.lattice_cost = best_cost;

    // coordinate-descent refinement over per-step accelerations
    double lat_lo = *std::min_element(lat.begin(), lat.end());
    double lat_hi = *std::max_element(lat.begin(), lat.end());
    for (int it = 0; it < cfg.refine_iters; ++it) {
        for (std::size_t k = 0; k < n; ++k) {
            for (double delta : {-0.5, -0.25, 0.25, 0.5}) {
                std::vector<double> trial = best;
                trial[k] = std::clamp(trial[k] + delta, lat_lo, lat_hi);
                if (trial[k] == best[k]) continue;
                if (!feasible_report(trial, nullptr, nullptr).ok()) continue;
                const double c = eval.evaluate(trial);
                if (c < best_cost) {
                    best_cost = c;
                    best = trial;
                }
            }
        }
    }

    ControlSequence seq;
    Trajectory traj;
    result.constraints = feasible_report(best, &seq, &traj);
    result.sequence = seq;
    result.expected_cost = eval.evaluate(best, &result.per_hypothesis_costs);
    result.feasible = result.constraints.ok();
    return result;
}

}  // namespace occlusim

#endif  // OCCLUSIM_PLANNER_HPP
