#ifndef OCCLUSIM_INFERENCE_HPP
#define OCCLUSIM_INFERENCE_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "occlusim/costs.hpp"
#include "occlusim/path_tracking.hpp"
#include "occlusim/perception.hpp"
#include "occlusim/world.hpp"

namespace occlusim {

struct Hypothesis {
    std::string label;
    WorldState world;  // fully concrete completion of the uncertain state
};

struct HypothesisSet {
    std::vector<Hypothesis> hypotheses;

    std::size_t size() const { return hypotheses.size(); }
};

struct SocialHypothesis {
    std::string label;
    SocialInfo info;
};

struct SocialHypothesisSet {
    std::vector<SocialHypothesis> hypotheses;

    std::size_t size() const { return hypotheses.size(); }
};

struct Belief {
    std::vector<double> probs;

    bool valid(double tol = 1e-9) const {
        double sum = 0.0;
        for (double p : probs) {
            if (!(p >= 0.0 && p <= 1.0 + tol)) return false;
            sum += p;
        }
        return std::abs(sum - 1.0) <= tol;
    }

    static Belief uniform(std::size_t n) {
        return Belief{std::vector<double>(n, 1.0 / static_cast<double>(n))};
    }
};

struct ActionLattice {
    std::vector<double> accels = {-4.0, -3.0, -2.0, -1.0, 0.0, 1.0, 2.0};

    double snap(double accel) const {
        if (accels.empty()) throw std::domain_error("empty action lattice");
        double best = accels.front();
        for (double a : accels) {
            if (std::abs(a - accel) < std::abs(best - accel)) best = a;
        }
        return best;
    }

    /// Actions ordered by tie-break preference: smallest |a|, then smallest a.
    std::vector<double> preference_order() const {
        std::vector<double> out = accels;
        std::sort(out.begin(), out.end(), [](double a, double b) {
            if (std::abs(a) != std::abs(b)) return std::abs(a) < std::abs(b);
            return a < b;
        });
        return out;
    }
};

struct RationalityParams {
    double beta = 1.0;  // inverse temperature
    int horizon = 3;    // inference horizon N_h [steps]
};

/// Everything needed to evaluate a human's cost-to-go inside one hypothesis.
struct InferenceContext {
    ControlSequence u_R_plan;       // robot plan the humans are assumed to respond to
    Weights theta_H;                // learned human cost weights
    ActionLattice lattice;
    RationalityParams rationality;
    VehicleParams params;
    CostParams cost_params;
    Polyline human_path;            // lane polyline for path-following steering
    Vec2 ped_direction = {0.0, 1.0};
    double dt = 0.1;
};

namespace detail {

inline Control robot_control_at(const InferenceContext& ctx, std::size_t k) {
    if (ctx.u_R_plan.empty()) return Control{};
    return k < ctx.u_R_plan.size() ? ctx.u_R_plan[k] : ctx.u_R_plan.back();
}

inline Control human_control(const InferenceContext& ctx, const WorldState& world,
                             std::size_t human_index, double accel) {
    Control u;
    u.accel = accel;
    u.steer = path_following_steer(world.humans[human_index], ctx.human_path, ctx.params);
    return u;
}

/// Minimum cumulative cost of steps k..N_h-1 over all lattice tail sequences,
/// optionally recording the argmin tail (preference-ordered enumeration, so the
/// first strict minimum found respects the tie-break rule).
inline double best_tail(const WorldState& world, const SocialInfo& info,
                        std::size_t human_index, const InferenceContext& ctx, std::size_t k,
                        double prev_accel, const std::vector<double>& ordered,
                        std::vector<double>* argmin_tail) {
    const std::size_t horizon = static_cast<std::size_t>(ctx.rationality.horizon);
    if (k >= horizon) return 0.0;
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> best_sub;
    for (double a : ordered) {
        const Control u_h = human_control(ctx, world, human_index, a);
        const Control u_r = robot_control_at(ctx, k);
        const double c = step_cost(world, info, u_r, u_h, ctx.theta_H, human_index, prev_accel,
                                   ctx.cost_params);
        const WorldState next = advance_world(world, u_r, u_h, human_index, ctx.params, ctx.dt,
                                              ctx.ped_direction);
        std::vector<double> sub;
        const double tail = best_tail(next, info, human_index, ctx, k + 1, a, ordered,
                                      argmin_tail ? &sub : nullptr);
        if (c + tail < best) {
            best = c + tail;
            if (argmin_tail) {
                best_sub.clear();
                best_sub.push_back(a);
                best_sub.insert(best_sub.end(), sub.begin(), sub.end());
            }
        }
    }
    if (argmin_tail) *argmin_tail = std::move(best_sub);
    return best;
}

}  // namespace detail

/// Optimal cost-to-go of taking `u0_accel` now and acting optimally for the
/// remaining inference horizon (exhaustive enumeration over the lattice).
inline double q_star(const WorldState& hyp, const SocialInfo& info, std::size_t human_index,
                     double u0_accel, const InferenceContext& ctx) {
    if (ctx.rationality.horizon < 1) throw std::domain_error("q_star: horizon must be >= 1");
    const Control u_h = detail::human_control(ctx, hyp, human_index, u0_accel);
    const Control u_r = detail::robot_control_at(ctx, 0);
    const double c0 =
        step_cost(hyp, info, u_r, u_h, ctx.theta_H, human_index, 0.0, ctx.cost_params);
    const WorldState next =
        advance_world(hyp, u_r, u_h, human_index, ctx.params, ctx.dt, ctx.ped_direction);
    const std::vector<double> ordered = ctx.lattice.preference_order();
    return c0 + detail::best_tail(next, info, human_index, ctx, 1, u0_accel, ordered, nullptr);
}

/// Boltzmann likelihood of each lattice action given a hypothesis, computed
/// with a max-shift for numerical stability. Index order follows the lattice.
inline std::vector<double> action_likelihoods(const WorldState& hyp, const SocialInfo& info,
                                              std::size_t human_index,
                                              const InferenceContext& ctx) {
    std::vector<double> q(ctx.lattice.accels.size());
    for (std::size_t i = 0; i < q.size(); ++i) {
        q[i] = q_star(hyp, info, human_index, ctx.lattice.accels[i], ctx);
    }
    const double qmin = *std::min_element(q.begin(), q.end());
    double z = 0.0;
    std::vector<double> p(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) {
        p[i] = std::exp(-ctx.rationality.beta * (q[i] - qmin));
        z += p[i];
    }
    for (double& v : p) v /= z;
    return p;
}

inline double action_likelihood(double accel, const WorldState& hyp, const SocialInfo& info,
                                std::size_t human_index, const InferenceContext& ctx) {
    const double snapped = ctx.lattice.snap(accel);
    const std::vector<double> p = action_likelihoods(hyp, info, human_index, ctx);
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (ctx.lattice.accels[i] == snapped) return p[i];
    }
    return 0.0;
}

struct BeliefUpdate {
    Belief posterior;
    bool degenerate = false;  // all likelihood products vanished; prior kept
};

inline Belief floor_and_normalize(std::vector<double> probs, double floor = 1e-9) {
    double sum = 0.0;
    for (double& p : probs) {
        p = std::max(p, floor);
        sum += p;
    }
    for (double& p : probs) p /= sum;
    return Belief{std::move(probs)};
}

/// Bayes update of the state belief from one observed human action.
inline BeliefUpdate update_state_belief(const Belief& belief, const HypothesisSet& hyps,
                                        double observed_accel, const SocialInfo& info,
                                        std::size_t human_index, const InferenceContext& ctx) {
    if (!belief.valid() || belief.probs.size() != hyps.size())
        throw std::domain_error("update_state_belief: invalid belief");
    std::vector<double> post(belief.probs.size());
    double sum = 0.0;
    for (std::size_t l = 0; l < hyps.size(); ++l) {
        const double lik =
            action_likelihood(observed_accel, hyps.hypotheses[l].world, info, human_index, ctx);
        post[l] = belief.probs[l] * lik;
        sum += post[l];
    }
    if (sum <= 0.0) return {belief, true};
    for (double& p : post) p /= sum;
    return {floor_and_normalize(std::move(post)), false};
}

/// Bayes update of the social belief from the actions of several humans
/// (independent-sensor product, Eq.-(10)-style).
inline BeliefUpdate update_social_belief(const Belief& belief, const SocialHypothesisSet& shyps,
                                         const WorldState& world,
                                         const std::vector<std::pair<std::size_t, double>>&
                                             observed_actions,  // (human index, accel)
                                         const InferenceContext& ctx) {
    if (!belief.valid() || belief.probs.size() != shyps.size())
        throw std::domain_error("update_social_belief: invalid belief");
    if (observed_actions.empty())
        throw std::domain_error("update_social_belief: no observed actions");
    std::vector<double> post(belief.probs.size());
    double sum = 0.0;
    for (std::size_t m = 0; m < shyps.size(); ++m) {
        double lik = 1.0;
        for (const auto& [idx, accel] : observed_actions) {
            lik *= action_likelihood(accel, world, shyps.hypotheses[m].info, idx, ctx);
        }
        post[m] = belief.probs[m] * lik;
        sum += post[m];
    }
    if (sum <= 0.0) return {belief, true};
    for (double& p : post) p /= sum;
    return {floor_and_normalize(std::move(post)), false};
}

/// The human's full best-response action sequence (Eq.-(5)-style argmin over
/// the lattice). Ties break toward the smallest |accel|, then smallest accel.
inline ControlSequence human_best_response(const WorldState& hyp, const SocialInfo& info,
                                           std::size_t human_index,
                                           const InferenceContext& ctx) {
    const std::vector<double> ordered = ctx.lattice.preference_order();
    std::vector<double> accels;
    detail::best_tail(hyp, info, human_index, ctx, 0, 0.0, ordered, &accels);
    ControlSequence seq;
    WorldState world = hyp;
    for (double a : accels) {
        Control u = detail::human_control(ctx, world, human_index, a);
        seq.push_back(u);
        world = advance_world(world, detail::robot_control_at(ctx, seq.size() - 1), u,
                              human_index, ctx.params, ctx.dt, ctx.ped_direction);
    }
    return seq;
}

/// Algorithm-1 step 1: humans near the robot whose own sensors can see at
/// least one point of the hypothesis region.
inline std::vector<std::size_t> select_informative_humans(
    const WorldState& world, const std::vector<Vec2>& hyp_region,
    const std::vector<Occluder>& static_occluders, const VehicleParams& params, double range,
    double radius) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < world.humans.size(); ++i) {
        if (distance(world.robot.position(), world.humans[i].position()) > radius) continue;
        const std::vector<Occluder> occluders =
            world_occluders(world, "human" + std::to_string(i), static_occluders, params);
        for (const Vec2& q : hyp_region) {
            if (is_visible(world.humans[i].position(), q, occluders, range)) {
                out.push_back(i);
                break;
            }
        }
    }
    return out;
}

}  // namespace occlusim

#endif  // OCCLUSIM_INFERENCE_HPP
