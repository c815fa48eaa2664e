#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "occlusim/world.hpp"

using namespace occlusim;

namespace {

// Reference integrator for the kinematic bicycle ODE under a constant control,
// used as an independent oracle for the shipped explicit-Euler step.
AgentState rk4_bicycle(const AgentState& s0, const Control& u, const VehicleParams& p,
                       double duration, double h) {
    const double beta = std::atan(p.lr * std::tan(u.steer) / (p.lf + p.lr));
    auto deriv = [&](const AgentState& s) {
        AgentState d;
        d.x = s.speed * std::cos(s.heading + beta);
        d.y = s.speed * std::sin(s.heading + beta);
        d.heading = s.speed / p.lr * std::sin(beta);
        d.speed = u.accel;
        return d;
    };
    auto axpy = [](const AgentState& s, const AgentState& d, double a) {
        AgentState r = s;
        r.x += a * d.x;
        r.y += a * d.y;
        r.heading += a * d.heading;
        r.speed += a * d.speed;
        return r;
    };
    AgentState s = s0;
    const int n = static_cast<int>(std::round(duration / h));
    for (int i = 0; i < n; ++i) {
        const AgentState k1 = deriv(s);
        const AgentState k2 = deriv(axpy(s, k1, h / 2));
        const AgentState k3 = deriv(axpy(s, k2, h / 2));
        const AgentState k4 = deriv(axpy(s, k3, h));
        s.x += h / 6 * (k1.x + 2 * k2.x + 2 * k3.x + k4.x);
        s.y += h / 6 * (k1.y + 2 * k2.y + 2 * k3.y + k4.y);
        s.heading += h / 6 * (k1.heading + 2 * k2.heading + 2 * k3.heading + k4.heading);
        s.speed += h / 6 * (k1.speed + 2 * k2.speed + 2 * k3.speed + k4.speed);
    }
    s.heading = normalize_angle(s.heading);
    return s;
}

double state_error(const AgentState& a, const AgentState& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

}  // namespace

TEST_CASE("step_bicycle straight line is exact") {
    AgentState s{0, 0, 0, 10};
    const AgentState n = step_bicycle(s, {0.0, 0.0}, {}, 0.1);
    CHECK(n.x == 1.0);
    CHECK(n.y == 0.0);
    CHECK(n.heading == 0.0);
    CHECK(n.speed == 10.0);
}

TEST_CASE("step_bicycle position uses pre-update speed") {
    AgentState s{0, 0, 0, 10};
    const AgentState n = step_bicycle(s, {1.0, 0.0}, {}, 0.1);
    CHECK(n.x == 1.0);
    CHECK(n.speed == doctest::Approx(10.1));
}

TEST_CASE("step_bicycle clamps speed at zero") {
    AgentState s{0, 0, 0, 0.2};
    const AgentState n = step_bicycle(s, {-4.0, 0.0}, {}, 0.1);
    CHECK(n.speed == 0.0);
}

TEST_CASE("step_bicycle heading stays normalized") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> ang(-3.0, 3.0);
    std::uniform_real_distribution<double> st(-0.6, 0.6);
    std::uniform_real_distribution<double> sp(0.0, 15.0);
    for (int i = 0; i < 500; ++i) {
        AgentState s{0, 0, ang(rng), sp(rng)};
        const AgentState n = step_bicycle(s, {0.0, st(rng)}, {}, 0.5);
        CHECK(n.heading > -M_PI);
        CHECK(n.heading <= M_PI);
    }
}

TEST_CASE("step_bicycle input validation") {
    CHECK_THROWS_AS(step_bicycle({}, {}, {}, 0.0), std::domain_error);
    CHECK_THROWS_AS(step_bicycle({}, {}, {}, -0.1), std::domain_error);
    AgentState bad{std::nan(""), 0, 0, 0};
    CHECK_THROWS_AS(step_bicycle(bad, {}, {}, 0.1), std::invalid_argument);
    Control bad_u{std::numeric_limits<double>::infinity(), 0.0};
    CHECK_THROWS_AS(step_bicycle({}, bad_u, {}, 0.1), std::invalid_argument);
}

TEST_CASE("curved step matches fine RK4 oracle") {
    // one 0.1 s Euler step vs RK4 at h = 1e-4
    AgentState s{0, 0, 0, 5};
    const Control u{0.0, 0.2};
    const AgentState euler = step_bicycle(s, u, {}, 0.1);
    const AgentState ref = rk4_bicycle(s, u, {}, 0.1, 1e-4);
    CHECK(state_error(euler, ref) < 0.02);
}

TEST_CASE("Euler trajectory converges to RK4 reference at O(dt)") {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> sp(2.0, 12.0);
    std::uniform_real_distribution<double> st(-0.4, 0.4);
    std::uniform_real_distribution<double> ac(-2.0, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
        AgentState s0{0, 0, 0, sp(rng)};
        const Control u{ac(rng), st(rng)};
        const AgentState ref = rk4_bicycle(s0, u, {}, 1.0, 1e-5);
        double prev_err = 0.0;
        int level = 0;
        for (double dt : {0.1, 0.01, 0.001}) {
            AgentState s = s0;
            const int n = static_cast<int>(std::round(1.0 / dt));
            for (int i = 0; i < n; ++i) s = step_bicycle(s, u, {}, dt);
            const double err = state_error(s, ref);
            if (level > 0 && prev_err > 1e-9) {
                // first-order convergence: error shrinks ~10x per decade of dt
                CHECK(err < prev_err / 4.0);
            }
            prev_err = err;
            ++level;
        }
        CHECK(prev_err < 0.05);  // dt = 0.001 end-state error after 1 s
    }
}

TEST_CASE("step_world advances agents independently") {
    WorldState w;
    w.robot = {0, 0, 0, 5};
    w.humans = {{10, -3.5, 0, 8}, {20, -3.5, 0, 6}};
    w.pedestrians = {{{30, -5}, 1.4, true}};
    const std::vector<Control> hus = {{1.0, 0.0}, {-1.0, 0.0}};
    const std::vector<Vec2> dirs = {{0.0, 1.0}};

    WorldState cur = w;
    for (int k = 0; k < 10; ++k) cur = step_world(cur, {0.5, 0.0}, hus, dirs, {}, 0.1);

    // per-agent composition oracle
    AgentState robot = w.robot;
    AgentState h0 = w.humans[0];
    AgentState h1 = w.humans[1];
    Pedestrian ped = w.pedestrians[0];
    for (int k = 0; k < 10; ++k) {
        robot = step_bicycle(robot, {0.5, 0.0}, {}, 0.1);
        h0 = step_bicycle(h0, hus[0], {}, 0.1);
        h1 = step_bicycle(h1, hus[1], {}, 0.1);
        ped = step_pedestrian(ped, dirs[0], 0.1);
    }
    CHECK(cur.robot.x == robot.x);
    CHECK(cur.humans[0].speed == h0.speed);
    CHECK(cur.humans[1].speed == h1.speed);
    CHECK(cur.pedestrians[0].position.y == ped.position.y);
}

TEST_CASE("step_world fixed point and arity error") {
    WorldState w;
    w.robot = {1, 2, 0.5, 0};
    w.humans = {{5, 5, 0, 0}};
    WorldState n = step_world(w, {}, {Control{}}, {}, {}, 0.1);
    CHECK(n.robot.x == w.robot.x);
    CHECK(n.humans[0].y == w.humans[0].y);
    CHECK_THROWS_AS(step_world(w, {}, {}, {}, {}, 0.1), std::invalid_argument);
}

TEST_CASE("non-crossing pedestrians do not move") {
    Pedestrian p{{3, 4}, 2.0, false};
    const Pedestrian n = step_pedestrian(p, {0, 1}, 0.1);
    CHECK(n.position.x == 3.0);
    CHECK(n.position.y == 4.0);
}

TEST_CASE("rollout composes step_bicycle bit-exactly") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> ac(-3.0, 3.0);
    std::uniform_real_distribution<double> st(-0.5, 0.5);
    ControlSequence seq;
    for (int i = 0; i < 10; ++i) seq.push_back({ac(rng), st(rng)});
    AgentState s0{0, 0, 0.2, 7};
    const Trajectory traj = rollout(s0, seq, {}, 0.1);
    REQUIRE(traj.size() == 11);
    AgentState s = s0;
    CHECK(traj[0].x == s.x);
    for (std::size_t k = 0; k < seq.size(); ++k) {
        s = step_bicycle(s, seq[k], {}, 0.1);
        CHECK(traj[k + 1].x == s.x);
        CHECK(traj[k + 1].y == s.y);
        CHECK(traj[k + 1].heading == s.heading);
        CHECK(traj[k + 1].speed == s.speed);
    }
    CHECK_THROWS_AS(rollout(s0, {}, {}, 0.1), std::domain_error);
}
