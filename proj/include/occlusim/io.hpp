#ifndef OCCLUSIM_IO_HPP
#define OCCLUSIM_IO_HPP

#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "occlusim/irl.hpp"
#include "occlusim/sim.hpp"

namespace occlusim {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

namespace io_detail {

using json = nlohmann::json;

inline void reject_unknown(const json& obj, const std::string& path,
                           const std::set<std::string>& allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key()))
            throw ConfigError("unknown key '" + path + "." + it.key() + "'");
    }
}

inline const json& require(const json& obj, const std::string& path, const std::string& key) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ConfigError("missing key '" + path + "." + key + "'");
    return *it;
}

inline Vec2 as_vec2(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 2)
        throw ConfigError("'" + path + "' must be a 2-element array");
    return {j[0].get<double>(), j[1].get<double>()};
}

inline Polyline as_polyline(const json& j, const std::string& path) {
    Polyline out;
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(as_vec2(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

inline AgentState as_agent(const json& j, const std::string& path) {
    reject_unknown(j, path, {"x", "y", "heading", "speed"});
    AgentState s;
    s.x = require(j, path, "x").get<double>();
    s.y = require(j, path, "y").get<double>();
    s.heading = require(j, path, "heading").get<double>();
    s.speed = require(j, path, "speed").get<double>();
    return s;
}

inline json agent_to_json(const AgentState& s) {
    return json{{"x", s.x}, {"y", s.y}, {"heading", s.heading}, {"speed", s.speed}};
}

inline Pedestrian as_ped(const json& j, const std::string& path) {
    reject_unknown(j, path, {"position", "speed", "crossing"});
    Pedestrian p;
    p.position = as_vec2(require(j, path, "position"), path + ".position");
    p.speed = require(j, path, "speed").get<double>();
    p.crossing = require(j, path, "crossing").get<bool>();
    return p;
}

inline std::vector<double> as_weights(const json& j, const std::string& path) {
    if (!j.is_array()) throw ConfigError("'" + path + "' must be an array");
    return j.get<std::vector<double>>();
}

/// Fixed shortest-round-trip formatting so traces are byte-reproducible.
inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace io_detail

inline ScenarioConfig parse_scenario(const nlohmann::json& j) {
    using io_detail::as_polyline;
    using io_detail::as_vec2;
    using io_detail::as_weights;
    using io_detail::reject_unknown;
    using io_detail::require;

    reject_unknown(j, "scenario",
                   {"map", "agents", "pedestrian", "hypotheses", "social_hypotheses",
                    "planner", "inference", "sim"});
    ScenarioConfig cfg;

    const auto& map = require(j, "scenario", "map");
    reject_unknown(map, "map", {"robot_lane", "human_lane", "static_occluders", "finish_x"});
    cfg.robot_lane = as_polyline(require(map, "map", "robot_lane"), "map.robot_lane");
    cfg.human_lane = as_polyline(require(map, "map", "human_lane"), "map.human_lane");
    if (map.contains("static_occluders")) {
        const auto& occ = map["static_occluders"];
        for (std::size_t i = 0; i < occ.size(); ++i) {
            Polygon poly;
            poly.vertices = as_polyline(occ[i], "map.static_occluders");
            poly.validate();
            cfg.static_occluders.push_back(poly);
        }
    }
    cfg.finish_x = require(map, "map", "finish_x").get<double>();

    const auto& agents = require(j, "scenario", "agents");
    reject_unknown(agents, "agents", {"robot", "humans", "vehicle"});
    cfg.init.robot = io_detail::as_agent(require(agents, "agents", "robot"), "agents.robot");
    for (const auto& h : require(agents, "agents", "humans"))
        cfg.init.humans.push_back(io_detail::as_agent(h, "agents.humans"));
    if (agents.contains("vehicle")) {
        const auto& v = agents["vehicle"];
        reject_unknown(v, "agents.vehicle",
                       {"lf", "lr", "a_max", "kappa_max", "steer_max", "v_lim", "length",
                        "width"});
        VehicleParams& p = cfg.params;
        if (v.contains("lf")) p.lf = v["lf"].get<double>();
        if (v.contains("lr")) p.lr = v["lr"].get<double>();
        if (v.contains("a_max")) p.a_max = v["a_max"].get<double>();
        if (v.contains("kappa_max")) p.kappa_max = v["kappa_max"].get<double>();
        if (v.contains("steer_max")) p.steer_max = v["steer_max"].get<double>();
        if (v.contains("v_lim")) p.v_lim = v["v_lim"].get<double>();
        if (v.contains("length")) p.length = v["length"].get<double>();
        if (v.contains("width")) p.width = v["width"].get<double>();
    }

    const auto& ped = require(j, "scenario", "pedestrian");
    reject_unknown(ped, "pedestrian",
                   {"present", "start", "direction", "speed", "appear_step", "exit_y"});
    cfg.ped.present = require(ped, "pedestrian", "present").get<bool>();
    if (ped.contains("start")) cfg.ped.start = as_vec2(ped["start"], "pedestrian.start");
    if (ped.contains("direction"))
        cfg.ped.direction = as_vec2(ped["direction"], "pedestrian.direction");
    if (ped.contains("speed")) cfg.ped.speed = ped["speed"].get<double>();
    if (ped.contains("appear_step")) cfg.ped.appear_step = ped["appear_step"].get<int>();
    if (ped.contains("exit_y")) cfg.ped.exit_y = ped["exit_y"].get<double>();

    const auto& hyp = require(j, "scenario", "hypotheses");
    reject_unknown(hyp, "hypotheses", {"prior", "ped_index", "region", "items"});
    cfg.prior_x = Belief{as_weights(require(hyp, "hypotheses", "prior"), "hypotheses.prior")};
    cfg.ped_hyp_index = require(hyp, "hypotheses", "ped_index").get<std::size_t>();
    for (const auto& q : require(hyp, "hypotheses", "region"))
        cfg.hyp_region.push_back(as_vec2(q, "hypotheses.region"));
    for (const auto& item : require(hyp, "hypotheses", "items")) {
        reject_unknown(item, "hypotheses.items", {"label", "peds"});
        StateHypothesisSpec spec;
        spec.label = require(item, "hypotheses.items", "label").get<std::string>();
        for (const auto& p : require(item, "hypotheses.items", "peds"))
            spec.peds.push_back(io_detail::as_ped(p, "hypotheses.items.peds"));
        cfg.state_hyps.push_back(spec);
    }

    const auto& soc = require(j, "scenario", "social_hypotheses");
    reject_unknown(soc, "social_hypotheses", {"prior", "items", "true_index"});
    if (soc.contains("true_index"))
        cfg.true_social_index = soc["true_index"].get<std::size_t>();
    cfg.prior_I =
        Belief{as_weights(require(soc, "social_hypotheses", "prior"), "social_hypotheses.prior")};
    for (const auto& item : require(soc, "social_hypotheses", "items")) {
        reject_unknown(item, "social_hypotheses.items", {"label", "v_traffic"});
        SocialHypothesis sh;
        sh.label = require(item, "social_hypotheses.items", "label").get<std::string>();
        sh.info.v_traffic =
            require(item, "social_hypotheses.items", "v_traffic").get<double>();
        cfg.shyps.hypotheses.push_back(sh);
    }

    const auto& pl = require(j, "scenario", "planner");
    reject_unknown(pl, "planner",
                   {"horizon", "theta", "epsilon", "lattice", "refine_iters", "beam_width",
                    "exhaustive_limit", "safety_radius_vehicle", "safety_radius_ped",
                    "static_margin"});
    cfg.planner.horizon = require(pl, "planner", "horizon").get<int>();
    cfg.planner.theta_R = as_weights(require(pl, "planner", "theta"), "planner.theta");
    if (pl.contains("epsilon")) cfg.planner.epsilon = pl["epsilon"].get<double>();
    if (pl.contains("lattice"))
        cfg.planner.lattice.accels = as_weights(pl["lattice"], "planner.lattice");
    if (pl.contains("refine_iters")) cfg.planner.refine_iters = pl["refine_iters"].get<int>();
    if (pl.contains("beam_width")) cfg.planner.beam_width = pl["beam_width"].get<int>();
    if (pl.contains("exhaustive_limit"))
        cfg.planner.exhaustive_limit = pl["exhaustive_limit"].get<std::size_t>();
    if (pl.contains("safety_radius_vehicle"))
        cfg.planner.safety_radius_vehicle = pl["safety_radius_vehicle"].get<double>();
    if (pl.contains("safety_radius_ped"))
        cfg.planner.safety_radius_ped = pl["safety_radius_ped"].get<double>();
    if (pl.contains("static_margin"))
        cfg.planner.static_margin = pl["static_margin"].get<double>();

    const auto& inf = require(j, "scenario", "inference");
    reject_unknown(inf, "inference",
                   {"theta_h", "lattice", "beta", "horizon", "dt", "proximity_cap",
                    "vehicle_radius", "ped_radius", "sensor_range", "informative_radius",
                    "theta_h_truth"});
    cfg.theta_H = as_weights(require(inf, "inference", "theta_h"), "inference.theta_h");
    if (inf.contains("lattice"))
        cfg.lattice.accels = as_weights(inf["lattice"], "inference.lattice");
    if (inf.contains("beta")) cfg.rationality.beta = inf["beta"].get<double>();
    if (inf.contains("horizon")) cfg.rationality.horizon = inf["horizon"].get<int>();
    if (inf.contains("dt")) cfg.inference_dt = inf["dt"].get<double>();
    if (inf.contains("proximity_cap"))
        cfg.cost_params.proximity_cap = inf["proximity_cap"].get<double>();
    if (inf.contains("vehicle_radius"))
        cfg.cost_params.vehicle_radius = inf["vehicle_radius"].get<double>();
    if (inf.contains("ped_radius")) cfg.cost_params.ped_radius = inf["ped_radius"].get<double>();
    if (inf.contains("sensor_range")) cfg.sensor_range = inf["sensor_range"].get<double>();
    if (inf.contains("informative_radius"))
        cfg.informative_radius = inf["informative_radius"].get<double>();
    if (inf.contains("theta_h_truth"))
        cfg.theta_H_truth = as_weights(inf["theta_h_truth"], "inference.theta_h_truth");

    const auto& sim = require(j, "scenario", "sim");
    reject_unknown(sim, "sim", {"dt", "max_steps", "seed", "human_noise_sigma"});
    cfg.dt = require(sim, "sim", "dt").get<double>();
    cfg.planner.dt = cfg.dt;
    cfg.max_steps = require(sim, "sim", "max_steps").get<int>();
    if (sim.contains("seed")) cfg.seed = sim["seed"].get<unsigned>();
    if (sim.contains("human_noise_sigma"))
        cfg.human_noise_sigma = sim["human_noise_sigma"].get<double>();

    cfg.validate();
    return cfg;
}

inline ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("scenario '" + path + "': " + e.what());
    }
    try {
        return parse_scenario(j);
    } catch (const std::domain_error& e) {
        throw ConfigError("scenario '" + path + "': " + e.what());
    }
}

// ---------------------------------------------------------------- trace CSV

inline std::string trace_csv_header(const Trace& trace) {
    std::ostringstream h;
    h << "t,robot.x,robot.y,robot.heading,robot.v,robot.a,robot.steer";
    const TraceRecord& r0 = trace.records.front();
    for (std::size_t i = 0; i < r0.humans.size(); ++i) {
        h << ",human" << i << ".x,human" << i << ".y,human" << i << ".heading,human" << i
          << ".v,human" << i << ".a";
    }
    h << ",ped.x,ped.y,visible_ped,region_visible";
    for (std::size_t i = 0; i < r0.bel_x.size(); ++i) h << ",bel_x[" << i << "]";
    for (std::size_t i = 0; i < r0.bel_I.size(); ++i) h << ",bel_I[" << i << "]";
    h << ",expected_cost,min_margin,feasible";
    return h.str();
}

inline void write_trace_csv(const Trace& trace, const std::string& path) {
    if (trace.records.empty()) throw std::domain_error("write_trace_csv: empty trace");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    using io_detail::fmt;
    out << trace_csv_header(trace) << "\n";
    for (const TraceRecord& r : trace.records) {
        out << fmt(r.t) << ',' << fmt(r.robot.x) << ',' << fmt(r.robot.y) << ','
            << fmt(r.robot.heading) << ',' << fmt(r.robot.speed) << ',' << fmt(r.robot_u.accel)
            << ',' << fmt(r.robot_u.steer);
        for (std::size_t i = 0; i < r.humans.size(); ++i) {
            out << ',' << fmt(r.humans[i].x) << ',' << fmt(r.humans[i].y) << ','
                << fmt(r.humans[i].heading) << ',' << fmt(r.humans[i].speed) << ','
                << fmt(r.human_u[i].accel);
        }
        if (r.peds.empty()) {
            out << ",nan,nan";
        } else {
            out << ',' << fmt(r.peds.front().position.x) << ','
                << fmt(r.peds.front().position.y);
        }
        out << ',' << (r.ped_visible ? 1 : 0) << ',' << (r.region_visible ? 1 : 0);
        for (double b : r.bel_x) out << ',' << fmt(b);
        for (double b : r.bel_I) out << ',' << fmt(b);
        out << ',' << fmt(r.expected_cost) << ',' << fmt(r.min_margin) << ','
            << (r.plan_feasible ? 1 : 0) << "\n";
    }
}

/// Structured full-record form (one JSON object per line).
inline void write_trace_records(const Trace& trace, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    for (const TraceRecord& r : trace.records) {
        nlohmann::json j;
        j["t"] = r.t;
        j["robot"] = io_detail::agent_to_json(r.robot);
        j["robot_u"] = {{"accel", r.robot_u.accel}, {"steer", r.robot_u.steer}};
        j["humans"] = nlohmann::json::array();
        for (const auto& h : r.humans) j["humans"].push_back(io_detail::agent_to_json(h));
        j["human_u"] = nlohmann::json::array();
        for (const auto& u : r.human_u)
            j["human_u"].push_back({{"accel", u.accel}, {"steer", u.steer}});
        j["peds"] = nlohmann::json::array();
        for (const auto& p : r.peds)
            j["peds"].push_back({{"position", {p.position.x, p.position.y}},
                                 {"speed", p.speed},
                                 {"crossing", p.crossing}});
        j["ped_visible"] = r.ped_visible;
        j["region_visible"] = r.region_visible;
        j["bel_x"] = r.bel_x;
        j["bel_I"] = r.bel_I;
        j["expected_cost"] = r.expected_cost;
        j["min_margin"] = r.min_margin;
        j["feasible"] = r.plan_feasible;
        j["informative_humans"] = r.informative_humans;
        out << j.dump() << "\n";
    }
}

/// Re-parse a written CSV trace (round-trip checks).
struct ParsedCsv {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

inline ParsedCsv parse_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    ParsedCsv out;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) fields.push_back(f);
        if (first) {
            out.header = fields;
            first = false;
        } else {
            out.rows.push_back(fields);
        }
    }
    return out;
}

// ------------------------------------------------------------ metrics / plots

inline void write_metrics(const Metrics& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    using io_detail::fmt;
    out << "collision: " << (m.collision ? "true" : "false") << "\n";
    out << "min_gap: " << fmt(m.min_gap) << "\n";
    out << "avg_robot_speed: " << fmt(m.avg_robot_speed) << "\n";
    out << "peak_decel: " << fmt(m.peak_decel) << "\n";
    out << "steps_to_goal: " << m.steps_to_goal << "\n";
    out << "belief_lead_time: " << m.belief_lead_time << "\n";
}

inline void write_speed_series(const Trace& trace, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << "t,robot_speed";
    if (!trace.records.empty())
        for (std::size_t i = 0; i < trace.records.front().humans.size(); ++i)
            out << ",human" << i << "_speed";
    out << "\n";
    for (const TraceRecord& r : trace.records) {
        out << io_detail::fmt(r.t) << ',' << io_detail::fmt(r.robot.speed);
        for (const auto& h : r.humans) out << ',' << io_detail::fmt(h.speed);
        out << "\n";
    }
}

inline void write_belief_series(const Trace& trace, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << "t";
    if (!trace.records.empty()) {
        for (std::size_t i = 0; i < trace.records.front().bel_x.size(); ++i)
            out << ",bel_x[" << i << "]";
        for (std::size_t i = 0; i < trace.records.front().bel_I.size(); ++i)
            out << ",bel_I[" << i << "]";
        out << ",visible_ped";
    }
    out << "\n";
    for (const TraceRecord& r : trace.records) {
        out << io_detail::fmt(r.t);
        for (double b : r.bel_x) out << ',' << io_detail::fmt(b);
        for (double b : r.bel_I) out << ',' << io_detail::fmt(b);
        out << ',' << (r.ped_visible ? 1 : 0) << "\n";
    }
}

// ------------------------------------------------------------- demos / weights

inline nlohmann::json demo_to_json(const Demonstration& d) {
    nlohmann::json j;
    j["x0"]["robot"] = io_detail::agent_to_json(d.x0.robot);
    j["x0"]["humans"] = nlohmann::json::array();
    for (const auto& h : d.x0.humans) j["x0"]["humans"].push_back(io_detail::agent_to_json(h));
    j["x0"]["peds"] = nlohmann::json::array();
    for (const auto& p : d.x0.pedestrians)
        j["x0"]["peds"].push_back({{"position", {p.position.x, p.position.y}},
                                   {"speed", p.speed},
                                   {"crossing", p.crossing}});
    j["info"] = {{"v_traffic", d.info.v_traffic}};
    j["u_R"] = nlohmann::json::array();
    for (const auto& u : d.u_R) j["u_R"].push_back({{"accel", u.accel}, {"steer", u.steer}});
    j["u_H"] = nlohmann::json::array();
    for (const auto& u : d.u_H) j["u_H"].push_back({{"accel", u.accel}, {"steer", u.steer}});
    j["human_index"] = d.human_index;
    j["dt"] = d.dt;
    return j;
}

inline Demonstration demo_from_json(const nlohmann::json& j) {
    Demonstration d;
    const auto& x0 = io_detail::require(j, "demo", "x0");
    d.x0.robot = io_detail::as_agent(io_detail::require(x0, "demo.x0", "robot"), "demo.x0.robot");
    if (x0.contains("humans"))
        for (const auto& h : x0["humans"])
            d.x0.humans.push_back(io_detail::as_agent(h, "demo.x0.humans"));
    if (x0.contains("peds")) {
        for (const auto& p : x0["peds"]) {
            Pedestrian ped;
            ped.position = io_detail::as_vec2(p.at("position"), "demo.x0.peds.position");
            ped.speed = p.at("speed").get<double>();
            ped.crossing = p.at("crossing").get<bool>();
            d.x0.pedestrians.push_back(ped);
        }
    }
    d.info.v_traffic = io_detail::require(j, "demo", "info").at("v_traffic").get<double>();
    for (const auto& u : io_detail::require(j, "demo", "u_R")) {
        Control c;
        c.accel = u.at("accel").get<double>();
        c.steer = u.at("steer").get<double>();
        d.u_R.push_back(c);
    }
    for (const auto& u : io_detail::require(j, "demo", "u_H")) {
        Control c;
        c.accel = u.at("accel").get<double>();
        c.steer = u.at("steer").get<double>();
        d.u_H.push_back(c);
    }
    if (j.contains("human_index")) d.human_index = j["human_index"].get<std::size_t>();
    d.dt = io_detail::require(j, "demo", "dt").get<double>();
    return d;
}

inline void write_demos(const std::vector<Demonstration>& demos, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    for (const auto& d : demos) out << demo_to_json(d).dump() << "\n";
}

/// Line-delimited demo records; malformed lines raise ConfigError naming the line.
inline std::vector<Demonstration> read_demos(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open demo file '" + path + "'");
    std::vector<Demonstration> demos;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            demos.push_back(demo_from_json(nlohmann::json::parse(line)));
        } catch (const std::exception& e) {
            throw ConfigError("demo file '" + path + "' line " + std::to_string(lineno) +
                              ": " + e.what());
        }
    }
    if (demos.empty()) throw ConfigError("demo file '" + path + "' contains no records");
    return demos;
}

inline void write_weights(const Weights& theta, const std::vector<std::string>& names,
                          const std::string& path) {
    if (theta.size() != names.size())
        throw std::invalid_argument("write_weights: name/weight arity mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    for (std::size_t i = 0; i < theta.size(); ++i)
        out << names[i] << ": " << io_detail::fmt(theta[i]) << "\n";
}

inline Weights read_weights(const std::string& path, const std::vector<std::string>& names) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open weight file '" + path + "'");
    Weights theta(names.size(), 0.0);
    std::vector<bool> seen(names.size(), false);
    std::string line;
    while (std::getline(in, line)) {
        const auto colon = line.find(':');
        if (colon == std::string::npos) continue;
        const std::string name = line.substr(0, colon);
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (names[i] == name) {
                theta[i] = std::stod(line.substr(colon + 1));
                seen[i] = true;
            }
        }
    }
    for (std::size_t i = 0; i < names.size(); ++i)
        if (!seen[i]) throw ConfigError("weight file '" + path + "' missing '" + names[i] + "'");
    return theta;
}

}  // namespace occlusim

#endif  // OCCLUSIM_IO_HPP
