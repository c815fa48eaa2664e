// Command-line front end: scenario runs, IRL training, planner comparison.
#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "occlusim/io.hpp"
#include "occlusim/sim.hpp"

namespace {

int log_level() {
    const char* env = std::getenv("OCCLUSIM_LOG");
    if (!env) return 1;
    const std::string v = env;
    if (v == "0" || v == "error" || v == "quiet") return 0;
    if (v == "2" || v == "debug") return 2;
    return 1;
}

void log_info(const std::string& msg) {
    if (log_level() >= 1) std::cerr << "[occlusim] " << msg << "\n";
}

void log_debug(const std::string& msg) {
    if (log_level() >= 2) std::cerr << "[occlusim:debug] " << msg << "\n";
}

occlusim::PlannerKind parse_kind(const std::string& name) {
    if (name == "social") return occlusim::PlannerKind::social;
    if (name == "aggressive") return occlusim::PlannerKind::aggressive;
    if (name == "conservative") return occlusim::PlannerKind::conservative;
    throw occlusim::ConfigError("unknown planner '" + name +
                                "' (expected social|aggressive|conservative)");
}

struct RunOutput {
    occlusim::Trace trace;
    occlusim::Metrics metrics;
};

RunOutput run_and_write(const occlusim::ScenarioConfig& cfg, occlusim::PlannerKind kind,
                        const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    RunOutput out;
    out.trace = occlusim::run_scenario(cfg, kind);
    out.metrics = occlusim::compute_metrics(out.trace, cfg);
    occlusim::write_trace_csv(out.trace, (out_dir / "trace.csv").string());
    occlusim::write_trace_records(out.trace, (out_dir / "trace_records.jsonl").string());
    occlusim::write_metrics(out.metrics, (out_dir / "metrics.txt").string());
    occlusim::write_speed_series(out.trace, (out_dir / "speed_vs_time.csv").string());
    occlusim::write_belief_series(out.trace, (out_dir / "belief_vs_time.csv").string());
    return out;
}

occlusim::ScenarioConfig load_with_overrides(const std::string& scenario_path, int seed,
                                             int steps) {
    occlusim::ScenarioConfig cfg = occlusim::load_scenario(scenario_path);
    if (seed >= 0) cfg.seed = static_cast<unsigned>(seed);
    if (steps > 0) cfg.max_steps = steps;
    return cfg;
}

int cmd_run(const std::string& scenario, const std::string& planner, int seed,
            const std::string& out, int steps) {
    const occlusim::ScenarioConfig cfg = load_with_overrides(scenario, seed, steps);
    const occlusim::PlannerKind kind = parse_kind(planner);
    log_info("running scenario '" + scenario + "' with " + occlusim::to_string(kind) +
             " planner");
    const RunOutput r = run_and_write(cfg, kind, out);
    log_info("steps: " + std::to_string(r.trace.records.size()) +
             ", collision: " + (r.metrics.collision ? "true" : "false"));
    return r.metrics.collision ? 3 : 0;
}

int cmd_train_irl(const std::string& demos_path, const std::string& init_path,
                  const std::string& out) {
    const std::vector<occlusim::Demonstration> demos = occlusim::read_demos(demos_path);
    log_info("loaded " + std::to_string(demos.size()) + " demonstrations");
    const std::vector<std::string> names(occlusim::kHumanFeatureNames.begin(),
                                         occlusim::kHumanFeatureNames.end());
    occlusim::Weights theta0(names.size(), 0.5);
    occlusim::LaplaceIrl irl(demos);
    if (!init_path.empty()) {
        theta0 = occlusim::read_weights(init_path, names);
        log_info("initial objective: " + std::to_string(irl.neg_log_likelihood(theta0)));
    }
    const occlusim::IrlResult res = irl.learn(theta0);
    std::filesystem::create_directories(out);
    const std::string weight_path = (std::filesystem::path(out) / "weights.txt").string();
    occlusim::write_weights(res.theta_star, names, weight_path);
    std::cout << "final gradient norm: " << res.gradient_norm << "\n";
    std::cout << "iterations: " << res.iterations << "\n";
    std::cout << "converged: " << (res.converged ? "true" : "false") << "\n";
    log_info("weights written to " + weight_path);
    return 0;
}

int cmd_compare(const std::string& scenario, int seed, const std::string& out, int steps) {
    const occlusim::ScenarioConfig cfg = load_with_overrides(scenario, seed, steps);
    const std::vector<occlusim::PlannerKind> kinds = {occlusim::PlannerKind::social,
                                                      occlusim::PlannerKind::aggressive,
                                                      occlusim::PlannerKind::conservative};
    std::vector<RunOutput> results(kinds.size());
    std::vector<std::thread> workers;
    for (std::size_t i = 0; i < kinds.size(); ++i) {
        workers.emplace_back([&, i] {
            results[i] = run_and_write(
                cfg, kinds[i], std::filesystem::path(out) / occlusim::to_string(kinds[i]));
        });
    }
    for (auto& w : workers) w.join();

    std::filesystem::create_directories(out);
    const std::string table_path = (std::filesystem::path(out) / "comparison.txt").string();
    std::ofstream table(table_path, std::ios::binary);
    table << "planner collision min_gap avg_robot_speed peak_decel steps_to_goal "
             "belief_lead_time\n";
    for (std::size_t i = 0; i < kinds.size(); ++i) {
        const occlusim::Metrics& m = results[i].metrics;
        table << occlusim::to_string(kinds[i]) << ' ' << (m.collision ? "true" : "false")
              << ' ' << m.min_gap << ' ' << m.avg_robot_speed << ' ' << m.peak_decel << ' '
              << m.steps_to_goal << ' ' << m.belief_lead_time << "\n";
    }
    log_info("comparison table written to " + table_path);
    return results[0].metrics.collision ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"occlusim: occlusion-aware planning with behavior-based inference"};
    app.require_subcommand(1);

    std::string scenario, planner = "social", out = ".", demos_path, init_path;
    int seed = -1, steps = -1;

    CLI::App* run = app.add_subcommand("run", "run one scenario with one planner");
    run->add_option("--scenario", scenario, "scenario config file")->required();
    run->add_option("--planner", planner, "social|aggressive|conservative");
    run->add_option("--seed", seed, "override scenario seed");
    run->add_option("--out", out, "output directory");
    run->add_option("--steps", steps, "override max steps");

    CLI::App* train = app.add_subcommand("train-irl", "learn human cost weights from demos");
    train->add_option("--demos", demos_path, "demonstration file (one record per line)")
        ->required();
    train->add_option("--init", init_path, "initial weight file");
    train->add_option("--out", out, "output directory");

    CLI::App* compare = app.add_subcommand("compare", "run all three planners");
    compare->add_option("--scenario", scenario, "scenario config file")->required();
    compare->add_option("--seed", seed, "override scenario seed");
    compare->add_option("--out", out, "output directory");
    compare->add_option("--steps", steps, "override max steps");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (run->parsed()) return cmd_run(scenario, planner, seed, out, steps);
        if (train->parsed()) return cmd_train_irl(demos_path, init_path, out);
        if (compare->parsed()) return cmd_compare(scenario, seed, out, steps);
    } catch (const occlusim::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
