// Command-line front end: `gbb run` plans a grasp, `gbb verify` re-checks a solution document.
#include "gbb/scene.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

enum Exit { kOk = 0, kInputError = 1, kInfeasible = 2, kIncomplete = 3 };

void add_scene_options(CLI::App* cmd, gbb::ScenePaths& paths) {
  cmd->add_option("--object", paths.object, "Object mesh (.obj or .off)")->required();
  cmd->add_option("--convex-pieces", paths.convex_pieces, "Convex pieces: one line of vertex indices per piece");
  cmd->add_option("--gripper", paths.gripper, "Gripper config (JSON)")->required();
}

int run(const gbb::ScenePaths& paths, gbb::RunParameters params, const gbb::PlannerConfig& overrides,
        const std::string& out_path, const std::string& history_path) {
  gbb::Scene scene = gbb::load_scene(paths, params);
  gbb::PlannerConfig cfg = gbb::planner_config(scene, params);
  cfg.q_stop = overrides.q_stop;
  cfg.node_budget = overrides.node_budget;
  cfg.all_grasps = overrides.all_grasps;
  cfg.threads = overrides.threads;
  cfg.record_wall_time = overrides.record_wall_time;
  gbb::Planner planner(scene.tree, scene.pieces, scene.gripper, scene.grid, *scene.object_grid, cfg);
  params.workspace = planner.base().workspace;
  params.collision_tol = planner.collision_tol();
  const gbb::PlanResult res = planner.plan();

  const auto doc = gbb::solution_document(res, scene.gripper, scene.points, params);
  if (out_path.empty()) {
    std::cout << doc.dump(2) << "\n";
  } else {
    std::ofstream out(out_path);
    if (!out) throw gbb::Error(out_path + ": cannot write solution document");
    out << doc.dump(2) << "\n";
  }
  if (!history_path.empty()) {
    std::ofstream out(history_path);
    if (!out) throw gbb::Error(history_path + ": cannot write history table");
    gbb::write_history(out, res.history);
  }
  std::cerr << "status " << gbb::to_string(res.status) << ", nodes " << res.nodes << ", MICP solves "
            << res.micp_solves << ", cut " << res.nodes_cut;
  if (res.best) std::cerr << ", Q " << res.best->quality;
  std::cerr << "\n";
  switch (res.status) {
    case gbb::PlanStatus::Optimal: return kOk;
    case gbb::PlanStatus::Infeasible: return kInfeasible;
    case gbb::PlanStatus::Incomplete: return kIncomplete;
  }
  return kIncomplete;
}

int verify(const gbb::ScenePaths& paths, const std::string& solution_path) {
  const gbb::LoadedSolution sol = gbb::load_solution_file(solution_path);
  if (!sol.solution) {
    std::cout << "no solution in " << solution_path << " (status " << sol.status << ")\n";
    return kInfeasible;
  }
  gbb::Scene scene = gbb::load_scene(paths, sol.params);
  const auto rep = gbb::verify_solution(*sol.solution, scene.gripper, scene.points, scene.pieces,
                                        gbb::verify_settings(scene, sol.params));
  gbb::print_report(std::cout, rep);
  return rep.all_pass() ? kOk : kInfeasible;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Globally optimal grasp planning by two-level branch-and-bound"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML or INI file with option values");

  gbb::ScenePaths paths;
  gbb::RunParameters params;
  gbb::PlannerConfig overrides;
  double q_stop = 0.0;
  bool no_wall_time = false;
  std::string out_path, history_path, solution_path;

  CLI::App* run_cmd = app.add_subcommand("run", "Plan a grasp");
  add_scene_options(run_cmd, paths);
  run_cmd->add_option("--points", params.points, "Sampled grasp points P")->capture_default_str();
  run_cmd->add_option("--cells", params.cells, "Grid cells N per joint dimension")->capture_default_str();
  run_cmd->add_option("--sep-dirs", params.sep_dirs, "Separating directions S")->capture_default_str();
  run_cmd->add_option("--normal-eps", params.normal_eps, "Normal threshold eps")->capture_default_str();
  run_cmd->add_option("--mu", params.mu, "Friction coefficient")->capture_default_str();
  run_cmd->add_option("--cone-edges", params.cone_edges, "Friction cone edges")->capture_default_str();
  run_cmd->add_option("--seed", params.seed, "Sampling seed")->capture_default_str();
  run_cmd->add_option("--scale", params.scale, "Object scale factor")->capture_default_str();
  auto* q_stop_opt = run_cmd->add_option("--q-stop", q_stop, "Stop once the best quality reaches this value");
  run_cmd->add_option("--node-budget", overrides.node_budget, "High-level node budget")->capture_default_str();
  run_cmd->add_flag("--all-grasps", overrides.all_grasps, "Keep every feasible leaf (disables quality pruning)");
  run_cmd->add_option("--out", out_path, "Solution document (default: stdout)");
  run_cmd->add_option("--history", history_path, "Convergence history table (CSV)");
  run_cmd->add_option("--threads", overrides.threads, "Parallel leaf checks")->capture_default_str();
  run_cmd->add_flag("--no-wall-time", no_wall_time, "Write 0 in the wall_ms column");

  CLI::App* verify_cmd = app.add_subcommand("verify", "Re-check a solution document");
  add_scene_options(verify_cmd, paths);
  verify_cmd->add_option("--solution", solution_path, "Solution document")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kInputError;
  }

  try {
    if (*run_cmd) {
      if (*q_stop_opt) overrides.q_stop = q_stop;
      overrides.record_wall_time = !no_wall_time;
      return run(paths, params, overrides, out_path, history_path);
    }
    return verify(paths, solution_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
}
