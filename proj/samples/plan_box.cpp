// Plans a two-finger grasp on a small box and prints the result.
#include "gbb/gbb.hpp"

#include <iostream>

int main() {
  const std::string data = GBB_DATA_DIR;
  gbb::ScenePaths paths;
  paths.object = data + "/box.obj";
  paths.gripper = data + "/two_finger.json";
  gbb::RunParameters params;
  params.points = 8;
  params.cells = 2;
  params.sep_dirs = 8;

  try {
    gbb::Scene scene = gbb::load_scene(paths, params);
    gbb::Planner planner(scene.tree, scene.pieces, scene.gripper, scene.grid, *scene.object_grid,
                         gbb::planner_config(scene, params));
    const gbb::PlanResult res = planner.plan();
    std::cout << "status: " << gbb::to_string(res.status) << "\n"
              << "nodes: " << res.nodes << ", MICP solves: " << res.micp_solves << "\n";
    if (!res.best) return 2;
    const auto& s = *res.best;
    std::cout << "quality: " << s.quality << "\ncontacts:";
    for (int p : s.assignment) std::cout << " " << p;
    std::cout << "\nfingertip residual: " << s.max_residual << "\n";
    const auto rep = gbb::verify_solution(s, scene.gripper, scene.points, scene.pieces,
                                          gbb::verify_settings(scene, params));
    gbb::print_report(std::cout, rep);
    return rep.all_pass() ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
