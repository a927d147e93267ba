#pragma once
// Small planning instances shared by the unit and acceptance suites.

#include "oracles.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace scenario {

using namespace gbb;

inline std::string data(const std::string& name) { return std::string(GBB_DATA_DIR) + "/" + name; }

/// Box object, P = 8 samples, grid N = 2, S = 8 separating directions.
inline RunParameters box_params(double scale = 1.0) {
  RunParameters p;
  p.points = 8;
  p.cells = 2;
  p.sep_dirs = 8;
  p.scale = scale;
  return p;
}

inline Scene box_scene(const std::string& gripper, double scale = 1.0) {
  return load_scene({data("box.obj"), "", data(gripper)}, box_params(scale));
}

inline Planner planner_for(const Scene& s, const RunParameters& p) {
  return Planner(s.tree, s.pieces, s.gripper, s.grid, *s.object_grid, planner_config(s, p));
}

/// Best quality over every ordered assignment of distinct points whose leaf tuple is feasible.
inline double enumerate_best(const Scene& s, const Planner& planner, int* feasible = nullptr) {
  const int n = int(s.points.size());
  double best = -std::numeric_limits<double>::infinity();
  int count = 0;
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      if (a == b) continue;
      const auto r = planner.low_level_feasible({s.tree.leaf_of(a), s.tree.leaf_of(b)});
      if (r.status != LowLevel::True) continue;
      ++count;
      best = std::max(best, q1(GraspPointSet{s.points[a], s.points[b]}, s.contact));
    }
  }
  if (feasible) *feasible = count;
  return best;
}

/// Grasp points reached by the fingertips at grid corner `theta` with the object at rotation corner `w`, t = 0.
inline std::vector<GraspPoint> corner_targets(const GripperModel& m, const std::vector<double>& theta, const Vec3& w) {
  const auto poses = m.forward_kinematics(theta);
  const Mat3 r = rodrigues_exp(w);
  std::vector<GraspPoint> out;
  for (const auto& f : m.fingers) {
    const auto& tip = poses[f.tip_link];
    out.push_back({r.transpose() * tip.apply(f.tip_point), r.transpose() * (tip.rotation * f.tip_normal)});
  }
  return out;
}

/// Random grid corner of the joint box.
inline std::vector<double> random_corner(const GripperModel& m, int cells, std::mt19937_64& rng) {
  std::vector<double> theta(m.total_dof());
  for (const auto& f : m.fingers) {
    for (int d = 0; d < f.dof; ++d) theta[f.dof_offset + d] = grid_knot(f.lower[d], f.upper[d], int(rng() % (cells + 1)), cells);
  }
  return theta;
}

inline Vec3 random_rotation_corner(int cells, std::mt19937_64& rng) {
  Vec3 w;
  for (int d = 0; d < 3; ++d) w[d] = grid_knot(-std::numbers::pi, std::numbers::pi, int(rng() % (cells + 1)), cells);
  return w;
}

/**
 * @brief Two-finger pinch of a tall slab. At the rest pose the slab clears
 * the palm; the same fingertip placements with the slab flipped about x
 * drive it 0.2 into the palm.
 */
struct SlabPinch {
  GraspPointSet points{{Vec3(0.2, 0, 0.6), Vec3(-1, 0, 0)}, {Vec3(-0.2, 0, 0.6), Vec3(1, 0, 0)}};
  GripperModel gripper = load_gripper_file(data("two_finger.json"));
  RotationGrid grid = precompute_rotation_grid(gripper, 2);
  ObjectRotationGrid object_grid{2};
  KdTree tree = build_kdtree(points);
  std::vector<ConvexBody> pieces;

  SlabPinch() {
    ConvexBody slab;
    for (int i = 0; i < 8; ++i) slab.vertices.emplace_back(i & 1 ? 0.2 : -0.2, i & 2 ? 0.05 : -0.05, i & 4 ? 1.4 : 0.55);
    pieces.push_back(slab);
  }

  [[nodiscard]] PlannerConfig config() const {
    PlannerConfig cfg;
    cfg.ik.cells = 2;
    cfg.ik.sep_dirs = 8;
    cfg.contact = ContactModel::for_points(points);
    return cfg;
  }

  [[nodiscard]] std::vector<int> leaves() const { return {tree.leaf_of(0), tree.leaf_of(1)}; }

  [[nodiscard]] std::vector<double> rest() const { return std::vector<double>(gripper.total_dof(), 0.0); }
};

/// Fixes the object rotation to the identity grid corner.
inline void pin_object_identity(IkProgram& ik) {
  const TensorGrid& g = ik.object_grid->grid;
  for (std::int64_t k = 0; k < g.size(); ++k) {
    if ((ik.object_grid->rotations[k] - Mat3::Identity()).norm() == 0.0) {
      ik.prog.add_linear({{ik.beta[k], 1.0}}, Sense::Eq, 1.0, "object.identity");
      return;
    }
  }
  throw Error("object rotation grid has no identity corner");
}

inline double program_penetration(const IkProgram& ik, const std::vector<double>& x) {
  std::vector<RigidTransform> poses(ik.model->links.size());
  for (int l = 0; l < ik.model->num_links(); ++l) poses[l] = ik.pose({false, l}, x);
  return max_penetration(ik, poses, ik.pose({true, 0}, x));
}

inline int run_cli(const std::string& args) {
  const std::string cmd = std::string(GBB_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

inline std::string box_files(const std::string& gripper = "two_finger.json") {
  return "--object " + data("box.obj") + " --gripper " + data(gripper);
}

inline std::string box_cli_args(const std::string& gripper = "two_finger.json") {
  return box_files(gripper) + " --points 8 --cells 2 --sep-dirs 8";
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace scenario
