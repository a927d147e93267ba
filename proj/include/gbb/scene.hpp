#pragma once

#include "gbb/planner.hpp"
#include "gbb/solution_io.hpp"
#include "gbb/verify.hpp"

#include <memory>
#include <string>

namespace gbb {

struct ScenePaths {
  std::string object;
  std::string convex_pieces;  // empty: hull of the whole mesh
  std::string gripper;
};

/// Everything the planner needs, built from files and run parameters.
struct Scene {
  TriangleMesh mesh;
  std::vector<ConvexBody> pieces;
  GraspPointSet points;
  KdTree tree;
  GripperModel gripper;
  RotationGrid grid;
  std::unique_ptr<ObjectRotationGrid> object_grid;
  ContactModel contact;
};

inline Scene load_scene(const ScenePaths& paths, const RunParameters& p) {
  if (p.points < 1) throw Error("--points must be >= 1");
  if (p.cells < 1) throw Error("--cells must be >= 1");
  if (p.sep_dirs < 2) throw Error("--sep-dirs must be >= 2");
  if (!(p.normal_eps >= 0.0 && p.normal_eps <= 4.0)) throw Error("--normal-eps must lie in [0, 4]");
  if (!(p.mu > 0.0)) throw Error("--mu must be > 0");
  if (p.cone_edges < 3) throw Error("--cone-edges must be >= 3");
  if (!(p.scale > 0.0)) throw Error("--scale must be > 0");
  Scene s;
  s.mesh = load_mesh(paths.object);
  for (auto& v : s.mesh.vertices) v *= p.scale;
  s.pieces = paths.convex_pieces.empty() ? std::vector<ConvexBody>{whole_mesh_body(s.mesh)}
                                         : load_convex_pieces(paths.convex_pieces, s.mesh);
  s.gripper = load_gripper_file(paths.gripper);
  if (p.points < s.gripper.num_fingers()) throw Error("--points must be at least the number of fingertips");
  s.points = sample_surface(s.mesh, p.points, p.seed);
  s.tree = build_kdtree(s.points);
  s.grid = precompute_rotation_grid(s.gripper, p.cells);
  s.object_grid = std::make_unique<ObjectRotationGrid>(p.cells);
  s.contact = ContactModel::for_points(s.points, p.mu, p.cone_edges);
  return s;
}

inline PlannerConfig planner_config(const Scene& s, const RunParameters& p) {
  PlannerConfig cfg;
  cfg.ik.cells = p.cells;
  cfg.ik.eps = p.normal_eps;
  cfg.ik.sep_dirs = p.sep_dirs;
  cfg.contact = s.contact;
  return cfg;
}

inline VerifySettings verify_settings(const Scene& s, const RunParameters& p) {
  VerifySettings v;
  v.normal_eps = p.normal_eps;
  v.contact = s.contact;
  v.workspace = default_workspace(s.gripper, s.grid, s.pieces);
  v.collision_tol = 1e-4 * object_radius(s.pieces);
  return v;
}

}  // namespace gbb
