#pragma once

#include "gbb/bounding.hpp"
#include "gbb/conic_program.hpp"
#include "gbb/convex.hpp"
#include "gbb/gripper.hpp"
#include "gbb/pointset.hpp"

#include <array>
#include <map>
#include <numbers>
#include <string>
#include <vector>

namespace gbb {

/// Deterministic, nearly uniform unit directions on the sphere.
inline std::vector<Vec3> fibonacci_directions(int count) {
  if (count < 1) throw Error("fibonacci_directions: count must be >= 1");
  std::vector<Vec3> dirs;
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int k = 0; k < count; ++k) {
    const double z = 1.0 - (2.0 * k + 1.0) / count;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * k;
    dirs.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
  }
  return dirs;
}

struct IkConfig {
  int cells = 8;
  double eps = 0.05;
  int sep_dirs = 64;
  std::vector<Vec3> directions;  // empty: Fibonacci set of sep_dirs
  double big_m = 0.0;            // 0: derived from the workspace
  double workspace = 0.0;        // half-width of the object translation box; 0: derived

  void validate() const {
    if (cells < 1) throw Error("ik config: cells must be >= 1");
    if (!(eps >= 0.0 && eps <= 4.0)) throw Error("ik config: eps must lie in [0, 4]");
    if (directions.empty() && sep_dirs < 2) throw Error("ik config: need at least 2 separating directions");
    for (std::size_t i = 0; i < directions.size(); ++i) {
      if (std::abs(directions[i].norm() - 1.0) > 1e-9) throw Error("ik config: separating direction is not unit");
      for (std::size_t j = 0; j < i; ++j) {
        if ((directions[i] - directions[j]).norm() < 1e-12) throw Error("ik config: duplicate separating direction");
      }
    }
  }
};

/// A body in the scene: an object piece or a gripper link.
struct BodyRef {
  bool object = false;
  int index = 0;

  auto operator<=>(const BodyRef&) const = default;
};

/// Pose variables of one body (all -1 for the fixed palm).
struct PoseVars {
  std::array<int, 9> r{-1, -1, -1, -1, -1, -1, -1, -1, -1};  // row-major
  std::array<int, 3> t{-1, -1, -1};

  [[nodiscard]] bool fixed() const { return r[0] < 0; }
};

struct IkConstraintSpec {
  enum class Kind { Point, Sphere, Normal };
  Kind kind = Kind::Point;
  int finger = 0;
  Vec3 target = Vec3::Zero();  // object-frame point / center / axis
  double bound = 0.0;          // squared radius or squared chord
};

/**
 * @brief The IK feasibility program for one gripper/object pair.
 *
 * Link poses are convex combinations of grid poses selected by SOS2
 * marginals; the object rotation is a convex combination of exp(w) over a
 * grid on [-pi, pi]^3 and its translation lives in a box.
 */
struct IkProgram {
  ConicProgram prog;
  const GripperModel* model = nullptr;
  const RotationGrid* grid = nullptr;
  const ObjectRotationGrid* object_grid = nullptr;
  std::vector<ConvexBody> object_pieces;
  IkConfig cfg;
  std::vector<Vec3> directions;
  double workspace = 0.0;
  double big_m = 0.0;

  std::vector<PoseVars> links;
  PoseVars object;
  std::vector<std::vector<int>> lambda;                  // [finger][flat grid index]
  std::vector<std::vector<std::vector<int>>> marginals;  // [finger][dof][knot]
  std::vector<int> beta;
  std::vector<std::vector<int>> beta_marginals;          // [axis][knot]
  std::vector<IkConstraintSpec> specs;
  std::map<std::pair<BodyRef, BodyRef>, std::vector<int>> gammas;

  [[nodiscard]] AffineExpr rot(const BodyRef& b, int row, int col) const {
    const PoseVars& pv = b.object ? object : links.at(b.index);
    AffineExpr e;
    if (pv.fixed()) {
      e.constant = row == col ? 1.0 : 0.0;
    } else {
      e.add(pv.r[3 * row + col], 1.0);
    }
    return e;
  }

  [[nodiscard]] AffineExpr trans(const BodyRef& b, int k) const {
    const PoseVars& pv = b.object ? object : links.at(b.index);
    AffineExpr e;
    if (!pv.fixed()) e.add(pv.t[k], 1.0);
    return e;
  }

  /// World coordinates of body-local point x, one expression per axis.
  [[nodiscard]] std::array<AffineExpr, 3> point(const BodyRef& b, const Vec3& x) const {
    std::array<AffineExpr, 3> out;
    for (int r = 0; r < 3; ++r) {
      out[r] = trans(b, r);
      for (int c = 0; c < 3; ++c) out[r].add(rot(b, r, c), x[c]);
    }
    return out;
  }

  /// World direction of body-local vector d.
  [[nodiscard]] std::array<AffineExpr, 3> direction(const BodyRef& b, const Vec3& d) const {
    std::array<AffineExpr, 3> out;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) out[r].add(rot(b, r, c), d[c]);
    }
    return out;
  }

  [[nodiscard]] BodyRef tip(int finger) const { return {false, model->fingers.at(finger).tip_link}; }

  [[nodiscard]] const ConvexBody& body(const BodyRef& b) const {
    return b.object ? object_pieces.at(b.index) : model->links.at(b.index).body;
  }

  /// Pose of a body read from a solution vector.
  [[nodiscard]] RigidTransform pose(const BodyRef& b, const std::vector<double>& x) const {
    const PoseVars& pv = b.object ? object : links.at(b.index);
    RigidTransform t;
    if (pv.fixed()) return t;
    for (int k = 0; k < 9; ++k) t.rotation(k / 3, k % 3) = x[pv.r[k]];
    for (int k = 0; k < 3; ++k) t.translation[k] = x[pv.t[k]];
    return t;
  }

  /// Non-exempt collision pairs: object pieces against non-fingertip links,
  /// and link pairs not joined by a joint.
  [[nodiscard]] std::vector<std::pair<BodyRef, BodyRef>> collision_pairs() const {
    std::vector<std::pair<BodyRef, BodyRef>> out;
    for (int piece = 0; piece < int(object_pieces.size()); ++piece) {
      for (int l = 0; l < model->num_links(); ++l) {
        if (!model->is_tip_link(l)) out.push_back({{true, piece}, {false, l}});
      }
    }
    for (int a = 0; a < model->num_links(); ++a) {
      for (int b = a + 1; b < model->num_links(); ++b) {
        bool adjacent = false;
        for (const auto& j : model->joints) {
          adjacent = adjacent || (j.parent == a && j.child == b) || (j.parent == b && j.child == a);
        }
        if (!adjacent) out.push_back({{false, a}, {false, b}});
      }
    }
    return out;
  }
};

/// Largest vertex distance from the object frame origin.
inline double object_radius(const std::vector<ConvexBody>& pieces) {
  double r = 0.0;
  for (const auto& p : pieces) {
    for (const auto& v : p.vertices) r = std::max(r, v.norm());
  }
  return r;
}

/// Half-width of the object translation box: twice the gripper reach plus the object radius.
inline double default_workspace(const GripperModel& model, const RotationGrid& grid,
                                const std::vector<ConvexBody>& pieces) {
  return 2.0 * (gripper_reach(model, grid) + object_radius(pieces));
}

/**
 * @brief Base program: grid-interpolated link poses and object pose.
 *
 * Binary count is (intrinsic DOFs + 3) * ceil(log2 N).
 */
inline IkProgram build_base(const GripperModel& model, const RotationGrid& grid, const ObjectRotationGrid& object_grid,
                            std::vector<ConvexBody> object_pieces, const IkConfig& cfg) {
  cfg.validate();
  if (grid.cells != cfg.cells) {
    throw Error("build_base: rotation grid has " + std::to_string(grid.cells) + " cells, config asks for " +
                std::to_string(cfg.cells));
  }
  if (object_grid.grid.cells != cfg.cells) throw Error("build_base: object rotation grid cell count mismatch");
  if (object_pieces.empty()) throw Error("build_base: object has no convex pieces");
  IkProgram ik;
  ik.model = &model;
  ik.grid = &grid;
  ik.object_grid = &object_grid;
  ik.object_pieces = std::move(object_pieces);
  ik.cfg = cfg;
  ik.directions = cfg.directions.empty() ? fibonacci_directions(cfg.sep_dirs) : cfg.directions;
  const double reach = gripper_reach(model, grid);
  const double rho = object_radius(ik.object_pieces);
  ik.workspace = cfg.workspace > 0.0 ? cfg.workspace : default_workspace(model, grid, ik.object_pieces);
  ik.big_m = cfg.big_m > 0.0 ? cfg.big_m : 2.0 * (std::sqrt(3.0) * ik.workspace + rho + reach);
  ConicProgram& p = ik.prog;

  ik.links.assign(model.links.size(), PoseVars{});
  for (int f = 0; f < model.num_fingers(); ++f) {
    const Finger& fg = model.fingers[f];
    const TensorGrid& tg = grid.grids[f];
    const std::string fname = "f" + std::to_string(f);
    std::vector<int> lam;
    for (std::int64_t k = 0; k < tg.size(); ++k) lam.push_back(p.add_variable(fname + ".lambda" + std::to_string(k), 0.0, 1.0));
    std::vector<std::vector<int>> marg(fg.dof);
    for (int d = 0; d < fg.dof; ++d) {
      for (int j = 0; j < tg.knots(); ++j) {
        marg[d].push_back(p.add_variable(fname + ".mu" + std::to_string(d) + "_" + std::to_string(j), 0.0, 1.0));
      }
    }
    std::vector<Term> sum;
    for (int v : lam) sum.push_back({v, 1.0});
    p.add_linear(std::move(sum), Sense::Eq, 1.0, fname + ".lambda_sum");
    for (int d = 0; d < fg.dof; ++d) {
      std::vector<std::vector<Term>> rows(tg.knots());
      for (std::int64_t k = 0; k < tg.size(); ++k) rows[tg.unflatten(k)[d]].push_back({lam[k], 1.0});
      for (int j = 0; j < tg.knots(); ++j) {
        rows[j].push_back({marg[d][j], -1.0});
        p.add_linear(std::move(rows[j]), Sense::Eq, 0.0, fname + ".marginal" + std::to_string(d));
      }
      p.add_sos2_log(marg[d], fname + ".sos2_" + std::to_string(d));
    }
    for (std::size_t c = 0; c < fg.links.size(); ++c) {
      const int link = fg.links[c];
      PoseVars pv;
      const std::string lname = model.links[link].name;
      for (int k = 0; k < 9; ++k) pv.r[k] = p.add_variable(lname + ".R" + std::to_string(k), -1.0, 1.0);
      for (int k = 0; k < 3; ++k) pv.t[k] = p.add_variable(lname + ".t" + std::to_string(k));
      for (int k = 0; k < 12; ++k) {
        std::vector<Term> row;
        for (std::int64_t g = 0; g < tg.size(); ++g) {
          const RigidTransform& tr = grid.at(f, g)[c];
          const double v = k < 9 ? tr.rotation(k / 3, k % 3) : tr.translation[k - 9];
          if (v != 0.0) row.push_back({lam[g], v});
        }
        row.push_back({k < 9 ? pv.r[k] : pv.t[k - 9], -1.0});
        p.add_linear(std::move(row), Sense::Eq, 0.0, lname + ".pose");
      }
      ik.links[link] = pv;
    }
    ik.lambda.push_back(std::move(lam));
    ik.marginals.push_back(std::move(marg));
  }

  const TensorGrid& og = object_grid.grid;
  for (std::int64_t k = 0; k < og.size(); ++k) ik.beta.push_back(p.add_variable("beta" + std::to_string(k), 0.0, 1.0));
  {
    std::vector<Term> sum;
    for (int v : ik.beta) sum.push_back({v, 1.0});
    p.add_linear(std::move(sum), Sense::Eq, 1.0, "beta_sum");
  }
  ik.beta_marginals.resize(3);
  for (int d = 0; d < 3; ++d) {
    for (int j = 0; j < og.knots(); ++j) {
      ik.beta_marginals[d].push_back(p.add_variable("nu" + std::to_string(d) + "_" + std::to_string(j), 0.0, 1.0));
    }
    std::vector<std::vector<Term>> rows(og.knots());
    for (std::int64_t k = 0; k < og.size(); ++k) rows[og.unflatten(k)[d]].push_back({ik.beta[k], 1.0});
    for (int j = 0; j < og.knots(); ++j) {
      rows[j].push_back({ik.beta_marginals[d][j], -1.0});
      p.add_linear(std::move(rows[j]), Sense::Eq, 0.0, "object.marginal" + std::to_string(d));
    }
    p.add_sos2_log(ik.beta_marginals[d], "object.sos2_" + std::to_string(d));
  }
  for (int k = 0; k < 9; ++k) ik.object.r[k] = p.add_variable("object.R" + std::to_string(k), -1.0, 1.0);
  for (int k = 0; k < 3; ++k) ik.object.t[k] = p.add_variable("object.t" + std::to_string(k), -ik.workspace, ik.workspace);
  for (int k = 0; k < 9; ++k) {
    std::vector<Term> row;
    for (std::int64_t g = 0; g < og.size(); ++g) {
      const double v = object_grid.rotations[g](k / 3, k % 3);
      if (v != 0.0) row.push_back({ik.beta[g], v});
    }
    row.push_back({ik.object.r[k], -1.0});
    p.add_linear(std::move(row), Sense::Eq, 0.0, "object.rotation");
  }
  return ik;
}

/// Fingertip of `finger` lands on object point p: R_i x_i + t_i = R p + t.
inline void add_fingertip_at_point(IkProgram& ik, int finger, const Vec3& p) {
  const auto tip = ik.point(ik.tip(finger), ik.model->fingers.at(finger).tip_point);
  const auto obj = ik.point({true, 0}, p);
  for (int r = 0; r < 3; ++r) {
    AffineExpr e = tip[r];
    e.add(obj[r], -1.0);
    ik.prog.add_linear(e, Sense::Eq, "f" + std::to_string(finger) + ".at_point");
  }
  ik.specs.push_back({IkConstraintSpec::Kind::Point, finger, p, 0.0});
}

/// ||R_i x_i + t_i - R c - t||^2 <= r.
inline void add_point_in_sphere(IkProgram& ik, int finger, const BoundingSphere& sphere) {
  const auto tip = ik.point(ik.tip(finger), ik.model->fingers.at(finger).tip_point);
  const auto obj = ik.point({true, 0}, sphere.center);
  std::vector<AffineExpr> rows(3);
  for (int r = 0; r < 3; ++r) {
    rows[r] = tip[r];
    rows[r].add(obj[r], -1.0);
  }
  ik.prog.add_soc(std::move(rows), std::max(sphere.sq_radius, 0.0), "f" + std::to_string(finger) + ".in_sphere");
  ik.specs.push_back({IkConstraintSpec::Kind::Sphere, finger, sphere.center, std::max(sphere.sq_radius, 0.0)});
}

/// ||R_i n_i - R m||^2 <= eps.
inline void add_normal_constraint(IkProgram& ik, int finger, const Vec3& axis, double eps) {
  const auto tip = ik.direction(ik.tip(finger), ik.model->fingers.at(finger).tip_normal);
  const auto obj = ik.direction({true, 0}, axis);
  std::vector<AffineExpr> rows(3);
  for (int r = 0; r < 3; ++r) {
    rows[r] = tip[r];
    rows[r].add(obj[r], -1.0);
  }
  ik.prog.add_soc(std::move(rows), eps, "f" + std::to_string(finger) + ".normal");
  ik.specs.push_back({IkConstraintSpec::Kind::Normal, finger, axis, eps});
}

/// Leaf grasp point: exact placement and the user normal threshold.
inline void add_leaf_constraints(IkProgram& ik, int finger, const GraspPoint& gp) {
  add_fingertip_at_point(ik, finger, gp.position);
  add_normal_constraint(ik, finger, gp.normal, ik.cfg.eps);
}

/// Region constraints of one KD-tree node: bounding sphere and widened normal cone.
inline void add_node_constraints(IkProgram& ik, int finger, const KdNode& node) {
  add_point_in_sphere(ik, finger, node.sphere);
  const double eps = inflate_cone_eps(std::clamp(node.cone.sq_radius, 0.0, 4.0), ik.cfg.eps);
  if (eps < 4.0) add_normal_constraint(ik, finger, node.cone.axis, eps);
}

/// All constraints for finger i restricted to KD-tree node `node_id`, including its ancestors.
inline void add_region_path(IkProgram& ik, int finger, const KdTree& tree, int node_id) {
  const auto path = tree.path_to_root(node_id);
  const KdNode& node = tree.node(node_id);
  std::size_t first = 0;
  if (node.is_leaf()) {
    add_leaf_constraints(ik, finger, tree.points()[node.points[0]]);
    first = 1;
  }
  for (std::size_t k = first; k < path.size(); ++k) add_node_constraints(ik, finger, tree.node(path[k]));
}

namespace detail {

inline std::vector<int>& pair_gammas(IkProgram& ik, const BodyRef& a, const BodyRef& b) {
  if (a.object == b.object && a.object) throw Error("collision constraint: object pieces never collide with each other");
  const BodyRef& obj = a.object ? a : b;
  const BodyRef& other = a.object ? b : a;
  if (obj.object && ik.model->is_tip_link(other.index)) {
    throw Error("collision constraint: fingertip link '" + ik.model->links[other.index].name +
                "' against the object is exempt");
  }
  auto key = std::make_pair(a, b);
  auto it = ik.gammas.find(key);
  if (it != ik.gammas.end()) return it->second;
  std::vector<int> g;
  const std::string name = std::string("gamma.") + (a.object ? "o" : "l") + std::to_string(a.index) + "_" +
                           (b.object ? "o" : "l") + std::to_string(b.index);
  for (std::size_t k = 0; k < ik.directions.size(); ++k) {
    g.push_back(ik.prog.add_variable(name + "." + std::to_string(k), 0.0, 1.0));
  }
  ik.prog.add_sos1_log(g, name);
  return ik.gammas.emplace(key, std::move(g)).first->second;
}

}  // namespace detail

/**
 * @brief Separation of the pair along one of the directions s_k:
 * s_k.(R_a a + t_a) + D <= s_k.(R_b b + t_b) + (1 - gamma_k) M.
 *
 * The first call for a pair creates its gamma group; later calls only add rows.
 */
inline void add_collision_constraint(IkProgram& ik, const BodyRef& a, const BodyRef& b, const Vec3& witness_a,
                                     const Vec3& witness_b, double depth) {
  std::vector<int>& gam = detail::pair_gammas(ik, a, b);
  const auto pa = ik.point(a, witness_a);
  const auto pb = ik.point(b, witness_b);
  for (std::size_t k = 0; k < ik.directions.size(); ++k) {
    const Vec3& s = ik.directions[k];
    AffineExpr e;
    for (int r = 0; r < 3; ++r) {
      e.add(pa[r], s[r]);
      e.add(pb[r], -s[r]);
    }
    e.constant += depth - ik.big_m;
    e.add(gam[k], ik.big_m);
    ik.prog.add_linear(e, Sense::Le, "collision");
  }
}

/**
 * @brief Per-direction separation cut: for each s_k the support vertex of A
 * along s_k must lie below the support vertex of B along -s_k, both taken
 * at the given (current) poses.
 */
inline void add_separation_cut(IkProgram& ik, const BodyRef& a, const RigidTransform& pose_a, const BodyRef& b,
                               const RigidTransform& pose_b, double margin = 0.0) {
  std::vector<int>& gam = detail::pair_gammas(ik, a, b);
  const auto wa = ik.body(a).posed(pose_a);
  const auto wb = ik.body(b).posed(pose_b);
  for (std::size_t k = 0; k < ik.directions.size(); ++k) {
    const Vec3& s = ik.directions[k];
    const Vec3& la = ik.body(a).vertices[support_index(wa, s)];
    const Vec3& lb = ik.body(b).vertices[support_index(wb, -s)];
    const auto pa = ik.point(a, la);
    const auto pb = ik.point(b, lb);
    AffineExpr e;
    for (int r = 0; r < 3; ++r) {
      e.add(pa[r], s[r]);
      e.add(pb[r], -s[r]);
    }
    e.constant += margin - ik.big_m;
    e.add(gam[k], ik.big_m);
    ik.prog.add_linear(e, Sense::Le, "separation");
  }
}

/// Point of the program for concrete joint values, object rotation vector and translation.
inline std::vector<double> substitute(const IkProgram& ik, const std::vector<double>& theta, const Vec3& w,
                                      const Vec3& t) {
  const ConicProgram& p = ik.prog;
  std::vector<double> x(p.num_vars(), 0.0);
  const GripperModel& model = *ik.model;
  auto set_sos2 = [&](const std::vector<int>& marg, const TensorGrid& tg, int d, double value) {
    const double span = tg.upper[d] - tg.lower[d];
    double s = span > 0.0 ? (value - tg.lower[d]) / span * tg.cells : 0.0;
    s = std::clamp(s, 0.0, double(tg.cells));
    const int cell = std::min(int(std::floor(s)), tg.cells - 1);
    const double frac = s - cell;
    x[marg[cell]] += 1.0 - frac;
    x[marg[cell + 1]] += frac;
    for (const auto& g : p.sos_groups()) {
      if (g.members != marg) continue;
      for (std::size_t k = 0; k < g.binaries.size(); ++k) x[g.binaries[k]] = g.codes[cell][k];
    }
  };
  for (int f = 0; f < model.num_fingers(); ++f) {
    const Finger& fg = model.fingers[f];
    const TensorGrid& tg = ik.grid->grids[f];
    std::vector<double> q(theta.begin() + fg.dof_offset, theta.begin() + fg.dof_offset + fg.dof);
    for (const auto& [k, wt] : tg.interpolation(q)) x[ik.lambda[f][k]] += wt;
    for (int d = 0; d < fg.dof; ++d) set_sos2(ik.marginals[f][d], tg, d, q[d]);
    const auto chain = interpolate_finger(*ik.grid, f, q.data());
    for (std::size_t c = 0; c < fg.links.size(); ++c) {
      const PoseVars& pv = ik.links[fg.links[c]];
      for (int k = 0; k < 9; ++k) x[pv.r[k]] = chain[c].rotation(k / 3, k % 3);
      for (int k = 0; k < 3; ++k) x[pv.t[k]] = chain[c].translation[k];
    }
  }
  const TensorGrid& og = ik.object_grid->grid;
  for (const auto& [k, wt] : og.interpolation({w[0], w[1], w[2]})) x[ik.beta[k]] += wt;
  for (int d = 0; d < 3; ++d) set_sos2(ik.beta_marginals[d], og, d, w[d]);
  const Mat3 r = ik.object_grid->interpolate(w);
  for (int k = 0; k < 9; ++k) x[ik.object.r[k]] = r(k / 3, k % 3);
  for (int k = 0; k < 3; ++k) x[ik.object.t[k]] = t[k];

  // Each collision group picks the first direction whose rows all hold.
  for (const auto& [key, gam] : ik.gammas) {
    const SosGroup* group = nullptr;
    for (const auto& g : p.sos_groups()) {
      if (g.members == gam) group = &g;
    }
    int chosen = 0;
    for (std::size_t k = 0; k < gam.size(); ++k) {
      for (int v : gam) x[v] = 0.0;
      x[gam[k]] = 1.0;
      bool ok = true;
      for (const auto& row : p.linear()) {
        if (row.sense != Sense::Le) continue;
        bool touches = false;
        for (const auto& tm : row.terms) touches = touches || tm.var == gam[k];
        if (!touches) continue;
        double act = 0.0;
        for (const auto& tm : row.terms) act += tm.coef * x[tm.var];
        ok = ok && act <= row.rhs + 1e-9;
      }
      if (ok) {
        chosen = int(k);
        break;
      }
    }
    for (int v : gam) x[v] = 0.0;
    x[gam[chosen]] = 1.0;
    if (group) {
      for (std::size_t k = 0; k < group->binaries.size(); ++k) x[group->binaries[k]] = group->codes[chosen][k];
    }
  }
  return x;
}

/// Joint values and object rotation vector read from the SOS2 marginals of a solution.
inline void marginal_means(const IkProgram& ik, const std::vector<double>& x, std::vector<double>& theta, Vec3& w,
                           Vec3& t) {
  const GripperModel& model = *ik.model;
  theta.assign(model.total_dof(), 0.0);
  for (int f = 0; f < model.num_fingers(); ++f) {
    const TensorGrid& tg = ik.grid->grids[f];
    for (int d = 0; d < model.fingers[f].dof; ++d) {
      double v = 0.0;
      for (int j = 0; j < tg.knots(); ++j) v += x[ik.marginals[f][d][j]] * tg.knot(d, j);
      theta[model.fingers[f].dof_offset + d] = std::clamp(v, tg.lower[d], tg.upper[d]);
    }
  }
  const TensorGrid& og = ik.object_grid->grid;
  for (int d = 0; d < 3; ++d) {
    double v = 0.0;
    for (int j = 0; j < og.knots(); ++j) v += x[ik.beta_marginals[d][j]] * og.knot(d, j);
    w[d] = std::clamp(v, og.lower[d], og.upper[d]);
  }
  for (int k = 0; k < 3; ++k) t[k] = x[ik.object.t[k]];
}

}  // namespace gbb
