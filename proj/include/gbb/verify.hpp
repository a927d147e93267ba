#pragma once

#include "gbb/convex.hpp"
#include "gbb/gripper.hpp"
#include "gbb/metric.hpp"
#include "gbb/planner.hpp"

#include <ostream>
#include <string>
#include <vector>

namespace gbb {

struct VerifyCheck {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double limit = 0.0;
  std::string detail;
};

struct VerifyReport {
  std::vector<VerifyCheck> checks;

  [[nodiscard]] bool all_pass() const {
    for (const auto& c : checks) {
      if (!c.pass) return false;
    }
    return !checks.empty();
  }

  [[nodiscard]] const VerifyCheck& find(const std::string& name) const {
    for (const auto& c : checks) {
      if (c.name == name) return c;
    }
    throw Error("verify report: no check named " + name);
  }
};

struct VerifySettings {
  double normal_eps = 0.05;
  ContactModel contact;
  double workspace = 0.0;
  double collision_tol = 0.0;
  double position_tol = 1e-4;
  double quality_tol = 1e-9;
};

/**
 * @brief Recomputes a grasp from its joint values and object pose.
 *
 * C1: no non-exempt pair penetrates deeper than the tolerance.
 * C2: fingertips sit on their assigned points with normals inside the cone.
 * C3: the reported quality matches the metric of the assigned points.
 * C4: joint values inside the limit box, object rotation vector inside
 *     [-pi, pi]^3 and translation inside the workspace box.
 */
inline VerifyReport verify_solution(const GraspSolution& s, const GripperModel& model, const GraspPointSet& points,
                                    const std::vector<ConvexBody>& pieces, const VerifySettings& cfg) {
  VerifyReport rep;
  const int k = model.num_fingers();
  const bool shape_ok = int(s.assignment.size()) == k && int(s.theta.size()) == model.total_dof();
  bool index_ok = shape_ok;
  for (std::size_t a = 0; index_ok && a < s.assignment.size(); ++a) {
    index_ok = s.assignment[a] >= 0 && s.assignment[a] < int(points.size());
    for (std::size_t b = 0; index_ok && b < a; ++b) index_ok = s.assignment[a] != s.assignment[b];
  }
  if (!index_ok) {
    rep.checks.push_back({"C4", false, 0.0, 0.0, "assignment or joint vector has the wrong shape"});
    return rep;
  }

  double box_violation = 0.0;
  for (const auto& f : model.fingers) {
    for (int d = 0; d < f.dof; ++d) {
      const double q = s.theta[f.dof_offset + d];
      box_violation = std::max({box_violation, f.lower[d] - q, q - f.upper[d]});
    }
  }
  for (int a = 0; a < 3; ++a) {
    box_violation = std::max({box_violation, std::abs(s.w[a]) - std::numbers::pi, std::abs(s.t[a]) - cfg.workspace});
  }
  rep.checks.push_back({"C4", box_violation <= 1e-12, box_violation, 0.0, "largest excursion outside the search box"});

  // Chain products in world-from-link order, written out per joint.
  std::vector<Mat3> rot(model.links.size(), Mat3::Identity());
  std::vector<Vec3> pos(model.links.size(), Vec3::Zero());
  for (const auto& f : model.fingers) {
    int dof = f.dof_offset;
    for (int j : f.joints) {
      const Joint& jt = model.joints[j];
      Mat3 local = jt.frame;
      for (int a = 0; a < jt.dof(); ++a) {
        const double q = s.theta[dof++];
        const Vec3 u = jt.axes[a];
        const Mat3 ux = skew(u);
        local = local * (Mat3::Identity() + std::sin(q) * ux + (1.0 - std::cos(q)) * ux * ux);
      }
      pos[jt.child] = rot[jt.parent] * jt.offset + pos[jt.parent];
      rot[jt.child] = rot[jt.parent] * local;
    }
  }
  const Mat3 obj_rot = rodrigues_exp(s.w);

  double residual = 0.0, normal_gap = -std::numeric_limits<double>::infinity();
  for (int f = 0; f < k; ++f) {
    const Finger& fg = model.fingers[f];
    const GraspPoint& gp = points[s.assignment[f]];
    const Vec3 tip = rot[fg.tip_link] * fg.tip_point + pos[fg.tip_link];
    residual = std::max(residual, (tip - (obj_rot * gp.position + s.t)).norm());
    normal_gap = std::max(normal_gap, (rot[fg.tip_link] * fg.tip_normal - obj_rot * gp.normal).squaredNorm());
  }
  rep.checks.push_back({"C2", residual <= cfg.position_tol, residual, cfg.position_tol, "fingertip to assigned point"});
  rep.checks.push_back({"C2-normal", normal_gap <= cfg.normal_eps + 1e-9, normal_gap, cfg.normal_eps,
                        "squared fingertip to contact normal distance"});

  double depth = 0.0;
  std::string worst = "none";
  const RigidTransform obj{obj_rot, s.t};
  auto link_pose = [&](int l) { return RigidTransform{rot[l], pos[l]}; };
  for (std::size_t p = 0; p < pieces.size(); ++p) {
    for (int l = 0; l < model.num_links(); ++l) {
      if (model.is_tip_link(l)) continue;
      const double d = penetration(pieces[p], obj, model.links[l].body, link_pose(l)).depth;
      if (d > depth) {
        depth = d;
        worst = "object piece " + std::to_string(p) + " / " + model.links[l].name;
      }
    }
  }
  for (int a = 0; a < model.num_links(); ++a) {
    for (int b = a + 1; b < model.num_links(); ++b) {
      bool joined = false;
      for (const auto& j : model.joints) joined = joined || (j.parent == a && j.child == b) || (j.parent == b && j.child == a);
      if (joined) continue;
      const double d = penetration(model.links[a].body, link_pose(a), model.links[b].body, link_pose(b)).depth;
      if (d > depth) {
        depth = d;
        worst = model.links[a].name + " / " + model.links[b].name;
      }
    }
  }
  rep.checks.push_back({"C1", depth <= cfg.collision_tol, depth, cfg.collision_tol, "deepest pair: " + worst});

  GraspPointSet chosen;
  for (int p : s.assignment) chosen.push_back(points[p]);
  const double q = q1(chosen, cfg.contact);
  const double dq = std::abs(q - s.quality);
  rep.checks.push_back({"C3", dq <= cfg.quality_tol, dq, cfg.quality_tol, "recomputed quality " + std::to_string(q)});
  return rep;
}

inline void print_report(std::ostream& out, const VerifyReport& rep) {
  for (const auto& c : rep.checks) {
    out << (c.pass ? "PASS " : "FAIL ") << c.name << " value=" << c.value << " limit=" << c.limit << " (" << c.detail
        << ")\n";
  }
}

}  // namespace gbb
