#pragma once

#include "gbb/hull.hpp"
#include "gbb/pointset.hpp"

#include <functional>
#include <numbers>
#include <set>
#include <span>
#include <vector>

namespace gbb {

using Wrench = Eigen::Matrix<double, 6, 1>;
using WrenchSet = std::vector<Wrench>;

/// Friction cone discretisation and torque normalisation for Q1.
struct ContactModel {
  double friction_mu = 0.5;
  int cone_edges = 8;
  Vec3 torque_origin = Vec3::Zero();
  double torque_scale = 1.0;

  void validate() const {
    if (!(friction_mu > 0.0)) throw Error("contact model: friction_mu must be > 0");
    if (cone_edges < 3) throw Error("contact model: cone_edges must be >= 3");
    if (!(torque_scale > 0.0)) throw Error("contact model: torque_scale must be > 0");
  }

  /// Origin at the centroid of the samples, scale = largest distance from it.
  static ContactModel for_points(const GraspPointSet& pts, double mu = 0.5, int edges = 8) {
    ContactModel m;
    m.friction_mu = mu;
    m.cone_edges = edges;
    Vec3 c = Vec3::Zero();
    for (const auto& p : pts) c += p.position;
    if (!pts.empty()) c /= double(pts.size());
    double s = 0.0;
    for (const auto& p : pts) s = std::max(s, (p.position - c).norm());
    m.torque_origin = c;
    m.torque_scale = s > 0.0 ? s : 1.0;
    return m;
  }
};

/// One unit force per friction cone edge, paired with its scaled torque.
inline WrenchSet contact_wrenches(const GraspPoint& point, const ContactModel& model) {
  model.validate();
  const double len = point.normal.norm();
  if (len == 0.0) throw Error("contact_wrenches: zero normal");
  const Vec3 n = point.normal / len;
  const Vec3 u = orthogonal_unit(n);
  const Vec3 v = n.cross(u);
  const Vec3 arm = point.position - model.torque_origin;
  WrenchSet out;
  out.reserve(model.cone_edges);
  for (int k = 0; k < model.cone_edges; ++k) {
    const double a = 2.0 * std::numbers::pi * double(k) / double(model.cone_edges);
    const Vec3 f = (n + model.friction_mu * (std::cos(a) * u + std::sin(a) * v)).normalized();
    Wrench w;
    w.head<3>() = f;
    w.tail<3>() = arm.cross(f) / model.torque_scale;
    out.push_back(w);
  }
  return out;
}

/// Radius of the largest origin ball inside conv(wrenches and 0); 0 without force closure.
inline double q1_of_wrenches(const WrenchSet& wrenches) {
  std::vector<Wrench> pts;
  pts.reserve(wrenches.size() + 1);
  pts.push_back(Wrench::Zero());
  for (const auto& w : wrenches) pts.push_back(w);
  const std::span<const Wrench> view(pts);
  const auto hull = convex_hull<6>(view);
  if (!hull.full_dimensional) return 0.0;
  const double q = origin_depth<6>(view, hull);
  return q > 1e-12 ? q : 0.0;
}

inline double q1(std::span<const GraspPoint> points, const ContactModel& model) {
  if (points.empty()) throw Error("q1: empty contact set");
  WrenchSet all;
  for (const auto& p : points) {
    const auto w = contact_wrenches(p, model);
    all.insert(all.end(), w.begin(), w.end());
  }
  return q1_of_wrenches(all);
}

/// Any set function with Q(A) <= Q(B) for A subset of B can drive the planner.
using MonotoneMetric = std::function<double(std::span<const GraspPoint>)>;

inline MonotoneMetric q1_metric(const ContactModel& model) {
  return [model](std::span<const GraspPoint> pts) { return q1(pts, model); };
}

/// Metric of the union of the members of the given KD-tree nodes.
inline double q_upper(const KdTree& tree, std::span<const int> node_ids, const MonotoneMetric& metric) {
  if (node_ids.empty()) throw Error("q_upper: empty node list");
  std::set<int> members;
  for (int id : node_ids) {
    const auto& pts = tree.node(id).points;
    members.insert(pts.begin(), pts.end());
  }
  GraspPointSet chosen;
  for (int m : members) chosen.push_back(tree.points()[m]);
  return metric(chosen);
}

inline double q1_upper(const KdTree& tree, std::span<const int> node_ids, const ContactModel& model) {
  return q_upper(tree, node_ids, q1_metric(model));
}

}  // namespace gbb
