#pragma once

#include "gbb/geometry.hpp"
#include "gbb/hull.hpp"

#include <limits>
#include <span>
#include <vector>

namespace gbb {

/// Convex body given by the hull of a vertex cloud in its local frame.
struct ConvexBody {
  std::vector<Vec3> vertices;

  ConvexBody() = default;
  explicit ConvexBody(std::vector<Vec3> v) : vertices(std::move(v)) {}

  [[nodiscard]] std::vector<Vec3> posed(const RigidTransform& pose) const {
    std::vector<Vec3> out;
    out.reserve(vertices.size());
    for (const auto& v : vertices) out.push_back(pose.apply(v));
    return out;
  }
};

struct PenetrationResult {
  double depth = 0.0;
  Vec3 witness_a = Vec3::Zero();  // body-A local frame
  Vec3 witness_b = Vec3::Zero();  // body-B local frame
  Vec3 normal = Vec3::UnitX();    // world frame; posed(a) - posed(b) = depth * normal
};

/// Index of the vertex maximising v.dir, lowest index on ties.
inline int support_index(std::span<const Vec3> vertices, const Vec3& dir) {
  if (vertices.empty()) throw Error("support: body has no vertices");
  if (dir.squaredNorm() == 0.0) throw Error("support: zero direction");
  int best = 0;
  double best_val = vertices[0].dot(dir);
  for (int i = 1; i < int(vertices.size()); ++i) {
    const double v = vertices[i].dot(dir);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  return best;
}

inline Vec3 support(const ConvexBody& body, const Vec3& dir) {
  return body.vertices[support_index(body.vertices, dir)];
}

namespace detail {

inline bool aabb_disjoint(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  Vec3 alo = a[0], ahi = a[0], blo = b[0], bhi = b[0];
  for (const auto& p : a) {
    alo = alo.cwiseMin(p);
    ahi = ahi.cwiseMax(p);
  }
  for (const auto& p : b) {
    blo = blo.cwiseMin(p);
    bhi = bhi.cwiseMax(p);
  }
  for (int k = 0; k < 3; ++k) {
    if (ahi[k] <= blo[k] || bhi[k] <= alo[k]) return true;
  }
  return false;
}

// Barycentric weights of x on the triangle (p0, p1, p2).
inline Vec3 barycentric(const Vec3& x, const Vec3& p0, const Vec3& p1, const Vec3& p2) {
  const Vec3 e1 = p1 - p0, e2 = p2 - p0, r = x - p0;
  Eigen::Matrix2d g;
  g << e1.dot(e1), e1.dot(e2), e1.dot(e2), e2.dot(e2);
  const Eigen::Vector2d rhs(e1.dot(r), e2.dot(r));
  const Eigen::Vector2d s = g.completeOrthogonalDecomposition().solve(rhs);
  return {1.0 - s[0] - s[1], s[0], s[1]};
}

}  // namespace detail

/**
 * @brief Translational penetration depth of two posed convex hulls.
 *
 * Builds the hull of the Minkowski difference A - B and takes the facet
 * nearest to the origin. Touching or disjoint bodies report depth 0.
 */
inline PenetrationResult penetration(const ConvexBody& a, const RigidTransform& pose_a, const ConvexBody& b,
                                     const RigidTransform& pose_b) {
  if (a.vertices.empty() || b.vertices.empty()) throw Error("penetration: body has no vertices");
  PenetrationResult res;
  res.witness_a = a.vertices[0];
  res.witness_b = b.vertices[0];
  const auto wa = a.posed(pose_a);
  const auto wb = b.posed(pose_b);
  if (detail::aabb_disjoint(wa, wb)) return res;

  const int nb = int(wb.size());
  std::vector<Vec3> diff;
  diff.reserve(wa.size() * wb.size());
  for (const auto& pa : wa) {
    for (const auto& pb : wb) diff.push_back(pa - pb);
  }
  const std::span<const Vec3> pts(diff);
  const auto hull = convex_hull<3>(pts);
  if (!hull.full_dimensional) return res;
  int facet = -1;
  const double depth = origin_depth<3>(pts, hull, &facet);
  double scale = 0.0;
  for (const auto& d : diff) scale = std::max(scale, d.norm());
  if (facet < 0 || depth <= 1e-12 * scale) return res;

  const Vec3 n = hull.facets[facet].normal;
  const Vec3 foot = depth * n;
  // The foot may sit in a neighbouring facet of the same plane.
  Vec3 best_w(1.0 / 3, 1.0 / 3, 1.0 / 3);
  int best_f = facet;
  double best_neg = -std::numeric_limits<double>::infinity();
  for (int f = 0; f < int(hull.facets.size()); ++f) {
    const auto& hf = hull.facets[f];
    if (f != facet && (hf.normal - n).norm() > 1e-7) continue;
    const Vec3 w = detail::barycentric(foot, diff[hf.vertices[0]], diff[hf.vertices[1]], diff[hf.vertices[2]]);
    const double worst = w.minCoeff();
    if (worst > best_neg) {
      best_neg = worst;
      best_w = w;
      best_f = f;
      if (worst >= -1e-12) break;
    }
  }
  Vec3 w = best_w.cwiseMax(0.0);
  w /= w.sum();
  Vec3 la = Vec3::Zero(), lb = Vec3::Zero();
  for (int k = 0; k < 3; ++k) {
    const int v = hull.facets[best_f].vertices[k];
    la += w[k] * a.vertices[v / nb];
    lb += w[k] * b.vertices[v % nb];
  }
  res.depth = depth;
  res.normal = n;
  res.witness_a = la;
  res.witness_b = lb;
  return res;
}

}  // namespace gbb
