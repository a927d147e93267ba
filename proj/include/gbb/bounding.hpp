#pragma once

#include "gbb/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <list>
#include <span>
#include <vector>

namespace gbb {

/// Sphere with center c and SQUARED radius r.
struct BoundingSphere {
  Vec3 center = Vec3::Zero();
  double sq_radius = 0.0;

  [[nodiscard]] bool contains(const Vec3& x, double tol = 1e-9) const {
    return (x - center).squaredNorm() <= sq_radius + tol;
  }
};

/// Spherical cap of unit vectors: ||n - axis||^2 <= sq_radius, sq_radius in [0, 4].
struct BoundingCone {
  Vec3 axis = Vec3::UnitZ();
  double sq_radius = 0.0;

  [[nodiscard]] bool contains(const Vec3& n, double tol = 1e-9) const {
    return (n - axis).squaredNorm() <= sq_radius + tol;
  }
};

namespace detail {

// Smallest sphere with every support point on its boundary, in their affine hull.
inline BoundingSphere circumsphere(const std::vector<Vec3>& support) {
  if (support.empty()) return {Vec3::Zero(), -1.0};
  const Vec3& p0 = support[0];
  const int k = int(support.size()) - 1;
  if (k == 0) return {p0, 0.0};
  Eigen::MatrixXd g(k, k);
  Eigen::VectorXd rhs(k);
  for (int i = 0; i < k; ++i) {
    const Vec3 di = support[i + 1] - p0;
    rhs[i] = 0.5 * di.squaredNorm();
    for (int j = 0; j < k; ++j) g(i, j) = di.dot(support[j + 1] - p0);
  }
  const Eigen::VectorXd alpha = g.completeOrthogonalDecomposition().solve(rhs);
  Vec3 c = p0;
  for (int i = 0; i < k; ++i) c += alpha[i] * (support[i + 1] - p0);
  double r = 0.0;
  for (const auto& p : support) r = std::max(r, (p - c).squaredNorm());
  return {c, r};
}

class MoveToFrontBall {
 public:
  explicit MoveToFrontBall(std::span<const Vec3> pts) : pts_(pts) {
    for (int i = 0; i < int(pts.size()); ++i) order_.push_back(i);
  }

  BoundingSphere run() {
    std::vector<Vec3> boundary;
    return solve(order_.end(), boundary);
  }

 private:
  BoundingSphere solve(std::list<int>::iterator end, std::vector<Vec3>& boundary) {
    BoundingSphere ball = circumsphere(boundary);
    if (boundary.size() == 4) return ball;
    for (auto it = order_.begin(); it != end;) {
      const auto next = std::next(it);
      const Vec3& p = pts_[*it];
      if (ball.sq_radius < 0.0 || (p - ball.center).squaredNorm() > ball.sq_radius * (1.0 + 1e-12) + 1e-300) {
        boundary.push_back(p);
        ball = solve(it, boundary);
        boundary.pop_back();
        order_.splice(order_.begin(), order_, it);
      }
      it = next;
    }
    return ball;
  }

  std::span<const Vec3> pts_;
  std::list<int> order_;
};

// Minimum-norm point of conv(pts) (Wolfe's algorithm).
inline Vec3 min_norm_point(std::span<const Vec3> pts) {
  const int n = int(pts.size());
  int first = 0;
  for (int i = 1; i < n; ++i) {
    if (pts[i].squaredNorm() < pts[first].squaredNorm()) first = i;
  }
  std::vector<int> set{first};
  std::vector<double> lambda{1.0};
  Vec3 x = pts[first];
  double scale = 0.0;
  for (const auto& p : pts) scale = std::max(scale, p.squaredNorm());
  const double tol = 1e-15 * scale;

  for (int major = 0; major < 1000; ++major) {
    int j = 0;
    double best = pts[0].dot(x);
    for (int i = 1; i < n; ++i) {
      const double v = pts[i].dot(x);
      if (v < best) {
        best = v;
        j = i;
      }
    }
    if (x.squaredNorm() - best <= tol || std::find(set.begin(), set.end(), j) != set.end()) break;
    set.push_back(j);
    lambda.push_back(0.0);

    for (int minor = 0; minor < 1000; ++minor) {
      const int m = int(set.size());
      Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(m + 1, m + 1);
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + 1);
      for (int a = 0; a < m; ++a) {
        for (int b = 0; b < m; ++b) kkt(a, b) = pts[set[a]].dot(pts[set[b]]);
        kkt(a, m) = 1.0;
        kkt(m, a) = 1.0;
      }
      rhs[m] = 1.0;
      const Eigen::VectorXd sol = kkt.completeOrthogonalDecomposition().solve(rhs);
      bool interior = true;
      for (int a = 0; a < m; ++a) interior = interior && sol[a] > 1e-14;
      if (interior) {
        for (int a = 0; a < m; ++a) lambda[a] = sol[a];
        break;
      }
      double theta = 1.0;
      for (int a = 0; a < m; ++a) {
        if (sol[a] <= 1e-14 && lambda[a] - sol[a] > 0.0) theta = std::min(theta, lambda[a] / (lambda[a] - sol[a]));
      }
      for (int a = 0; a < m; ++a) lambda[a] += theta * (sol[a] - lambda[a]);
      std::vector<int> keep_set;
      std::vector<double> keep_lambda;
      for (int a = 0; a < m; ++a) {
        if (lambda[a] > 1e-14) {
          keep_set.push_back(set[a]);
          keep_lambda.push_back(lambda[a]);
        }
      }
      if (keep_set.empty()) {
        keep_set.push_back(set.back());
        keep_lambda.push_back(1.0);
      }
      set = std::move(keep_set);
      lambda = std::move(keep_lambda);
      double sum = 0.0;
      for (double l : lambda) sum += l;
      for (double& l : lambda) l /= sum;
    }
    x = Vec3::Zero();
    for (std::size_t a = 0; a < set.size(); ++a) x += lambda[a] * pts[set[a]];
  }
  return x;
}

}  // namespace detail

/// Minimal enclosing sphere (move-to-front). Throws on an empty set.
inline BoundingSphere min_bounding_sphere(std::span<const Vec3> points) {
  if (points.empty()) throw Error("min_bounding_sphere: empty point set");
  BoundingSphere ball = detail::MoveToFrontBall(points).run();
  double r = 0.0;
  for (const auto& p : points) r = std::max(r, (p - ball.center).squaredNorm());
  ball.sq_radius = r;
  return ball;
}

/**
 * @brief Minimal spherical cap around a set of unit normals.
 *
 * The optimal axis points at the minimum-norm point of the normals' convex
 * hull. Sets that do not fit in an open hemisphere get sq_radius 4 around
 * the first member.
 */
inline BoundingCone min_bounding_cone(std::span<const Vec3> normals) {
  if (normals.empty()) throw Error("min_bounding_cone: empty normal set");
  for (const auto& n : normals) {
    if (std::abs(n.norm() - 1.0) > 1e-6) throw Error("min_bounding_cone: normal is not unit length");
  }
  const Vec3 x = detail::min_norm_point(normals);
  BoundingCone cone;
  if (x.norm() <= 1e-12) {
    cone.axis = normals[0].normalized();
    cone.sq_radius = 4.0;
    return cone;
  }
  cone.axis = x.normalized();
  double eps = 0.0;
  for (const auto& n : normals) eps = std::max(eps, (n - cone.axis).squaredNorm());
  if (eps >= 2.0) {
    cone.axis = normals[0].normalized();
    cone.sq_radius = 4.0;
    return cone;
  }
  cone.sq_radius = eps;
  return cone;
}

/// Squared chord radius of a cap widened by the user threshold (angles add, capped at pi).
inline double inflate_cone_eps(double eps_node, double eps_user) {
  if (!(eps_node >= 0.0 && eps_node <= 4.0)) throw Error("inflate_cone_eps: node eps outside [0, 4]");
  if (!(eps_user >= 0.0 && eps_user <= 4.0)) throw Error("inflate_cone_eps: user eps outside [0, 4]");
  if (eps_node == 0.0) return eps_user;
  if (eps_user == 0.0) return eps_node;
  const double theta = 2.0 * std::asin(std::sqrt(eps_node) / 2.0) + 2.0 * std::asin(std::sqrt(eps_user) / 2.0);
  const double chord = 2.0 * std::sin(std::min(theta, std::numbers::pi) / 2.0);
  return std::min(chord * chord, 4.0);
}

}  // namespace gbb
