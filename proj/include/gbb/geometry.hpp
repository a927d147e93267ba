#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace gbb {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Error raised on contract violations (bad input, malformed files, ...).
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/**
 * @brief Pose of a body: x_world = rotation * x_local + translation.
 *
 * Poses produced by forward kinematics carry proper rotations. Poses read
 * back from a relaxed solve are convex combinations of rotations and may
 * carry a general 3x3 matrix; every consumer only needs the affine map.
 */
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  [[nodiscard]] Vec3 apply(const Vec3& x) const { return rotation * x + translation; }
  [[nodiscard]] Vec3 apply_direction(const Vec3& d) const { return rotation * d; }

  [[nodiscard]] RigidTransform operator*(const RigidTransform& rhs) const {
    return {rotation * rhs.rotation, rotation * rhs.translation + translation};
  }

  [[nodiscard]] static RigidTransform identity() { return {}; }
};

inline Mat3 skew(const Vec3& w) {
  Mat3 k;
  k << 0.0, -w.z(), w.y(),
       w.z(), 0.0, -w.x(),
       -w.y(), w.x(), 0.0;
  return k;
}

/// exp([w]x), the rotation by |w| radians about w/|w|.
inline Mat3 rodrigues_exp(const Vec3& w) {
  const double angle = w.norm();
  const Mat3 k = skew(w);
  if (angle < 1e-8) {
    // second-order series; the cubic term is below 1e-24
    return Mat3::Identity() + k + 0.5 * k * k;
  }
  const double a = std::sin(angle) / angle;
  const double b = (1.0 - std::cos(angle)) / (angle * angle);
  return Mat3::Identity() + a * k + b * k * k;
}

/// Largest deviation of R from SO(3): max(|R^T R - I|, |det R - 1|).
inline double rotation_error(const Mat3& r) {
  const double ortho = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
  return std::max(ortho, std::abs(r.determinant() - 1.0));
}

inline bool is_rotation(const Mat3& r, double tol = 1e-9) { return rotation_error(r) <= tol; }

/// Unit vector orthogonal to n built from the coordinate axis where |n| is smallest.
inline Vec3 orthogonal_unit(const Vec3& n) {
  int axis = 0;
  for (int k = 1; k < 3; ++k) {
    if (std::abs(n[k]) < std::abs(n[axis])) axis = k;
  }
  Vec3 e = Vec3::Zero();
  e[axis] = 1.0;
  const Vec3 u = e - e.dot(n) * n;
  return u.normalized();
}

}  // namespace gbb
