#pragma once

#include "gbb/micp_ik.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace gbb {

/// Box-bounded unknowns of the IK problems: joint values, object rotation vector, object translation.
struct IkState {
  std::vector<double> theta;
  Vec3 w = Vec3::Zero();
  Vec3 t = Vec3::Zero();
};

struct LocalIkOptions {
  int max_iterations = 60;
  double tol = 1e-6;
  double fd_step = 1e-7;
};

namespace detail {

inline Eigen::VectorXd pack(const IkState& s) {
  const int n = int(s.theta.size());
  Eigen::VectorXd z(n + 6);
  for (int k = 0; k < n; ++k) z[k] = s.theta[k];
  z.segment<3>(n) = s.w;
  z.segment<3>(n + 3) = s.t;
  return z;
}

inline IkState unpack(const Eigen::VectorXd& z, int dofs) {
  IkState s;
  s.theta.assign(z.data(), z.data() + dofs);
  s.w = z.segment<3>(dofs);
  s.t = z.segment<3>(dofs + 3);
  return s;
}

/**
 * @brief Projected Levenberg-Marquardt on a box with a forward-difference Jacobian.
 *
 * Returns the final point; `residual` receives the max absolute residual.
 */
template <class Residual>
Eigen::VectorXd projected_lm(const Residual& f, Eigen::VectorXd z, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                             const LocalIkOptions& opt, double& residual) {
  auto project = [&](Eigen::VectorXd& v) { v = v.cwiseMax(lo).cwiseMin(hi); };
  project(z);
  Eigen::VectorXd r = f(z);
  double cost = r.squaredNorm();
  double mu = 1e-3;
  for (int it = 0; it < opt.max_iterations && r.cwiseAbs().maxCoeff() > opt.tol; ++it) {
    Eigen::MatrixXd jac(r.size(), z.size());
    for (int k = 0; k < z.size(); ++k) {
      Eigen::VectorXd zp = z;
      double h = opt.fd_step * std::max(1.0, std::abs(z[k]));
      if (zp[k] + h > hi[k]) h = -h;
      zp[k] += h;
      jac.col(k) = (f(zp) - r) / h;
    }
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd g = jac.transpose() * r;
    bool improved = false;
    for (int tries = 0; tries < 12 && !improved; ++tries) {
      Eigen::MatrixXd a = jtj;
      a.diagonal().array() += mu * (1.0 + jtj.diagonal().array());
      Eigen::VectorXd zn = z - a.ldlt().solve(g);
      project(zn);
      const Eigen::VectorXd rn = f(zn);
      if (rn.squaredNorm() < cost) {
        z = zn;
        r = rn;
        cost = rn.squaredNorm();
        mu = std::max(mu * 0.3, 1e-12);
        improved = true;
      } else {
        mu *= 10.0;
      }
    }
    if (!improved) break;
  }
  residual = r.size() ? r.cwiseAbs().maxCoeff() : 0.0;
  return z;
}

inline void state_bounds(const IkProgram& ik, Eigen::VectorXd& lo, Eigen::VectorXd& hi) {
  const GripperModel& m = *ik.model;
  const int n = m.total_dof();
  lo.resize(n + 6);
  hi.resize(n + 6);
  for (const auto& f : m.fingers) {
    for (int d = 0; d < f.dof; ++d) {
      lo[f.dof_offset + d] = f.lower[d];
      hi[f.dof_offset + d] = f.upper[d];
    }
  }
  for (int k = 0; k < 3; ++k) {
    lo[n + k] = -std::numbers::pi;
    hi[n + k] = std::numbers::pi;
    lo[n + 3 + k] = -ik.workspace;
    hi[n + 3 + k] = ik.workspace;
  }
}

/// Residuals of the recorded fingertip specs for given tip frames and object rotation.
inline Eigen::VectorXd spec_residuals(const IkProgram& ik, const std::vector<RigidTransform>& link_poses,
                                      const Mat3& r, const Vec3& t) {
  Eigen::VectorXd out(3 * ik.specs.size());
  int row = 0;
  for (const auto& s : ik.specs) {
    const Finger& fg = ik.model->fingers[s.finger];
    const RigidTransform& tip = link_poses[fg.tip_link];
    switch (s.kind) {
      case IkConstraintSpec::Kind::Point: {
        out.segment<3>(row) = tip.apply(fg.tip_point) - (r * s.target + t);
        row += 3;
        break;
      }
      case IkConstraintSpec::Kind::Sphere: {
        const double d = (tip.apply(fg.tip_point) - (r * s.target + t)).squaredNorm();
        out[row++] = std::max(0.0, d - s.bound);
        break;
      }
      case IkConstraintSpec::Kind::Normal: {
        const double d = (tip.apply_direction(fg.tip_normal) - r * s.target).squaredNorm();
        out[row++] = std::max(0.0, d - s.bound);
        break;
      }
    }
  }
  return out.head(row);
}

}  // namespace detail

/// Largest penetration over the non-exempt pairs at the given poses.
inline double max_penetration(const IkProgram& ik, const std::vector<RigidTransform>& link_poses,
                              const RigidTransform& object_pose, std::pair<BodyRef, BodyRef>* worst = nullptr) {
  double best = 0.0;
  for (const auto& pr : ik.collision_pairs()) {
    const RigidTransform& pa = pr.first.object ? object_pose : link_poses[pr.first.index];
    const RigidTransform& pb = pr.second.object ? object_pose : link_poses[pr.second.index];
    const double d = penetration(ik.body(pr.first), pa, ik.body(pr.second), pb).depth;
    if (d > best) {
      best = d;
      if (worst) *worst = pr;
    }
  }
  return best;
}

/**
 * @brief Local shortcut before an MICP solve.
 *
 * Works in the grid-interpolated kinematics the MICP uses, so a converged
 * point can be substituted into the program and checked. Returns the
 * substituted point only when it satisfies every row of `ik.prog` and no
 * non-exempt pair penetrates deeper than `collision_tol`.
 */
inline std::optional<std::vector<double>> local_ik_refine(const IkProgram& ik, const std::vector<IkState>& starts,
                                                          double collision_tol, const LocalIkOptions& opt = {}) {
  const GripperModel& m = *ik.model;
  const int n = m.total_dof();
  Eigen::VectorXd lo, hi;
  detail::state_bounds(ik, lo, hi);
  auto residual = [&](const Eigen::VectorXd& z) {
    const IkState s = detail::unpack(z, n);
    return detail::spec_residuals(ik, interpolated_link_poses(m, *ik.grid, s.theta), ik.object_grid->interpolate(s.w),
                                  s.t);
  };
  for (const auto& start : starts) {
    if (int(start.theta.size()) != n) continue;
    double res = 0.0;
    const Eigen::VectorXd z = detail::projected_lm(residual, detail::pack(start), lo, hi, opt, res);
    if (res > opt.tol) continue;
    const IkState s = detail::unpack(z, n);
    const auto poses = interpolated_link_poses(m, *ik.grid, s.theta);
    const RigidTransform obj{ik.object_grid->interpolate(s.w), s.t};
    if (max_penetration(ik, poses, obj) > collision_tol) continue;
    std::vector<double> x = substitute(ik, s.theta, s.w, s.t);
    if (ik.prog.max_violation(x) <= opt.tol && ik.prog.integrality_violation(x) == 0.0) return x;
  }
  return std::nullopt;
}

/// Default starting points: joint-box centers with the object at the identity.
inline std::vector<IkState> default_ik_starts(const GripperModel& m) {
  IkState s;
  s.theta.assign(m.total_dof(), 0.0);
  for (const auto& f : m.fingers) {
    for (int d = 0; d < f.dof; ++d) s.theta[f.dof_offset + d] = 0.5 * (f.lower[d] + f.upper[d]);
  }
  return {s};
}

/**
 * @brief Exact-kinematics polish of a restricted-space solution.
 *
 * Fits forward kinematics and the object rotation exp(w) to the fingertip
 * placements and normal thresholds of `ik.specs`.
 */
inline std::optional<IkState> polish_exact(const IkProgram& ik, const IkState& start, double tol = 1e-9,
                                           int max_iterations = 200) {
  const GripperModel& m = *ik.model;
  const int n = m.total_dof();
  Eigen::VectorXd lo, hi;
  detail::state_bounds(ik, lo, hi);
  auto residual = [&](const Eigen::VectorXd& z) {
    const IkState s = detail::unpack(z, n);
    return detail::spec_residuals(ik, m.forward_kinematics(s.theta), rodrigues_exp(s.w), s.t);
  };
  LocalIkOptions opt;
  opt.tol = tol;
  opt.max_iterations = max_iterations;
  double res = 0.0;
  const Eigen::VectorXd z = detail::projected_lm(residual, detail::pack(start), lo, hi, opt, res);
  if (res > std::max(tol, 1e-7)) return std::nullopt;
  return detail::unpack(z, n);
}

}  // namespace gbb
