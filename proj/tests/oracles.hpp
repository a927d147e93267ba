#pragma once
// Brute-force reference computations shared by the unit and acceptance suites.

#include "gbb/gbb.hpp"

#include <Eigen/Dense>

#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

namespace oracle {

using gbb::Vec3;

/// Smallest ball through 1-4 of the points that contains them all.
inline double enclosing_ball_sq_radius(const std::vector<Vec3>& pts) {
  const int n = int(pts.size());
  double best = std::numeric_limits<double>::infinity();
  auto consider = [&](const Vec3& c) {
    double r = 0.0;
    for (const auto& p : pts) r = std::max(r, (p - c).squaredNorm());
    best = std::min(best, r);
  };
  auto circumcenter = [](const std::vector<Vec3>& s, Vec3& c) {
    // center in the affine hull of s, equidistant from all of s
    const int m = int(s.size()) - 1;
    if (m == 0) {
      c = s[0];
      return true;
    }
    Eigen::MatrixXd a(m, m);
    Eigen::VectorXd b(m);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) a(i, j) = 2.0 * (s[i + 1] - s[0]).dot(s[j + 1] - s[0]);
      b[i] = (s[i + 1] - s[0]).squaredNorm();
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (lu.rank() < m) return false;
    const Eigen::VectorXd x = lu.solve(b);
    c = s[0];
    for (int i = 0; i < m; ++i) c += x[i] * (s[i + 1] - s[0]);
    return true;
  };
  std::vector<Vec3> sub;
  Vec3 c;
  for (int i = 0; i < n; ++i) {
    consider(pts[i]);
    for (int j = i + 1; j < n; ++j) {
      sub = {pts[i], pts[j]};
      if (circumcenter(sub, c)) consider(c);
      for (int k = j + 1; k < n; ++k) {
        sub = {pts[i], pts[j], pts[k]};
        if (circumcenter(sub, c)) consider(c);
        for (int l = k + 1; l < n; ++l) {
          sub = {pts[i], pts[j], pts[k], pts[l]};
          if (circumcenter(sub, c)) consider(c);
        }
      }
    }
  }
  return best;
}

/// Smallest cap over the caps spanned by 1-3 of the normals that contain them all.
inline double bounding_cone_sq_radius(const std::vector<Vec3>& normals) {
  const int n = int(normals.size());
  double best = 4.0;
  auto consider = [&](Vec3 m) {
    if (m.norm() < 1e-12) return;
    m.normalize();
    double r = 0.0;
    for (const auto& v : normals) r = std::max(r, (v - m).squaredNorm());
    best = std::min(best, r);
  };
  for (int i = 0; i < n; ++i) {
    consider(normals[i]);
    for (int j = i + 1; j < n; ++j) {
      consider(normals[i] + normals[j]);
      for (int k = j + 1; k < n; ++k) {
        // equidistant from three unit vectors: normal of their plane, on their side
        Vec3 m = (normals[j] - normals[i]).cross(normals[k] - normals[i]);
        if (m.dot(normals[i]) < 0.0) m = -m;
        consider(m);
      }
    }
  }
  return best;
}

/**
 * @brief Inscribed-ball radius at the origin of conv(points and 0) by facet enumeration:
 * every 6-subset spanning a hyperplane with all points on one side is a facet.
 */
inline double hull_inradius_6d(std::vector<Eigen::Matrix<double, 6, 1>> pts) {
  pts.push_back(Eigen::Matrix<double, 6, 1>::Zero());
  const int n = int(pts.size());
  std::vector<int> idx(6);
  double best = std::numeric_limits<double>::infinity();
  bool any = false;
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == 6) {
      Eigen::Matrix<double, 5, 6> a;
      for (int r = 0; r < 5; ++r) a.row(r) = (pts[idx[r + 1]] - pts[idx[0]]).transpose();
      Eigen::FullPivLU<Eigen::Matrix<double, 5, 6>> lu(a);
      lu.setThreshold(1e-10);
      if (lu.rank() < 5) return;
      Eigen::Matrix<double, 6, 1> nrm = lu.kernel().col(0);
      nrm.normalize();
      double off = nrm.dot(pts[idx[0]]);
      double lo = 0.0, hi = 0.0;
      for (const auto& p : pts) {
        const double d = nrm.dot(p) - off;
        lo = std::min(lo, d);
        hi = std::max(hi, d);
      }
      const double tol = 1e-9;
      if (lo >= -tol) off = -off;
      else if (hi > tol) return;
      any = true;
      best = std::min(best, off);
      return;
    }
    for (int i = start; i < n; ++i) {
      idx[depth] = i;
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
  return any && best > 1e-12 ? best : 0.0;
}

/// Point-in-box grid search for feasibility of a conic program with at most 3 variables.
inline bool grid_feasible(const gbb::ConicProgram& p, double box, int steps, double tol) {
  const int n = p.num_vars();
  std::vector<double> x(n);
  std::vector<int> k(n, 0);
  while (true) {
    for (int i = 0; i < n; ++i) x[i] = -box + 2.0 * box * k[i] / steps;
    if (p.max_violation(x) <= tol) return true;
    int i = 0;
    while (i < n && ++k[i] > steps) k[i++] = 0;
    if (i == n) return false;
  }
}

/// Verdict of a mixed-integer program by trying every binary assignment.
inline bool enumerate_binaries(const gbb::ConicProgram& p) {
  const auto bins = p.binaries();
  const int nb = int(bins.size());
  std::vector<double> lb(p.num_vars()), ub(p.num_vars());
  for (int mask = 0; mask < (1 << nb); ++mask) {
    for (int i = 0; i < p.num_vars(); ++i) {
      lb[i] = p.variable(i).lb;
      ub[i] = p.variable(i).ub;
    }
    for (int k = 0; k < nb; ++k) lb[bins[k]] = ub[bins[k]] = double((mask >> k) & 1);
    if (gbb::solve_relaxation(p, &lb, &ub).status == gbb::RelaxStatus::Feasible) return true;
  }
  return false;
}

/// Box-bounded program in (x, y) with 1-3 disc constraints and an optional half-plane.
inline gbb::ConicProgram random_socp(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  gbb::ConicProgram p;
  const int x = p.add_variable("x", -2.0, 2.0), y = p.add_variable("y", -2.0, 2.0);
  const int discs = 1 + int(rng() % 3);
  for (int k = 0; k < discs; ++k) {
    gbb::AffineExpr ex, ey;
    ex.add(x, 1.0).constant = -1.5 * u(rng);
    ey.add(y, 1.0).constant = -1.5 * u(rng);
    const double r = 0.2 + 0.8 * std::abs(u(rng));
    p.add_soc({ex, ey}, r * r, "disc");
  }
  if (rng() % 2) p.add_linear({{x, u(rng)}, {y, u(rng)}}, gbb::Sense::Le, 0.5 * u(rng), "half-plane");
  return p;
}

/**
 * @brief Feasibility by dense sampling of the box; abstains (nullopt) when the
 * verdict is within `margin` of the boundary.
 */
inline std::optional<bool> sampled_feasibility(const gbb::ConicProgram& p, int steps, double margin) {
  bool inner = false, outer = false;
  std::vector<double> x(2);
  for (int i = 0; i <= steps; ++i) {
    for (int j = 0; j <= steps; ++j) {
      x[0] = -2.0 + 4.0 * i / steps;
      x[1] = -2.0 + 4.0 * j / steps;
      double v = 0.0;
      for (const auto& c : p.socs()) {
        double sq = 0.0;
        for (const auto& r : c.rows) sq += r.eval(x) * r.eval(x);
        v = std::max(v, std::sqrt(sq) - std::sqrt(c.bound));
      }
      for (const auto& c : p.linear()) {
        double act = -c.rhs, norm = 0.0;
        for (const auto& t : c.terms) {
          act += t.coef * x[t.var];
          norm += t.coef * t.coef;
        }
        v = std::max(v, act / std::max(std::sqrt(norm), 1e-12));
      }
      inner = inner || v <= -margin;
      outer = outer || v <= margin;
    }
  }
  if (inner) return true;
  if (!outer) return false;
  return std::nullopt;
}

/**
 * @brief Small mixed-integer program: a planar point assembled from SOS2,
 * SOS1 and plain binary pieces must land in a disc and a half-plane.
 */
inline gbb::ConicProgram random_micp(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  gbb::ConicProgram p;
  gbb::AffineExpr px, py;
  int budget = 12;
  const int groups = 1 + int(rng() % 3);
  for (int g = 0; g < groups; ++g) {
    const bool sos2 = rng() % 3 != 0;
    const int n = sos2 ? 3 + int(rng() % 3) : 2 + int(rng() % 3);
    const int bits = sos2 ? gbb::ceil_log2(n - 1) : gbb::ceil_log2(n);
    if (bits > budget) break;
    budget -= bits;
    std::vector<int> members;
    for (int j = 0; j < n; ++j) {
      const int v = p.add_variable("l" + std::to_string(g) + "." + std::to_string(j));
      members.push_back(v);
      px.add(v, u(rng));
      py.add(v, u(rng));
    }
    if (sos2) {
      p.add_sos2_log(members, "g" + std::to_string(g));
    } else {
      p.add_sos1_log(members, "g" + std::to_string(g));
    }
  }
  const int loose = std::min(budget, int(rng() % 3));
  for (int k = 0; k < loose; ++k) {
    const int b = p.add_binary("b" + std::to_string(k));
    px.add(b, 0.5 * u(rng));
    py.add(b, 0.5 * u(rng));
  }
  px.constant = -0.5 * u(rng);
  py.constant = -0.5 * u(rng);
  const double r = 0.1 + 0.4 * std::abs(u(rng));
  p.add_soc({px, py}, r * r, "target");
  gbb::AffineExpr side = px;
  side.add(py, u(rng));
  side.constant += 0.2 * u(rng);
  p.add_linear(side, gbb::Sense::Le, "side");
  return p;
}

/// Forward kinematics by 4x4 homogeneous matrices, composed from the tip back to the palm.
inline std::vector<Eigen::Matrix4d> homogeneous_chain(const gbb::GripperModel& m, const std::vector<double>& theta) {
  std::vector<Eigen::Matrix4d> out(m.links.size(), Eigen::Matrix4d::Identity());
  for (const auto& f : m.fingers) {
    for (std::size_t c = 0; c < f.joints.size(); ++c) {
      Eigen::Matrix4d acc = Eigen::Matrix4d::Identity();
      int dof = f.dof_offset;
      for (std::size_t j = 0; j <= c; ++j) dof += m.joints[f.joints[j]].dof();
      for (int j = int(c); j >= 0; --j) {
        const auto& jt = m.joints[f.joints[j]];
        Eigen::Matrix4d local = Eigen::Matrix4d::Identity();
        Eigen::Matrix3d r = Eigen::Matrix3d::Identity();
        for (int a = jt.dof() - 1; a >= 0; --a) {
          r = Eigen::AngleAxisd(theta[--dof], jt.axes[a]).toRotationMatrix() * r;
        }
        local.block<3, 3>(0, 0) = jt.frame * r;
        local.block<3, 1>(0, 3) = jt.offset;
        acc = local * acc;
      }
      out[f.links[c]] = acc;
    }
  }
  return out;
}

inline std::vector<Vec3> cube_vertices(double half) {
  std::vector<Vec3> v;
  for (int i = 0; i < 8; ++i) v.emplace_back(i & 1 ? half : -half, i & 2 ? half : -half, i & 4 ? half : -half);
  return v;
}

inline Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Vec3 v(nd(rng), nd(rng), nd(rng));
  return v.normalized();
}

}  // namespace oracle
