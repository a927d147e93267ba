#pragma once

// Primal-dual interior point for feasibility of LP/SOCP relaxations.
//
// Standard form after presolve:  A x = b,  G x + s = h,  s in K,
// K = nonnegative orthant x second-order cones. The homogeneous self-dual
// embedding yields either a feasible x or a Farkas certificate (y, z) with
// A'y + G'z = 0, z in K, b'y + h'z < 0.

#include "gbb/conic_program.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <optional>
#include <string>
#include <vector>

namespace gbb {

enum class RelaxStatus { Feasible, Infeasible, NumericalFailure };

inline const char* to_string(RelaxStatus s) {
  switch (s) {
    case RelaxStatus::Feasible: return "feasible";
    case RelaxStatus::Infeasible: return "infeasible";
    case RelaxStatus::NumericalFailure: return "numerical-failure";
  }
  return "?";
}

struct InfeasibilityCertificate {
  double violation = 0.0;  // -(b'y + h'z) for normalised (y, z)
  double residual = 0.0;   // ||A'y + G'z||_inf
  std::string source;
};

struct RelaxationResult {
  RelaxStatus status = RelaxStatus::NumericalFailure;
  std::vector<double> x;
  double max_residual = kInf;
  double gap = kInf;
  int iterations = 0;
  InfeasibilityCertificate certificate;
};

struct WarmStart {
  std::vector<double> point;
  std::vector<std::pair<int, double>> binaries;  // partial binary assignment
  std::vector<int> branch_order;
};

struct SolverOptions {
  int max_iterations = 200;
  double feas_tol = 1e-8;
  double gap_tol = 1e-8;
  double accept_tol = 1e-6;
  double step_factor = 0.99;
};

namespace detail {

struct StandardForm {
  int n = 0;
  Eigen::SparseMatrix<double> a;  // p x n
  Eigen::VectorXd b;
  Eigen::SparseMatrix<double> g;  // m x n
  Eigen::VectorXd h;
  int lp = 0;                     // leading orthant rows of G
  std::vector<int> soc_dims;
};

struct ConeScaling {
  Eigen::VectorXd lp_w;  // diagonal W of the orthant part
  std::vector<Eigen::MatrixXd> w, w_inv;
};

class ConeOps {
 public:
  explicit ConeOps(const StandardForm& sf) : lp_(sf.lp), dims_(sf.soc_dims) {
    int off = lp_;
    for (int d : dims_) {
      offsets_.push_back(off);
      off += d;
    }
    m_ = off;
  }

  [[nodiscard]] int degree() const { return lp_ + int(dims_.size()); }

  [[nodiscard]] Eigen::VectorXd identity() const {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(m_);
    e.head(lp_).setOnes();
    for (int off : offsets_) e[off] = 1.0;
    return e;
  }

  /// Smallest alpha with u + alpha * e in K.
  [[nodiscard]] double shift_needed(const Eigen::VectorXd& u) const {
    double a = -kInf;
    for (int i = 0; i < lp_; ++i) a = std::max(a, -u[i]);
    for (std::size_t k = 0; k < dims_.size(); ++k) {
      const int off = offsets_[k], d = dims_[k];
      a = std::max(a, u.segment(off + 1, d - 1).norm() - u[off]);
    }
    return a;
  }

  [[nodiscard]] double max_step(const Eigen::VectorXd& u, const Eigen::VectorXd& du) const {
    double alpha = kInf;
    for (int i = 0; i < lp_; ++i) {
      if (du[i] < 0.0) alpha = std::min(alpha, -u[i] / du[i]);
    }
    for (std::size_t k = 0; k < dims_.size(); ++k) {
      const int off = offsets_[k], d = dims_[k];
      const double u0 = u[off], d0 = du[off];
      const auto u1 = u.segment(off + 1, d - 1);
      const auto d1 = du.segment(off + 1, d - 1);
      const double qa = d0 * d0 - d1.squaredNorm();
      const double qb = u0 * d0 - u1.dot(d1);
      const double qc = std::max(u0 * u0 - u1.squaredNorm(), 0.0);
      double root = kInf;
      if (std::abs(qa) < 1e-300) {
        if (qb < 0.0) root = -qc / (2.0 * qb);
      } else {
        const double disc = qb * qb - qa * qc;
        if (disc >= 0.0) {
          const double sq = std::sqrt(disc);
          const double q = -(qb + (qb >= 0.0 ? sq : -sq));
          for (double r : {q / qa, q != 0.0 ? qc / q : kInf}) {
            if (r > 0.0) root = std::min(root, r);
          }
        }
      }
      if (d0 < 0.0) root = std::min(root, -u0 / d0);
      alpha = std::min(alpha, root);
    }
    return alpha;
  }

  [[nodiscard]] ConeScaling scaling(const Eigen::VectorXd& s, const Eigen::VectorXd& z) const {
    ConeScaling sc;
    sc.lp_w = (s.head(lp_).array() / z.head(lp_).array()).sqrt();
    for (std::size_t k = 0; k < dims_.size(); ++k) {
      const int off = offsets_[k], d = dims_[k];
      const Eigen::VectorXd sk = s.segment(off, d), zk = z.segment(off, d);
      const double sn = std::sqrt(std::max(sk[0] * sk[0] - sk.tail(d - 1).squaredNorm(), 1e-300));
      const double zn = std::sqrt(std::max(zk[0] * zk[0] - zk.tail(d - 1).squaredNorm(), 1e-300));
      const Eigen::VectorXd sb = sk / sn, zb = zk / zn;
      const double gamma = std::sqrt(std::max((1.0 + sb.dot(zb)) / 2.0, 1e-300));
      Eigen::VectorXd wb(d);
      wb[0] = (sb[0] + zb[0]) / (2.0 * gamma);
      wb.tail(d - 1) = (sb.tail(d - 1) - zb.tail(d - 1)) / (2.0 * gamma);
      const double eta = std::sqrt(sn / zn);
      const Eigen::VectorXd w1 = wb.tail(d - 1);
      Eigen::MatrixXd w(d, d), wi(d, d);
      const Eigen::MatrixXd block =
          Eigen::MatrixXd::Identity(d - 1, d - 1) + w1 * w1.transpose() / (1.0 + wb[0]);
      w(0, 0) = wb[0];
      w.block(0, 1, 1, d - 1) = w1.transpose();
      w.block(1, 0, d - 1, 1) = w1;
      w.block(1, 1, d - 1, d - 1) = block;
      wi = w;
      wi.block(0, 1, 1, d - 1) = -w1.transpose();
      wi.block(1, 0, d - 1, 1) = -w1;
      sc.w.push_back(eta * w);
      sc.w_inv.push_back(wi / eta);
    }
    return sc;
  }

  [[nodiscard]] Eigen::VectorXd apply_w(const ConeScaling& sc, const Eigen::VectorXd& v, bool inverse) const {
    Eigen::VectorXd out(m_);
    if (inverse) {
      out.head(lp_) = v.head(lp_).cwiseQuotient(sc.lp_w);
    } else {
      out.head(lp_) = v.head(lp_).cwiseProduct(sc.lp_w);
    }
    for (std::size_t k = 0; k < dims_.size(); ++k) {
      const int off = offsets_[k], d = dims_[k];
      out.segment(off, d) = (inverse ? sc.w_inv[k] : sc.w[k]) * v.segment(off, d);
    }
    return out;
  }

  /// u o v
  [[nodiscard]] Eigen::VectorXd jordan(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
    Eigen::VectorXd out(m_);
    out.head(lp_) = u.head(lp_).cwiseProduct(v.head(lp_));
    for (std::size_t k = 0; k < dims_.size(); ++k) {
      const int off = offsets_[k], d = dims_[k];
      out[off] = u.segment(off, d).dot(v.segment(off, d));
      out.segment(off + 1, d - 1) = u[off] * v.segment(off + 1, d - 1) + v[off] * u.segment(off + 1, d - 1);
    }
    return out;
  }

  /// x with u o x = v
  [[nodiscard]] Eigen::VectorXd jordan_div(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
    Eigen::VectorXd out(m_);
    out.head(lp_) = v.head(lp_).cwiseQuotient(u.head(lp_));
    for (std::size_t k = 0; k < dims_.size(); ++k) {
      const int off = offsets_[k], d = dims_[k];
      const double u0 = u[off], v0 = v[off];
      const auto u1 = u.segment(off + 1, d - 1);
      const auto v1 = v.segment(off + 1, d - 1);
      const double det = u0 * u0 - u1.squaredNorm();
      const double x0 = (u0 * v0 - u1.dot(v1)) / det;
      out[off] = x0;
      out.segment(off + 1, d - 1) = (v1 - x0 * u1) / u0;
    }
    return out;
  }

  [[nodiscard]] int lp() const { return lp_; }
  [[nodiscard]] const std::vector<int>& dims() const { return dims_; }
  [[nodiscard]] const std::vector<int>& offsets() const { return offsets_; }
  [[nodiscard]] int size() const { return m_; }

 private:
  int lp_;
  std::vector<int> dims_;
  std::vector<int> offsets_;
  int m_ = 0;
};

/// Quasi-definite KKT system [dI A' G'; A -dI 0; G 0 -(W^2 + dI)] with refinement.
class KktSystem {
 public:
  KktSystem(const StandardForm& sf, const ConeOps& cones) : sf_(sf), cones_(cones) {
    n_ = sf.n;
    p_ = int(sf.a.rows());
    m_ = int(sf.g.rows());
    at_ = sf.a.transpose();
    gt_ = sf.g.transpose();
  }

  bool factor(const ConeScaling& sc) {
    sc_ = &sc;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(std::size_t(sf_.a.nonZeros() + sf_.g.nonZeros() + n_ + p_ + m_ * 4));
    for (int i = 0; i < n_; ++i) trip.emplace_back(i, i, kReg);
    for (int i = 0; i < p_; ++i) trip.emplace_back(n_ + i, n_ + i, -kReg);
    for (int k = 0; k < sf_.a.outerSize(); ++k) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(sf_.a, k); it; ++it) {
        trip.emplace_back(n_ + int(it.row()), int(it.col()), it.value());
      }
    }
    for (int k = 0; k < sf_.g.outerSize(); ++k) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(sf_.g, k); it; ++it) {
        trip.emplace_back(n_ + p_ + int(it.row()), int(it.col()), it.value());
      }
    }
    const int z0 = n_ + p_;
    for (int i = 0; i < cones_.lp(); ++i) {
      trip.emplace_back(z0 + i, z0 + i, -(sc.lp_w[i] * sc.lp_w[i]) - kReg);
    }
    w2_.clear();
    for (std::size_t k = 0; k < cones_.dims().size(); ++k) {
      const int off = cones_.offsets()[k], d = cones_.dims()[k];
      Eigen::MatrixXd w2 = sc.w[k] * sc.w[k];
      w2_.push_back(w2);
      for (int r = 0; r < d; ++r) {
        for (int c = 0; c <= r; ++c) {
          trip.emplace_back(z0 + off + r, z0 + off + c, -w2(r, c) - (r == c ? kReg : 0.0));
        }
      }
    }
    Eigen::SparseMatrix<double> k(n_ + p_ + m_, n_ + p_ + m_);
    k.setFromTriplets(trip.begin(), trip.end());
    if (!analysed_) {
      ldlt_.analyzePattern(k);
      analysed_ = true;
    }
    ldlt_.factorize(k);
    return ldlt_.info() == Eigen::Success;
  }

  /// Solve the unregularised system for rhs (rx, ry, rz).
  void solve(const Eigen::VectorXd& rx, const Eigen::VectorXd& ry, const Eigen::VectorXd& rz, Eigen::VectorXd& dx,
             Eigen::VectorXd& dy, Eigen::VectorXd& dz) const {
    Eigen::VectorXd rhs(n_ + p_ + m_);
    rhs << rx, ry, rz;
    Eigen::VectorXd sol = ldlt_.solve(rhs);
    for (int it = 0; it < 3; ++it) {
      const Eigen::VectorXd res = rhs - multiply(sol);
      if (res.lpNorm<Eigen::Infinity>() <= 1e-14 * (1.0 + rhs.lpNorm<Eigen::Infinity>())) break;
      sol += ldlt_.solve(res);
    }
    dx = sol.head(n_);
    dy = sol.segment(n_, p_);
    dz = sol.tail(m_);
  }

 private:
  [[nodiscard]] Eigen::VectorXd multiply(const Eigen::VectorXd& v) const {
    const Eigen::VectorXd x = v.head(n_), y = v.segment(n_, p_), z = v.tail(m_);
    Eigen::VectorXd out(n_ + p_ + m_);
    out.head(n_) = at_ * y + gt_ * z;
    out.segment(n_, p_) = sf_.a * x;
    Eigen::VectorXd w2z(m_);
    for (int i = 0; i < cones_.lp(); ++i) w2z[i] = sc_->lp_w[i] * sc_->lp_w[i] * z[i];
    for (std::size_t k = 0; k < cones_.dims().size(); ++k) {
      const int off = cones_.offsets()[k], d = cones_.dims()[k];
      w2z.segment(off, d) = w2_[k] * z.segment(off, d);
    }
    out.tail(m_) = sf_.g * x - w2z;
    return out;
  }

  static constexpr double kReg = 1e-9;
  const StandardForm& sf_;
  const ConeOps& cones_;
  const ConeScaling* sc_ = nullptr;
  int n_ = 0, p_ = 0, m_ = 0;
  Eigen::SparseMatrix<double> at_, gt_;
  std::vector<Eigen::MatrixXd> w2_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
  bool analysed_ = false;
};

struct HsdeOutcome {
  RelaxStatus status = RelaxStatus::NumericalFailure;
  Eigen::VectorXd x;
  double gap = kInf;
  int iterations = 0;
  InfeasibilityCertificate certificate;
};

// `accept` maps a candidate x to its violation of the original program.
template <class Accept>
HsdeOutcome solve_hsde(const StandardForm& sf, const SolverOptions& opt, Accept&& accept) {
  HsdeOutcome out;
  const ConeOps cones(sf);
  const int n = sf.n, p = int(sf.a.rows()), m = int(sf.g.rows());
  const Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
  const Eigen::VectorXd e = cones.identity();
  const Eigen::SparseMatrix<double> at = sf.a.transpose(), gt = sf.g.transpose();
  const double bnorm = sf.b.size() ? sf.b.lpNorm<Eigen::Infinity>() : 0.0;
  const double hnorm = sf.h.size() ? sf.h.lpNorm<Eigen::Infinity>() : 0.0;

  KktSystem kkt(sf, cones);
  ConeScaling unit;
  unit.lp_w = Eigen::VectorXd::Ones(cones.lp());
  for (int d : cones.dims()) {
    unit.w.push_back(Eigen::MatrixXd::Identity(d, d));
    unit.w_inv.push_back(Eigen::MatrixXd::Identity(d, d));
  }
  if (!kkt.factor(unit)) return out;

  Eigen::VectorXd x, y, z, s;
  {
    Eigen::VectorXd px, py, pz;
    kkt.solve(Eigen::VectorXd::Zero(n), sf.b, sf.h, px, py, pz);
    x = px;
    s = -pz;
    const double as = cones.shift_needed(s);
    if (as >= 0.0) s += (1.0 + as) * e;
    Eigen::VectorXd dx, dy, dz;
    kkt.solve(-c, Eigen::VectorXd::Zero(p), Eigen::VectorXd::Zero(m), dx, dy, dz);
    y = dy;
    z = dz;
    const double az = cones.shift_needed(z);
    if (az >= 0.0) z += (1.0 + az) * e;
  }
  double tau = 1.0, kappa = 1.0;
  const double degree = cones.degree() + 1.0;

  for (int iter = 0; iter <= opt.max_iterations; ++iter) {
    out.iterations = iter;
    const Eigen::VectorXd r1 = at * y + gt * z + c * tau;
    const Eigen::VectorXd r2 = -(sf.a * x) + sf.b * tau;
    const Eigen::VectorXd r3 = s + sf.g * x - sf.h * tau;
    const double by_hz = (p ? sf.b.dot(y) : 0.0) + (m ? sf.h.dot(z) : 0.0);
    const double r4 = kappa + c.dot(x) + by_hz;
    const double mu = ((m ? s.dot(z) : 0.0) + tau * kappa) / degree;

    const double pres = std::max(p ? r2.lpNorm<Eigen::Infinity>() / (tau * (1.0 + bnorm)) : 0.0,
                                 m ? r3.lpNorm<Eigen::Infinity>() / (tau * (1.0 + hnorm)) : 0.0);
    const double dres = n ? r1.lpNorm<Eigen::Infinity>() / tau : 0.0;
    const double gap = std::abs(by_hz) / tau + (m ? s.dot(z) : 0.0) / (tau * tau);
    out.gap = gap;
    if (pres <= opt.feas_tol) {
      const Eigen::VectorXd xc = x / tau;
      const double viol = accept(xc);
      const bool converged = dres <= opt.feas_tol && gap <= opt.gap_tol;
      if (viol <= 1e-9 || (converged && viol <= opt.accept_tol)) {
        out.status = RelaxStatus::Feasible;
        out.x = xc;
        return out;
      }
    }
    if (by_hz < 0.0) {
      const double res = (at * y + gt * z).lpNorm<Eigen::Infinity>();
      if (res <= opt.feas_tol * -by_hz) {
        const double scale = std::max(p ? y.lpNorm<Eigen::Infinity>() : 0.0, m ? z.lpNorm<Eigen::Infinity>() : 0.0);
        const double violation = -by_hz / scale;
        if (violation >= 1e-7) {
          out.status = RelaxStatus::Infeasible;
          out.certificate = {violation, res / scale, "self-dual embedding"};
          return out;
        }
      }
    }
    if (iter == opt.max_iterations) break;

    const ConeScaling sc = cones.scaling(s, z);
    if (!kkt.factor(sc)) return out;
    const Eigen::VectorXd lambda = cones.apply_w(sc, z, false);

    Eigen::VectorXd x1, y1, z1;
    kkt.solve(-c, sf.b, sf.h, x1, y1, z1);
    const double denom = c.dot(x1) + (p ? sf.b.dot(y1) : 0.0) + (m ? sf.h.dot(z1) : 0.0) - kappa / tau;

    struct Step {
      Eigen::VectorXd dx, dy, dz, ds;
      double dtau, dkappa;
    };
    auto direction = [&](double sigma, const Eigen::VectorXd& ds_target, double dk_target) {
      Step st;
      const double f = 1.0 - sigma;
      const Eigen::VectorXd wl = cones.apply_w(sc, cones.jordan_div(lambda, ds_target), false);
      Eigen::VectorXd x2, y2, z2;
      kkt.solve(-f * r1, f * r2, -f * r3 - wl, x2, y2, z2);
      const double num = -f * r4 - dk_target / tau -
                         (c.dot(x2) + (p ? sf.b.dot(y2) : 0.0) + (m ? sf.h.dot(z2) : 0.0));
      st.dtau = num / denom;
      st.dx = x2 + st.dtau * x1;
      st.dy = y2 + st.dtau * y1;
      st.dz = z2 + st.dtau * z1;
      st.ds = wl - cones.apply_w(sc, cones.apply_w(sc, st.dz, false), false);
      st.dkappa = (dk_target - kappa * st.dtau) / tau;
      return st;
    };
    auto step_length = [&](const Step& st) {
      double a = std::min(cones.max_step(s, st.ds), cones.max_step(z, st.dz));
      if (st.dtau < 0.0) a = std::min(a, -tau / st.dtau);
      if (st.dkappa < 0.0) a = std::min(a, -kappa / st.dkappa);
      return a;
    };

    const Eigen::VectorXd ll = cones.jordan(lambda, lambda);
    const Step aff = direction(0.0, -ll, -tau * kappa);
    const double alpha_aff = std::min(1.0, step_length(aff));
    const double sigma = std::pow(1.0 - alpha_aff, 3);
    const Eigen::VectorXd corr =
        cones.jordan(cones.apply_w(sc, aff.ds, true), cones.apply_w(sc, aff.dz, false));
    const Step cmb = direction(sigma, -ll - corr + sigma * mu * e, -tau * kappa - aff.dtau * aff.dkappa + sigma * mu);
    const double alpha = std::min(1.0, opt.step_factor * step_length(cmb));
    if (!std::isfinite(alpha) || alpha <= 1e-12) return out;

    x += alpha * cmb.dx;
    y += alpha * cmb.dy;
    z += alpha * cmb.dz;
    s += alpha * cmb.ds;
    tau += alpha * cmb.dtau;
    kappa += alpha * cmb.dkappa;
    if (!(tau > 0.0) || !(kappa > 0.0) || !x.allFinite() || !z.allFinite()) return out;
    // keep tau from drifting to huge magnitudes on long runs
    const double norm = std::max(1.0, tau);
    if (norm > 1e8) {
      x /= norm;
      y /= norm;
      z /= norm;
      s /= norm;
      tau /= norm;
      kappa /= norm;
    }
  }
  return out;
}

}  // namespace detail

/**
 * @brief Solve the continuous relaxation (binaries in [0, 1]) for feasibility.
 *
 * `lb`/`ub` override the program's variable bounds (branching fixes
 * binaries this way). A warm start that is already feasible is returned
 * as is.
 */
inline RelaxationResult solve_relaxation(const ConicProgram& prog, const std::vector<double>* lb_override = nullptr,
                                         const std::vector<double>* ub_override = nullptr,
                                         const WarmStart* start = nullptr, const SolverOptions& opt = {}) {
  const int nv = prog.num_vars();
  std::vector<double> lb(nv), ub(nv);
  for (int i = 0; i < nv; ++i) {
    lb[i] = lb_override ? (*lb_override)[i] : prog.variable(i).lb;
    ub[i] = ub_override ? (*ub_override)[i] : prog.variable(i).ub;
  }
  auto violation = [&](const std::vector<double>& x) {
    double v = prog.max_violation(x);
    for (int i = 0; i < nv; ++i) v = std::max(v, std::max(lb[i] - x[i], x[i] - ub[i]));
    return v;
  };

  RelaxationResult res;
  if (start && int(start->point.size()) == nv && violation(start->point) <= 1e-9) {
    res.status = RelaxStatus::Feasible;
    res.x = start->point;
    res.max_residual = violation(start->point);
    res.gap = 0.0;
    return res;
  }

  auto infeasible = [&](double amount, const std::string& why) {
    res.status = RelaxStatus::Infeasible;
    res.certificate = {amount, 0.0, why};
    return res;
  };

  // Presolve: propagate fixings through rows whose activity is pinned by bounds.
  for (int i = 0; i < nv; ++i) {
    if (lb[i] > ub[i] + 1e-9) return infeasible(lb[i] - ub[i], "bounds of " + prog.variable(i).name);
  }
  std::vector<char> fixed(nv, 0);
  std::vector<double> value(nv, 0.0);
  auto refresh_fixed = [&]() {
    for (int i = 0; i < nv; ++i) {
      if (!fixed[i] && std::isfinite(lb[i]) && ub[i] - lb[i] <= 1e-12 * std::max(1.0, std::abs(lb[i]))) {
        fixed[i] = 1;
        value[i] = 0.5 * (lb[i] + ub[i]);
      }
    }
  };
  refresh_fixed();
  const auto& rows = prog.linear();
  for (int pass = 0; pass < 50; ++pass) {
    bool changed = false;
    for (const auto& row : rows) {
      double fixed_part = 0.0, lo = 0.0, hi = 0.0, scale = 1.0;
      int free_count = 0;
      for (const auto& t : row.terms) {
        scale = std::max(scale, std::abs(t.coef));
        if (fixed[t.var]) {
          fixed_part += t.coef * value[t.var];
          continue;
        }
        ++free_count;
        lo += t.coef > 0 ? t.coef * lb[t.var] : t.coef * ub[t.var];
        hi += t.coef > 0 ? t.coef * ub[t.var] : t.coef * lb[t.var];
      }
      const double rhs = row.rhs - fixed_part;
      const double tol = 1e-9 * std::max(1.0, std::abs(row.rhs)) * scale;
      const double infeas_tol = 1e-7 * std::max(1.0, std::abs(row.rhs)) * scale;
      const bool check_lo = row.sense != Sense::Ge;  // row <= rhs binds against the low activity
      const bool check_hi = row.sense != Sense::Le;
      if (check_lo && lo > rhs + infeas_tol) return infeasible((lo - rhs) / scale, "row " + row.tag);
      if (check_hi && hi < rhs - infeas_tol) return infeasible((rhs - hi) / scale, "row " + row.tag);
      if (free_count == 0) continue;
      auto pin = [&](bool low_side) {
        for (const auto& t : row.terms) {
          if (fixed[t.var]) continue;
          const double v = (t.coef > 0) == low_side ? lb[t.var] : ub[t.var];
          lb[t.var] = ub[t.var] = v;
        }
        changed = true;
      };
      if (check_lo && std::isfinite(lo) && lo >= rhs - tol) {
        pin(true);
      } else if (check_hi && std::isfinite(hi) && hi <= rhs + tol) {
        pin(false);
      } else if (free_count == 1) {
        for (const auto& t : row.terms) {
          if (fixed[t.var]) continue;
          const double v = rhs / t.coef;
          if (row.sense == Sense::Eq) {
            if (v < lb[t.var] - infeas_tol || v > ub[t.var] + infeas_tol) {
              return infeasible(std::max(lb[t.var] - v, v - ub[t.var]), "row " + row.tag);
            }
            lb[t.var] = ub[t.var] = std::clamp(v, lb[t.var], ub[t.var]);
            changed = true;
          } else {
            const bool upper = (row.sense == Sense::Le) == (t.coef > 0);
            if (upper && v < lb[t.var] - infeas_tol) return infeasible(lb[t.var] - v, "row " + row.tag);
            if (!upper && v > ub[t.var] + infeas_tol) return infeasible(v - ub[t.var], "row " + row.tag);
            if (upper && v < ub[t.var]) {
              ub[t.var] = std::max(v, lb[t.var]);
              changed = true;
            } else if (!upper && v > lb[t.var]) {
              lb[t.var] = std::min(v, ub[t.var]);
              changed = true;
            }
          }
        }
      }
    }
    refresh_fixed();
    if (!changed) break;
  }

  std::vector<int> column(nv, -1);
  int n = 0;
  for (int i = 0; i < nv; ++i) {
    if (!fixed[i]) column[i] = n++;
  }

  std::vector<Eigen::Triplet<double>> at, gt;
  std::vector<double> bvec, hvec;
  int p = 0, mrow = 0;
  auto add_row = [&](std::vector<Eigen::Triplet<double>>& trip, std::vector<double>& rhsv, int& count,
                     const std::vector<std::pair<int, double>>& coeffs, double rhs, double scale) {
    for (const auto& [col, v] : coeffs) trip.emplace_back(count, col, v / scale);
    rhsv.push_back(rhs / scale);
    ++count;
  };
  for (const auto& row : rows) {
    std::vector<std::pair<int, double>> coeffs;
    double fixed_part = 0.0, scale = 0.0;
    for (const auto& t : row.terms) {
      if (fixed[t.var]) {
        fixed_part += t.coef * value[t.var];
      } else {
        coeffs.emplace_back(column[t.var], t.coef);
        scale = std::max(scale, std::abs(t.coef));
      }
    }
    const double rhs = row.rhs - fixed_part;
    if (coeffs.empty()) {
      const double tol = 1e-7 * std::max(1.0, std::abs(row.rhs));
      const bool bad = (row.sense == Sense::Eq && std::abs(rhs) > tol) || (row.sense == Sense::Le && rhs < -tol) ||
                       (row.sense == Sense::Ge && rhs > tol);
      if (bad) return infeasible(std::abs(rhs), "row " + row.tag);
      continue;
    }
    if (row.sense == Sense::Eq) {
      add_row(at, bvec, p, coeffs, rhs, scale);
    } else {
      if (row.sense == Sense::Ge) {
        for (auto& cv : coeffs) cv.second = -cv.second;
      }
      add_row(gt, hvec, mrow, coeffs, row.sense == Sense::Ge ? -rhs : rhs, scale);
    }
  }
  for (int i = 0; i < nv; ++i) {
    if (fixed[i]) continue;
    if (std::isfinite(lb[i])) add_row(gt, hvec, mrow, {{column[i], -1.0}}, -lb[i], 1.0);
    if (std::isfinite(ub[i])) add_row(gt, hvec, mrow, {{column[i], 1.0}}, ub[i], 1.0);
  }
  const int lp_rows = mrow;
  std::vector<int> soc_dims;
  for (const auto& cone : prog.socs()) {
    std::vector<std::vector<std::pair<int, double>>> crow;
    std::vector<double> cconst;
    bool any_free = false;
    double scale = 1.0;
    for (const auto& r : cone.rows) {
      std::vector<std::pair<int, double>> coeffs;
      double k = r.constant;
      for (const auto& t : r.terms) {
        if (fixed[t.var]) {
          k += t.coef * value[t.var];
        } else {
          coeffs.emplace_back(column[t.var], t.coef);
          scale = std::max(scale, std::abs(t.coef));
          any_free = true;
        }
      }
      crow.push_back(std::move(coeffs));
      cconst.push_back(k);
    }
    if (cone.bound < 0.0) return infeasible(-cone.bound, "cone " + cone.tag + " has a negative bound");
    if (!any_free) {
      double sq = 0.0;
      for (double k : cconst) sq += k * k;
      if (std::sqrt(sq) > std::sqrt(cone.bound) + 1e-7) {
        return infeasible(std::sqrt(sq) - std::sqrt(cone.bound), "cone " + cone.tag);
      }
      continue;
    }
    if (cone.bound == 0.0) {
      for (std::size_t r = 0; r < crow.size(); ++r) {
        if (crow[r].empty()) {
          if (std::abs(cconst[r]) > 1e-7) return infeasible(std::abs(cconst[r]), "cone " + cone.tag);
          continue;
        }
        add_row(at, bvec, p, crow[r], -cconst[r], 1.0);
      }
      continue;
    }
    soc_dims.push_back(int(crow.size()) + 1);
  }
  // Second pass so cone rows follow every orthant row.
  for (const auto& cone : prog.socs()) {
    if (cone.bound <= 0.0) continue;
    std::vector<std::vector<std::pair<int, double>>> crow;
    std::vector<double> cconst;
    bool any_free = false;
    double scale = 1.0;
    for (const auto& r : cone.rows) {
      std::vector<std::pair<int, double>> coeffs;
      double k = r.constant;
      for (const auto& t : r.terms) {
        if (fixed[t.var]) {
          k += t.coef * value[t.var];
        } else {
          coeffs.emplace_back(column[t.var], t.coef);
          scale = std::max(scale, std::abs(t.coef));
          any_free = true;
        }
      }
      crow.push_back(std::move(coeffs));
      cconst.push_back(k);
    }
    if (!any_free) continue;
    scale = std::max(scale, std::sqrt(cone.bound));
    // s = (sqrt(c), M x + q)  written as  G x + s = h
    add_row(gt, hvec, mrow, {}, std::sqrt(cone.bound), scale);
    for (std::size_t r = 0; r < crow.size(); ++r) {
      std::vector<std::pair<int, double>> neg;
      for (const auto& [col, v] : crow[r]) neg.emplace_back(col, -v);
      add_row(gt, hvec, mrow, neg, cconst[r], scale);
    }
  }

  std::vector<double> full(nv);
  auto expand = [&](const Eigen::VectorXd& xc) {
    for (int i = 0; i < nv; ++i) full[i] = fixed[i] ? value[i] : xc[column[i]];
    return full;
  };

  if (n == 0) {
    Eigen::VectorXd empty;
    expand(empty);
    res.x = full;
    res.max_residual = violation(full);
    res.gap = 0.0;
    if (res.max_residual <= opt.accept_tol) {
      res.status = RelaxStatus::Feasible;
    } else {
      res.status = RelaxStatus::Infeasible;
      res.certificate = {res.max_residual, 0.0, "all variables fixed"};
    }
    return res;
  }

  detail::StandardForm sf;
  sf.n = n;
  sf.a.resize(p, n);
  sf.a.setFromTriplets(at.begin(), at.end());
  sf.b = Eigen::Map<Eigen::VectorXd>(bvec.data(), p);
  sf.g.resize(mrow, n);
  sf.g.setFromTriplets(gt.begin(), gt.end());
  sf.h = Eigen::Map<Eigen::VectorXd>(hvec.data(), mrow);
  sf.lp = lp_rows;
  sf.soc_dims = soc_dims;

  const auto outcome = detail::solve_hsde(sf, opt, [&](const Eigen::VectorXd& xc) { return violation(expand(xc)); });
  res.iterations = outcome.iterations;
  res.gap = outcome.gap;
  res.status = outcome.status;
  res.certificate = outcome.certificate;
  if (outcome.status == RelaxStatus::Feasible) {
    res.x = expand(outcome.x);
    res.max_residual = violation(res.x);
  }
  return res;
}

}  // namespace gbb
