#pragma once

#include "gbb/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace gbb {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense { Eq, Le, Ge };

struct Variable {
  std::string name;
  double lb = -kInf;
  double ub = kInf;
  bool binary = false;
};

struct Term {
  int var = 0;
  double coef = 0.0;
};

/// sum(coef * x[var]) + constant
struct AffineExpr {
  std::vector<Term> terms;
  double constant = 0.0;

  [[nodiscard]] double eval(const std::vector<double>& x) const {
    double v = constant;
    for (const auto& t : terms) v += t.coef * x[t.var];
    return v;
  }

  AffineExpr& add(int var, double coef) {
    if (coef != 0.0) terms.push_back({var, coef});
    return *this;
  }
  AffineExpr& add(const AffineExpr& other, double scale = 1.0) {
    for (const auto& t : other.terms) add(t.var, scale * t.coef);
    constant += scale * other.constant;
    return *this;
  }
};

struct LinearConstraint {
  std::vector<Term> terms;
  Sense sense = Sense::Eq;
  double rhs = 0.0;
  std::string tag;
};

/// ||rows(x)||^2 <= bound
struct SocConstraint {
  std::vector<AffineExpr> rows;
  double bound = 0.0;
  std::string tag;
};

enum class SosType { Sos1, Sos2 };

struct SosGroup {
  SosType type = SosType::Sos2;
  std::vector<int> members;
  std::vector<int> binaries;
  std::vector<std::vector<int>> codes;  // code bits per segment (SOS2) or member (SOS1)
};

/// Reflected binary Gray code of i.
inline unsigned gray_code(unsigned i) { return i ^ (i >> 1); }

inline int ceil_log2(int n) {
  int k = 0;
  while ((1 << k) < n) ++k;
  return k;
}

/**
 * @brief Mixed-integer conic program: bounded variables (some binary),
 * sparse linear rows, squared second-order cone rows and SOS groups.
 */
class ConicProgram {
 public:
  int add_variable(std::string name, double lb = -kInf, double ub = kInf) {
    if (lb > ub) throw Error("add_variable: lower bound exceeds upper bound for '" + name + "'");
    vars_.push_back({std::move(name), lb, ub, false});
    return int(vars_.size()) - 1;
  }

  int add_binary(std::string name) {
    vars_.push_back({std::move(name), 0.0, 1.0, true});
    return int(vars_.size()) - 1;
  }

  int add_linear(std::vector<Term> terms, Sense sense, double rhs, std::string tag = {}) {
    for (const auto& t : terms) check_var(t.var);
    linear_.push_back({std::move(terms), sense, rhs, std::move(tag)});
    return int(linear_.size()) - 1;
  }

  /// expr (sense) 0
  int add_linear(const AffineExpr& expr, Sense sense, std::string tag = {}) {
    return add_linear(expr.terms, sense, -expr.constant, std::move(tag));
  }

  int add_soc(std::vector<AffineExpr> rows, double bound, std::string tag = {}) {
    for (const auto& r : rows) {
      for (const auto& t : r.terms) check_var(t.var);
    }
    soc_.push_back({std::move(rows), bound, std::move(tag)});
    return int(soc_.size()) - 1;
  }

  /// ||A x_vars + b||^2 <= c with a dense A (rows x vars.size()).
  int add_soc(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const std::vector<int>& vars, double c,
              std::string tag = {}) {
    if (a.cols() != int(vars.size()) || a.rows() != b.size()) {
      throw Error("add_soc: dimension mismatch (A is " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                  ", b has " + std::to_string(b.size()) + ", " + std::to_string(vars.size()) + " variables)");
    }
    std::vector<AffineExpr> rows(a.rows());
    for (int r = 0; r < a.rows(); ++r) {
      rows[r].constant = b[r];
      for (int k = 0; k < a.cols(); ++k) rows[r].add(vars[k], a(r, k));
    }
    return add_soc(std::move(rows), c, std::move(tag));
  }

  /**
   * @brief SOS2 over lambdas via the Gray-code logarithmic model.
   *
   * Adds lambda >= 0, sum = 1 and ceil(log2(n-1)) binaries. Segment s joins
   * lambda[s] and lambda[s+1] and carries code gray(s).
   */
  int add_sos2_log(const std::vector<int>& lambdas, const std::string& name = "sos2") {
    const int n = int(lambdas.size());
    if (n < 2) throw Error("add_sos2_log: need at least 2 members");
    for (int v : lambdas) check_var(v);
    const int segments = n - 1;
    const int bits = ceil_log2(segments);
    SosGroup g;
    g.type = SosType::Sos2;
    g.members = lambdas;
    for (int s = 0; s < segments; ++s) {
      std::vector<int> code(bits);
      for (int k = 0; k < bits; ++k) code[k] = int((gray_code(unsigned(s)) >> k) & 1u);
      g.codes.push_back(code);
    }
    simplex(lambdas, name);
    for (int k = 0; k < bits; ++k) {
      const int z = add_binary(name + ".z" + std::to_string(k));
      g.binaries.push_back(z);
      std::vector<Term> left, right;
      for (int j = 0; j < n; ++j) {
        bool all_one = true, all_zero = true;
        for (int s : {j - 1, j}) {
          if (s < 0 || s >= segments) continue;
          all_one = all_one && g.codes[s][k] == 1;
          all_zero = all_zero && g.codes[s][k] == 0;
        }
        if (all_one) left.push_back({lambdas[j], 1.0});
        if (all_zero) right.push_back({lambdas[j], 1.0});
      }
      left.push_back({z, -1.0});
      add_linear(std::move(left), Sense::Le, 0.0, name + ".L" + std::to_string(k));
      right.push_back({z, 1.0});
      add_linear(std::move(right), Sense::Le, 1.0, name + ".R" + std::to_string(k));
    }
    sos_.push_back(std::move(g));
    return int(sos_.size()) - 1;
  }

  /// SOS1 over gammas with ceil(log2 n) binaries; member j carries the binary code of j.
  int add_sos1_log(const std::vector<int>& gammas, const std::string& name = "sos1") {
    const int n = int(gammas.size());
    if (n < 1) throw Error("add_sos1_log: need at least 1 member");
    for (int v : gammas) check_var(v);
    const int bits = ceil_log2(n);
    SosGroup g;
    g.type = SosType::Sos1;
    g.members = gammas;
    for (int j = 0; j < n; ++j) {
      std::vector<int> code(bits);
      for (int k = 0; k < bits; ++k) code[k] = (j >> k) & 1;
      g.codes.push_back(code);
    }
    simplex(gammas, name);
    for (int k = 0; k < bits; ++k) {
      const int z = add_binary(name + ".z" + std::to_string(k));
      g.binaries.push_back(z);
      std::vector<Term> ones, zeros;
      for (int j = 0; j < n; ++j) (g.codes[j][k] ? ones : zeros).push_back({gammas[j], 1.0});
      ones.push_back({z, -1.0});
      add_linear(std::move(ones), Sense::Le, 0.0, name + ".L" + std::to_string(k));
      zeros.push_back({z, 1.0});
      add_linear(std::move(zeros), Sense::Le, 1.0, name + ".R" + std::to_string(k));
    }
    sos_.push_back(std::move(g));
    return int(sos_.size()) - 1;
  }

  void set_bounds(int var, double lb, double ub) {
    check_var(var);
    vars_[var].lb = lb;
    vars_[var].ub = ub;
  }

  [[nodiscard]] int count_binaries() const {
    int n = 0;
    for (const auto& v : vars_) n += v.binary;
    return n;
  }

  [[nodiscard]] std::vector<int> binaries() const {
    std::vector<int> out;
    for (int i = 0; i < num_vars(); ++i) {
      if (vars_[i].binary) out.push_back(i);
    }
    return out;
  }

  [[nodiscard]] int num_vars() const { return int(vars_.size()); }
  [[nodiscard]] const std::vector<Variable>& variables() const { return vars_; }
  [[nodiscard]] const Variable& variable(int i) const { return vars_.at(i); }
  [[nodiscard]] const std::vector<LinearConstraint>& linear() const { return linear_; }
  [[nodiscard]] const std::vector<SocConstraint>& socs() const { return soc_; }
  [[nodiscard]] const std::vector<SosGroup>& sos_groups() const { return sos_; }

  /// Largest violation of bounds, linear rows and cones at x (binaries taken as continuous).
  [[nodiscard]] double max_violation(const std::vector<double>& x) const {
    if (int(x.size()) != num_vars()) throw Error("max_violation: point has wrong dimension");
    double worst = 0.0;
    for (int i = 0; i < num_vars(); ++i) {
      worst = std::max(worst, std::max(vars_[i].lb - x[i], x[i] - vars_[i].ub));
    }
    for (const auto& c : linear_) {
      double act = 0.0, scale = 1.0;
      for (const auto& t : c.terms) {
        act += t.coef * x[t.var];
        scale = std::max(scale, std::abs(t.coef));
      }
      double v = 0.0;
      switch (c.sense) {
        case Sense::Eq: v = std::abs(act - c.rhs); break;
        case Sense::Le: v = act - c.rhs; break;
        case Sense::Ge: v = c.rhs - act; break;
      }
      worst = std::max(worst, v / scale);
    }
    for (const auto& c : soc_) {
      double sq = 0.0;
      for (const auto& r : c.rows) {
        const double v = r.eval(x);
        sq += v * v;
      }
      const double v = c.bound >= 0.0 ? std::sqrt(sq) - std::sqrt(c.bound) : std::sqrt(sq - c.bound);
      worst = std::max(worst, v);
    }
    return worst;
  }

  /// Largest distance of a binary variable from {0, 1}.
  [[nodiscard]] double integrality_violation(const std::vector<double>& x) const {
    double worst = 0.0;
    for (int i = 0; i < num_vars(); ++i) {
      if (vars_[i].binary) worst = std::max(worst, std::min(std::abs(x[i]), std::abs(1.0 - x[i])));
    }
    return worst;
  }

  /// Human-readable listing of variables, rows, cones and SOS groups.
  [[nodiscard]] std::string debug_text() const {
    std::ostringstream os;
    os.precision(17);
    auto bound = [](double v) -> std::string {
      if (v == kInf) return "+inf";
      if (v == -kInf) return "-inf";
      std::ostringstream s;
      s.precision(17);
      s << v;
      return s.str();
    };
    auto terms = [&](const std::vector<Term>& ts) {
      std::ostringstream s;
      s.precision(17);
      if (ts.empty()) s << "0";
      for (std::size_t k = 0; k < ts.size(); ++k) {
        s << (k ? " + " : "") << ts[k].coef << "*" << vars_[ts[k].var].name;
      }
      return s.str();
    };
    os << "variables " << vars_.size() << " (binary " << count_binaries() << ")\n";
    for (std::size_t i = 0; i < vars_.size(); ++i) {
      os << "  x" << i << " " << vars_[i].name << (vars_[i].binary ? " binary" : "") << " [" << bound(vars_[i].lb)
         << ", " << bound(vars_[i].ub) << "]\n";
    }
    os << "linear " << linear_.size() << "\n";
    for (const auto& c : linear_) {
      const char* op = c.sense == Sense::Eq ? "=" : c.sense == Sense::Le ? "<=" : ">=";
      os << "  " << (c.tag.empty() ? "-" : c.tag) << ": " << terms(c.terms) << " " << op << " " << c.rhs << "\n";
    }
    os << "cones " << soc_.size() << "\n";
    for (const auto& c : soc_) {
      os << "  " << (c.tag.empty() ? "-" : c.tag) << ": ||";
      for (std::size_t r = 0; r < c.rows.size(); ++r) {
        os << (r ? ", " : "") << "(" << terms(c.rows[r].terms) << " + " << c.rows[r].constant << ")";
      }
      os << "||^2 <= " << c.bound << "\n";
    }
    os << "sos " << sos_.size() << "\n";
    for (const auto& g : sos_) {
      os << "  " << (g.type == SosType::Sos1 ? "SOS1" : "SOS2") << " members";
      for (int m : g.members) os << " " << vars_[m].name;
      os << " binaries";
      for (int b : g.binaries) os << " " << vars_[b].name;
      os << "\n";
    }
    return os.str();
  }

 private:
  void check_var(int v) const {
    if (v < 0 || v >= int(vars_.size())) throw Error("conic program: unknown variable index " + std::to_string(v));
  }

  void simplex(const std::vector<int>& members, const std::string& name) {
    std::vector<Term> sum;
    for (int v : members) {
      vars_[v].lb = std::max(vars_[v].lb, 0.0);
      sum.push_back({v, 1.0});
    }
    add_linear(std::move(sum), Sense::Eq, 1.0, name + ".sum");
  }

  std::vector<Variable> vars_;
  std::vector<LinearConstraint> linear_;
  std::vector<SocConstraint> soc_;
  std::vector<SosGroup> sos_;
};

}  // namespace gbb
