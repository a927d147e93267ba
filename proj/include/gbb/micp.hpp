#pragma once

#include "gbb/conic_program.hpp"
#include "gbb/socp_solver.hpp"

#include <cmath>
#include <cstdint>
#include <ostream>
#include <queue>
#include <vector>

namespace gbb {

enum class MicpStatus { Feasible, Infeasible, BudgetExceeded, NumericalFailure };

inline const char* to_string(MicpStatus s) {
  switch (s) {
    case MicpStatus::Feasible: return "feasible";
    case MicpStatus::Infeasible: return "infeasible";
    case MicpStatus::BudgetExceeded: return "budget-exceeded";
    case MicpStatus::NumericalFailure: return "numerical-failure";
  }
  return "?";
}

struct MicpOptions {
  int node_budget = 20000;
  double integrality_tol = 1e-6;
  SolverOptions relaxation;
  std::ostream* trace = nullptr;  // one line per node
};

struct MicpResult {
  MicpStatus status = MicpStatus::Infeasible;
  std::vector<double> x;
  int nodes = 0;
  int relaxations = 0;
  int numerical_failures = 0;
};

/**
 * @brief Feasibility branch-and-bound over the binaries of a conic program.
 *
 * Nodes are explored best-first by the fractional-binary count of their
 * parent's relaxation, deeper nodes first, then FIFO. A node is pruned only
 * when its relaxation is infeasible; numerical failures force branching.
 */
inline MicpResult solve_micp(const ConicProgram& prog, const WarmStart* start = nullptr, const MicpOptions& opt = {}) {
  MicpResult out;
  const std::vector<int> bins = prog.binaries();
  const int nb = int(bins.size());
  std::vector<double> base_lb(prog.num_vars()), base_ub(prog.num_vars());
  for (int i = 0; i < prog.num_vars(); ++i) {
    base_lb[i] = prog.variable(i).lb;
    base_ub[i] = prog.variable(i).ub;
  }

  struct Node {
    std::vector<std::int8_t> fix;  // per binary: -1 free, 0, 1
    std::vector<double> hint;
    int parent_fractional = 0;
    int depth = 0;
    std::uint64_t seq = 0;
  };
  auto worse = [](const Node& a, const Node& b) {
    if (a.parent_fractional != b.parent_fractional) return a.parent_fractional > b.parent_fractional;
    if (a.depth != b.depth) return a.depth < b.depth;
    return a.seq > b.seq;
  };
  std::priority_queue<Node, std::vector<Node>, decltype(worse)> open(worse);
  std::uint64_t seq = 0;

  auto bounds_for = [&](const std::vector<std::int8_t>& fix, std::vector<double>& lb, std::vector<double>& ub) {
    lb = base_lb;
    ub = base_ub;
    for (int k = 0; k < nb; ++k) {
      if (fix[k] >= 0) lb[bins[k]] = ub[bins[k]] = double(fix[k]);
    }
  };
  auto trace = [&](const Node& n, const char* what, int extra = -1) {
    if (!opt.trace) return;
    *opt.trace << "node=" << out.nodes << " depth=" << n.depth << " event=" << what;
    if (extra >= 0) *opt.trace << " binary=" << extra;
    *opt.trace << "\n";
  };

  // Returns true when x (feasible for the node) is integral and confirmed.
  auto integral_point = [&](std::vector<double>& x) {
    std::vector<std::int8_t> fix(nb);
    bool exact = true;
    for (int k = 0; k < nb; ++k) {
      const double v = x[bins[k]];
      if (std::min(std::abs(v), std::abs(1.0 - v)) > opt.integrality_tol) return false;
      fix[k] = v > 0.5 ? 1 : 0;
      exact = exact && (v == 0.0 || v == 1.0);
    }
    if (exact) return true;
    std::vector<double> lb, ub;
    bounds_for(fix, lb, ub);
    WarmStart ws{x, {}, {}};
    const auto r = solve_relaxation(prog, &lb, &ub, &ws, opt.relaxation);
    ++out.relaxations;
    if (r.status != RelaxStatus::Feasible) return false;
    x = r.x;
    return true;
  };

  // Binaries named in the branching hint are split first, in hint order.
  std::vector<int> hinted_order;
  if (start) {
    for (int var : start->branch_order) {
      for (int k = 0; k < nb; ++k) {
        if (bins[k] == var) hinted_order.push_back(k);
      }
    }
  }

  if (start && int(start->point.size()) == prog.num_vars()) {
    std::vector<double> x = start->point;
    if (prog.max_violation(x) <= 1e-9 && prog.integrality_violation(x) == 0.0) {
      out.status = MicpStatus::Feasible;
      out.x = std::move(x);
      return out;
    }
  }

  Node root;
  root.fix.assign(nb, -1);
  root.seq = seq++;
  if (start && !start->binaries.empty()) {
    // Dive with the hinted assignment first; the full search follows if it fails.
    Node dive = root;
    dive.seq = seq++;
    for (const auto& [var, val] : start->binaries) {
      for (int k = 0; k < nb; ++k) {
        if (bins[k] == var) dive.fix[k] = val > 0.5 ? 1 : 0;
      }
    }
    dive.hint = start->point;
    std::vector<double> lb, ub;
    bounds_for(dive.fix, lb, ub);
    WarmStart ws{dive.hint, {}, {}};
    const auto r = solve_relaxation(prog, &lb, &ub, dive.hint.empty() ? nullptr : &ws, opt.relaxation);
    ++out.relaxations;
    ++out.nodes;
    if (r.status == RelaxStatus::Feasible) {
      std::vector<double> x = r.x;
      if (integral_point(x)) {
        trace(dive, "warm-dive-feasible");
        out.status = MicpStatus::Feasible;
        out.x = std::move(x);
        return out;
      }
    }
    trace(dive, "warm-dive-failed");
    if (start) root.hint = start->point;
  }
  open.push(root);

  bool leaf_failure = false;
  while (!open.empty()) {
    if (out.nodes >= opt.node_budget) {
      out.status = MicpStatus::BudgetExceeded;
      return out;
    }
    Node node = open.top();
    open.pop();
    ++out.nodes;
    std::vector<double> lb, ub;
    bounds_for(node.fix, lb, ub);
    WarmStart ws{node.hint, {}, {}};
    const auto r = solve_relaxation(prog, &lb, &ub, node.hint.empty() ? nullptr : &ws, opt.relaxation);
    ++out.relaxations;

    int branch = -1;
    int fractional = 0;
    std::vector<double> hint;
    if (r.status == RelaxStatus::Infeasible) {
      trace(node, "pruned-infeasible");
      continue;
    }
    if (r.status == RelaxStatus::NumericalFailure) {
      ++out.numerical_failures;
      for (int k = 0; k < nb && branch < 0; ++k) {
        if (node.fix[k] < 0) branch = k;
      }
      if (branch < 0) {
        leaf_failure = true;
        trace(node, "leaf-numerical-failure");
        continue;
      }
      trace(node, "numerical-failure-branch", bins[branch]);
      fractional = nb;
      hint = node.hint;
    } else {
      std::vector<double> x = r.x;
      double best = -1.0;
      for (int k = 0; k < nb; ++k) {
        if (node.fix[k] >= 0) continue;
        const double v = x[bins[k]];
        const double frac = std::min(std::abs(v), std::abs(1.0 - v));
        if (frac > opt.integrality_tol) ++fractional;
        if (frac > best + 1e-12) {
          best = frac;
          branch = k;
        }
      }
      for (int k : hinted_order) {
        if (node.fix[k] >= 0) continue;
        const double v = x[bins[k]];
        if (std::min(std::abs(v), std::abs(1.0 - v)) > opt.integrality_tol) {
          branch = k;
          break;
        }
      }
      if (fractional == 0 && integral_point(x)) {
        trace(node, "integral");
        out.status = MicpStatus::Feasible;
        out.x = std::move(x);
        return out;
      }
      if (branch < 0) {
        // every binary fixed yet the confirmation failed; nothing left to split
        trace(node, "leaf-unconfirmed");
        continue;
      }
      trace(node, "branch", bins[branch]);
      hint = r.x;
    }
    const double v = r.status == RelaxStatus::Feasible ? r.x[bins[branch]] : 0.0;
    const std::int8_t first = v > 0.5 ? 1 : 0;
    for (std::int8_t val : {first, std::int8_t(1 - first)}) {
      Node child;
      child.fix = node.fix;
      child.fix[branch] = val;
      child.hint = hint;
      child.parent_fractional = fractional;
      child.depth = node.depth + 1;
      child.seq = seq++;
      open.push(std::move(child));
    }
  }
  out.status = leaf_failure ? MicpStatus::NumericalFailure : MicpStatus::Infeasible;
  return out;
}

}  // namespace gbb
