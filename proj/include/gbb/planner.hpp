#pragma once

#include "gbb/local_ik.hpp"
#include "gbb/metric.hpp"
#include "gbb/micp.hpp"
#include "gbb/micp_ik.hpp"

#include <chrono>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <thread>
#include <vector>

namespace gbb {

enum class LowLevel { Unknown, True, False, Unresolved };

inline const char* to_string(LowLevel s) {
  switch (s) {
    case LowLevel::Unknown: return "unknown";
    case LowLevel::True: return "true";
    case LowLevel::False: return "false";
    case LowLevel::Unresolved: return "unresolved";
  }
  return "?";
}

struct BBNode {
  std::vector<int> kd;  // one KD-tree node per finger
  LowLevel low_level = LowLevel::Unknown;
  int parent = -1;
  double q_upper = 0.0;
  std::vector<double> warm;  // feasible MICP point of this node, if solved
};

struct PlannerConfig {
  IkConfig ik;
  ContactModel contact;
  MonotoneMetric metric;               // empty: Q1 under `contact`
  std::optional<double> q_stop;
  long node_budget = 1000000;          // high-level nodes
  int micp_node_budget = 20000;
  bool all_grasps = false;
  int threads = 1;
  double collision_tol = 0.0;          // 0: 1e-4 times the object radius
  int collision_rounds = 50;
  bool use_local_ik = true;
  bool use_warm_start = true;
  bool record_wall_time = true;
};

struct CheckResult {
  LowLevel status = LowLevel::Unknown;
  std::vector<double> x;
  int micp_solves = 0;
  int collision_rounds = 0;
  bool by_local_ik = false;
  double max_penetration = 0.0;
};

struct HistoryRecord {
  long nodes = 0;
  double q_best = -std::numeric_limits<double>::infinity();
  double wall_ms = 0.0;
  long micp_solves = 0;
  long nodes_cut = 0;
};

struct GraspSolution {
  std::vector<int> assignment;  // grasp point index per finger
  double quality = 0.0;
  std::vector<double> theta;
  Vec3 w = Vec3::Zero();
  Vec3 t = Vec3::Zero();
  std::vector<RigidTransform> link_poses;
  double max_residual = 0.0;     // fingertip position error
  double max_normal_gap = 0.0;   // ||R_i n_i - R n||^2 minus eps, clamped at 0
  double max_penetration = 0.0;
  bool exact = false;            // poses come from exact kinematics
  LowLevel status = LowLevel::True;
};

enum class PlanStatus { Optimal, Infeasible, Incomplete };

inline const char* to_string(PlanStatus s) {
  switch (s) {
    case PlanStatus::Optimal: return "optimal";
    case PlanStatus::Infeasible: return "infeasible";
    case PlanStatus::Incomplete: return "incomplete";
  }
  return "?";
}

struct PlanResult {
  PlanStatus status = PlanStatus::Infeasible;
  std::optional<GraspSolution> best;
  std::vector<GraspSolution> feasible;  // every feasible leaf when all_grasps is set
  std::vector<HistoryRecord> history;
  long nodes = 0;
  long micp_solves = 0;
  long nodes_cut = 0;
  long local_ik_hits = 0;
  long unresolved = 0;
  bool early_stop = false;
};

/**
 * @brief Two-level branch-and-bound grasp planner.
 *
 * The high level searches tuples of KD-tree nodes best-first by the metric
 * of their union; leaves are checked for kinematic feasibility bottom-up
 * with the MICP of `micp_ik.hpp` and a lazy collision loop.
 */
class Planner {
 public:
  Planner(const KdTree& tree, std::vector<ConvexBody> object_pieces, const GripperModel& model,
          const RotationGrid& grid, const ObjectRotationGrid& object_grid, PlannerConfig cfg)
      : tree_(tree), model_(model), cfg_(std::move(cfg)) {
    if (cfg_.threads < 1) throw Error("planner: threads must be >= 1");
    if (cfg_.collision_rounds < 1) throw Error("planner: collision_rounds must be >= 1");
    if (int(tree.points().size()) < model.num_fingers()) {
      throw Error("planner: need at least as many grasp points as fingers");
    }
    base_ = build_base(model, grid, object_grid, std::move(object_pieces), cfg_.ik);
    if (!cfg_.metric) cfg_.metric = q1_metric(cfg_.contact);
    if (cfg_.collision_tol <= 0.0) cfg_.collision_tol = 1e-4 * object_radius(base_.object_pieces);
  }

  [[nodiscard]] const PlannerConfig& config() const { return cfg_; }
  [[nodiscard]] const IkProgram& base() const { return base_; }
  [[nodiscard]] const std::vector<BBNode>& nodes() const { return nodes_; }
  [[nodiscard]] const BBNode& node(int id) const { return nodes_.at(id); }
  [[nodiscard]] long micp_solves() const { return micp_solves_; }

  /// Base program plus the region constraints of every finger along its KD-tree root path.
  [[nodiscard]] IkProgram node_program(const std::vector<int>& kd) const {
    check_kd(kd);
    IkProgram ik = base_;
    for (int f = 0; f < model_.num_fingers(); ++f) add_region_path(ik, f, tree_, kd[f]);
    return ik;
  }

  /**
   * @brief Low-level feasibility of one tuple: MICP solve, then penetration
   * checks with a separation cut for the deepest pair until no pair
   * penetrates deeper than the tolerance.
   */
  [[nodiscard]] CheckResult low_level_feasible(const std::vector<int>& kd, const std::vector<double>* warm = nullptr,
                                               bool try_local = false) const {
    IkProgram ik = node_program(kd);
    CheckResult out;
    if (try_local) {
      std::vector<IkState> starts;
      if (warm) {
        IkState s;
        marginal_means(ik, *warm, s.theta, s.w, s.t);
        starts.push_back(std::move(s));
      }
      for (auto& s : default_ik_starts(model_)) starts.push_back(std::move(s));
      if (auto x = local_ik_refine(ik, starts, cfg_.collision_tol)) {
        out.status = LowLevel::True;
        out.x = std::move(*x);
        out.by_local_ik = true;
        return out;
      }
    }
    std::optional<WarmStart> ws;
    if (warm && cfg_.use_warm_start) ws = extend_warm(ik, *warm);
    MicpOptions mo;
    mo.node_budget = cfg_.micp_node_budget;
    for (int round = 0; round < cfg_.collision_rounds; ++round) {
      const MicpResult r = solve_micp(ik.prog, ws ? &*ws : nullptr, mo);
      ++out.micp_solves;
      out.collision_rounds = round + 1;
      if (r.status == MicpStatus::Infeasible) {
        out.status = LowLevel::False;
        return out;
      }
      if (r.status != MicpStatus::Feasible) {
        out.status = LowLevel::Unresolved;
        return out;
      }
      std::vector<RigidTransform> poses(model_.links.size());
      for (int l = 0; l < model_.num_links(); ++l) poses[l] = ik.pose({false, l}, r.x);
      const RigidTransform obj = ik.pose({true, 0}, r.x);
      std::pair<BodyRef, BodyRef> worst;
      out.max_penetration = max_penetration(ik, poses, obj, &worst);
      if (out.max_penetration <= cfg_.collision_tol) {
        out.status = LowLevel::True;
        out.x = r.x;
        return out;
      }
      const auto& [a, b] = worst;
      add_separation_cut(ik, a, a.object ? obj : poses[a.index], b, b.object ? obj : poses[b.index]);
      ws = extend_warm(ik, r.x);
    }
    out.status = LowLevel::Unresolved;
    return out;
  }

  /**
   * @brief Feasibility of a leaf, reusing and updating the statuses of its
   * BB ancestors. Returns the leaf status.
   */
  LowLevel bottom_up_check(int leaf, const CheckResult* precomputed = nullptr) {
    for (int a = nodes_.at(leaf).parent; a >= 0; a = nodes_[a].parent) {
      if (nodes_[a].low_level == LowLevel::False) {
        nodes_[leaf].low_level = LowLevel::False;
        return LowLevel::False;
      }
    }
    for (int id = leaf; id >= 0; id = nodes_[id].parent) {
      BBNode& n = nodes_[id];
      if (n.low_level == LowLevel::True || n.low_level == LowLevel::Unresolved) break;
      CheckResult r = (id == leaf && precomputed) ? *precomputed : check(id);
      micp_solves_ += r.micp_solves;
      local_ik_hits_ += r.by_local_ik;
      n.low_level = r.status;
      if (r.status == LowLevel::False) continue;
      n.warm = std::move(r.x);
      for (int a = n.parent; a >= 0; a = nodes_[a].parent) {
        if (nodes_[a].low_level == LowLevel::Unknown) nodes_[a].low_level = LowLevel::True;
      }
      break;
    }
    return nodes_[leaf].low_level;
  }

  PlanResult plan() {
    const auto t0 = std::chrono::steady_clock::now();
    PlanResult res;
    nodes_.clear();
    micp_solves_ = 0;
    local_ik_hits_ = 0;
    double q_best = -std::numeric_limits<double>::infinity();
    const int k = model_.num_fingers();

    struct Entry {
      double q;
      std::uint64_t seq;
      int id;
    };
    auto worse = [](const Entry& a, const Entry& b) { return a.q != b.q ? a.q < b.q : a.seq > b.seq; };
    std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> open(worse);
    std::uint64_t seq = 0;
    auto push = [&](BBNode n) {
      n.q_upper = upper(n.kd);
      nodes_.push_back(std::move(n));
      open.push({nodes_.back().q_upper, seq++, int(nodes_.size()) - 1});
    };
    auto record = [&]() {
      HistoryRecord h;
      h.nodes = res.nodes;
      h.q_best = q_best;
      h.micp_solves = micp_solves_;
      h.nodes_cut = res.nodes_cut;
      if (cfg_.record_wall_time) {
        h.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      }
      res.history.push_back(h);
    };
    auto prunable = [&](const BBNode& n, bool leaf) {
      if (cfg_.all_grasps) return false;
      return leaf ? n.q_upper <= q_best : n.q_upper < q_best;
    };
    auto ancestor_false = [&](int id) {
      for (int a = id; a >= 0; a = nodes_[a].parent) {
        if (nodes_[a].low_level == LowLevel::False) return true;
      }
      return false;
    };

    push(BBNode{std::vector<int>(k, tree_.root())});
    bool budget_hit = false;
    std::map<int, CheckResult> speculative;
    while (!open.empty()) {
      if (res.nodes >= cfg_.node_budget) {
        budget_hit = true;
        break;
      }
      // Leaves at the top of the queue may be checked speculatively in parallel.
      if (cfg_.threads > 1) speculate(open, speculative);

      const Entry e = open.top();
      open.pop();
      ++res.nodes;
      const bool leaf = is_leaf(nodes_[e.id].kd);
      if (prunable(nodes_[e.id], leaf) || ancestor_false(e.id)) {
        ++res.nodes_cut;
        continue;
      }
      if (!leaf) {
        int branch = -1;
        std::size_t largest = 1;
        for (int f = 0; f < k; ++f) {
          const std::size_t sz = tree_.node(nodes_[e.id].kd[f]).points.size();
          if (sz > largest) {
            largest = sz;
            branch = f;
          }
        }
        const KdNode& split = tree_.node(nodes_[e.id].kd[branch]);
        for (int child : {split.left, split.right}) {
          BBNode c;
          c.kd = nodes_[e.id].kd;
          c.kd[branch] = child;
          c.parent = e.id;
          if (is_leaf(c.kd) && repeated_point(c.kd)) {
            ++res.nodes_cut;
            continue;
          }
          push(std::move(c));
        }
        continue;
      }
      auto it = speculative.find(e.id);
      const LowLevel status = bottom_up_check(e.id, it == speculative.end() ? nullptr : &it->second);
      if (it != speculative.end()) speculative.erase(it);
      if (status == LowLevel::Unresolved) ++res.unresolved;
      if (status != LowLevel::True) continue;
      const double q = nodes_[e.id].q_upper;
      if (cfg_.all_grasps) res.feasible.push_back(extract(e.id));
      if (q > q_best) {
        q_best = q;
        res.best = cfg_.all_grasps ? res.feasible.back() : extract(e.id);
        record();
        if (cfg_.q_stop && q_best >= *cfg_.q_stop) {
          res.early_stop = true;
          break;
        }
      }
    }
    res.micp_solves = micp_solves_;
    res.local_ik_hits = local_ik_hits_;
    record();
    if (budget_hit || res.unresolved > 0) {
      res.status = PlanStatus::Incomplete;
    } else {
      res.status = res.best ? PlanStatus::Optimal : PlanStatus::Infeasible;
    }
    return res;
  }

  /// Solution for a feasible leaf tuple and its MICP point.
  [[nodiscard]] GraspSolution make_solution(const std::vector<int>& kd, const std::vector<double>& x) const {
    const IkProgram ik = node_program(kd);
    GraspSolution s;
    for (int id : kd) s.assignment.push_back(tree_.node(id).points.at(0));
    GraspPointSet pts;
    for (int p : s.assignment) pts.push_back(tree_.points()[p]);
    s.quality = cfg_.metric(pts);
    IkState raw;
    marginal_means(ik, x, raw.theta, raw.w, raw.t);

    std::vector<IkState> starts{raw};
    IkState flat = raw;
    flat.w.setZero();
    starts.push_back(flat);
    for (const auto& start : starts) {
      auto polished = polish_exact(ik, start);
      if (!polished) continue;
      fill_solution(ik, *polished, true, s);
      if (s.max_penetration <= cfg_.collision_tol) return s;
    }
    fill_solution(ik, raw, false, s);
    return s;
  }

  [[nodiscard]] double collision_tol() const { return cfg_.collision_tol; }

 private:
  void check_kd(const std::vector<int>& kd) const {
    if (int(kd.size()) != model_.num_fingers()) throw Error("planner: BB node needs one KD-tree node per finger");
    for (int id : kd) (void)tree_.node(id);
  }

  [[nodiscard]] bool is_leaf(const std::vector<int>& kd) const {
    for (int id : kd) {
      if (!tree_.node(id).is_leaf()) return false;
    }
    return true;
  }

  [[nodiscard]] bool repeated_point(const std::vector<int>& kd) const {
    for (std::size_t a = 0; a < kd.size(); ++a) {
      for (std::size_t b = a + 1; b < kd.size(); ++b) {
        if (kd[a] == kd[b]) return true;
      }
    }
    return false;
  }

  double upper(const std::vector<int>& kd) {
    std::vector<int> key = kd;
    std::sort(key.begin(), key.end());
    key.erase(std::unique(key.begin(), key.end()), key.end());
    auto it = upper_cache_.find(key);
    if (it != upper_cache_.end()) return it->second;
    const double q = q_upper(tree_, key, cfg_.metric);
    upper_cache_.emplace(std::move(key), q);
    return q;
  }

  [[nodiscard]] const std::vector<double>* ancestor_warm(int id) const {
    for (int a = nodes_[id].parent; a >= 0; a = nodes_[a].parent) {
      if (!nodes_[a].warm.empty()) return &nodes_[a].warm;
    }
    return nullptr;
  }

  [[nodiscard]] CheckResult check(int id) const {
    return low_level_feasible(nodes_[id].kd, cfg_.use_warm_start ? ancestor_warm(id) : nullptr, cfg_.use_local_ik);
  }

  [[nodiscard]] static WarmStart extend_warm(const IkProgram& ik, const std::vector<double>& x) {
    WarmStart ws;
    const std::size_t nv = std::size_t(ik.prog.num_vars());
    ws.point.assign(nv, 0.0);
    std::copy_n(x.begin(), std::min(nv, x.size()), ws.point.begin());
    for (int b : ik.prog.binaries()) {
      if (std::size_t(b) < x.size()) ws.binaries.emplace_back(b, x[b]);
    }
    return ws;
  }

  [[nodiscard]] GraspSolution extract(int id) const { return make_solution(nodes_[id].kd, nodes_[id].warm); }

  void fill_solution(const IkProgram& ik, const IkState& st, bool exact, GraspSolution& s) const {
    s.theta = st.theta;
    s.w = st.w;
    s.t = st.t;
    s.exact = exact;
    s.link_poses = model_.forward_kinematics(st.theta);
    const RigidTransform obj{rodrigues_exp(st.w), st.t};
    s.max_residual = 0.0;
    s.max_normal_gap = 0.0;
    for (int f = 0; f < model_.num_fingers(); ++f) {
      const Finger& fg = model_.fingers[f];
      const GraspPoint& gp = tree_.points()[s.assignment[f]];
      const RigidTransform& tip = s.link_poses[fg.tip_link];
      s.max_residual = std::max(s.max_residual, (tip.apply(fg.tip_point) - obj.apply(gp.position)).norm());
      const double gap = (tip.apply_direction(fg.tip_normal) - obj.apply_direction(gp.normal)).squaredNorm() - cfg_.ik.eps;
      s.max_normal_gap = std::max(s.max_normal_gap, gap);
    }
    s.max_penetration = max_penetration(ik, s.link_poses, obj);
  }

  void speculate(const auto& open, std::map<int, CheckResult>& out) {
    auto copy = open;
    std::vector<int> batch;
    while (!copy.empty() && int(batch.size()) < cfg_.threads) {
      const int id = copy.top().id;
      copy.pop();
      if (!is_leaf(nodes_[id].kd)) break;
      bool known = false;
      for (int a = id; a >= 0; a = nodes_[a].parent) known = known || nodes_[a].low_level != LowLevel::Unknown;
      if (!known && !out.count(id)) batch.push_back(id);
    }
    if (batch.size() < 2) return;
    std::vector<CheckResult> results(batch.size());
    std::vector<std::thread> workers;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      workers.emplace_back([&, i] { results[i] = check(batch[i]); });
    }
    for (auto& w : workers) w.join();
    for (std::size_t i = 0; i < batch.size(); ++i) out.emplace(batch[i], std::move(results[i]));
  }

  const KdTree& tree_;
  const GripperModel& model_;
  PlannerConfig cfg_;
  IkProgram base_;
  std::vector<BBNode> nodes_;
  std::map<std::vector<int>, double> upper_cache_;
  long micp_solves_ = 0;
  long local_ik_hits_ = 0;
};

}  // namespace gbb
