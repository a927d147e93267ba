#pragma once

// Quickhull in fixed dimension D with simplicial facets.
//
// Used for the 3-D Minkowski difference (penetration depth) and the 6-D
// wrench hull (Q1). Coplanar input is common in both (box faces, friction
// cones built from axis-aligned frames), so facet planes are only trusted
// through their support value: distances reported by `origin_depth` are
// max_p n.p over the input, which can never cut into the hull.

#include "gbb/geometry.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <span>
#include <vector>

namespace gbb {

template <int D>
struct HullFacet {
  using Point = Eigen::Matrix<double, D, 1>;
  std::array<int, D> vertices{};
  Point normal = Point::Zero();
  double offset = 0.0;  // normal.x <= offset on the hull
};

template <int D>
struct HullResult {
  bool full_dimensional = false;
  std::vector<HullFacet<D>> facets;
  std::vector<int> vertices;  // indices of input points on the hull, ascending
};

namespace detail {

struct HullTopologyError {};

template <int D>
class QuickHull {
 public:
  using Point = Eigen::Matrix<double, D, 1>;

  QuickHull(std::span<const Point> pts, double eps) : pts_(pts), eps_(eps) {}

  HullResult<D> run() {
    HullResult<D> out;
    std::array<int, D + 1> simplex{};
    if (!initial_simplex(simplex)) return out;
    out.full_dimensional = true;

    interior_ = Point::Zero();
    for (int s : simplex) interior_ += pts_[s];
    interior_ /= double(D + 1);

    // Facet j omits simplex vertex j; its neighbour across vertex s[q] omits s[q].
    for (int j = 0; j <= D; ++j) {
      Facet f;
      int m = 0;
      for (int q = 0; q <= D; ++q) {
        if (q == j) continue;
        f.vertices[m] = simplex[q];
        f.neighbors[m] = q;
        ++m;
      }
      set_plane(f);
      facets_.push_back(std::move(f));
    }

    std::vector<char> in_simplex(pts_.size(), 0);
    for (int s : simplex) in_simplex[s] = 1;
    for (int i = 0; i < int(pts_.size()); ++i) {
      if (!in_simplex[i]) assign(i, 0, int(facets_.size()));
    }

    std::vector<int> work;
    for (int f = 0; f < int(facets_.size()); ++f) {
      if (!facets_[f].outside.empty()) work.push_back(f);
    }
    while (!work.empty()) {
      const int f = work.back();
      work.pop_back();
      if (!facets_[f].alive || facets_[f].outside.empty()) continue;
      add_point(f, work);
    }

    // Sliver facets from near-coplanar eyes can leave input points outside.
    const double slack = 1e3 * eps_;
    for (const auto& f : facets_) {
      if (!f.alive) continue;
      for (int i = 0; i < int(pts_.size()); ++i) {
        if (distance(f, i) > slack) throw HullTopologyError{};
      }
    }

    std::vector<char> on_hull(pts_.size(), 0);
    for (const auto& f : facets_) {
      if (!f.alive) continue;
      HullFacet<D> hf;
      hf.vertices = f.vertices;
      hf.normal = f.normal;
      hf.offset = f.offset;
      out.facets.push_back(hf);
      for (int v : f.vertices) on_hull[v] = 1;
    }
    for (int i = 0; i < int(pts_.size()); ++i) {
      if (on_hull[i]) out.vertices.push_back(i);
    }
    return out;
  }

 private:
  struct Facet {
    std::array<int, D> vertices{};
    std::array<int, D> neighbors{};  // neighbors[m] shares every vertex except vertices[m]
    Point normal = Point::Zero();
    double offset = 0.0;
    std::vector<int> outside;
    int furthest = -1;
    double furthest_dist = 0.0;
    bool alive = true;
  };

  bool initial_simplex(std::array<int, D + 1>& simplex) const {
    const int n = int(pts_.size());
    if (n < D + 1) return false;
    int i0 = 0;
    for (int i = 1; i < n; ++i) {
      if (pts_[i][0] < pts_[i0][0]) i0 = i;
    }
    simplex[0] = i0;
    std::vector<Point> basis;
    for (int k = 1; k <= D; ++k) {
      int best = -1;
      double best_dist = 0.0;
      for (int i = 0; i < n; ++i) {
        Point r = pts_[i] - pts_[i0];
        for (const auto& b : basis) r -= b.dot(r) * b;
        const double d = r.norm();
        if (d > best_dist) {
          best_dist = d;
          best = i;
        }
      }
      if (best < 0 || best_dist <= eps_) return false;
      Point r = pts_[best] - pts_[i0];
      for (const auto& b : basis) r -= b.dot(r) * b;
      for (const auto& b : basis) r -= b.dot(r) * b;
      basis.push_back(r.normalized());
      simplex[k] = best;
    }
    return true;
  }

  void set_plane(Facet& f) const {
    Eigen::Matrix<double, D, D - 1> m;
    for (int k = 1; k < D; ++k) m.col(k - 1) = pts_[f.vertices[k]] - pts_[f.vertices[0]];
    Eigen::HouseholderQR<Eigen::Matrix<double, D, D - 1>> qr(m);
    Eigen::Matrix<double, D, D> q = qr.householderQ();
    Point n = q.col(D - 1);
    if (n.dot(interior_ - pts_[f.vertices[0]]) > 0.0) n = -n;
    f.normal = n;
    double off = 0.0;
    for (int v : f.vertices) off += n.dot(pts_[v]);
    f.offset = off / double(D);
  }

  [[nodiscard]] double distance(const Facet& f, int p) const { return f.normal.dot(pts_[p]) - f.offset; }

  // Assign point p to the first facet in [begin, end) that it lies outside of.
  void assign(int p, int begin, int end) {
    for (int f = begin; f < end; ++f) {
      Facet& fac = facets_[f];
      if (!fac.alive) continue;
      const double d = distance(fac, p);
      if (d > eps_) {
        fac.outside.push_back(p);
        if (d > fac.furthest_dist) {
          fac.furthest_dist = d;
          fac.furthest = p;
        }
        return;
      }
    }
  }

  void add_point(int start, std::vector<int>& work) {
    const int eye = facets_[start].furthest;

    std::vector<int> visible{start};
    std::vector<char> mark(facets_.size(), 0);  // 1 visible, 2 hidden
    mark[start] = 1;
    struct Ridge {
      int facet;
      int slot;
    };
    std::vector<Ridge> horizon;
    for (std::size_t k = 0; k < visible.size(); ++k) {
      const int f = visible[k];
      for (int m = 0; m < D; ++m) {
        const int nb = facets_[f].neighbors[m];
        if (mark[nb] == 1) continue;
        if (mark[nb] == 0) {
          if (distance(facets_[nb], eye) > 0.0) {
            mark[nb] = 1;
            visible.push_back(nb);
            continue;
          }
          mark[nb] = 2;
        }
        horizon.push_back({f, m});
      }
    }

    const int first_new = int(facets_.size());
    std::map<std::array<int, D - 1>, std::pair<int, int>> open_ridges;
    for (const Ridge& r : horizon) {
      const Facet& vis = facets_[r.facet];
      const int nb = vis.neighbors[r.slot];
      Facet g;
      for (int m = 0; m < D; ++m) g.vertices[m] = (m == r.slot) ? eye : vis.vertices[m];
      for (int m = 0; m < D; ++m) g.neighbors[m] = -1;
      g.neighbors[r.slot] = nb;
      set_plane(g);
      const int gid = int(facets_.size());
      facets_.push_back(std::move(g));

      Facet& nbf = facets_[nb];
      bool linked = false;
      for (int m = 0; m < D; ++m) {
        if (nbf.neighbors[m] == r.facet) {
          nbf.neighbors[m] = gid;
          linked = true;
          break;
        }
      }
      if (!linked) throw HullTopologyError{};

      // Ridges through the eye pair up among the new facets.
      for (int m = 0; m < D; ++m) {
        if (m == r.slot) continue;
        std::array<int, D - 1> key{};
        int q = 0;
        for (int k = 0; k < D; ++k) {
          if (k != m) key[q++] = facets_[gid].vertices[k];
        }
        std::sort(key.begin(), key.end());
        auto it = open_ridges.find(key);
        if (it == open_ridges.end()) {
          open_ridges.emplace(key, std::make_pair(gid, m));
        } else {
          auto [other, slot] = it->second;
          if (facets_[other].neighbors[slot] != -1) throw HullTopologyError{};
          facets_[other].neighbors[slot] = gid;
          facets_[gid].neighbors[m] = other;
          open_ridges.erase(it);
        }
      }
    }
    if (!open_ridges.empty()) throw HullTopologyError{};

    std::vector<int> orphans;
    for (int f : visible) {
      Facet& vf = facets_[f];
      vf.alive = false;
      for (int p : vf.outside) {
        if (p != eye) orphans.push_back(p);
      }
      vf.outside.clear();
      vf.outside.shrink_to_fit();
    }
    std::sort(orphans.begin(), orphans.end());
    const int end_new = int(facets_.size());
    for (int p : orphans) assign(p, first_new, end_new);
    for (int f = first_new; f < end_new; ++f) {
      if (!facets_[f].outside.empty()) work.push_back(f);
    }
  }

  std::span<const Point> pts_;
  double eps_;
  Point interior_ = Point::Zero();
  std::vector<Facet> facets_;
};

}  // namespace detail

/**
 * @brief Convex hull of a point set in R^D.
 *
 * `rel_eps` scales with the largest coordinate magnitude. Points within eps
 * of a facet are treated as inside. A hull whose affine span is lower
 * dimensional reports full_dimensional = false and no facets.
 */
template <int D>
HullResult<D> convex_hull(std::span<const Eigen::Matrix<double, D, 1>> pts, double rel_eps = 1e-10) {
  using Point = Eigen::Matrix<double, D, 1>;
  double scale = 0.0;
  for (const auto& p : pts) scale = std::max(scale, p.cwiseAbs().maxCoeff());
  if (pts.empty() || scale == 0.0) return {};
  const double eps = rel_eps * scale;
  try {
    return detail::QuickHull<D>(pts, eps).run();
  } catch (const detail::HullTopologyError&) {
  }
  // Retry on a deterministically joggled copy; facet indices still refer to pts.
  std::mt19937_64 rng(0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  for (int attempt = 1; attempt <= 4; ++attempt) {
    std::vector<Point> joggled(pts.begin(), pts.end());
    const double amp = scale * 1e-11 * std::pow(10.0, attempt);
    for (auto& p : joggled) {
      for (int k = 0; k < D; ++k) p[k] += amp * jitter(rng);
    }
    try {
      auto res = detail::QuickHull<D>(std::span<const Point>(joggled), eps).run();
      for (auto& f : res.facets) {
        double off = -std::numeric_limits<double>::infinity();
        for (int v : f.vertices) off = std::max(off, f.normal.dot(pts[v]));
        f.offset = off;
      }
      return res;
    } catch (const detail::HullTopologyError&) {
    }
  }
  throw Error("convex_hull: could not build a consistent hull");
}

/// Robust support value max_i n.p_i over the given subset of points.
template <int D>
double support_value(std::span<const Eigen::Matrix<double, D, 1>> pts, const std::vector<int>& subset,
                     const Eigen::Matrix<double, D, 1>& n) {
  double h = -std::numeric_limits<double>::infinity();
  for (int i : subset) h = std::max(h, n.dot(pts[i]));
  return h;
}

/**
 * @brief Depth of the origin inside the hull: min over facet normals of the
 * support value. Non-positive when the origin is outside or on the boundary.
 *
 * `best_facet` receives the facet index attaining the minimum.
 */
template <int D>
double origin_depth(std::span<const Eigen::Matrix<double, D, 1>> pts, const HullResult<D>& hull,
                    int* best_facet = nullptr) {
  if (!hull.full_dimensional || hull.facets.empty()) return 0.0;
  std::vector<int> order(hull.facets.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = int(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (hull.facets[a].offset != hull.facets[b].offset) return hull.facets[a].offset < hull.facets[b].offset;
    return a < b;
  });
  double best = std::numeric_limits<double>::infinity();
  int arg = -1;
  for (int f : order) {
    // the recorded offset is an average of vertex values, within rounding of a lower bound on h
    if (hull.facets[f].offset - 1e-12 * (1.0 + std::abs(best)) > best) break;
    const double h = support_value<D>(pts, hull.vertices, hull.facets[f].normal);
    if (h < best) {
      best = h;
      arg = f;
    }
  }
  if (best_facet) *best_facet = arg;
  return best;
}

}  // namespace gbb
