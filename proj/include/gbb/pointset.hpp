#pragma once

#include "gbb/bounding.hpp"
#include "gbb/convex.hpp"
#include "gbb/geometry.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace gbb {

/// Indexed triangle mesh, counter-clockwise winding seen from outside.
struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;

  [[nodiscard]] double area() const {
    double a = 0.0;
    for (const auto& t : triangles) a += 0.5 * (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]).norm();
    return a;
  }

  void scale(double s) {
    for (auto& v : vertices) v *= s;
  }

  void validate() const {
    if (vertices.empty() || triangles.empty()) throw Error("mesh: no triangles");
    for (std::size_t i = 0; i < triangles.size(); ++i) {
      for (int v : triangles[i]) {
        if (v < 0 || v >= int(vertices.size())) {
          throw Error("mesh: triangle " + std::to_string(i) + " references vertex " + std::to_string(v) +
                      " out of range");
        }
      }
    }
  }
};

struct GraspPoint {
  Vec3 position = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();  // inward, unit
};

using GraspPointSet = std::vector<GraspPoint>;

namespace detail {

inline std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

inline double parse_number(const std::string& tok, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw Error(where + ": bad number '" + tok + "'");
  }
}

inline void add_polygon(TriangleMesh& mesh, const std::vector<int>& poly, const std::string& where) {
  if (poly.size() < 3) throw Error(where + ": face with fewer than 3 vertices");
  for (std::size_t k = 1; k + 1 < poly.size(); ++k) mesh.triangles.push_back({poly[0], poly[k], poly[k + 1]});
}

}  // namespace detail

/// Wavefront OBJ: `v x y z` and `f a b c ...` (1-based, negative indices allowed, `a/b/c` accepted).
inline TriangleMesh parse_obj(std::istream& in, const std::string& name = "obj") {
  TriangleMesh mesh;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = name + ":" + std::to_string(lineno);
    const auto tok = detail::split_ws(line);
    if (tok.empty() || tok[0][0] == '#') continue;
    if (tok[0] == "v") {
      if (tok.size() < 4) throw Error(where + ": vertex needs 3 coordinates");
      mesh.vertices.emplace_back(detail::parse_number(tok[1], where), detail::parse_number(tok[2], where),
                                 detail::parse_number(tok[3], where));
    } else if (tok[0] == "f") {
      std::vector<int> poly;
      for (std::size_t k = 1; k < tok.size(); ++k) {
        const std::string head = tok[k].substr(0, tok[k].find('/'));
        const int idx = int(detail::parse_number(head, where));
        if (idx == 0) throw Error(where + ": vertex index 0 in face");
        poly.push_back(idx > 0 ? idx - 1 : int(mesh.vertices.size()) + idx);
      }
      detail::add_polygon(mesh, poly, where);
    }
  }
  mesh.validate();
  return mesh;
}

/// OFF: header, counts line, vertices, then `n i0 i1 ...` faces (0-based).
inline TriangleMesh parse_off(std::istream& in, const std::string& name = "off") {
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    for (auto& t : detail::split_ws(line)) tokens.push_back(t);
  }
  std::size_t pos = 0;
  auto next = [&]() -> const std::string& {
    if (pos >= tokens.size()) throw Error(name + ": unexpected end of file");
    return tokens[pos++];
  };
  if (next() != "OFF") throw Error(name + ": missing OFF header");
  const int nv = int(detail::parse_number(next(), name));
  const int nf = int(detail::parse_number(next(), name));
  next();
  if (nv <= 0 || nf <= 0) throw Error(name + ": empty mesh");
  TriangleMesh mesh;
  for (int i = 0; i < nv; ++i) {
    const double x = detail::parse_number(next(), name);
    const double y = detail::parse_number(next(), name);
    const double z = detail::parse_number(next(), name);
    mesh.vertices.emplace_back(x, y, z);
  }
  for (int f = 0; f < nf; ++f) {
    const int k = int(detail::parse_number(next(), name));
    std::vector<int> poly;
    for (int j = 0; j < k; ++j) poly.push_back(int(detail::parse_number(next(), name)));
    detail::add_polygon(mesh, poly, name + ": face " + std::to_string(f));
  }
  mesh.validate();
  return mesh;
}

/// Load by extension (.obj or .off).
inline TriangleMesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(path + ": cannot open mesh file");
  const auto dot = path.rfind('.');
  std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return char(std::tolower(c)); });
  if (ext == "obj") return parse_obj(in, path);
  if (ext == "off") return parse_off(in, path);
  throw Error(path + ": unknown mesh extension (expected .obj or .off)");
}

/// Convex pieces sidecar: one piece per line, 0-based mesh vertex indices.
inline std::vector<ConvexBody> load_convex_pieces(const std::string& path, const TriangleMesh& mesh) {
  std::ifstream in(path);
  if (!in) throw Error(path + ": cannot open convex pieces file");
  std::vector<ConvexBody> pieces;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto tok = detail::split_ws(line);
    if (tok.empty() || tok[0][0] == '#') continue;
    ConvexBody body;
    for (const auto& t : tok) {
      const int idx = int(detail::parse_number(t, path + ":" + std::to_string(lineno)));
      if (idx < 0 || idx >= int(mesh.vertices.size())) {
        throw Error(path + ":" + std::to_string(lineno) + ": vertex index " + t + " out of range");
      }
      body.vertices.push_back(mesh.vertices[idx]);
    }
    pieces.push_back(std::move(body));
  }
  if (pieces.empty()) throw Error(path + ": no convex pieces");
  return pieces;
}

inline ConvexBody whole_mesh_body(const TriangleMesh& mesh) { return ConvexBody(mesh.vertices); }

/**
 * @brief Blue-noise surface samples by sample elimination.
 *
 * Draws 4P area-weighted candidates, then repeatedly drops the candidate
 * whose nearest neighbour is closest until P remain. Normals point inward.
 */
inline GraspPointSet sample_surface(const TriangleMesh& mesh, int count, std::uint64_t seed) {
  if (count < 1) throw Error("sample_surface: point count must be >= 1");
  mesh.validate();
  std::vector<double> cumulative;
  double total = 0.0;
  for (const auto& t : mesh.triangles) {
    total += 0.5 * (mesh.vertices[t[1]] - mesh.vertices[t[0]]).cross(mesh.vertices[t[2]] - mesh.vertices[t[0]]).norm();
    cumulative.push_back(total);
  }
  if (!(total > 0.0)) throw Error("sample_surface: mesh has zero area");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int n_cand = 4 * count;
  GraspPointSet cand;
  cand.reserve(n_cand);
  for (int i = 0; i < n_cand; ++i) {
    const double pick = unit(rng) * total;
    int tri = int(std::lower_bound(cumulative.begin(), cumulative.end(), pick) - cumulative.begin());
    tri = std::min(tri, int(mesh.triangles.size()) - 1);
    while (cumulative[tri] - (tri ? cumulative[tri - 1] : 0.0) <= 0.0) tri = (tri + 1) % int(mesh.triangles.size());
    const auto& t = mesh.triangles[tri];
    double u = unit(rng), v = unit(rng);
    if (u + v > 1.0) {
      u = 1.0 - u;
      v = 1.0 - v;
    }
    const Vec3& a = mesh.vertices[t[0]];
    const Vec3& b = mesh.vertices[t[1]];
    const Vec3& c = mesh.vertices[t[2]];
    GraspPoint gp;
    gp.position = a + u * (b - a) + v * (c - a);
    gp.normal = -(b - a).cross(c - a).normalized();
    cand.push_back(gp);
  }

  std::vector<char> alive(n_cand, 1);
  std::vector<double> d2(std::size_t(n_cand) * n_cand);
  for (int i = 0; i < n_cand; ++i) {
    for (int j = 0; j < n_cand; ++j) d2[std::size_t(i) * n_cand + j] = (cand[i].position - cand[j].position).squaredNorm();
  }
  auto neighbour_dists = [&](int i) {
    double first = std::numeric_limits<double>::infinity(), second = first;
    for (int j = 0; j < n_cand; ++j) {
      if (j == i || !alive[j]) continue;
      const double d = d2[std::size_t(i) * n_cand + j];
      if (d < first) {
        second = first;
        first = d;
      } else if (d < second) {
        second = d;
      }
    }
    return std::pair{first, second};
  };
  std::vector<std::pair<double, double>> nn(n_cand);
  for (int i = 0; i < n_cand; ++i) nn[i] = neighbour_dists(i);
  for (int remaining = n_cand; remaining > count; --remaining) {
    int victim = -1;
    for (int i = 0; i < n_cand; ++i) {
      if (alive[i] && (victim < 0 || nn[i] < nn[victim])) victim = i;
    }
    alive[victim] = 0;
    for (int i = 0; i < n_cand; ++i) {
      if (alive[i] && d2[std::size_t(i) * n_cand + victim] <= nn[i].second) nn[i] = neighbour_dists(i);
    }
  }
  GraspPointSet out;
  for (int i = 0; i < n_cand; ++i) {
    if (alive[i]) out.push_back(cand[i]);
  }
  return out;
}

struct KdNode {
  std::vector<int> points;  // ascending indices into the point set
  int left = -1;
  int right = -1;
  int parent = -1;
  int depth = 0;
  BoundingSphere sphere;
  BoundingCone cone;

  [[nodiscard]] bool is_leaf() const { return left < 0; }
};

/**
 * @brief Balanced KD-tree over grasp points. Node 0 is the root; nodes are
 * stored in depth-first preorder.
 *
 * Each split uses the widest axis of the member positions (lowest axis on
 * ties) and sends ceil(n/2) points to the lower child.
 */
class KdTree {
 public:
  KdTree() = default;

  explicit KdTree(GraspPointSet points) : points_(std::move(points)) {
    if (points_.empty()) throw Error("build_kdtree: empty point set");
    std::vector<int> all(points_.size());
    std::iota(all.begin(), all.end(), 0);
    build(std::move(all), -1, 0);
  }

  [[nodiscard]] const GraspPointSet& points() const { return points_; }
  [[nodiscard]] const std::vector<KdNode>& nodes() const { return nodes_; }
  [[nodiscard]] const KdNode& node(int id) const {
    check(id);
    return nodes_[id];
  }
  [[nodiscard]] int root() const { return 0; }
  [[nodiscard]] int size() const { return int(nodes_.size()); }

  /// Node ids from `id` up to the root, inclusive.
  [[nodiscard]] std::vector<int> path_to_root(int id) const {
    check(id);
    std::vector<int> path;
    for (int n = id; n >= 0; n = nodes_[n].parent) path.push_back(n);
    return path;
  }

  /// Leaf id holding point index p.
  [[nodiscard]] int leaf_of(int p) const {
    for (int i = 0; i < size(); ++i) {
      if (nodes_[i].is_leaf() && nodes_[i].points[0] == p) return i;
    }
    throw Error("kdtree: point index " + std::to_string(p) + " not in tree");
  }

  [[nodiscard]] int max_depth() const {
    int d = 0;
    for (const auto& n : nodes_) d = std::max(d, n.depth);
    return d;
  }

 private:
  void check(int id) const {
    if (id < 0 || id >= int(nodes_.size())) throw Error("kdtree: invalid node id " + std::to_string(id));
  }

  int build(std::vector<int> members, int parent, int depth) {
    const int id = int(nodes_.size());
    nodes_.emplace_back();
    {
      std::vector<Vec3> pos, nrm;
      for (int m : members) {
        pos.push_back(points_[m].position);
        nrm.push_back(points_[m].normal);
      }
      KdNode& n = nodes_[id];
      n.parent = parent;
      n.depth = depth;
      n.sphere = min_bounding_sphere(pos);
      n.cone = min_bounding_cone(nrm);
    }
    if (members.size() > 1) {
      Vec3 lo = points_[members[0]].position, hi = lo;
      for (int m : members) {
        lo = lo.cwiseMin(points_[m].position);
        hi = hi.cwiseMax(points_[m].position);
      }
      const Vec3 extent = hi - lo;
      int axis = 0;
      for (int k = 1; k < 3; ++k) {
        if (extent[k] > extent[axis]) axis = k;
      }
      std::sort(members.begin(), members.end(), [&](int a, int b) {
        const double pa = points_[a].position[axis], pb = points_[b].position[axis];
        return pa != pb ? pa < pb : a < b;
      });
      const std::size_t half = (members.size() + 1) / 2;
      std::vector<int> lower(members.begin(), members.begin() + half);
      std::vector<int> upper(members.begin() + half, members.end());
      std::sort(members.begin(), members.end());
      std::sort(lower.begin(), lower.end());
      std::sort(upper.begin(), upper.end());
      const int l = build(std::move(lower), id, depth + 1);
      const int r = build(std::move(upper), id, depth + 1);
      nodes_[id].left = l;
      nodes_[id].right = r;
    }
    nodes_[id].points = std::move(members);
    return id;
  }

  GraspPointSet points_;
  std::vector<KdNode> nodes_;
};

inline KdTree build_kdtree(GraspPointSet points) { return KdTree(std::move(points)); }

}  // namespace gbb
