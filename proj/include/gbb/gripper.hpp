#pragma once

#include "gbb/convex.hpp"
#include "gbb/geometry.hpp"
#include "gbb/hull.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace gbb {

enum class JointType { Hinge, Ball };

struct Joint {
  std::string name;
  JointType type = JointType::Hinge;
  int parent = -1;
  int child = -1;
  Vec3 offset = Vec3::Zero();
  Mat3 frame = Mat3::Identity();
  std::vector<Vec3> axes;  // one per scalar DOF, applied left to right
  std::vector<double> lower;
  std::vector<double> upper;

  [[nodiscard]] int dof() const { return int(axes.size()); }

  /// Parent-to-child transform at the given joint values.
  [[nodiscard]] RigidTransform transform(const double* q) const {
    Mat3 r = frame;
    for (int k = 0; k < dof(); ++k) r = r * rodrigues_exp(axes[k] * q[k]);
    return {r, offset};
  }
};

struct Link {
  std::string name;
  ConvexBody body;
};

struct Finger {
  int tip_link = -1;
  Vec3 tip_point = Vec3::Zero();   // tip link frame
  Vec3 tip_normal = Vec3::UnitZ(); // tip link frame, unit
  std::vector<int> joints;         // palm to tip
  std::vector<int> links;          // child link of each joint, same order
  int dof_offset = 0;              // first index of this finger in the full joint vector
  int dof = 0;
  std::vector<double> lower;
  std::vector<double> upper;
};

/**
 * @brief Palm-fixed gripper made of independent serial fingers.
 *
 * The palm is the only link that is not a joint child and sits at the
 * identity. Joint values are ordered finger by finger.
 */
class GripperModel {
 public:
  std::vector<Link> links;
  std::vector<Joint> joints;
  std::vector<Finger> fingers;
  int palm = 0;

  [[nodiscard]] int num_links() const { return int(links.size()); }
  [[nodiscard]] int num_fingers() const { return int(fingers.size()); }

  [[nodiscard]] int total_dof() const {
    int d = 0;
    for (const auto& f : fingers) d += f.dof;
    return d;
  }

  /// Intrinsic DOFs plus the six of the floating object.
  [[nodiscard]] int search_dof() const { return total_dof() + 6; }

  [[nodiscard]] int link_index(const std::string& name) const {
    for (int i = 0; i < num_links(); ++i) {
      if (links[i].name == name) return i;
    }
    throw Error("gripper: unknown link '" + name + "'");
  }

  /// Finger index owning the link, -1 for the palm.
  [[nodiscard]] int finger_of_link(int link) const {
    for (int f = 0; f < num_fingers(); ++f) {
      if (std::find(fingers[f].links.begin(), fingers[f].links.end(), link) != fingers[f].links.end()) return f;
    }
    return -1;
  }

  [[nodiscard]] bool is_tip_link(int link) const {
    for (const auto& f : fingers) {
      if (f.tip_link == link) return true;
    }
    return false;
  }

  /// Link poses of one finger's chain at its own joint values.
  [[nodiscard]] std::vector<RigidTransform> finger_kinematics(int finger, const double* q) const {
    const Finger& f = fingers.at(finger);
    std::vector<RigidTransform> out;
    out.reserve(f.joints.size());
    RigidTransform t = RigidTransform::identity();
    int k = 0;
    for (int j : f.joints) {
      t = t * joints[j].transform(q + k);
      k += joints[j].dof();
      out.push_back(t);
    }
    return out;
  }

  void check_limits(const std::vector<double>& theta) const {
    if (int(theta.size()) != total_dof()) {
      throw Error("forward_kinematics: expected " + std::to_string(total_dof()) + " joint values, got " +
                  std::to_string(theta.size()));
    }
    for (const auto& f : fingers) {
      for (int k = 0; k < f.dof; ++k) {
        const double v = theta[f.dof_offset + k];
        if (!(v >= f.lower[k] - 1e-12 && v <= f.upper[k] + 1e-12)) {
          throw Error("forward_kinematics: joint value " + std::to_string(f.dof_offset + k) + " = " +
                      std::to_string(v) + " outside [" + std::to_string(f.lower[k]) + ", " +
                      std::to_string(f.upper[k]) + "]");
        }
      }
    }
  }

  /// World pose of every link; the palm is the identity.
  [[nodiscard]] std::vector<RigidTransform> forward_kinematics(const std::vector<double>& theta) const {
    check_limits(theta);
    std::vector<RigidTransform> poses(links.size());
    for (int f = 0; f < num_fingers(); ++f) {
      const auto chain = finger_kinematics(f, theta.data() + fingers[f].dof_offset);
      for (std::size_t k = 0; k < chain.size(); ++k) poses[fingers[f].links[k]] = chain[k];
    }
    return poses;
  }
};

namespace detail {

inline Vec3 json_vec3(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) throw Error(where + ": expected an array of 3 numbers");
  Vec3 v;
  for (int k = 0; k < 3; ++k) {
    if (!j[k].is_number()) throw Error(where + ": expected an array of 3 numbers");
    v[k] = j[k].get<double>();
  }
  return v;
}

inline const nlohmann::json& json_field(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw Error(where + ": missing field '" + key + "'");
  return j.at(key);
}

inline bool point_in_hull(const std::vector<Vec3>& verts, const Vec3& x, double tol) {
  const auto hull = convex_hull<3>(std::span<const Vec3>(verts));
  if (!hull.full_dimensional) return false;
  for (const auto& f : hull.facets) {
    if (f.normal.dot(x) - f.offset > tol) return false;
  }
  return true;
}

}  // namespace detail

/**
 * @brief Build a gripper from its JSON description.
 *
 * Schema:
 *   links[]      {name, vertices: [[x,y,z], ...]}
 *   joints[]     {name, type: "hinge"|"ball", parent, child, offset: [3],
 *                 frame: 3x3 rows (optional), axis: [3] (hinge),
 *                 axes: [[3], ...] (ball, 1-3 axes, default x,y,z),
 *                 limits: [lo, hi] (hinge) or [[lo, hi], ...] (ball)}
 *   fingertips[] {link, point: [3], normal: [3]}
 */
inline GripperModel load_gripper(const nlohmann::json& doc) {
  using nlohmann::json;
  GripperModel g;
  const auto& jl = detail::json_field(doc, "links", "gripper");
  if (!jl.is_array() || jl.empty()) throw Error("gripper.links: expected a non-empty array");
  std::map<std::string, int> link_ids;
  for (std::size_t i = 0; i < jl.size(); ++i) {
    const std::string where = "gripper.links[" + std::to_string(i) + "]";
    Link l;
    l.name = detail::json_field(jl[i], "name", where).get<std::string>();
    const auto& jv = detail::json_field(jl[i], "vertices", where);
    if (!jv.is_array() || jv.empty()) throw Error(where + ".vertices: expected a non-empty array");
    for (std::size_t k = 0; k < jv.size(); ++k) {
      l.body.vertices.push_back(detail::json_vec3(jv[k], where + ".vertices[" + std::to_string(k) + "]"));
    }
    if (link_ids.count(l.name)) throw Error(where + ".name: duplicate link name '" + l.name + "'");
    link_ids[l.name] = int(i);
    g.links.push_back(std::move(l));
  }
  auto lookup = [&](const std::string& name, const std::string& where) {
    auto it = link_ids.find(name);
    if (it == link_ids.end()) throw Error(where + ": unknown link '" + name + "'");
    return it->second;
  };

  const auto& jj = detail::json_field(doc, "joints", "gripper");
  if (!jj.is_array()) throw Error("gripper.joints: expected an array");
  std::vector<int> parent_joint(g.links.size(), -1);
  std::map<std::string, int> joint_names;
  for (std::size_t i = 0; i < jj.size(); ++i) {
    const json& j = jj[i];
    std::string where = "gripper.joints[" + std::to_string(i) + "]";
    Joint jt;
    jt.name = detail::json_field(j, "name", where).get<std::string>();
    where += " (" + jt.name + ")";
    if (joint_names.count(jt.name)) throw Error(where + ".name: duplicate joint name");
    joint_names[jt.name] = int(i);
    const std::string type = detail::json_field(j, "type", where).get<std::string>();
    jt.parent = lookup(detail::json_field(j, "parent", where).get<std::string>(), where + ".parent");
    jt.child = lookup(detail::json_field(j, "child", where).get<std::string>(), where + ".child");
    if (jt.parent == jt.child) throw Error(where + ": parent and child are the same link");
    if (parent_joint[jt.child] >= 0) throw Error(where + ".child: link already has a parent joint");
    parent_joint[jt.child] = int(i);
    jt.offset = j.contains("offset") ? detail::json_vec3(j["offset"], where + ".offset") : Vec3::Zero();
    if (j.contains("frame")) {
      const auto& jf = j["frame"];
      if (!jf.is_array() || jf.size() != 3) throw Error(where + ".frame: expected 3 rows");
      for (int r = 0; r < 3; ++r) jt.frame.row(r) = detail::json_vec3(jf[r], where + ".frame").transpose();
      if (!is_rotation(jt.frame, 1e-6)) throw Error(where + ".frame: not a rotation matrix");
    }
    const auto& lim = detail::json_field(j, "limits", where);
    if (type == "hinge") {
      jt.type = JointType::Hinge;
      jt.axes.push_back(detail::json_vec3(detail::json_field(j, "axis", where), where + ".axis"));
      if (!lim.is_array() || lim.size() != 2 || !lim[0].is_number() || !lim[1].is_number()) {
        throw Error(where + ".limits: expected [lo, hi]");
      }
      jt.lower.push_back(lim[0].get<double>());
      jt.upper.push_back(lim[1].get<double>());
    } else if (type == "ball") {
      jt.type = JointType::Ball;
      if (j.contains("axes")) {
        const auto& ja = j["axes"];
        if (!ja.is_array() || ja.empty() || ja.size() > 3) throw Error(where + ".axes: expected 1 to 3 axes");
        for (std::size_t k = 0; k < ja.size(); ++k) jt.axes.push_back(detail::json_vec3(ja[k], where + ".axes"));
      } else {
        jt.axes = {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};
      }
      if (!lim.is_array() || lim.size() != jt.axes.size()) {
        throw Error(where + ".limits: expected one [lo, hi] pair per axis");
      }
      for (const auto& pair : lim) {
        if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number()) {
          throw Error(where + ".limits: expected [lo, hi] pairs");
        }
        jt.lower.push_back(pair[0].get<double>());
        jt.upper.push_back(pair[1].get<double>());
      }
    } else {
      throw Error(where + ".type: unknown joint type '" + type + "'");
    }
    for (auto& a : jt.axes) {
      if (a.norm() < 1e-9) throw Error(where + ": zero joint axis");
      a.normalize();
    }
    for (int k = 0; k < jt.dof(); ++k) {
      if (!(jt.lower[k] <= jt.upper[k])) {
        throw Error(where + ".limits: lower bound exceeds upper bound");
      }
    }
    g.joints.push_back(std::move(jt));
  }

  int palms = 0;
  for (int l = 0; l < g.num_links(); ++l) {
    if (parent_joint[l] < 0) {
      g.palm = l;
      ++palms;
    }
  }
  if (palms != 1) throw Error("gripper.joints: expected exactly one root (palm) link, found " + std::to_string(palms));

  const auto& jt = detail::json_field(doc, "fingertips", "gripper");
  if (!jt.is_array() || jt.empty()) throw Error("gripper.fingertips: expected a non-empty array");
  std::vector<int> joint_owner(g.joints.size(), -1);
  int offset = 0;
  for (std::size_t i = 0; i < jt.size(); ++i) {
    const std::string where = "gripper.fingertips[" + std::to_string(i) + "]";
    Finger f;
    f.tip_link = lookup(detail::json_field(jt[i], "link", where).get<std::string>(), where + ".link");
    if (f.tip_link == g.palm) throw Error(where + ".link: fingertip cannot be on the palm");
    f.tip_point = detail::json_vec3(detail::json_field(jt[i], "point", where), where + ".point");
    f.tip_normal = detail::json_vec3(detail::json_field(jt[i], "normal", where), where + ".normal");
    if (std::abs(f.tip_normal.norm() - 1.0) > 1e-6) throw Error(where + ".normal: fingertip normal is not unit length");
    f.tip_normal.normalize();
    const auto& verts = g.links[f.tip_link].body.vertices;
    double scale = 0.0;
    for (const auto& v : verts) scale = std::max(scale, v.norm());
    if (!detail::point_in_hull(verts, f.tip_point, 1e-9 * std::max(scale, 1.0))) {
      throw Error(where + ".point: fingertip point is outside the convex hull of link '" + g.links[f.tip_link].name +
                  "'");
    }
    std::vector<int> chain;
    for (int l = f.tip_link; l != g.palm;) {
      const int j = parent_joint[l];
      if (j < 0 || int(chain.size()) > g.num_links()) throw Error(where + ": fingertip link is not connected to the palm");
      chain.push_back(j);
      l = g.joints[j].parent;
    }
    std::reverse(chain.begin(), chain.end());
    for (int j : chain) {
      if (joint_owner[j] >= 0) {
        throw Error(where + ": joint '" + g.joints[j].name + "' is shared with fingertip " +
                    std::to_string(joint_owner[j]) + "; fingers must be independent chains");
      }
      joint_owner[j] = int(i);
      f.joints.push_back(j);
      f.links.push_back(g.joints[j].child);
      for (int k = 0; k < g.joints[j].dof(); ++k) {
        f.lower.push_back(g.joints[j].lower[k]);
        f.upper.push_back(g.joints[j].upper[k]);
      }
    }
    f.dof = int(f.lower.size());
    f.dof_offset = offset;
    offset += f.dof;
    g.fingers.push_back(std::move(f));
  }
  for (std::size_t j = 0; j < g.joints.size(); ++j) {
    if (joint_owner[j] < 0) {
      throw Error("gripper.joints[" + std::to_string(j) + "] (" + g.joints[j].name +
                  "): joint is not on the path from the palm to any fingertip");
    }
  }
  if (g.num_fingers() >= g.num_links()) throw Error("gripper.fingertips: need fewer fingertips than links");
  return g;
}

inline GripperModel load_gripper_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(path + ": cannot open gripper config");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(path + ": " + e.what());
  }
  try {
    return load_gripper(doc);
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

/// Knot k of N on [lo, hi].
inline double grid_knot(double lo, double hi, int k, int cells) {
  if (k == 0) return lo;
  if (k == cells) return hi;
  return lo * (1.0 - double(k) / cells) + hi * (double(k) / cells);
}

/// Tensor grid with N cells (N + 1 knots) per dimension; flat index has dimension 0 fastest.
struct TensorGrid {
  int dims = 0;
  int cells = 1;
  std::vector<double> lower;
  std::vector<double> upper;

  [[nodiscard]] int knots() const { return cells + 1; }

  [[nodiscard]] std::int64_t size() const {
    std::int64_t s = 1;
    for (int d = 0; d < dims; ++d) s *= knots();
    return s;
  }

  [[nodiscard]] std::vector<int> unflatten(std::int64_t flat) const {
    std::vector<int> idx(dims);
    for (int d = 0; d < dims; ++d) {
      idx[d] = int(flat % knots());
      flat /= knots();
    }
    return idx;
  }

  [[nodiscard]] std::int64_t flatten(const std::vector<int>& idx) const {
    std::int64_t flat = 0;
    for (int d = dims - 1; d >= 0; --d) flat = flat * knots() + idx[d];
    return flat;
  }

  [[nodiscard]] double knot(int d, int k) const { return grid_knot(lower[d], upper[d], k, cells); }

  [[nodiscard]] std::vector<double> values(const std::vector<int>& idx) const {
    std::vector<double> v(dims);
    for (int d = 0; d < dims; ++d) v[d] = knot(d, idx[d]);
    return v;
  }

  /// Multilinear weights of the cell containing x: (flat index, weight) for 2^dims corners.
  [[nodiscard]] std::vector<std::pair<std::int64_t, double>> interpolation(const std::vector<double>& x) const {
    std::vector<int> base(dims);
    std::vector<double> frac(dims);
    for (int d = 0; d < dims; ++d) {
      const double span = upper[d] - lower[d];
      double s = span > 0.0 ? (x[d] - lower[d]) / span * cells : 0.0;
      s = std::clamp(s, 0.0, double(cells));
      int c = std::min(int(std::floor(s)), cells - 1);
      base[d] = c;
      frac[d] = s - c;
    }
    std::vector<std::pair<std::int64_t, double>> out;
    for (int mask = 0; mask < (1 << dims); ++mask) {
      std::vector<int> idx = base;
      double w = 1.0;
      for (int d = 0; d < dims; ++d) {
        const bool hi = (mask >> d) & 1;
        idx[d] += hi;
        w *= hi ? frac[d] : 1.0 - frac[d];
      }
      out.emplace_back(flatten(idx), w);
    }
    return out;
  }
};

/// Per finger: link transforms of the chain at every grid point of its joint box.
struct RotationGrid {
  int cells = 0;
  std::vector<TensorGrid> grids;                                 // per finger
  std::vector<std::vector<std::vector<RigidTransform>>> poses;   // [finger][flat][chain link]

  [[nodiscard]] const std::vector<RigidTransform>& at(int finger, std::int64_t flat) const {
    return poses.at(finger).at(flat);
  }
};

inline RotationGrid precompute_rotation_grid(const GripperModel& model, int cells) {
  if (cells < 1) throw Error("precompute_rotation_grid: N must be >= 1");
  RotationGrid grid;
  grid.cells = cells;
  for (int f = 0; f < model.num_fingers(); ++f) {
    const Finger& fg = model.fingers[f];
    TensorGrid tg{fg.dof, cells, fg.lower, fg.upper};
    std::vector<std::vector<RigidTransform>> table;
    table.reserve(tg.size());
    for (std::int64_t k = 0; k < tg.size(); ++k) {
      const auto q = tg.values(tg.unflatten(k));
      table.push_back(model.finger_kinematics(f, q.data()));
    }
    grid.grids.push_back(std::move(tg));
    grid.poses.push_back(std::move(table));
  }
  return grid;
}

/// Object rotation grid: exp(w) for w on an N-cell grid over [-pi, pi]^3.
struct ObjectRotationGrid {
  TensorGrid grid;
  std::vector<Mat3> rotations;

  explicit ObjectRotationGrid(int cells = 1) {
    if (cells < 1) throw Error("object rotation grid: N must be >= 1");
    grid = TensorGrid{3, cells, {-std::numbers::pi, -std::numbers::pi, -std::numbers::pi},
                      {std::numbers::pi, std::numbers::pi, std::numbers::pi}};
    rotations.reserve(grid.size());
    for (std::int64_t k = 0; k < grid.size(); ++k) {
      const auto w = grid.values(grid.unflatten(k));
      rotations.push_back(rodrigues_exp(Vec3(w[0], w[1], w[2])));
    }
  }

  /// Multilinear interpolation of the grid rotations (not orthogonal inside a cell).
  [[nodiscard]] Mat3 interpolate(const Vec3& w) const {
    Mat3 r = Mat3::Zero();
    for (const auto& [k, wt] : grid.interpolation({w[0], w[1], w[2]})) r += wt * rotations[k];
    return r;
  }
};

/// Multilinear interpolation of one finger's chain poses.
inline std::vector<RigidTransform> interpolate_finger(const RotationGrid& grid, int finger, const double* q) {
  const TensorGrid& tg = grid.grids.at(finger);
  std::vector<double> x(q, q + tg.dims);
  std::vector<RigidTransform> out;
  for (const auto& [k, wt] : tg.interpolation(x)) {
    const auto& corner = grid.at(finger, k);
    if (out.empty()) {
      out.resize(corner.size());
      for (auto& t : out) {
        t.rotation.setZero();
        t.translation.setZero();
      }
    }
    for (std::size_t l = 0; l < corner.size(); ++l) {
      out[l].rotation += wt * corner[l].rotation;
      out[l].translation += wt * corner[l].translation;
    }
  }
  return out;
}

/// Link poses from grid interpolation of every finger; palm at identity.
inline std::vector<RigidTransform> interpolated_link_poses(const GripperModel& model, const RotationGrid& grid,
                                                           const std::vector<double>& theta) {
  std::vector<RigidTransform> poses(model.links.size());
  for (int f = 0; f < model.num_fingers(); ++f) {
    const auto chain = interpolate_finger(grid, f, theta.data() + model.fingers[f].dof_offset);
    for (std::size_t k = 0; k < chain.size(); ++k) poses[model.fingers[f].links[k]] = chain[k];
  }
  return poses;
}

/// Largest distance from the palm origin of any link vertex over all grid poses.
inline double gripper_reach(const GripperModel& model, const RotationGrid& grid) {
  double r = 0.0;
  for (const auto& v : model.links[model.palm].body.vertices) r = std::max(r, v.norm());
  for (int f = 0; f < model.num_fingers(); ++f) {
    for (const auto& entry : grid.poses[f]) {
      for (std::size_t l = 0; l < entry.size(); ++l) {
        for (const auto& v : model.links[model.fingers[f].links[l]].body.vertices) {
          r = std::max(r, entry[l].apply(v).norm());
        }
      }
    }
  }
  return r;
}

}  // namespace gbb
