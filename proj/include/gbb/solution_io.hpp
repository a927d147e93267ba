#pragma once

#include "gbb/planner.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>

namespace gbb {

/// Run parameters echoed into the solution document so a verifier can rebuild the inputs.
struct RunParameters {
  int points = 100;
  int cells = 8;
  int sep_dirs = 64;
  double normal_eps = 0.05;
  double mu = 0.5;
  int cone_edges = 8;
  std::uint64_t seed = 1;
  double scale = 1.0;
  double workspace = 0.0;
  double collision_tol = 0.0;
};

namespace detail {

inline nlohmann::json vec_json(const Vec3& v) { return nlohmann::json::array({v[0], v[1], v[2]}); }

inline Vec3 json_to_vec(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) throw Error(where + ": expected 3 numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline nlohmann::json solution_json(const GraspSolution& s, const GripperModel& model, const GraspPointSet& points) {
  nlohmann::json j;
  j["assignment"] = s.assignment;
  nlohmann::json contacts = nlohmann::json::array();
  for (int p : s.assignment) {
    contacts.push_back({{"position", vec_json(points.at(p).position)}, {"normal", vec_json(points.at(p).normal)}});
  }
  j["contacts"] = contacts;
  j["quality"] = s.quality;
  j["theta"] = s.theta;
  j["object"] = {{"w", vec_json(s.w)}, {"t", vec_json(s.t)}};
  nlohmann::json links = nlohmann::json::array();
  for (int l = 0; l < model.num_links() && l < int(s.link_poses.size()); ++l) {
    const RigidTransform& p = s.link_poses[l];
    nlohmann::json rows = nlohmann::json::array();
    for (int r = 0; r < 3; ++r) rows.push_back(vec_json(p.rotation.row(r).transpose()));
    links.push_back({{"name", model.links[l].name}, {"rotation", rows}, {"translation", vec_json(p.translation)}});
  }
  j["links"] = links;
  j["fingertip_residual"] = s.max_residual;
  j["normal_gap"] = s.max_normal_gap;
  j["max_penetration"] = s.max_penetration;
  j["exact_kinematics"] = s.exact;
  return j;
}

inline std::string format_real(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace detail

inline nlohmann::json solution_document(const PlanResult& res, const GripperModel& model, const GraspPointSet& points,
                                        const RunParameters& params) {
  nlohmann::json doc;
  doc["status"] = to_string(res.status);
  doc["parameters"] = {{"points", params.points},         {"cells", params.cells},
                       {"sep_dirs", params.sep_dirs},     {"normal_eps", params.normal_eps},
                       {"mu", params.mu},                 {"cone_edges", params.cone_edges},
                       {"seed", params.seed},             {"scale", params.scale},
                       {"workspace", params.workspace},   {"collision_tol", params.collision_tol}};
  doc["stats"] = {{"nodes", res.nodes},
                  {"micp_solves", res.micp_solves},
                  {"nodes_cut", res.nodes_cut},
                  {"local_ik_hits", res.local_ik_hits},
                  {"unresolved", res.unresolved},
                  {"early_stop", res.early_stop}};
  doc["solution"] = res.best ? detail::solution_json(*res.best, model, points) : nlohmann::json(nullptr);
  if (!res.feasible.empty()) {
    nlohmann::json all = nlohmann::json::array();
    for (const auto& s : res.feasible) all.push_back(detail::solution_json(s, model, points));
    doc["all_grasps"] = all;
  }
  return doc;
}

inline void write_history(std::ostream& out, const std::vector<HistoryRecord>& history) {
  out << "nodes,q_best,wall_ms,micp_solves,nodes_cut\n";
  for (const auto& h : history) {
    out << h.nodes << ',' << detail::format_real(h.q_best) << ',' << detail::format_real(h.wall_ms) << ','
        << h.micp_solves << ',' << h.nodes_cut << '\n';
  }
}

/// Solution fields read back from a solution document.
struct LoadedSolution {
  std::string status;
  RunParameters params;
  std::optional<GraspSolution> solution;
};

inline LoadedSolution parse_solution_document(const nlohmann::json& doc) {
  LoadedSolution out;
  try {
    out.status = doc.at("status").get<std::string>();
    const auto& p = doc.at("parameters");
    out.params.points = p.at("points").get<int>();
    out.params.cells = p.at("cells").get<int>();
    out.params.sep_dirs = p.at("sep_dirs").get<int>();
    out.params.normal_eps = p.at("normal_eps").get<double>();
    out.params.mu = p.at("mu").get<double>();
    out.params.cone_edges = p.at("cone_edges").get<int>();
    out.params.seed = p.at("seed").get<std::uint64_t>();
    out.params.scale = p.at("scale").get<double>();
    out.params.workspace = p.at("workspace").get<double>();
    out.params.collision_tol = p.at("collision_tol").get<double>();
    const auto& js = doc.at("solution");
    if (js.is_null()) return out;
    GraspSolution s;
    s.assignment = js.at("assignment").get<std::vector<int>>();
    s.quality = js.at("quality").get<double>();
    s.theta = js.at("theta").get<std::vector<double>>();
    s.w = detail::json_to_vec(js.at("object").at("w"), "solution.object.w");
    s.t = detail::json_to_vec(js.at("object").at("t"), "solution.object.t");
    s.max_residual = js.at("fingertip_residual").get<double>();
    s.max_normal_gap = js.at("normal_gap").get<double>();
    s.max_penetration = js.at("max_penetration").get<double>();
    s.exact = js.at("exact_kinematics").get<bool>();
    out.solution = std::move(s);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("solution document: ") + e.what());
  }
  return out;
}

inline LoadedSolution load_solution_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(path + ": cannot open solution document");
  try {
    return parse_solution_document(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(path + ": " + e.what());
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

}  // namespace gbb
