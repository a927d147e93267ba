#include "oracles.hpp"

#include <catch_amalgamated.hpp>

#include <numbers>
#include <sstream>

using namespace gbb;
using Catch::Matchers::WithinAbs;

namespace {

const char* kCubeOff =
    "OFF\n8 6 0\n-0.5 -0.5 -0.5\n0.5 -0.5 -0.5\n0.5 0.5 -0.5\n-0.5 0.5 -0.5\n"
    "-0.5 -0.5 0.5\n0.5 -0.5 0.5\n0.5 0.5 0.5\n-0.5 0.5 0.5\n"
    "4 0 3 2 1\n4 4 5 6 7\n4 0 1 5 4\n4 2 3 7 6\n4 1 2 6 5\n4 0 4 7 3\n";

TriangleMesh unit_cube() {
  std::istringstream in(kCubeOff);
  return parse_off(in);
}

Mat3 series_exp(const Vec3& w) {
  Mat3 sum = Mat3::Identity(), term = Mat3::Identity();
  for (int k = 1; k < 20; ++k) {
    term = term * skew(w) / double(k);
    sum += term;
  }
  return sum;
}

std::vector<Vec3> random_points(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec3> pts;
  for (int i = 0; i < n; ++i) pts.emplace_back(u(rng), u(rng), u(rng));
  return pts;
}

/// Overlap along the best of many sampled directions.
double sweep_depth(const std::vector<Vec3>& a, const std::vector<Vec3>& b, int samples) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& n : fibonacci_directions(samples)) {
    double ha = -1e300, hb = -1e300;
    for (const auto& p : a) ha = std::max(ha, p.dot(n));
    for (const auto& p : b) hb = std::max(hb, -p.dot(n));
    best = std::min(best, ha + hb);
  }
  return std::max(0.0, best);
}

}  // namespace

TEST_CASE("rodrigues exponential", "[geometry]") {
  CHECK((rodrigues_exp(Vec3::Zero()) - Mat3::Identity()).norm() == 0.0);
  const Mat3 half = rodrigues_exp(Vec3(std::numbers::pi, 0, 0));
  CHECK((half - Vec3(1, -1, -1).asDiagonal().toDenseMatrix()).norm() < 1e-12);
  CHECK((rodrigues_exp(Vec3(0.1, 0.2, 0.3)) - series_exp(Vec3(0.1, 0.2, 0.3))).norm() < 1e-10);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    Vec3 w(u(rng), u(rng), u(rng));
    if (w.norm() > 1.0) w.normalize();
    w *= std::numbers::pi;
    const Mat3 r = rodrigues_exp(w);
    CHECK(is_rotation(r, 1e-12));
    CHECK((r * rodrigues_exp(-w) - Mat3::Identity()).norm() < 1e-10);
  }
}

TEST_CASE("support vertex", "[geometry]") {
  const ConvexBody cube(oracle::cube_vertices(0.5));
  CHECK(support(cube, Vec3(1, 0, 0)).x() == 0.5);
  const ConvexBody single(std::vector<Vec3>{Vec3(1, 2, 3)});
  CHECK(support(single, Vec3(-4, 1, 0.5)) == Vec3(1, 2, 3));
  const std::vector<Vec3> tet{Vec3(1, 1, 1), Vec3(1, -1, -1), Vec3(-1, 1, -1), Vec3(-1, -1, 1)};
  for (const auto& v : tet) CHECK(support(ConvexBody(tet), v) == v);
  CHECK_THROWS_AS(support(cube, Vec3::Zero()), Error);
}

TEST_CASE("penetration depth of posed hulls", "[geometry]") {
  const ConvexBody cube(oracle::cube_vertices(0.5));
  RigidTransform pa, pb;
  pb.translation = Vec3(0.5, 0, 0);
  const auto r = penetration(cube, pa, cube, pb);
  CHECK_THAT(r.depth, WithinAbs(0.5, 1e-9));
  CHECK((pa.apply(r.witness_a) - pb.apply(r.witness_b) - r.depth * r.normal).norm() < 1e-9);

  pb.translation = Vec3(2.0, 0, 0);
  CHECK(penetration(cube, pa, cube, pb).depth == 0.0);

  SECTION("symmetric and matches a direction sweep") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-0.4, 0.4);
    for (int i = 0; i < 20; ++i) {
      RigidTransform qa{rodrigues_exp(Vec3(u(rng), u(rng), u(rng)) * 3), Vec3(u(rng), u(rng), u(rng))};
      RigidTransform qb{rodrigues_exp(Vec3(u(rng), u(rng), u(rng)) * 3), Vec3(u(rng), u(rng), u(rng))};
      const double d = penetration(cube, qa, cube, qb).depth;
      CHECK_THAT(penetration(cube, qb, cube, qa).depth, WithinAbs(d, 1e-9));
      CHECK_THAT(d, WithinAbs(sweep_depth(cube.posed(qa), cube.posed(qb), 20000), 2e-2));
    }
  }

  SECTION("sphere hull against an offset cube") {
    const ConvexBody ball(fibonacci_directions(42));
    RigidTransform off;
    off.translation = Vec3(0.8, 0, 0);
    const double d = penetration(ball, {}, cube, off).depth;
    CHECK(d > 0.0);
    CHECK_THAT(d, WithinAbs(sweep_depth(ball.vertices, cube.posed(off), 10000), 2e-2));
  }
}

TEST_CASE("minimal bounding sphere", "[geometry]") {
  const std::vector<Vec3> one{Vec3::Zero()};
  auto s = min_bounding_sphere(one);
  CHECK(s.center.norm() == 0.0);
  CHECK(s.sq_radius == 0.0);
  const std::vector<Vec3> pair{Vec3::Zero(), Vec3(2, 0, 0)};
  s = min_bounding_sphere(pair);
  CHECK((s.center - Vec3(1, 0, 0)).norm() < 1e-12);
  CHECK_THAT(s.sq_radius, WithinAbs(1.0, 1e-12));
  CHECK_THROWS_AS(min_bounding_sphere(std::vector<Vec3>{}), Error);

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto pts = random_points(rng, 1 + trial % 20);
    const auto ball = min_bounding_sphere(pts);
    for (const auto& p : pts) CHECK(ball.contains(p));
    CHECK_THAT(ball.sq_radius, WithinAbs(oracle::enclosing_ball_sq_radius(pts), 1e-7));
  }
}

TEST_CASE("minimal bounding cone", "[geometry]") {
  const std::vector<Vec3> one{Vec3::UnitZ()};
  auto c = min_bounding_cone(one);
  CHECK((c.axis - Vec3::UnitZ()).norm() < 1e-12);
  CHECK(c.sq_radius < 1e-12);

  const double a = 0.3;
  const std::vector<Vec3> sym{Vec3(std::sin(a), 0, std::cos(a)), Vec3(-std::sin(a), 0, std::cos(a))};
  c = min_bounding_cone(sym);
  CHECK((c.axis - Vec3::UnitZ()).norm() < 1e-9);
  CHECK_THAT(c.sq_radius, WithinAbs((sym[0] - Vec3::UnitZ()).squaredNorm(), 1e-12));

  const std::vector<Vec3> opposite{Vec3::UnitX(), -Vec3::UnitX()};
  CHECK(min_bounding_cone(opposite).sq_radius == 4.0);
  CHECK_THROWS_AS(min_bounding_cone(std::vector<Vec3>{Vec3(2, 0, 0)}), Error);
  CHECK_THROWS_AS(min_bounding_cone(std::vector<Vec3>{}), Error);

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double cap = std::numbers::pi / 6.0;
  for (int trial = 0; trial < 10; ++trial) {
    const Mat3 frame = rodrigues_exp(oracle::random_unit(rng) * 2.0);
    std::vector<Vec3> ns;
    for (int i = 0; i < 15; ++i) {
      const double th = std::acos(1.0 - u(rng) * (1.0 - std::cos(cap)));
      const double ph = 2.0 * std::numbers::pi * u(rng);
      ns.push_back(frame * Vec3(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)));
    }
    const auto cone = min_bounding_cone(ns);
    CHECK_THAT(cone.axis.norm(), WithinAbs(1.0, 1e-9));
    for (const auto& n : ns) CHECK(cone.contains(n));
    CHECK_THAT(cone.sq_radius, WithinAbs(oracle::bounding_cone_sq_radius(ns), 1e-6));
  }
}

TEST_CASE("cone threshold inflation", "[geometry]") {
  CHECK(inflate_cone_eps(0.0, 0.0) == 0.0);
  CHECK(inflate_cone_eps(0.0, 0.05) == 0.05);
  CHECK(inflate_cone_eps(4.0, 0.1) == 4.0);
  CHECK_THROWS_AS(inflate_cone_eps(-0.1, 0.1), Error);
  CHECK_THROWS_AS(inflate_cone_eps(0.1, 4.5), Error);

  double prev_row = -1.0;
  for (int i = 0; i < 50; ++i) {
    const double en = 4.0 * i / 49.0;
    double prev = -1.0;
    for (int j = 0; j < 50; ++j) {
      const double eu = 4.0 * j / 49.0;
      const double v = inflate_cone_eps(en, eu);
      const double half = std::asin(std::sqrt(en) / 2.0) + std::asin(std::sqrt(eu) / 2.0);
      const double chord = 2.0 * std::sin(std::min(half, std::numbers::pi / 2.0));
      CHECK_THAT(v, WithinAbs(std::min(4.0, chord * chord), 1e-12));
      CHECK(v >= prev - 1e-15);
      prev = v;
    }
    const double first = inflate_cone_eps(en, 0.3);
    CHECK(first >= prev_row - 1e-15);
    prev_row = first;
  }
}

TEST_CASE("mesh readers", "[pointset]") {
  const auto cube = unit_cube();
  CHECK(cube.triangles.size() == 12);
  CHECK_THAT(cube.area(), WithinAbs(6.0, 1e-12));

  std::istringstream obj("# quad\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\nf 1//1 2//1 3//1 4//1\n");
  const auto quad = parse_obj(obj);
  CHECK(quad.triangles.size() == 2);
  CHECK_THAT(quad.area(), WithinAbs(1.0, 1e-12));

  std::istringstream bad_index("v 0 0 0\nv 1 0 0\nf 1 2 7\n");
  CHECK_THROWS_AS(parse_obj(bad_index), Error);
  std::istringstream bad_number("v 0 zero 0\n");
  CHECK_THROWS_AS(parse_obj(bad_number), Error);
  CHECK_THROWS_AS(load_mesh(GBB_DATA_DIR "/missing.obj"), Error);
  CHECK_NOTHROW(load_mesh(GBB_DATA_DIR "/box.obj"));
}

TEST_CASE("surface sampling", "[pointset]") {
  const auto cube = unit_cube();
  const auto one = sample_surface(cube, 1, 4);
  REQUIRE(one.size() == 1);
  CHECK_THAT(one[0].position.cwiseAbs().maxCoeff(), WithinAbs(0.5, 1e-12));
  const int axis = [&] {
    int k = 0;
    one[0].position.cwiseAbs().maxCoeff(&k);
    return k;
  }();
  CHECK((one[0].normal + Vec3::Unit(axis) * (one[0].position[axis] > 0 ? 1.0 : -1.0)).norm() < 1e-12);

  for (int p : {6, 8, 100}) {
    const auto pts = sample_surface(cube, p, 7);
    REQUIRE(int(pts.size()) == p);
    double md = 1e300;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      CHECK_THAT(pts[i].normal.norm(), WithinAbs(1.0, 1e-9));
      CHECK(pts[i].normal.cwiseAbs().maxCoeff() == 1.0);
      for (std::size_t j = i + 1; j < pts.size(); ++j) md = std::min(md, (pts[i].position - pts[j].position).norm());
    }
    CHECK(md >= 0.5 * std::sqrt(cube.area() / p));
  }

  const auto a = sample_surface(cube, 30, 2), b = sample_surface(cube, 30, 2);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].position == b[i].position);
    CHECK(a[i].normal == b[i].normal);
  }

  TriangleMesh flat;
  flat.vertices = {Vec3::Zero(), Vec3(1, 0, 0), Vec3(2, 0, 0)};
  flat.triangles = {{0, 1, 2}};
  CHECK_THROWS_AS(sample_surface(flat, 3, 1), Error);
}

TEST_CASE("kd-tree over grasp points", "[pointset]") {
  const KdTree single = build_kdtree({GraspPoint{Vec3(1, 2, 3), Vec3::UnitZ()}});
  CHECK(single.size() == 1);
  CHECK(single.node(0).is_leaf());
  CHECK(single.node(0).sphere.sq_radius == 0.0);
  CHECK(single.node(0).cone.sq_radius < 1e-12);

  GraspPointSet line;
  for (int i = 0; i < 4; ++i) line.push_back({Vec3(i, 0, 0), Vec3::UnitZ()});
  const KdTree t4 = build_kdtree(line);
  const auto& root = t4.node(t4.root());
  CHECK(t4.node(root.left).points == std::vector<int>{0, 1});
  CHECK(t4.node(root.right).points == std::vector<int>{2, 3});
  CHECK_THAT(root.sphere.center.x(), WithinAbs(1.5, 1e-12));
  CHECK_THAT(root.sphere.sq_radius, WithinAbs(2.25, 1e-12));
  CHECK(t4.path_to_root(t4.root()) == std::vector<int>{t4.root()});
  CHECK_THROWS_AS(build_kdtree({}), Error);
  CHECK_THROWS_AS(t4.path_to_root(99), Error);

  const auto pts = sample_surface(unit_cube(), 100, 1);
  const KdTree tree = build_kdtree(pts);
  CHECK(tree.max_depth() <= 8);
  std::vector<int> covered(pts.size(), 0);
  for (int id = 0; id < tree.size(); ++id) {
    const auto& nd = tree.node(id);
    for (int p : nd.points) {
      CHECK(nd.sphere.contains(pts[p].position));
      CHECK(nd.cone.contains(pts[p].normal));
    }
    if (nd.is_leaf()) {
      REQUIRE(nd.points.size() == 1);
      ++covered[nd.points[0]];
    } else {
      std::vector<int> both = tree.node(nd.left).points;
      both.insert(both.end(), tree.node(nd.right).points.begin(), tree.node(nd.right).points.end());
      std::sort(both.begin(), both.end());
      CHECK(both == nd.points);
    }
    const auto path = tree.path_to_root(id);
    CHECK(int(path.size()) == nd.depth + 1);
    for (std::size_t k = 1; k < path.size(); ++k) CHECK(tree.node(path[k - 1]).parent == path[k]);
    std::vector<int> meet = tree.node(path[0]).points;
    for (int anc : path) {
      std::vector<int> next;
      const auto& m = tree.node(anc).points;
      std::set_intersection(meet.begin(), meet.end(), m.begin(), m.end(), std::back_inserter(next));
      meet = next;
    }
    CHECK(meet == nd.points);
  }
  for (int c : covered) CHECK(c == 1);
}

TEST_CASE("contact wrenches", "[metric]") {
  ContactModel m;
  m.friction_mu = 1e-9;
  m.cone_edges = 4;
  const GraspPoint up{Vec3(1, 0, 0), Vec3::UnitZ()};
  for (const auto& w : contact_wrenches(up, m)) {
    CHECK((w.head<3>() - Vec3::UnitZ()).norm() < 1e-8);
    CHECK((w.tail<3>() - Vec3(1, 0, 0).cross(Vec3::UnitZ())).norm() < 1e-8);
  }

  m.torque_origin = Vec3(1, 0, 0);
  for (const auto& w : contact_wrenches(up, m)) CHECK(w.tail<3>().norm() == 0.0);

  m = ContactModel{};
  const auto ws = contact_wrenches(up, m);
  REQUIRE(ws.size() == 8);
  for (const auto& w : ws) {
    const Vec3 f = w.head<3>();
    CHECK_THAT(f.norm(), WithinAbs(1.0, 1e-12));
    CHECK_THAT(std::acos(f.dot(Vec3::UnitZ())), WithinAbs(std::atan(0.5), 1e-12));
    CHECK((w.tail<3>() - Vec3(1, 0, 0).cross(f)).norm() < 1e-12);
  }
  CHECK_THROWS_AS(contact_wrenches({Vec3::Zero(), Vec3::Zero()}, m), Error);
  m.cone_edges = 2;
  CHECK_THROWS_AS(contact_wrenches(up, m), Error);
}

TEST_CASE("Q1 grasp quality", "[metric]") {
  const ContactModel m;
  const GraspPoint px{Vec3(1, 0, 0), Vec3(-1, 0, 0)}, nx{Vec3(-1, 0, 0), Vec3(1, 0, 0)};
  const GraspPoint py{Vec3(0, 1, 0), Vec3(0, -1, 0)}, pz{Vec3(0, 0, 1), Vec3(0, 0, -1)};
  CHECK(q1(std::vector<GraspPoint>{px}, m) == 0.0);
  CHECK(q1(std::vector<GraspPoint>{px, nx}, m) == 0.0);
  CHECK_THROWS_AS(q1(std::vector<GraspPoint>{}, m), Error);

  SECTION("matches facet enumeration on small contact sets") {
    ContactModel coarse;
    coarse.cone_edges = 4;
    const std::vector<std::vector<GraspPoint>> sets{
        {px, nx, py}, {px, nx, py, pz}, {px, py, pz}, {GraspPoint{Vec3(0.3, 0.9, 0.1), Vec3(-0.2, -1, 0).normalized()}, nx, pz}};
    for (const auto& s : sets) {
      WrenchSet all;
      for (const auto& p : s) {
        const auto w = contact_wrenches(p, coarse);
        all.insert(all.end(), w.begin(), w.end());
      }
      CHECK_THAT(q1(s, coarse), WithinAbs(oracle::hull_inradius_6d(all), 1e-6));
    }
  }

  SECTION("monotone, refinement and rotation properties") {
    const auto pts = sample_surface(unit_cube(), 12, 3);
    const ContactModel cm = ContactModel::for_points(pts);
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 40; ++trial) {
      std::vector<int> idx(pts.size());
      std::iota(idx.begin(), idx.end(), 0);
      std::shuffle(idx.begin(), idx.end(), rng);
      const int na = 1 + int(rng() % 5);
      const int nb = na + 1 + int(rng() % 3);
      GraspPointSet a, b;
      for (int i = 0; i < nb; ++i) (i < na ? a : b).push_back(pts[idx[i]]);
      b.insert(b.end(), a.begin(), a.end());
      CHECK(q1(a, cm) <= q1(b, cm) + 1e-9);
      ContactModel fine = cm;
      fine.cone_edges = 16;
      CHECK(q1(b, fine) >= q1(b, cm) - 1e-9);
    }
    const GraspPointSet four(pts.begin(), pts.begin() + 6);
    Mat3 perm = Mat3::Zero();
    perm(0, 1) = 1;
    perm(1, 2) = -1;
    perm(2, 0) = 1;
    GraspPointSet turned;
    for (const auto& p : four) turned.push_back({perm * (p.position - cm.torque_origin) + cm.torque_origin, perm * p.normal});
    CHECK_THAT(q1(turned, cm), WithinAbs(q1(four, cm), 1e-7));
  }
}

TEST_CASE("Q upper bound over kd-tree nodes", "[metric]") {
  const auto pts = sample_surface(unit_cube(), 8, 1);
  const KdTree tree = build_kdtree(pts);
  const ContactModel cm = ContactModel::for_points(pts);
  const std::vector<int> leaves{tree.leaf_of(0), tree.leaf_of(3), tree.leaf_of(5)};
  CHECK(q1_upper(tree, leaves, cm) == q1(GraspPointSet{pts[0], pts[3], pts[5]}, cm));
  const std::vector<int> dup{tree.leaf_of(0), tree.leaf_of(0), tree.leaf_of(3)};
  CHECK(q1_upper(tree, dup, cm) == q1(GraspPointSet{pts[0], pts[3]}, cm));
  const std::vector<int> roots{tree.root(), tree.root()};
  const double top = q1_upper(tree, roots, cm);
  for (int a = 0; a < 8; ++a) {
    for (int b = a + 1; b < 8; ++b) CHECK(top >= q1(GraspPointSet{pts[a], pts[b]}, cm));
  }
  CHECK_THROWS_AS(q1_upper(tree, std::vector<int>{}, cm), Error);
}
