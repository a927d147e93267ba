#include "oracles.hpp"

#include <catch_amalgamated.hpp>

#include <sstream>

using namespace gbb;

namespace {

/// Fixes every binary of `p` to the bits of `mask` and returns the bounds.
std::pair<std::vector<double>, std::vector<double>> fixed_bounds(const ConicProgram& p, int mask) {
  std::vector<double> lb(p.num_vars()), ub(p.num_vars());
  for (int i = 0; i < p.num_vars(); ++i) {
    lb[i] = p.variable(i).lb;
    ub[i] = p.variable(i).ub;
  }
  const auto bins = p.binaries();
  for (std::size_t k = 0; k < bins.size(); ++k) lb[bins[k]] = ub[bins[k]] = double((mask >> k) & 1);
  return {lb, ub};
}

/// Point with the given lambdas and binaries set from `mask`.
std::vector<double> point(const ConicProgram& p, const std::vector<int>& members, const std::vector<double>& lambda,
                          int mask) {
  std::vector<double> x(p.num_vars(), 0.0);
  for (std::size_t j = 0; j < members.size(); ++j) x[members[j]] = lambda[j];
  const auto bins = p.binaries();
  for (std::size_t k = 0; k < bins.size(); ++k) x[bins[k]] = double((mask >> k) & 1);
  return x;
}

}  // namespace

TEST_CASE("SOS2 logarithmic encoding", "[conic]") {
  ConicProgram fresh;
  CHECK(fresh.count_binaries() == 0);

  for (auto [n, bits] : std::vector<std::pair<int, int>>{{2, 0}, {3, 1}, {5, 2}, {9, 3}}) {
    ConicProgram p;
    std::vector<int> lam;
    for (int j = 0; j < n; ++j) lam.push_back(p.add_variable("l" + std::to_string(j)));
    p.add_sos2_log(lam);
    CHECK(p.count_binaries() == bits);
  }
  ConicProgram tiny;
  CHECK_THROWS_AS(tiny.add_sos2_log({tiny.add_variable("a")}), Error);

  ConicProgram four;
  std::vector<int> lam;
  for (int j = 0; j < 4; ++j) lam.push_back(four.add_variable("l" + std::to_string(j)));
  four.add_sos2_log(lam);
  const int nb = four.count_binaries();
  bool consistent = false;
  for (int mask = 0; mask < (1 << nb); ++mask) {
    consistent = consistent || four.max_violation(point(four, lam, {0, 0.3, 0.7, 0}, mask)) <= 1e-12;
    CHECK(four.max_violation(point(four, lam, {0.5, 0, 0.5, 0}, mask)) > 0.1);
  }
  CHECK(consistent);

  SECTION("every assignment admits exactly an adjacent pair") {
    for (int n = 2; n <= 9; ++n) {
      ConicProgram p;
      std::vector<int> l;
      for (int j = 0; j < n; ++j) l.push_back(p.add_variable("l" + std::to_string(j)));
      p.add_sos2_log(l);
      const int bits = p.count_binaries();
      std::vector<int> covered(n - 1, 0);
      for (int mask = 0; mask < (1 << bits); ++mask) {
        std::vector<int> vertices;
        for (int j = 0; j < n; ++j) {
          std::vector<double> e(n, 0.0);
          e[j] = 1.0;
          if (p.max_violation(point(p, l, e, mask)) <= 1e-12) vertices.push_back(j);
        }
        CHECK(vertices.size() <= 2);
        if (vertices.size() == 2) {
          CHECK(vertices[1] == vertices[0] + 1);
          std::vector<double> mid(n, 0.0);
          mid[vertices[0]] = mid[vertices[1]] = 0.5;
          CHECK(p.max_violation(point(p, l, mid, mask)) <= 1e-12);
          ++covered[vertices[0]];
        }
        for (int a = 0; a < n; ++a) {
          for (int b = a + 2; b < n; ++b) {
            std::vector<double> split(n, 0.0);
            split[a] = split[b] = 0.5;
            CHECK(p.max_violation(point(p, l, split, mask)) > 1e-6);
          }
        }
      }
      for (int c : covered) CHECK(c == 1);
    }
  }
}

TEST_CASE("SOS1 logarithmic encoding", "[conic]") {
  ConicProgram p;
  std::vector<int> g;
  for (int j = 0; j < 8; ++j) g.push_back(p.add_variable("g" + std::to_string(j)));
  p.add_sos1_log(g);
  CHECK(p.count_binaries() == 3);
  for (int k = 0; k < 8; ++k) {
    std::vector<double> e(8, 0.0);
    e[k] = 1.0;
    int hits = 0;
    for (int mask = 0; mask < 8; ++mask) hits += p.max_violation(point(p, g, e, mask)) <= 1e-12;
    CHECK(hits == 1);
  }

  ConicProgram one;
  const int v = one.add_variable("g");
  one.add_sos1_log({v});
  CHECK(one.count_binaries() == 0);
  CHECK(one.max_violation({1.0}) <= 1e-12);
  CHECK(one.max_violation({0.0}) > 0.5);
  CHECK_THROWS_AS(one.add_sos1_log({}), Error);
}

TEST_CASE("second-order cone rows", "[conic]") {
  ConicProgram p;
  const int x = p.add_variable("x"), y = p.add_variable("y");
  p.add_soc(Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2), {x, y}, 1.0, "ball");
  CHECK(p.max_violation({0.6, 0.8}) <= 1e-12);
  CHECK(p.max_violation({0.8, 0.8}) > 0.1);
  CHECK_THROWS_AS(p.add_soc(Eigen::MatrixXd::Identity(2, 3), Eigen::VectorXd::Zero(2), {x, y}, 1.0), Error);
  CHECK_THROWS_AS(p.add_linear({{7, 1.0}}, Sense::Le, 0.0), Error);
  CHECK(solve_relaxation(p).status == RelaxStatus::Feasible);

  ConicProgram neg;
  const int z = neg.add_variable("z");
  AffineExpr ez;
  ez.add(z, 1.0);
  neg.add_soc({ez}, -0.5);
  CHECK(solve_relaxation(neg).status == RelaxStatus::Infeasible);

  const std::string text = p.debug_text();
  CHECK(text.find("ball") != std::string::npos);
  CHECK(text.find("x") != std::string::npos);
}

TEST_CASE("relaxation solver", "[socp]") {
  ConicProgram contradiction;
  const int x = contradiction.add_variable("x");
  contradiction.add_linear({{x, 1.0}}, Sense::Ge, 1.0);
  contradiction.add_linear({{x, 1.0}}, Sense::Le, 0.0);
  const auto r = solve_relaxation(contradiction);
  CHECK(r.status == RelaxStatus::Infeasible);
  CHECK(r.certificate.violation >= 1e-7);

  ConicProgram ball;
  const int a = ball.add_variable("a"), b = ball.add_variable("b");
  AffineExpr ea, eb;
  ea.add(a, 1.0);
  eb.add(b, 1.0);
  ball.add_soc({ea, eb}, 1.0);
  const auto f = solve_relaxation(ball);
  REQUIRE(f.status == RelaxStatus::Feasible);
  CHECK(ball.max_violation(f.x) <= 1e-6);

  SolverOptions starved;
  starved.max_iterations = 1;
  std::mt19937_64 seed_rng(2);
  const ConicProgram hard = oracle::random_socp(seed_rng);
  CHECK(solve_relaxation(hard, nullptr, nullptr, nullptr, starved).status != RelaxStatus::Infeasible);

  SECTION("random programs agree with dense sampling") {
    std::mt19937_64 rng(21);
    int decided = 0;
    while (decided < 50) {
      const ConicProgram p = oracle::random_socp(rng);
      const auto truth = oracle::sampled_feasibility(p, 200, 0.03);
      if (!truth) continue;
      ++decided;
      const auto res = solve_relaxation(p);
      CHECK(res.status == (*truth ? RelaxStatus::Feasible : RelaxStatus::Infeasible));
      if (res.status == RelaxStatus::Feasible) CHECK(p.max_violation(res.x) <= 1e-6);
      if (res.status == RelaxStatus::Infeasible) CHECK(res.certificate.violation >= 1e-7);
    }
  }
}

TEST_CASE("mixed-integer feasibility search", "[micp]") {
  ConicProgram mid;
  std::vector<int> lam{mid.add_variable("a"), mid.add_variable("b"), mid.add_variable("c")};
  mid.add_sos2_log(lam);
  mid.add_linear({{lam[1], 1.0}}, Sense::Ge, 0.6);
  mid.add_linear({{lam[2], 1.0}}, Sense::Ge, 0.3);
  const auto r = solve_micp(mid);
  REQUIRE(r.status == MicpStatus::Feasible);
  const int z = mid.binaries()[0];
  const auto [lb, ub] = fixed_bounds(mid, 1 - int(std::lround(r.x[z])));
  CHECK(solve_relaxation(mid, &lb, &ub).status == RelaxStatus::Infeasible);
  CHECK(mid.max_violation(r.x) <= 1e-6);
  CHECK(mid.integrality_violation(r.x) == 0.0);

  ConicProgram clash;
  const int bvar = clash.add_binary("b");
  const int y = clash.add_variable("y", 0.0, 1.0);
  clash.add_linear({{bvar, 1.0}, {y, 1.0}}, Sense::Ge, 1.5);
  clash.add_linear({{bvar, 1.0}, {y, -1.0}}, Sense::Le, -0.5);
  CHECK(solve_micp(clash).status == MicpStatus::Infeasible);

  ConicProgram both;
  const int c = both.add_binary("c");
  both.add_linear({{c, 1.0}}, Sense::Eq, 0.0);
  both.add_linear({{c, 1.0}}, Sense::Eq, 1.0);
  CHECK(solve_micp(both).status == MicpStatus::Infeasible);

  SECTION("verdicts match enumeration, with and without warm start") {
    std::mt19937_64 rng(33);
    int feasible = 0;
    for (int trial = 0; trial < 30; ++trial) {
      const ConicProgram p = oracle::random_micp(rng);
      REQUIRE(p.count_binaries() <= 12);
      const bool truth = oracle::enumerate_binaries(p);
      const auto cold = solve_micp(p);
      CHECK(cold.status == (truth ? MicpStatus::Feasible : MicpStatus::Infeasible));
      if (cold.status == MicpStatus::Feasible) {
        ++feasible;
        CHECK(p.max_violation(cold.x) <= 1e-6);
        WarmStart ws;
        ws.point = cold.x;
        CHECK(solve_micp(p, &ws).status == MicpStatus::Feasible);
      }
    }
    CHECK(feasible > 0);
    CHECK(feasible < 30);
  }

  SECTION("budget exhaustion is its own status") {
    ConicProgram p;
    std::vector<int> l;
    for (int j = 0; j < 9; ++j) l.push_back(p.add_variable("l" + std::to_string(j)));
    p.add_sos2_log(l);
    for (int j = 0; j < 9; ++j) p.add_linear({{l[j], 1.0}}, Sense::Le, 0.3);
    MicpOptions opt;
    opt.node_budget = 1;
    const auto res = solve_micp(p, nullptr, opt);
    CHECK(res.status == MicpStatus::BudgetExceeded);
    CHECK(solve_micp(p).status == MicpStatus::Infeasible);
  }

  SECTION("trace lines") {
    std::ostringstream log;
    MicpOptions opt;
    opt.trace = &log;
    solve_micp(mid, nullptr, opt);
    CHECK(!log.str().empty());
  }
}
