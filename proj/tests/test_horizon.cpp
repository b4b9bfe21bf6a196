#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "fixtures.hpp"
#include "mssp/horizon.hpp"

using namespace mssp;
using testutil::mat1;
using testutil::vec1;

namespace {

// Single realization, constant cost 1, contracting state; V = 1/(1-gamma).
StationaryProblem constant_cost_toy() {
  StationaryProblem p;
  p.gamma = 0.9;
  p.x1 = vec1(1.0);
  p.x_lower = vec1(0.0);
  p.x_upper = vec1(1.0);
  p.blocks.resize(1);
  p.blocks[0].u_lower = vec1(0.0);
  p.blocks[0].u_upper = vec1(0.0);
  SocRealization re;
  re.A = mat1(0.5);
  re.B = mat1(0.0);
  re.b = vec1(0.0);
  AffinePiece one;
  one.wx = vec1(0.0);
  one.wu = vec1(0.0);
  one.w0 = 1.0;
  re.cost.push_back(one);
  p.blocks[0].realizations.push_back(re);
  return p;
}

// x' = 0.3 x + u + w, w in {0, 0.1}; cost max(x+u, 2-x-u).
StationaryProblem scalar_stochastic() {
  StationaryProblem p;
  p.gamma = 0.8;
  p.x1 = vec1(0.2);
  p.x_lower = vec1(0.0);
  p.x_upper = vec1(1.0);
  p.blocks.resize(1);
  p.blocks[0].u_lower = vec1(0.0);
  p.blocks[0].u_upper = vec1(0.4);
  AffinePiece up;
  up.wx = vec1(1.0);
  up.wu = vec1(1.0);
  AffinePiece down;
  down.wx = vec1(-1.0);
  down.wu = vec1(-1.0);
  down.w0 = 2.0;
  for (double w : {0.0, 0.1}) {
    SocRealization re;
    re.p = 0.5;
    re.A = mat1(0.3);
    re.B = mat1(1.0);
    re.b = vec1(w);
    re.cost = {up, down};
    p.blocks[0].realizations.push_back(re);
  }
  return p;
}

}  // namespace

TEST_CASE("truncation horizon: pinned examples") {
  CHECK(truncation_horizon(0.9, 1.0, 0.01) == 66);
  CHECK(truncation_horizon(0.1, 1.0, 0.1) == 2);
  CHECK(truncation_horizon(0.5, 1.0, 2.0) == 0);    // tail already <= eps
  CHECK(truncation_horizon(0.5, 0.0, 1e-9) == 0);   // zero cost
  CHECK_THROWS_AS(truncation_horizon(0.9, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("truncation horizon: minimal T against direct search") {
  RngStream rng(3, "truncation-triples", 0);
  for (int i = 0; i < 1000; ++i) {
    double gamma = 0.01 + 0.98 * rng.uniform();
    double kappa = 10.0 * rng.uniform();
    double eps = 1e-3 + 5.0 * rng.uniform();
    int T = truncation_horizon(gamma, kappa, eps);
    auto tail = [&](int t) {
      return kappa * std::pow(gamma, t) / (1.0 - gamma);
    };
    int direct = 0;
    while (tail(direct) > eps) ++direct;
    CHECK(T == direct);
  }
}

TEST_CASE("zero cost: flat pools and zero bounds") {
  StationaryProblem p = constant_cost_toy();
  p.blocks[0].realizations[0].cost.clear();
  StationaryConfig cfg;
  cfg.max_iterations = 30;
  StationaryResult r = stationary_solve(p, cfg);
  CHECK(r.kappa == 0.0);
  CHECK(r.truncation == 0);
  CHECK(r.lower_bound == 0.0);
  RngStream rng(0, "stationary-forward-path", 0);
  CHECK(truncated_forward(p, r.pools, 5, rng).cost == 0.0);
}

TEST_CASE("constant cost toy converges to the geometric series") {
  StationaryProblem p = constant_cost_toy();
  StationaryConfig cfg;
  cfg.epsilon = 1e-2;
  StationaryResult r = stationary_solve(p, cfg);
  CHECK(r.kappa == doctest::Approx(1.0));
  CHECK(r.lower_bound <= 10.0 + 1e-9);
  CHECK(r.lower_bound == doctest::Approx(10.0).epsilon(1e-4));
  for (std::size_t i = 1; i < r.lb_history.size(); ++i)
    CHECK(r.lb_history[i] >= r.lb_history[i - 1] - 1e-9);
  CHECK(r.lb_history.back() <= r.kappa / (1.0 - p.gamma) + 1e-9);

  RngStream rng(0, "stationary-forward-path", 0);
  TruncatedPath path = truncated_forward(p, r.pools, r.truncation, rng);
  double closed = (1.0 - std::pow(p.gamma, r.truncation)) / (1.0 - p.gamma);
  CHECK(path.cost == doctest::Approx(closed).epsilon(1e-12));
  CHECK(std::abs(path.cost - 10.0) <= cfg.epsilon + 1e-12);
}

TEST_CASE("zero discount: cut is the exact single-stage linearization") {
  StationaryProblem p = constant_cost_toy();
  p.gamma = 0.0;
  p.blocks[0].realizations[0].cost[0].wx = vec1(2.0);
  std::vector<CutPool> pools;
  pools.emplace_back(0, 1, 0.0);
  stationary_backward(p, pools, 0, vec1(1.0));
  const Cut& cut = pools[0].cuts().back();
  CHECK(cut.gradient[0] == doctest::Approx(2.0));
  CHECK(cut.intercept == doctest::Approx(1.0));
}

TEST_CASE("scalar stochastic fixture matches grid value iteration") {
  StationaryProblem p = scalar_stochastic();
  StationaryConfig cfg;
  cfg.epsilon = 1e-2;
  cfg.max_iterations = 150;
  StationaryResult r = stationary_solve(p, cfg);

  std::vector<double> grid(401);
  for (int i = 0; i < 401; ++i) grid[i] = i / 400.0;
  std::vector<double> V = grid_value_iteration(p, grid, 201);

  // minorant on the grid, convergence at the initial state
  for (int i = 0; i < 401; ++i)
    CHECK(r.pools[0].evaluate(vec1(grid[i])).first <= V[i] + 0.02);
  int i1 = static_cast<int>(std::lround(p.x1[0] * 400.0));
  CHECK(r.lower_bound <= V[i1] + 0.02);
  CHECK(r.lower_bound == doctest::Approx(V[i1]).epsilon(0.02));

  for (std::size_t i = 1; i < r.lb_history.size(); ++i)
    CHECK(r.lb_history[i] >= r.lb_history[i - 1] - 1e-9);
  CHECK(r.lower_bound <= r.kappa / (1.0 - p.gamma) + 1e-9);
}

TEST_CASE("single-phase periodic run is bit-identical to stationary") {
  StationaryProblem p = scalar_stochastic();
  StationaryConfig cfg;
  cfg.max_iterations = 40;
  cfg.epsilon = 5e-2;
  StationaryResult a = stationary_solve(p, cfg);
  StationaryResult b = periodic_solve(p, cfg);
  REQUIRE(a.lb_history.size() == b.lb_history.size());
  for (std::size_t i = 0; i < a.lb_history.size(); ++i)
    CHECK(a.lb_history[i] == b.lb_history[i]);
  REQUIRE(a.pools[0].size() == b.pools[0].size());
  for (std::size_t i = 0; i < a.pools[0].size(); ++i) {
    CHECK(a.pools[0].cuts()[i].intercept == b.pools[0].cuts()[i].intercept);
    CHECK((a.pools[0].cuts()[i].gradient - b.pools[0].cuts()[i].gradient)
              .norm() == 0.0);
  }
}

TEST_CASE("two identical phases converge to one function") {
  StationaryProblem p = scalar_stochastic();
  p.blocks.push_back(p.blocks[0]);
  StationaryConfig cfg;
  cfg.epsilon = 1e-2;
  cfg.max_iterations = 150;
  StationaryResult r = periodic_solve(p, cfg);
  for (double x : {0.0, 0.2, 0.4, 0.6, 0.8}) {
    double v0 = stationary_stage_solve(p, r.pools, 0, vec1(x)).value;
    double v1 = stationary_stage_solve(p, r.pools, 1, vec1(x)).value;
    CHECK(v0 == doctest::Approx(v1).epsilon(5e-3));
  }
}

TEST_CASE("alternating constant costs match the geometric closed form") {
  StationaryProblem p;
  p.gamma = 0.9;
  p.x1 = vec1(0.0);
  p.x_lower = vec1(0.0);
  p.x_upper = vec1(1.0);
  p.blocks.resize(2);
  for (int k = 0; k < 2; ++k) {
    p.blocks[k].u_lower = vec1(0.0);
    p.blocks[k].u_upper = vec1(0.0);
    SocRealization re;
    re.A = mat1(0.0);
    re.B = mat1(0.0);
    re.b = vec1(0.0);
    if (k == 1) {
      AffinePiece one;
      one.wx = vec1(0.0);
      one.wu = vec1(0.0);
      one.w0 = 1.0;
      re.cost.push_back(one);
    }
    p.blocks[k].realizations.push_back(re);
  }
  StationaryConfig cfg;
  cfg.epsilon = 1e-3;
  StationaryResult r = periodic_solve(p, cfg);
  double g = p.gamma;
  double v1 = 1.0 / (1.0 - g * g);  // cost phase first
  double v0 = g * v1;               // free phase first
  CHECK(stationary_stage_solve(p, r.pools, 0, p.x1).value ==
        doctest::Approx(v0).epsilon(1e-4));
  CHECK(stationary_stage_solve(p, r.pools, 1, p.x1).value ==
        doctest::Approx(v1).epsilon(1e-4));
  CHECK(r.lower_bound == doctest::Approx(v0).epsilon(1e-4));
}

TEST_CASE("truncated forward is seed deterministic") {
  StationaryProblem p = scalar_stochastic();
  StationaryConfig cfg;
  cfg.max_iterations = 20;
  StationaryResult r = stationary_solve(p, cfg);
  RngStream a(5, "stationary-forward-path", 0);
  RngStream b(5, "stationary-forward-path", 0);
  TruncatedPath pa = truncated_forward(p, r.pools, 10, a);
  TruncatedPath pb = truncated_forward(p, r.pools, 10, b);
  CHECK(pa.cost == pb.cost);
  CHECK(pa.path == pb.path);
}

TEST_CASE("cost bound estimation and validation") {
  StationaryProblem p = constant_cost_toy();
  CHECK(stage_cost_bound(p) == doctest::Approx(1.0));
  StationaryProblem q = scalar_stochastic();
  CHECK(stage_cost_bound(q) == doctest::Approx(2.0));  // max at x=u=0
  q.kappa = 0.1;
  CHECK_THROWS_WITH_AS(periodic_solve(q, StationaryConfig{}),
                       doctest::Contains("kappa"), std::invalid_argument);
  q.kappa = 2.5;
  CHECK(validate_stationary(q).empty());
}

TEST_CASE("statistical upper edge covers the lower bound") {
  StationaryProblem p = scalar_stochastic();
  StationaryConfig cfg;
  cfg.epsilon = 5e-2;
  cfg.max_iterations = 60;
  cfg.upper_bound_paths = 50;
  StationaryResult r = stationary_solve(p, cfg);
  CHECK(r.upper.paths == 50);
  CHECK(r.upper.edge >= r.lower_bound - 1e-9);
}
