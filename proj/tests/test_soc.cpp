#include <cmath>
#include <functional>

#include "doctest.h"
#include "fixtures.hpp"
#include "mssp/risk.hpp"
#include "mssp/soc.hpp"

using namespace mssp;
using testutil::mat1;
using testutil::vec1;

namespace {

SocConfig quiet_cfg(std::uint64_t seed = 1) {
  SocConfig cfg;
  cfg.seed = seed;
  cfg.stabilization_window = 0;
  return cfg;
}

// Nested brute force over a control grid for scalar chains.
double grid_value(const SocProblem& p, int t, double x, double step) {
  const SocStage& stage = p.stages[t];
  double lo = stage.u_lower[0], hi = stage.u_upper[0];
  double best = kInf;
  for (double u = lo; u <= hi + 1e-12; u += step) {
    Vector uu = vec1(u);
    double total = 0.0;
    for (const SocRealization& re : stage.realizations) {
      Vector xx = vec1(x);
      double next_x = (re.A * xx + re.B * uu + re.b)[0];
      double tail = (t + 1 < p.horizon)
                        ? grid_value(p, t + 1, next_x, step)
                        : terminal_cost_value(p, vec1(next_x));
      total += re.p * (stage_cost_value(re, xx, uu) + tail);
    }
    best = std::min(best, total);
  }
  return best;
}

}  // namespace

TEST_CASE("one-control-stage newsvendor is exact at initialization") {
  auto p = testutil::soc_newsvendor();
  REQUIRE(validate_soc(p).empty());
  auto cfg = quiet_cfg();
  auto state = init_soc_state(p, cfg);
  CHECK(soc_lower_bound(p, cfg, state) ==
        doctest::Approx(testutil::kNewsvendorOptimum).epsilon(1e-9));
  auto sol = soc_stage_solve(p, cfg, state, 0, p.x1);
  CHECK(sol.u[0] == doctest::Approx(1.0));
}

TEST_CASE("zero dynamics and zero cost produce only zero value") {
  SocProblem p;
  p.horizon = 2;
  p.x1 = vec1(1.0);
  p.stages.resize(2);
  for (int t = 0; t < 2; ++t) {
    p.stages[t].u_lower = vec1(0.0);
    p.stages[t].u_upper = vec1(1.0);
    SocRealization re;
    re.A = mat1(0.0);
    re.B = mat1(0.0);
    re.b = vec1(0.0);
    p.stages[t].realizations.push_back(re);
  }
  auto cfg = quiet_cfg();
  cfg.max_iterations = 5;
  auto r = run_soc(p, cfg);
  CHECK(r.lower_bound == 0.0);
  for (const CutPool& pool : r.state.pools) {
    CHECK(pool.size() == 1);
    CHECK(pool.cuts()[0].intercept == 0.0);
  }
}

TEST_CASE("deterministic chain reaches the hand-computed value") {
  auto p = testutil::soc_scalar_chain(false);
  auto cfg = quiet_cfg();
  cfg.max_iterations = 60;
  auto r = run_soc(p, cfg);
  CHECK(r.lower_bound == doctest::Approx(2.5).epsilon(1e-9));
}

TEST_CASE("stochastic chain converges to the grid oracle") {
  auto p = testutil::soc_scalar_chain(true);
  auto cfg = quiet_cfg(3);
  cfg.max_iterations = 120;
  auto r = run_soc(p, cfg);
  double oracle = grid_value(p, 0, p.x1[0], 1e-3);
  CHECK(r.lower_bound <= oracle + 1e-7);
  CHECK(r.lower_bound >= oracle - 5e-3);
}

TEST_CASE("stage value stays below the grid oracle everywhere") {
  auto p = testutil::soc_scalar_chain(true);
  auto cfg = quiet_cfg(5);
  cfg.max_iterations = 60;
  auto r = run_soc(p, cfg);
  for (double x = -1.0; x <= 2.0; x += 0.25) {
    double approx = soc_stage_solve(p, cfg, r.state, 1, vec1(x)).value;
    double truth = grid_value(p, 1, x, 1e-4);
    CHECK(approx <= truth + 1e-6);
  }
}

TEST_CASE("stage subgradient matches central finite differences") {
  auto p = testutil::soc_scalar_chain(true);
  auto cfg = quiet_cfg(7);
  cfg.max_iterations = 40;
  auto r = run_soc(p, cfg);
  const double h = 1e-5;
  RngStream rng(99, "fd-probe");
  int checked = 0;
  for (int probe = 0; probe < 20; ++probe) {
    double x = -1.0 + 3.0 * rng.uniform();
    auto f = [&](double v) {
      return soc_stage_solve(p, cfg, r.state, 1, vec1(v)).value;
    };
    double fwd = (f(x + h) - f(x)) / h;
    double bwd = (f(x) - f(x - h)) / h;
    if (std::abs(fwd - bwd) > 1e-6) continue;  // kink, skip
    double g = soc_stage_solve(p, cfg, r.state, 1, vec1(x)).gradient[0];
    CHECK(g == doctest::Approx((f(x + h) - f(x - h)) / (2 * h)).epsilon(1e-4));
    ++checked;
  }
  CHECK(checked >= 10);
}

TEST_CASE("forward pass is seed deterministic") {
  auto p = testutil::soc_scalar_chain(true);
  auto cfg = quiet_cfg();
  auto state = init_soc_state(p, cfg);
  RngStream a(42, "soc-forward-path", 0), b(42, "soc-forward-path", 0);
  auto fa = soc_forward(p, cfg, state, a);
  auto fb = soc_forward(p, cfg, state, b);
  CHECK(fa.path == fb.path);
  CHECK(fa.cost == fb.cost);
}

TEST_CASE("identity risk form delegates to the risk-neutral solve") {
  auto p = testutil::soc_scalar_chain(true);
  auto cfg = quiet_cfg(11);
  cfg.max_iterations = 30;
  auto r = run_soc(p, cfg);
  PsiForm id;
  for (double x : {-0.5, 0.0, 0.8}) {
    auto a = soc_stage_solve(p, cfg, r.state, 1, vec1(x));
    auto b = risk_soc_stage_solve(p, cfg, id, r.state, 1, vec1(x));
    CHECK(a.value == b.value);
    CHECK(a.gradient[0] == b.gradient[0]);
  }
}

TEST_CASE("risk stage solve matches exhaustive control search") {
  auto p = testutil::soc_scalar_chain(true);
  PsiForm psi{0.4, 0.7};
  auto cfg = quiet_cfg(13);
  cfg.max_iterations = 40;
  auto r = run_risk_soc(p, cfg, psi);
  CoherentRisk risk = CoherentRisk::combo(psi.lambda, psi.alpha);
  for (double x : {-0.5, 0.3, 1.2}) {
    auto sol = risk_soc_stage_solve(p, cfg, psi, r.state, 1, vec1(x));
    // theta is exact at an atom, so only the control needs a grid.
    double best = kInf;
    for (double u = 0.0; u <= 2.0 + 1e-12; u += 5e-4) {
      std::vector<double> ys, probs;
      for (const SocRealization& re : p.stages[1].realizations) {
        double next = x + u + re.b[0];
        ys.push_back(stage_cost_value(re, vec1(x), vec1(u)) +
                     r.state.pools[1].evaluate(vec1(next)).first);
        probs.push_back(re.p);
      }
      best = std::min(best, risk_evaluate(risk, ys, probs));
    }
    CHECK(sol.value == doctest::Approx(best).epsilon(1e-3));
  }
}

TEST_CASE("psi recursion upper bound collapses to path cost under identity") {
  auto p = testutil::soc_scalar_chain(true);
  auto cfg = quiet_cfg(17);
  cfg.max_iterations = 40;
  auto r = run_soc(p, cfg);
  PsiForm id;
  for (int i = 0; i < 20; ++i) {
    RngStream rng(cfg.seed, "risk-upper-path", i);
    auto fr = soc_forward(p, cfg, r.state, rng);
    double v = terminal_cost_value(p, fr.states.back());
    for (int t = p.horizon - 1; t >= 0; --t)
      v = id.value(fr.stage_costs[t] + v, fr.thetas[t]);
    CHECK(v == doctest::Approx(fr.cost).epsilon(1e-12));
  }
  auto report = risk_upper_bound(p, cfg, id, r.state, 200, 2.0);
  CHECK(report.edge >= r.lower_bound - 1e-9);
}

TEST_CASE("risk upper bound dominates the exact nested policy value") {
  auto p = testutil::soc_scalar_chain(true);
  PsiForm psi{0.5, 0.5};
  auto cfg = quiet_cfg(19);
  cfg.max_iterations = 60;
  auto r = run_risk_soc(p, cfg, psi);
  CoherentRisk risk = CoherentRisk::combo(psi.lambda, psi.alpha);

  // Exact nested value of the converged policy by tree recursion.
  std::function<double(int, double)> policy_value = [&](int t, double x) {
    if (t == p.horizon) return terminal_cost_value(p, vec1(x));
    auto sol = risk_soc_stage_solve(p, cfg, psi, r.state, t, vec1(x));
    std::vector<double> vals, probs;
    for (const SocRealization& re : p.stages[t].realizations) {
      double next = x + sol.u[0] + re.b[0];
      vals.push_back(stage_cost_value(re, vec1(x), sol.u) +
                     policy_value(t + 1, next));
      probs.push_back(re.p);
    }
    return risk_evaluate(risk, vals, probs);
  };
  double nested = policy_value(0, p.x1[0]);
  auto report = risk_upper_bound(p, cfg, psi, r.state, 500, 2.0);
  CHECK(report.mean >= nested - 3.0 * report.std_error);
  CHECK(r.lower_bound <= nested + 1e-7);
}

TEST_CASE("q-factor run agrees with the value-function run") {
  auto cfg = quiet_cfg(23);
  cfg.max_iterations = 150;
  SUBCASE("single control stage") {
    auto p = testutil::soc_newsvendor();
    auto r = run_qfactor(p, cfg);
    CHECK(r.lower_bound ==
          doctest::Approx(testutil::kNewsvendorOptimum).epsilon(1e-5));
  }
  SUBCASE("two stages") {
    auto p = testutil::soc_scalar_chain(true);
    auto rq = run_qfactor(p, cfg);
    auto rv = run_soc(p, cfg);
    CHECK(rq.lower_bound == doctest::Approx(rv.lower_bound).epsilon(1e-4));
    CHECK(rq.lower_bound <= grid_value(p, 0, p.x1[0], 1e-3) + 1e-6);
  }
}

TEST_CASE("q-factor approximation lower-bounds the grid action values") {
  auto p = testutil::soc_scalar_chain(false);
  auto cfg = quiet_cfg(29);
  cfg.max_iterations = 60;
  auto r = run_qfactor(p, cfg);
  for (double x = -0.5; x <= 1.5; x += 0.5)
    for (double u = 0.0; u <= 2.0; u += 0.5) {
      Vector joint(2);
      joint << x, u;
      double approx = r.state.pools[0].evaluate(joint).first;
      // True Q: stage cost plus next stage's grid value.
      const SocRealization& re = p.stages[0].realizations[0];
      double truth = stage_cost_value(re, vec1(x), vec1(u)) +
                     grid_value(p, 1, x + u + re.b[0], 1e-4);
      CHECK(approx <= truth + 1e-6);
    }
}

TEST_CASE("validation reports malformed problems") {
  auto p = testutil::soc_newsvendor();
  p.stages[0].realizations[0].p = 0.6;
  auto errs = validate_soc(p);
  REQUIRE(!errs.empty());
  CHECK(errs.front().find("probability sum") != std::string::npos);
  auto q = testutil::soc_newsvendor();
  q.terminal_cost[0].wx = Vector(2);
  CHECK(!validate_soc(q).empty());
}

TEST_CASE("unbounded control box is refused at solve time") {
  auto p = testutil::soc_newsvendor();
  p.stages[0].u_upper = vec1(kInf);
  // Make ordering profitable so the LP is actually unbounded.
  p.stages[0].realizations[0].cost[0].wu = vec1(-3.0);
  p.stages[0].realizations[1].cost[0].wu = vec1(-3.0);
  auto cfg = quiet_cfg();
  auto state = init_soc_state(p, cfg);
  CHECK_THROWS_WITH_AS(soc_stage_solve(p, cfg, state, 0, p.x1),
                       doctest::Contains("unbounded"), std::runtime_error);
}
