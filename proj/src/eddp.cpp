#include "mssp/eddp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "mssp/lp.hpp"
#include "mssp/oracle.hpp"

namespace mssp {

namespace {

double dist_to(const std::vector<Vector>& pts, const Vector& x) {
  if (pts.empty()) return kInf;
  double best = kInf;
  for (const Vector& p : pts) best = std::min(best, (x - p).norm());
  return best;
}

lp::StageSolution solve_stage_at(const MultistageProblem& p, int t,
                                 const StageRealization& re,
                                 const CutPool* pool, const Vector& x_prev) {
  lp::LpProblem prob;
  prob.c = re.c;
  prob.A = re.A;
  prob.b = re.b;
  prob.lower = p.stages[t].lower;
  prob.upper = p.stages[t].upper;
  if (pool) {
    auto sol = lp::solve_with_cuts(prob, *pool, re.B, x_prev);
    if (sol.status != lp::LpStatus::Optimal)
      throw std::runtime_error("stage subproblem infeasible during search");
    return sol;
  }
  if (re.B.size() > 0) prob.b -= re.B * x_prev;
  auto raw = lp::solve(prob);
  if (raw.status != lp::LpStatus::Optimal)
    throw std::runtime_error("stage subproblem infeasible during search");
  lp::StageSolution sol;
  sol.status = raw.status;
  sol.value = raw.value;
  sol.x = raw.x;
  sol.duals = raw.duals;
  return sol;
}

}  // namespace

double SaturatedSet::dist(int t, const Vector& x) const {
  return dist_to(points[t], x);
}

std::pair<int, double> explorative_select(
    const std::vector<Vector>& candidates,
    const std::vector<Vector>& saturated) {
  if (candidates.empty())
    throw std::invalid_argument("no candidates to select from");
  int best = 0;
  double best_dist = dist_to(saturated, candidates[0]);
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    double d = dist_to(saturated, candidates[i]);
    if (d > best_dist) {
      best_dist = d;
      best = static_cast<int>(i);
    }
  }
  return {best, best_dist};
}

bool saturation_update(SaturatedSet& sat, int t, const Vector& x,
                       double gap) {
  if (gap > sat.eps_t[t]) return false;
  if (dist_to(sat.points[t], x) <= sat.delta_t[t]) return false;
  sat.points[t].push_back(x);
  sat.gaps[t].push_back(gap);
  return true;
}

EddpResult run_eddp(const MultistageProblem& p, const EddpConfig& config) {
  auto errs = validate(p);
  if (!errs.empty())
    throw std::invalid_argument("invalid problem: " + errs.front());
  if (p.dependence != Dependence::StagewiseIndependent)
    throw std::invalid_argument(
        "explorative search requires stagewise independence");
  const int T = p.horizon;
  for (int t = 0; t + 1 < T; ++t)
    for (int j = 0; j < p.stages[t].num_vars(); ++j)
      if (!std::isfinite(p.stages[t].lower[j]) ||
          !std::isfinite(p.stages[t].upper[j]))
        throw std::invalid_argument(
            "explorative search needs bounded linking-stage boxes");

  const double eps = config.epsilon;
  const double delta = config.delta < 0.0 ? eps : config.delta;
  SddpConfig scfg;
  scfg.floor_value = config.floor_value;

  EddpResult result;
  result.state = init_state(p, scfg);
  SolveState& state = result.state;
  SaturatedSet& sat = result.saturated;
  sat.points.resize(T - 1);
  sat.gaps.resize(T - 1);
  sat.eps_t.assign(T - 1, eps);
  sat.delta_t.assign(T - 1, delta);

  double diameter = config.diameter;
  int dimension = config.dimension;
  if (diameter < 0.0 || dimension < 0) {
    double d_max = 0.0;
    int n_max = 0;
    for (int t = 0; t + 1 < T; ++t) {
      d_max = std::max(
          d_max, (p.stages[t].upper - p.stages[t].lower).norm());
      n_max = std::max(n_max, p.stages[t].num_vars());
    }
    if (diameter < 0.0) diameter = d_max;
    if (dimension < 0) dimension = n_max;
  }
  result.iteration_bound = (T - 1) * std::pow(diameter / eps + 1.0, dimension);

  std::string stop = "iteration-cap";
  int k = 0;
  for (k = 1; k <= config.max_iterations; ++k) {
    state.iteration = k;
    const CutPool* root_pool = (T > 1) ? &state.pool(0, 0) : nullptr;
    auto first = solve_stage_at(p, 0, p.stages[0].realizations[0], root_pool,
                                Vector(0));
    result.first_stage = first.x;
    if (sat.dist(0, first.x) <= delta) {
      stop = "saturation";
      break;
    }
    std::vector<Vector> trial{first.x};
    for (int t = 1; t + 1 < T; ++t) {
      std::vector<Vector> candidates;
      const CutPool* pool = &state.pool(t, 0);
      for (const StageRealization& re : p.stages[t].realizations)
        candidates.push_back(
            solve_stage_at(p, t, re, pool, trial[t - 1]).x);
      auto [idx, d] = explorative_select(candidates, sat.points[t]);
      if (config.early_stop && d <= sat.delta_t[t]) break;
      trial.push_back(candidates[idx]);
    }

    const int len = static_cast<int>(trial.size());
    std::vector<double> pre(len);
    for (int t = 1; t <= len; ++t)
      pre[t - 1] = state.pool(t - 1, 0).evaluate(trial[t - 1]).first;
    backward_pass(p, scfg, state, trial, std::vector<int>(len, 0));
    for (int t = 1; t <= len; ++t) {
      double post = state.pool(t - 1, 0).evaluate(trial[t - 1]).first;
      saturation_update(sat, t - 1, trial[t - 1],
                        std::max(0.0, post - pre[t - 1]));
    }
  }

  result.stop_rule = stop;
  result.iterations = std::min(k, config.max_iterations);
  {
    const CutPool* root_pool = (T > 1) ? &state.pool(0, 0) : nullptr;
    auto first = solve_stage_at(p, 0, p.stages[0].realizations[0], root_pool,
                                Vector(0));
    result.first_stage = first.x;
    result.lower_bound = first.value;
  }
  for (const auto& stage_pools : state.pools)
    for (const CutPool& pool : stage_pools)
      for (const Cut& cut : pool.cuts())
        result.m_hat = std::max(result.m_hat, cut.gradient.norm());
  result.gap_bound = 2.0 * result.m_hat * (T - 1) * eps;

  // Exact value of committing to the returned first-stage decision.
  try {
    MultistageProblem pinned = p;
    pinned.stages[0].lower = result.first_stage;
    pinned.stages[0].upper = result.first_stage;
    result.policy_value = oracle::extensive_solve(pinned).value;
    result.gap = result.policy_value - result.lower_bound;
  } catch (const std::exception&) {
    result.policy_value = std::numeric_limits<double>::quiet_NaN();
    result.gap = std::numeric_limits<double>::quiet_NaN();
  }
  return result;
}

void dump_saturated(std::ostream& out, const SaturatedSet& sat) {
  for (std::size_t t = 0; t < sat.points.size(); ++t)
    for (std::size_t i = 0; i < sat.points[t].size(); ++i) {
      out << t << ' ' << sat.gaps[t][i];
      for (int j = 0; j < sat.points[t][i].size(); ++j)
        out << ' ' << sat.points[t][i][j];
      out << '\n';
    }
}

}  // namespace mssp
