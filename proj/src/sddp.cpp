#include "mssp/sddp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mssp {

namespace {

// Successors of lattice node `node` at stage t: realizations of stage t+1
// with their probabilities and the pool node they evaluate against.
struct ChildSet {
  std::vector<double> probs;
  std::vector<const StageRealization*> data;
  std::vector<int> node;
};

ChildSet children_of(const MultistageProblem& p, int t, int node) {
  ChildSet out;
  if (p.dependence == Dependence::MarkovChain) {
    const Matrix& P = p.lattice->transitions[t];
    for (int j = 0; j < P.cols(); ++j) {
      if (P(node, j) <= 0.0) continue;
      out.probs.push_back(P(node, j));
      out.data.push_back(&p.lattice->nodes[t + 1][j].data);
      out.node.push_back(j);
    }
  } else {
    for (const StageRealization& re : p.stages[t + 1].realizations) {
      out.probs.push_back(re.p);
      out.data.push_back(&re);
      out.node.push_back(0);
    }
  }
  return out;
}

int node_count_at(const MultistageProblem& p, int t) {
  if (p.dependence == Dependence::MarkovChain)
    return static_cast<int>(p.lattice->nodes[t].size());
  return 1;
}

const StageRealization& root_data(const MultistageProblem& p) {
  if (p.dependence == Dependence::MarkovChain)
    return p.lattice->nodes[0][0].data;
  return p.stages[0].realizations[0];
}

[[noreturn]] void infeasible_stage(int t, int realization, const Vector& x_prev) {
  std::ostringstream s;
  s << "stage " << t + 1 << " realization " << realization
    << " infeasible at trial point [";
  for (int i = 0; i < x_prev.size(); ++i)
    s << (i ? ", " : "") << x_prev[i];
  s << "]; relatively complete recourse violated";
  throw std::runtime_error(s.str());
}

lp::LpProblem stage_lp(const MultistageProblem& p, int t,
                       const StageRealization& re) {
  lp::LpProblem out;
  out.c = re.c;
  out.A = re.A;
  out.b = re.b;
  out.lower = p.stages[t].lower;
  out.upper = p.stages[t].upper;
  return out;
}

// Stage solve with the linking term folded into the rhs; `pool` is null at
// the terminal stage.
lp::StageSolution solve_stage(const MultistageProblem& p, int t,
                              const StageRealization& re, int realization_tag,
                              const CutPool* pool, const Vector& x_prev) {
  lp::LpProblem prob = stage_lp(p, t, re);
  if (pool) {
    auto sol = lp::solve_with_cuts(prob, *pool, re.B, x_prev);
    if (sol.status != lp::LpStatus::Optimal)
      infeasible_stage(t, realization_tag, x_prev);
    return sol;
  }
  if (re.B.size() > 0) prob.b -= re.B * x_prev;
  auto raw = lp::solve(prob);
  if (raw.status != lp::LpStatus::Optimal)
    infeasible_stage(t, realization_tag, x_prev);
  lp::StageSolution sol;
  sol.status = raw.status;
  sol.value = raw.value;
  sol.x = raw.x;
  sol.theta = 0.0;
  sol.duals = raw.duals;
  return sol;
}

}  // namespace

SolveState init_state(const MultistageProblem& p, const SddpConfig& config) {
  SolveState state;
  state.pools.resize(p.horizon - 1);
  for (int t = 0; t + 1 < p.horizon; ++t) {
    int nodes = node_count_at(p, t);
    for (int i = 0; i < nodes; ++i)
      state.pools[t].emplace_back(t, p.stages[t].num_vars(),
                                  config.floor_value, i);
  }
  return state;
}

ForwardResult forward_pass(const MultistageProblem& p, const SddpConfig&,
                           const SolveState& state, RngStream& rng) {
  const int T = p.horizon;
  ForwardResult out;
  Vector x_prev;
  int node = 0;
  int realization = 0;
  const StageRealization* re = &root_data(p);
  for (int t = 0; t < T; ++t) {
    const CutPool* pool = (t + 1 < T) ? &state.pool(t, node) : nullptr;
    auto sol = solve_stage(p, t, *re, node, pool, x_prev);
    out.states.push_back(sol.x);
    out.node_path.push_back(node);
    out.realization_path.push_back(realization);
    out.stage_duals.push_back(sol.duals);
    out.cost += re->c.dot(sol.x);
    x_prev = sol.x;
    if (t + 1 < T) {
      ChildSet kids = children_of(p, t, node);
      int k = rng.sample_index(kids.probs);
      node = kids.node[k];
      realization = k;
      re = kids.data[k];
    }
  }
  return out;
}

void backward_pass(const MultistageProblem& p, const SddpConfig& config,
                   SolveState& state, const std::vector<Vector>& trial_points,
                   const std::vector<int>& node_path) {
  const int T = p.horizon;
  // Accepts truncated trial lists (fewer than T-1 states).
  const int tmax = std::min(T - 1, static_cast<int>(trial_points.size()));
  for (int t = tmax; t >= 1; --t) {
    const Vector& x_tilde = trial_points[t - 1];
    int prev_node = node_path[t - 1];
    ChildSet kids = children_of(p, t - 1, prev_node);
    const int N = static_cast<int>(kids.probs.size());
    std::vector<double> values(N);
    std::vector<Vector> grads(N);
    for (int k = 0; k < N; ++k) {
      const CutPool* pool =
          (t + 1 < T) ? &state.pool(t, kids.node[k]) : nullptr;
      auto sol = solve_stage(p, t, *kids.data[k], k, pool, x_tilde);
      values[k] = sol.value;
      grads[k] = -kids.data[k]->B.transpose() * sol.duals;
    }
    std::vector<double> zeta =
        risk_subgradient(config.risk_at(t), values, kids.probs);
    double qbar = 0.0;
    Vector gbar = Vector::Zero(x_tilde.size());
    for (int k = 0; k < N; ++k) {
      double w = kids.probs[k] * zeta[k];
      qbar += w * values[k];
      gbar += w * grads[k];
    }
    Cut cut;
    cut.intercept = qbar - gbar.dot(x_tilde);
    cut.gradient = gbar;
    cut.iteration = state.iteration;
    state.pool(t - 1, prev_node).add(cut);
  }
}

double lower_bound(const MultistageProblem& p, const SddpConfig&,
                   const SolveState& state) {
  const StageRealization& re = root_data(p);
  Vector empty;
  const CutPool* pool = (p.horizon > 1) ? &state.pool(0, 0) : nullptr;
  auto sol = solve_stage(p, 0, re, 0, pool, empty);
  return sol.value;
}

UpperBoundReport statistical_upper_bound(const MultistageProblem& p,
                                         const SddpConfig& config,
                                         SolveState& state, int paths) {
  if (paths < 2) throw std::invalid_argument("need at least 2 paths");
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < paths; ++i) {
    RngStream rng(config.seed, "upper-bound-path", state.forward_paths_used++);
    double cost = forward_pass(p, config, state, rng).cost;
    sum += cost;
    sumsq += cost * cost;
  }
  UpperBoundReport out;
  out.paths = paths;
  out.mean = sum / paths;
  double var = (sumsq - paths * out.mean * out.mean) / (paths - 1);
  out.std_error = std::sqrt(std::max(var, 0.0) / paths);
  out.edge = out.mean + config.z_alpha * out.std_error;
  return out;
}

namespace {

long policy_tree_size(const MultistageProblem& p, int t, int node, long cap) {
  if (t + 1 >= p.horizon) return 1;
  ChildSet kids = children_of(p, t, node);
  long total = 1;
  for (std::size_t k = 0; k < kids.probs.size(); ++k) {
    total += policy_tree_size(p, t + 1, kids.node[k], cap);
    if (total > cap) return total;
  }
  return total;
}

double policy_value(const MultistageProblem& p, const SddpConfig& config,
                    const SolveState& state, int t, int node,
                    const StageRealization& re, const Vector& x_prev) {
  const CutPool* pool =
      (t + 1 < p.horizon) ? &state.pool(t, node) : nullptr;
  auto sol = solve_stage(p, t, re, node, pool, x_prev);
  double stage_cost = re.c.dot(sol.x);
  if (t + 1 >= p.horizon) return stage_cost;
  ChildSet kids = children_of(p, t, node);
  std::vector<double> vals(kids.probs.size());
  for (std::size_t k = 0; k < kids.probs.size(); ++k)
    vals[k] = policy_value(p, config, state, t + 1, kids.node[k],
                           *kids.data[k], sol.x);
  return stage_cost + risk_evaluate(config.risk_at(t + 1), vals, kids.probs);
}

}  // namespace

double evaluate_policy_exact(const MultistageProblem& p,
                             const SddpConfig& config,
                             const SolveState& state) {
  if (policy_tree_size(p, 0, 0, config.policy_eval_cap) >
      config.policy_eval_cap)
    throw std::runtime_error("policy evaluation tree exceeds the cap");
  Vector empty;
  return policy_value(p, config, state, 0, 0, root_data(p), empty);
}

SddpResult run_sddp(const MultistageProblem& p, const SddpConfig& config) {
  auto errs = validate(p);
  if (!errs.empty())
    throw std::invalid_argument("invalid problem: " + errs.front());

  SddpResult result;
  result.state = init_state(p, config);
  SolveState& state = result.state;
  bool can_eval_exact =
      config.gap_tol > 0.0 &&
      policy_tree_size(p, 0, 0, config.policy_eval_cap) <=
          config.policy_eval_cap;

  auto t0 = std::chrono::steady_clock::now();
  std::string stop = "iteration-cap";
  for (int k = 1; k <= config.max_iterations; ++k) {
    state.iteration = k;
    for (int path = 0; path < config.forward_paths_per_iter; ++path) {
      RngStream rng(config.seed, "forward-path", state.forward_paths_used++);
      ForwardResult fr = forward_pass(p, config, state, rng);
      backward_pass(p, config, state, fr.states, fr.node_path);
    }
    double lb = lower_bound(p, config, state);
    state.lb_history.push_back(lb);

    IterationRow row;
    row.iteration = k;
    row.lower_bound = lb;
    row.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    for (const auto& stage_pools : state.pools)
      for (const CutPool& pool : stage_pools)
        row.total_cuts += static_cast<long>(pool.size());
    result.log.push_back(row);

    if (can_eval_exact) {
      double policy = evaluate_policy_exact(p, config, state);
      double gap = (policy - lb) / std::max(1.0, std::abs(policy));
      if (gap <= config.gap_tol) {
        stop = "gap";
        break;
      }
    }
    int w = config.stabilization_window;
    if (w > 0 && static_cast<int>(state.lb_history.size()) > w) {
      double old = state.lb_history[state.lb_history.size() - 1 - w];
      double lb_now = state.lb_history.back();
      if (lb_now - old < config.stabilization_tol * std::max(1.0, std::abs(lb_now))) {
        stop = "stabilization";
        break;
      }
    }
  }

  result.stop_rule = stop;
  result.iterations = state.iteration;
  result.lower_bound = lower_bound(p, config, state);
  {
    Vector empty;
    const CutPool* pool = &state.pool(0, 0);
    result.first_stage = solve_stage(p, 0, root_data(p), 0, pool, empty).x;
  }
  if (config.upper_bound_paths >= 2)
    result.upper = statistical_upper_bound(p, config, state,
                                           config.upper_bound_paths);
  return result;
}

}  // namespace mssp
