#include "mssp/dualsddp.hpp"

#include <cmath>
#include <stdexcept>

namespace mssp {

namespace {

// The dual recursion is written for problems in standard form
// (x >= 0, equality rows only). Finite upper bounds become explicit rows
// with a slack column so both the primal and the dual see the same LPs.
MultistageProblem standardize(const MultistageProblem& p) {
  if (p.dependence != Dependence::StagewiseIndependent)
    throw std::invalid_argument(
        "dual recursion requires stagewise independence");
  MultistageProblem out;
  out.horizon = p.horizon;
  out.stages.resize(p.horizon);
  int prev_extra = 0, prev_n = 0;
  for (int t = 0; t < p.horizon; ++t) {
    const StageBlock& src = p.stages[t];
    const int n = src.num_vars();
    const int m = src.num_rows();
    std::vector<int> bounded;
    for (int j = 0; j < n; ++j) {
      if (src.lower[j] != 0.0)
        throw std::invalid_argument(
            "dual recursion requires zero lower bounds");
      if (std::isfinite(src.upper[j])) bounded.push_back(j);
    }
    const int e = static_cast<int>(bounded.size());
    StageBlock& dst = out.stages[t];
    dst.lower = Vector::Zero(n + e);
    dst.upper = Vector::Constant(n + e, kInf);
    for (const StageRealization& re : src.realizations) {
      StageRealization nr;
      nr.p = re.p;
      nr.c = Vector::Zero(n + e);
      nr.c.head(n) = re.c;
      nr.A = Matrix::Zero(m + e, n + e);
      nr.A.topLeftCorner(m, n) = re.A;
      nr.b = Vector::Zero(m + e);
      nr.b.head(m) = re.b;
      for (int k = 0; k < e; ++k) {
        nr.A(m + k, bounded[k]) = 1.0;
        nr.A(m + k, n + k) = 1.0;
        nr.b[m + k] = src.upper[bounded[k]];
      }
      if (t > 0) {
        nr.B = Matrix::Zero(m + e, prev_n + prev_extra);
        nr.B.topLeftCorner(m, prev_n) = re.B;
      }
      dst.realizations.push_back(std::move(nr));
    }
    prev_extra = e;
    prev_n = n;
  }
  return out;
}

double resolve_rho(const MultistageProblem& p, const DualConfig& cfg) {
  if (cfg.penalty_rho > 0.0) return cfg.penalty_rho;
  double cmax = 0.0;
  for (const StageBlock& blk : p.stages)
    for (const StageRealization& re : blk.realizations)
      cmax = std::max(cmax, re.c.lpNorm<Eigen::Infinity>());
  return 1e4 * std::max(cmax, 1.0);
}

struct DualStageSolution {
  double value = 0.0;
  Vector gradient;  // in the previous-stage multiplier
  Vector pi_all;    // stacked per-realization multipliers, N blocks of m
  int block = 0;    // m, so callers can slice pi_all
  bool floor_active = false;
  bool box_hit = false;
};

// Stage-t dual subproblem (1-based t in 2..T) for previous realization i:
//   max over (pi_1..pi_N, theta_1..theta_N)
//     sum_j p_j [ b_j' pi_j + theta_j ]
//   s.t. sum_j p_j B_j' pi_j <= c_prev - A_prev' pi_prev   (coupling)
//        theta_j <= every majorant cut of the child pool
//        A_j' pi_j <= c_j at the final stage,
// solved as a minimization with slack columns; violated rows carry
// penalty columns at rate rho.
DualStageSolution solve_dual_stage(const MultistageProblem& p, int t, int i,
                                   const DualState& state,
                                   const DualConfig& cfg, double rho,
                                   const Vector& pi_prev, bool* penalty_used) {
  const int s = t - 2;  // 0-based previous stage
  const StageRealization& prev = p.stages[s].realizations[i];
  const auto& kids = p.stages[s + 1].realizations;
  const int N = static_cast<int>(kids.size());
  const int m = p.stages[s + 1].num_rows();   // dim of each pi_j
  const int n_prev = p.stages[s].num_vars();
  const bool leaf = (t == p.horizon);
  const int n_here = p.stages[s + 1].num_vars();

  int cut_rows = 0;
  if (!leaf)
    for (int j = 0; j < N; ++j)
      cut_rows += static_cast<int>(state.pools[s + 1][j].size());
  const int rows = n_prev + (leaf ? N * n_here : cut_rows);
  const int theta_count = leaf ? 0 : N;
  // Penalty columns only on dual-feasibility rows; relaxing a cut row
  // would break the majorant property.
  const int pen_rows = n_prev + (leaf ? N * n_here : 0);
  const int cols = N * m + theta_count + rows /* slacks */ + pen_rows;

  lp::LpProblem lp;
  lp.c = Vector::Zero(cols);
  lp.A = Matrix::Zero(rows, cols);
  lp.b = Vector::Zero(rows);
  lp.lower = Vector::Zero(cols);
  lp.upper = Vector::Constant(cols, kInf);
  const int pi_off = 0;
  const int th_off = N * m;
  const int sl_off = th_off + theta_count;
  const int pen_off = sl_off + rows;
  for (int j = 0; j < N; ++j) {
    lp.lower.segment(pi_off + j * m, m).setConstant(-cfg.pi_box);
    lp.upper.segment(pi_off + j * m, m).setConstant(cfg.pi_box);
    lp.c.segment(pi_off + j * m, m) = -kids[j].p * kids[j].b;
  }
  for (int j = 0; j < theta_count; ++j) {
    lp.lower[th_off + j] = -kInf;
    lp.c[th_off + j] = -kids[j].p;
  }
  for (int r = 0; r < rows; ++r) lp.A(r, sl_off + r) = 1.0;
  for (int r = 0; r < pen_rows; ++r) {
    lp.A(r, pen_off + r) = -1.0;
    lp.c[pen_off + r] = rho;
  }

  Vector rhs = prev.c;
  if (pi_prev.size() > 0) rhs -= prev.A.transpose() * pi_prev;
  for (int r = 0; r < n_prev; ++r) {
    for (int j = 0; j < N; ++j)
      lp.A.block(r, pi_off + j * m, 1, m) =
          kids[j].p * kids[j].B.col(r).transpose();
    lp.b[r] = rhs[r];
  }
  int row = n_prev;
  if (leaf) {
    for (int j = 0; j < N; ++j)
      for (int r = 0; r < n_here; ++r) {
        lp.A.block(row, pi_off + j * m, 1, m) =
            kids[j].A.col(r).transpose();
        lp.b[row] = kids[j].c[r];
        ++row;
      }
  } else {
    for (int j = 0; j < N; ++j) {
      for (const Cut& cut : state.pools[s + 1][j].cuts()) {
        lp.A(row, th_off + j) = 1.0;
        lp.A.block(row, pi_off + j * m, 1, m) = -cut.gradient.transpose();
        lp.b[row] = cut.intercept;
        ++row;
      }
    }
  }

  auto sol = lp::solve(lp);
  if (sol.status != lp::LpStatus::Optimal)
    throw std::runtime_error("dual stage subproblem failed to solve");
  for (int r = 0; r < pen_rows; ++r)
    if (sol.x[pen_off + r] > 1e-9) {
      *penalty_used = true;
      break;
    }

  DualStageSolution out;
  out.value = -sol.value;
  out.pi_all = sol.x.head(N * m);
  out.block = m;
  for (int j = 0; j < N * m; ++j)
    if (std::abs(std::abs(sol.x[pi_off + j]) - cfg.pi_box) < 1e-7)
      out.box_hit = true;
  Vector y = sol.duals.head(n_prev);
  out.gradient = prev.A * y;
  if (!leaf)
    for (int j = 0; j < N; ++j)
      if (state.pools[s + 1][j].size() == 1) out.floor_active = true;
  return out;
}

}  // namespace

MultistageProblem standardize_for_dual(const MultistageProblem& problem) {
  return standardize(problem);
}

double dual_stage_value(const MultistageProblem& standardized,
                        const DualConfig& config, const DualState& state,
                        int t, int i, const Vector& pi_prev) {
  bool penalty = false;
  return solve_dual_stage(standardized, t, i, state, config,
                          resolve_rho(standardized, config), pi_prev, &penalty)
      .value;
}

DualState init_dual_state(const MultistageProblem& p, const DualConfig& cfg) {
  DualState state;
  state.pools.resize(p.horizon - 1);
  for (int s = 0; s + 1 < p.horizon; ++s) {
    const int reals = static_cast<int>(p.stages[s].realizations.size());
    const int dim = p.stages[s].num_rows();
    for (int i = 0; i < reals; ++i) {
      state.pools[s].emplace_back(s, dim, cfg.majorant_cap, i);
      state.pools[s].back().set_majorant();
    }
  }
  return state;
}

double majorant_value(const CutPool& pool, const Vector& pi) {
  double best = pool.cuts()[0].value_at(pi);
  for (const Cut& cut : pool.cuts()) best = std::min(best, cut.value_at(pi));
  return best;
}

void dual_backward(const MultistageProblem& p, const DualConfig& cfg,
                   DualState& state, const std::vector<Vector>& trial_pi,
                   const std::vector<int>& realization_path) {
  double rho = resolve_rho(p, cfg);
  for (int t = p.horizon; t >= 2; --t) {
    const int s = t - 2;
    const int i = realization_path[s];
    const Vector& pi = trial_pi[s];
    bool penalty = false;
    auto sol = solve_dual_stage(p, t, i, state, cfg, rho, pi, &penalty);
    if (penalty) state.penalty_used = true;
    if (sol.floor_active) ++state.majorant_floor_hits;
    if (sol.box_hit) ++state.pi_box_hits;
    Cut cut;
    cut.intercept = sol.value - sol.gradient.dot(pi);
    cut.gradient = sol.gradient;
    state.pools[s][i].add(cut);
  }
  // a pool is still at its initialization cap only if the single constant
  // cut was never replaced or joined by a real one
  state.cap_everywhere_replaced = true;
  for (const auto& stage_pools : state.pools)
    for (const CutPool& pool : stage_pools)
      if (pool.size() == 1 &&
          pool.cuts()[0].intercept >= pool.floor_value())
        state.cap_everywhere_replaced = false;
}

namespace {

struct FirstStageSolution {
  double value = 0.0;
  Vector pi;
};

FirstStageSolution solve_first_stage(const MultistageProblem& p,
                                     const DualConfig& cfg,
                                     const DualState& state) {
  const StageRealization& root = p.stages[0].realizations[0];
  const int m = static_cast<int>(root.b.size());
  const CutPool& pool = state.pools[0][0];
  if (m == 0) return {majorant_value(pool, Vector(0)), Vector(0)};

  const int k = static_cast<int>(pool.size());
  lp::LpProblem lp;
  lp.c = Vector::Zero(m + 1 + k);
  lp.A = Matrix::Zero(k, m + 1 + k);
  lp.b = Vector::Zero(k);
  lp.lower = Vector::Zero(m + 1 + k);
  lp.upper = Vector::Constant(m + 1 + k, kInf);
  lp.lower.head(m).setConstant(-cfg.pi_box);
  lp.upper.head(m).setConstant(cfg.pi_box);
  lp.lower[m] = -kInf;
  lp.c.head(m) = -root.b;
  lp.c[m] = -1.0;
  for (int r = 0; r < k; ++r) {
    const Cut& cut = pool.cuts()[r];
    lp.A(r, m) = 1.0;
    lp.A.block(r, 0, 1, m) = -cut.gradient.transpose();
    lp.A(r, m + 1 + r) = 1.0;
    lp.b[r] = cut.intercept;
  }
  auto sol = lp::solve(lp);
  if (sol.status != lp::LpStatus::Optimal)
    throw std::runtime_error("first-stage dual problem failed to solve");
  return {-sol.value, sol.x.head(m)};
}

}  // namespace

double dual_upper_bound(const MultistageProblem& p, const DualConfig& cfg,
                        const DualState& state) {
  return solve_first_stage(p, cfg, state).value;
}

DualResult run_dual_sddp(const MultistageProblem& problem,
                         const SddpConfig& primal_config,
                         const DualConfig& dual_config) {
  MultistageProblem p = standardize(problem);
  auto errs = validate(p);
  if (!errs.empty())
    throw std::invalid_argument("invalid problem: " + errs.front());

  DualResult result;
  result.penalty_rho = resolve_rho(p, dual_config);
  result.primal_state = init_state(p, primal_config);
  result.state = init_dual_state(p, dual_config);
  SolveState& primal = result.primal_state;
  DualState& dual = result.state;

  const double rho = result.penalty_rho;
  std::string stop = "iteration-cap";
  int k = 0;
  long dual_paths = 0;
  for (k = 1; k <= dual_config.max_iterations; ++k) {
    primal.iteration = k;
    RngStream rng(primal_config.seed, "forward-path",
                  primal.forward_paths_used++);
    ForwardResult fr = forward_pass(p, primal_config, primal, rng);
    backward_pass(p, primal_config, primal, fr.states, fr.node_path);

    // Dual forward pass: trial multipliers are argmaxes of the dual
    // subproblems themselves, so the new cuts pin down the first-stage
    // maximization instead of landing where the primal duals happen to sit.
    RngStream drng(primal_config.seed, "dual-forward-path", dual_paths++);
    std::vector<Vector> trial_pi;
    std::vector<int> path;
    trial_pi.push_back(solve_first_stage(p, dual_config, dual).pi);
    path.push_back(0);
    for (int s = 0; s + 2 < p.horizon; ++s) {
      bool penalty = false;
      auto sol = solve_dual_stage(p, s + 2, path[s], dual, dual_config, rho,
                                  trial_pi[s], &penalty);
      std::vector<double> probs;
      for (const auto& re : p.stages[s + 1].realizations)
        probs.push_back(re.p);
      int j = drng.sample_index(probs);
      trial_pi.push_back(sol.pi_all.segment(j * sol.block, sol.block));
      path.push_back(j);
    }
    dual_backward(p, dual_config, dual, trial_pi, path);

    JointIterationRow row;
    row.iteration = k;
    row.primal_lb = lower_bound(p, primal_config, primal);
    row.dual_ub = dual_upper_bound(p, dual_config, dual);
    result.log.push_back(row);
    if (row.dual_ub - row.primal_lb <=
        dual_config.gap_tol * std::max(1.0, std::abs(row.dual_ub))) {
      stop = "gap";
      break;
    }
  }
  result.stop_rule = stop;
  result.iterations = std::min(k, dual_config.max_iterations);
  result.primal_lower_bound = result.log.back().primal_lb;
  result.upper_bound = result.log.back().dual_ub;
  return result;
}

}  // namespace mssp
