#include "mssp/soc.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mssp/lp.hpp"

namespace mssp {

namespace {

AffinePiece zero_piece(int nx, int nu) {
  AffinePiece z;
  z.wx = Vector::Zero(nx);
  z.wu = Vector::Zero(nu);
  z.w0 = 0.0;
  return z;
}

// Empty piece lists mean zero cost.
std::vector<AffinePiece> pieces_of(const SocRealization& re, int nx, int nu) {
  if (!re.cost.empty()) return re.cost;
  return {zero_piece(nx, nu)};
}

int active_piece(const std::vector<AffinePiece>& pieces, const Vector& x,
                 const Vector& u) {
  int best = 0;
  double best_val = pieces[0].wx.dot(x) + pieces[0].wu.dot(u) + pieces[0].w0;
  for (std::size_t k = 1; k < pieces.size(); ++k) {
    double v = pieces[k].wx.dot(x) + pieces[k].wu.dot(u) + pieces[k].w0;
    if (v > best_val) {
      best_val = v;
      best = static_cast<int>(k);
    }
  }
  return best;
}

[[noreturn]] void unbounded_stage(int t) {
  std::ostringstream s;
  s << "stage " << t + 1 << " control problem unbounded over its box";
  throw std::runtime_error(s.str());
}

// Shared stage solve; psi == nullptr is the risk-neutral case. The LP
// minimizes over the control u, epigraph variables w_j (stage cost) and
// v_j (next-state value), plus (theta, s_j) for the risk form.
SocStageSolution stage_solve_impl(const SocProblem& p, const PsiForm* psi,
                                  const SocState& state, int t,
                                  const Vector& x) {
  const SocStage& stage = p.stages[t];
  const int nx = p.state_dim();
  const int nu = static_cast<int>(stage.u_lower.size());
  const int N = static_cast<int>(stage.realizations.size());
  const CutPool& pool = state.pools[t];
  const int K = static_cast<int>(pool.size());

  std::vector<std::vector<AffinePiece>> pieces(N);
  int piece_rows = 0;
  for (int j = 0; j < N; ++j) {
    pieces[j] = pieces_of(stage.realizations[j], nx, nu);
    piece_rows += static_cast<int>(pieces[j].size());
  }
  const bool risk = psi != nullptr;
  const int rows = piece_rows + N * K + (risk ? N : 0);
  const int w_off = nu;
  const int v_off = nu + N;
  const int th_off = nu + 2 * N;
  const int s_off = th_off + 1;
  const int sl_off = risk ? s_off + N : th_off;
  const int cols = sl_off + rows;

  lp::LpProblem lp;
  lp.c = Vector::Zero(cols);
  lp.A = Matrix::Zero(rows, cols);
  lp.b = Vector::Zero(rows);
  lp.lower = Vector::Zero(cols);
  lp.upper = Vector::Constant(cols, kInf);
  lp.lower.head(nu) = stage.u_lower;
  lp.upper.head(nu) = stage.u_upper;
  for (int j = 0; j < N; ++j) {
    lp.lower[w_off + j] = -kInf;
    lp.lower[v_off + j] = -kInf;
  }
  const double lam = risk ? psi->lambda : 0.0;
  for (int j = 0; j < N; ++j) {
    double pj = stage.realizations[j].p;
    lp.c[w_off + j] = pj * (1.0 - lam);
    lp.c[v_off + j] = pj * (1.0 - lam);
    if (risk) lp.c[s_off + j] = pj * lam / (1.0 - psi->alpha);
  }
  if (risk) {
    lp.lower[th_off] = -kInf;
    lp.c[th_off] = lam;
  }

  // rhs sensitivity to the state per row; the stage subgradient is the
  // dual-weighted sum, which keeps joint stationarity in the control
  // (picking one active piece per realization does not).
  std::vector<Vector> row_grads(rows, Vector::Zero(nx));
  int row = 0;
  for (int j = 0; j < N; ++j)
    for (const AffinePiece& pc : pieces[j]) {
      lp.A(row, w_off + j) = 1.0;
      lp.A.block(row, 0, 1, nu) = -pc.wu.transpose();
      lp.A(row, sl_off + row) = -1.0;
      lp.b[row] = pc.wx.dot(x) + pc.w0;
      row_grads[row] = pc.wx;
      ++row;
    }
  for (int j = 0; j < N; ++j) {
    const SocRealization& re = stage.realizations[j];
    Vector base = re.A * x + re.b;
    for (const Cut& cut : pool.cuts()) {
      lp.A(row, v_off + j) = 1.0;
      lp.A.block(row, 0, 1, nu) =
          -(re.B.transpose() * cut.gradient).transpose();
      lp.A(row, sl_off + row) = -1.0;
      lp.b[row] = cut.intercept + cut.gradient.dot(base);
      row_grads[row] = re.A.transpose() * cut.gradient;
      ++row;
    }
  }
  if (risk)
    for (int j = 0; j < N; ++j) {
      lp.A(row, s_off + j) = 1.0;
      lp.A(row, w_off + j) = -1.0;
      lp.A(row, v_off + j) = -1.0;
      lp.A(row, th_off) = 1.0;
      lp.A(row, sl_off + row) = -1.0;
      ++row;
    }

  auto sol = lp::solve(lp);
  if (sol.status == lp::LpStatus::Unbounded) unbounded_stage(t);
  if (sol.status != lp::LpStatus::Optimal)
    throw std::runtime_error("stage control problem failed to solve");

  SocStageSolution out;
  out.value = sol.value;
  out.u = sol.x.head(nu);
  out.theta = risk ? sol.x[th_off] : 0.0;
  out.gradient = Vector::Zero(nx);
  for (int r = 0; r < rows; ++r)
    out.gradient += sol.duals[r] * row_grads[r];
  return out;
}

void backward_impl(const SocProblem& p, const PsiForm* psi, SocState& state,
                   const std::vector<Vector>& trial_states) {
  for (int t = p.horizon - 1; t >= 1; --t) {
    auto sol = stage_solve_impl(p, psi, state, t, trial_states[t]);
    Cut cut;
    cut.intercept = sol.value - sol.gradient.dot(trial_states[t]);
    cut.gradient = sol.gradient;
    cut.iteration = state.iteration;
    state.pools[t - 1].add(cut);
  }
}

SocForwardResult forward_impl(const SocProblem& p, const PsiForm* psi,
                              const SocState& state, RngStream& rng) {
  SocForwardResult out;
  Vector x = p.x1;
  for (int t = 0; t < p.horizon; ++t) {
    auto sol = stage_solve_impl(p, psi, state, t, x);
    out.states.push_back(x);
    out.controls.push_back(sol.u);
    out.thetas.push_back(sol.theta);
    std::vector<double> probs;
    for (const auto& re : p.stages[t].realizations) probs.push_back(re.p);
    int j = rng.sample_index(probs);
    out.path.push_back(j);
    const SocRealization& re = p.stages[t].realizations[j];
    double c = stage_cost_value(re, x, sol.u);
    out.stage_costs.push_back(c);
    out.cost += c;
    x = re.A * x + re.B * sol.u + re.b;
  }
  out.states.push_back(x);
  out.cost += terminal_cost_value(p, x);
  return out;
}

template <typename StateT, typename IterFn, typename BoundFn,
          typename ResultT>
ResultT run_loop(const SocConfig& cfg, StateT state, const char* stream_name,
                 IterFn iter, BoundFn bound, ResultT result) {
  long paths = 0;
  std::string stop = "iteration-cap";
  for (int k = 1; k <= cfg.max_iterations; ++k) {
    state.iteration = k;
    RngStream rng(cfg.seed, stream_name, paths++);
    iter(state, rng);
    result.lb_history.push_back(bound(state));
    int w = cfg.stabilization_window;
    if (w > 0 && static_cast<int>(result.lb_history.size()) > w) {
      double old = result.lb_history[result.lb_history.size() - 1 - w];
      double now = result.lb_history.back();
      if (now - old < cfg.stabilization_tol * std::max(1.0, std::abs(now))) {
        stop = "stabilization";
        break;
      }
    }
  }
  result.stop_rule = stop;
  result.iterations = state.iteration;
  result.lower_bound = result.lb_history.back();
  result.state = std::move(state);
  return result;
}

}  // namespace

std::vector<std::string> validate_soc(const SocProblem& p) {
  std::vector<std::string> errs;
  auto fail = [&](const std::string& m) { errs.push_back(m); };
  if (p.horizon <= 0) fail("horizon must be positive");
  if (static_cast<int>(p.stages.size()) != p.horizon)
    fail("stage count does not match horizon");
  const int nx = p.state_dim();
  if (nx <= 0) fail("initial state is empty");
  if (!errs.empty()) return errs;
  for (int t = 0; t < p.horizon; ++t) {
    const SocStage& st = p.stages[t];
    std::ostringstream tag;
    tag << "stage " << t + 1 << ": ";
    const int nu = static_cast<int>(st.u_lower.size());
    if (st.u_upper.size() != nu) fail(tag.str() + "control box mismatch");
    if (st.realizations.empty()) fail(tag.str() + "no realizations");
    double psum = 0.0;
    for (const SocRealization& re : st.realizations) {
      psum += re.p;
      if (re.A.rows() != nx || re.A.cols() != nx)
        fail(tag.str() + "state matrix shape");
      if (re.B.rows() != nx || re.B.cols() != nu)
        fail(tag.str() + "control matrix shape");
      if (re.b.size() != nx) fail(tag.str() + "offset size");
      for (const AffinePiece& pc : re.cost)
        if (pc.wx.size() != nx || pc.wu.size() != nu)
          fail(tag.str() + "cost piece shape");
    }
    if (!st.realizations.empty() && std::abs(psum - 1.0) > 1e-9) {
      std::ostringstream s;
      s << tag.str() << "probability sum " << psum;
      fail(s.str());
    }
  }
  for (const AffinePiece& pc : p.terminal_cost)
    if (pc.wx.size() != nx || pc.wu.size() != 0)
      fail("terminal cost piece shape");
  return errs;
}

SocState init_soc_state(const SocProblem& p, const SocConfig& cfg) {
  SocState state;
  const int nx = p.state_dim();
  for (int t = 0; t + 1 < p.horizon; ++t)
    state.pools.emplace_back(t, nx, cfg.floor_value);
  if (p.terminal_cost.empty()) {
    state.pools.emplace_back(p.horizon - 1, nx, 0.0);
  } else {
    Cut seed;
    seed.intercept = p.terminal_cost[0].w0;
    seed.gradient = p.terminal_cost[0].wx;
    CutPool terminal(p.horizon - 1, seed);
    for (std::size_t k = 1; k < p.terminal_cost.size(); ++k) {
      Cut c;
      c.intercept = p.terminal_cost[k].w0;
      c.gradient = p.terminal_cost[k].wx;
      terminal.add(c);
    }
    state.pools.push_back(std::move(terminal));
  }
  return state;
}

double terminal_cost_value(const SocProblem& p, const Vector& x) {
  if (p.terminal_cost.empty()) return 0.0;
  double best = -kInf;
  for (const AffinePiece& pc : p.terminal_cost)
    best = std::max(best, pc.wx.dot(x) + pc.w0);
  return best;
}

double stage_cost_value(const SocRealization& re, const Vector& x,
                        const Vector& u) {
  if (re.cost.empty()) return 0.0;
  double best = -kInf;
  for (const AffinePiece& pc : re.cost)
    best = std::max(best, pc.wx.dot(x) + pc.wu.dot(u) + pc.w0);
  return best;
}

SocStageSolution soc_stage_solve(const SocProblem& p, const SocConfig&,
                                 const SocState& state, int t,
                                 const Vector& x) {
  return stage_solve_impl(p, nullptr, state, t, x);
}

void soc_backward(const SocProblem& p, const SocConfig&, SocState& state,
                  const std::vector<Vector>& trial_states) {
  backward_impl(p, nullptr, state, trial_states);
}

SocForwardResult soc_forward(const SocProblem& p, const SocConfig&,
                             const SocState& state, RngStream& rng) {
  return forward_impl(p, nullptr, state, rng);
}

double soc_lower_bound(const SocProblem& p, const SocConfig&,
                       const SocState& state) {
  return stage_solve_impl(p, nullptr, state, 0, p.x1).value;
}

SocRunResult run_soc(const SocProblem& p, const SocConfig& cfg) {
  auto errs = validate_soc(p);
  if (!errs.empty())
    throw std::invalid_argument("invalid problem: " + errs.front());
  return run_loop(
      cfg, init_soc_state(p, cfg), "soc-forward-path",
      [&](SocState& s, RngStream& rng) {
        auto fr = forward_impl(p, nullptr, s, rng);
        backward_impl(p, nullptr, s, fr.states);
      },
      [&](const SocState& s) {
        return stage_solve_impl(p, nullptr, s, 0, p.x1).value;
      },
      SocRunResult{});
}

SocStageSolution risk_soc_stage_solve(const SocProblem& p, const SocConfig&,
                                      const PsiForm& psi,
                                      const SocState& state, int t,
                                      const Vector& x) {
  if (psi.identity()) return stage_solve_impl(p, nullptr, state, t, x);
  return stage_solve_impl(p, &psi, state, t, x);
}

void risk_soc_backward(const SocProblem& p, const SocConfig&,
                       const PsiForm& psi, SocState& state,
                       const std::vector<Vector>& trial_states) {
  backward_impl(p, psi.identity() ? nullptr : &psi, state, trial_states);
}

SocForwardResult risk_soc_forward(const SocProblem& p, const SocConfig&,
                                  const PsiForm& psi, const SocState& state,
                                  RngStream& rng) {
  return forward_impl(p, psi.identity() ? nullptr : &psi, state, rng);
}

SocRunResult run_risk_soc(const SocProblem& p, const SocConfig& cfg,
                          const PsiForm& psi) {
  auto errs = validate_soc(p);
  if (!errs.empty())
    throw std::invalid_argument("invalid problem: " + errs.front());
  const PsiForm* pp = psi.identity() ? nullptr : &psi;
  return run_loop(
      cfg, init_soc_state(p, cfg), "soc-forward-path",
      [&](SocState& s, RngStream& rng) {
        auto fr = forward_impl(p, pp, s, rng);
        backward_impl(p, pp, s, fr.states);
      },
      [&](const SocState& s) {
        return stage_solve_impl(p, pp, s, 0, p.x1).value;
      },
      SocRunResult{});
}

RiskBoundReport risk_upper_bound(const SocProblem& p, const SocConfig& cfg,
                                 const PsiForm& psi, const SocState& state,
                                 int paths, double z_alpha) {
  if (paths < 2) throw std::invalid_argument("need at least 2 paths");
  const PsiForm* pp = psi.identity() ? nullptr : &psi;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < paths; ++i) {
    RngStream rng(cfg.seed, "risk-upper-path", i);
    auto fr = forward_impl(p, pp, state, rng);
    double v = terminal_cost_value(p, fr.states.back());
    for (int t = p.horizon - 1; t >= 0; --t)
      v = psi.value(fr.stage_costs[t] + v, fr.thetas[t]);
    sum += v;
    sumsq += v * v;
  }
  RiskBoundReport out;
  out.paths = paths;
  out.mean = sum / paths;
  double var = (sumsq - paths * out.mean * out.mean) / (paths - 1);
  out.std_error = std::sqrt(std::max(var, 0.0) / paths);
  out.edge = out.mean + z_alpha * out.std_error;
  return out;
}

QFactorState init_qfactor_state(const SocProblem& p, const SocConfig& cfg) {
  QFactorState state;
  const int nx = p.state_dim();
  for (int t = 0; t < p.horizon; ++t) {
    int nu = static_cast<int>(p.stages[t].u_lower.size());
    state.pools.emplace_back(t, nx + nu, cfg.floor_value);
  }
  return state;
}

namespace {

// min over the next control of the joint approximation at a fixed next
// state; returns the value and the active cut's state-block gradient.
std::pair<double, Vector> q_next_value(const SocProblem& p,
                                       const QFactorState& state, int t_next,
                                       const Vector& x_next) {
  const int nx = p.state_dim();
  if (t_next >= p.horizon) {
    // Terminal: exact max-of-affine in the state.
    Vector g = Vector::Zero(nx);
    double best = 0.0;
    if (!p.terminal_cost.empty()) {
      best = -kInf;
      for (const AffinePiece& pc : p.terminal_cost) {
        double v = pc.wx.dot(x_next) + pc.w0;
        if (v > best) {
          best = v;
          g = pc.wx;
        }
      }
    }
    return {best, g};
  }
  const SocStage& stage = p.stages[t_next];
  const int nu = static_cast<int>(stage.u_lower.size());
  const CutPool& pool = state.pools[t_next];
  const int K = static_cast<int>(pool.size());

  lp::LpProblem lp;
  const int cols = nu + 1 + K;
  lp.c = Vector::Zero(cols);
  lp.A = Matrix::Zero(K, cols);
  lp.b = Vector::Zero(K);
  lp.lower = Vector::Zero(cols);
  lp.upper = Vector::Constant(cols, kInf);
  lp.lower.head(nu) = stage.u_lower;
  lp.upper.head(nu) = stage.u_upper;
  lp.lower[nu] = -kInf;
  lp.c[nu] = 1.0;
  for (int r = 0; r < K; ++r) {
    const Cut& cut = pool.cuts()[r];
    lp.A(r, nu) = 1.0;
    lp.A.block(r, 0, 1, nu) = -cut.gradient.tail(nu).transpose();
    lp.A(r, nu + 1 + r) = -1.0;
    lp.b[r] = cut.intercept + cut.gradient.head(nx).dot(x_next);
  }
  auto sol = lp::solve(lp);
  if (sol.status == lp::LpStatus::Unbounded) unbounded_stage(t_next);
  if (sol.status != lp::LpStatus::Optimal)
    throw std::runtime_error("next-control problem failed to solve");
  // Dual-weighted combination of cut state-blocks, same stationarity
  // argument as the stage solve.
  Vector g = Vector::Zero(nx);
  for (int r = 0; r < K; ++r)
    g += sol.duals[r] * pool.cuts()[r].gradient.head(nx);
  return {sol.value, g};
}

}  // namespace

QStageSolution qfactor_stage_solve(const SocProblem& p, const SocConfig&,
                                   const QFactorState& state, int t,
                                   const Vector& x, const Vector& u) {
  const SocStage& stage = p.stages[t];
  const int nx = p.state_dim();
  const int nu = static_cast<int>(stage.u_lower.size());
  QStageSolution out;
  out.gradient = Vector::Zero(nx + nu);
  for (const SocRealization& re : stage.realizations) {
    auto pcs = pieces_of(re, nx, nu);
    const AffinePiece& pc = pcs[active_piece(pcs, x, u)];
    double c = pc.wx.dot(x) + pc.wu.dot(u) + pc.w0;
    Vector x_next = re.A * x + re.B * u + re.b;
    auto [next, beta_x] = q_next_value(p, state, t + 1, x_next);
    out.value += re.p * (c + next);
    Vector g(nx + nu);
    g.head(nx) = pc.wx + re.A.transpose() * beta_x;
    g.tail(nu) = pc.wu + re.B.transpose() * beta_x;
    out.gradient += re.p * g;
  }
  return out;
}

void qfactor_backward(const SocProblem& p, const SocConfig& cfg,
                      QFactorState& state,
                      const std::vector<QPair>& trial_pairs) {
  for (int t = p.horizon - 1; t >= 0; --t) {
    auto sol = qfactor_stage_solve(p, cfg, state, t, trial_pairs[t].x,
                                   trial_pairs[t].u);
    Vector joint(sol.gradient.size());
    joint.head(trial_pairs[t].x.size()) = trial_pairs[t].x;
    joint.tail(trial_pairs[t].u.size()) = trial_pairs[t].u;
    Cut cut;
    cut.intercept = sol.value - sol.gradient.dot(joint);
    cut.gradient = sol.gradient;
    cut.iteration = state.iteration;
    state.pools[t].add(cut);
  }
}

QPolicy qfactor_policy(const SocProblem& p, const SocConfig&,
                       const QFactorState& state, int t, const Vector& x) {
  const SocStage& stage = p.stages[t];
  const int nx = p.state_dim();
  const int nu = static_cast<int>(stage.u_lower.size());
  const CutPool& pool = state.pools[t];
  const int K = static_cast<int>(pool.size());

  lp::LpProblem lp;
  const int cols = nu + 1 + K;
  lp.c = Vector::Zero(cols);
  lp.A = Matrix::Zero(K, cols);
  lp.b = Vector::Zero(K);
  lp.lower = Vector::Zero(cols);
  lp.upper = Vector::Constant(cols, kInf);
  lp.lower.head(nu) = stage.u_lower;
  lp.upper.head(nu) = stage.u_upper;
  lp.lower[nu] = -kInf;
  lp.c[nu] = 1.0;
  for (int r = 0; r < K; ++r) {
    const Cut& cut = pool.cuts()[r];
    lp.A(r, nu) = 1.0;
    lp.A.block(r, 0, 1, nu) = -cut.gradient.tail(nu).transpose();
    lp.A(r, nu + 1 + r) = -1.0;
    lp.b[r] = cut.intercept + cut.gradient.head(nx).dot(x);
  }
  auto sol = lp::solve(lp);
  if (sol.status == lp::LpStatus::Unbounded) unbounded_stage(t);
  if (sol.status != lp::LpStatus::Optimal)
    throw std::runtime_error("policy extraction failed to solve");
  QPolicy out;
  out.u = sol.x.head(nu);
  out.value = sol.value;
  return out;
}

SocForwardResult qfactor_forward(const SocProblem& p, const SocConfig& cfg,
                                 const QFactorState& state, RngStream& rng) {
  SocForwardResult out;
  Vector x = p.x1;
  for (int t = 0; t < p.horizon; ++t) {
    auto pol = qfactor_policy(p, cfg, state, t, x);
    out.states.push_back(x);
    out.controls.push_back(pol.u);
    out.thetas.push_back(0.0);
    std::vector<double> probs;
    for (const auto& re : p.stages[t].realizations) probs.push_back(re.p);
    int j = rng.sample_index(probs);
    out.path.push_back(j);
    const SocRealization& re = p.stages[t].realizations[j];
    double c = stage_cost_value(re, x, pol.u);
    out.stage_costs.push_back(c);
    out.cost += c;
    x = re.A * x + re.B * pol.u + re.b;
  }
  out.states.push_back(x);
  out.cost += terminal_cost_value(p, x);
  return out;
}

QFactorRunResult run_qfactor(const SocProblem& p, const SocConfig& cfg) {
  auto errs = validate_soc(p);
  if (!errs.empty())
    throw std::invalid_argument("invalid problem: " + errs.front());
  return run_loop(
      cfg, init_qfactor_state(p, cfg), "qfactor-forward-path",
      [&](QFactorState& s, RngStream& rng) {
        auto fr = qfactor_forward(p, cfg, s, rng);
        std::vector<QPair> pairs;
        for (int t = 0; t < p.horizon; ++t)
          pairs.push_back({fr.states[t], fr.controls[t]});
        qfactor_backward(p, cfg, s, pairs);
      },
      [&](const QFactorState& s) {
        return qfactor_policy(p, cfg, s, 0, p.x1).value;
      },
      QFactorRunResult{});
}

}  // namespace mssp
