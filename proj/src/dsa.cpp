#include "mssp/dsa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "mssp/oracle.hpp"
#include "mssp/rng.hpp"

namespace mssp {

namespace {

double piece_cost(const Vector& c, const Vector& quad, const Vector& x) {
  double v = c.dot(x);
  if (quad.size() > 0) v += 0.5 * x.dot(quad.cwiseProduct(x));
  return v;
}

Vector stage_residual(const Matrix& A, const Matrix& B, const Vector& b,
                      const Vector& u, const Vector& x) {
  Vector r = b;
  if (B.size() > 0) r.noalias() -= B * u;
  if (A.size() > 0) r.noalias() -= A * x;
  return r;
}

}  // namespace

SpdtStep spdt(const SpdtState& state, const Vector& qprime, const Vector& u,
              const Matrix& A, const Matrix& B, const Vector& b,
              const Vector& c, const Vector& quad, const Vector& lower,
              const Vector& upper, const SpdtParams& params) {
  const int n = static_cast<int>(c.size());
  SpdtStep step;
  step.d_tilde = state.d + params.theta * (state.d - state.d_prev);
  Vector g = c;
  if (qprime.size() > 0) g += qprime;
  if (A.size() > 0) g.noalias() -= A.transpose() * step.d_tilde;
  step.p = Vector(n);
  for (int i = 0; i < n; ++i) {
    double denom = params.tau + (quad.size() > 0 ? quad[i] : 0.0);
    double v = (params.tau * state.p[i] - g[i]) / denom;
    step.p[i] = std::clamp(v, lower[i], upper[i]);
  }
  step.d = state.d + stage_residual(A, B, b, u, step.p) / params.eta;
  return step;
}

double subgrad_certificate(const Vector& x_bar, const Vector& y_bar,
                           const Vector& x_star, const Vector& y_star,
                           const Matrix& A, const Matrix& B, const Vector& b,
                           const Vector& u, const Vector& c,
                           const Vector& quad) {
  auto lagrangian = [&](const Vector& x, const Vector& y) {
    return piece_cost(c, quad, x) + y.dot(stage_residual(A, B, b, u, x));
  };
  return lagrangian(x_bar, y_star) - lagrangian(x_star, y_bar);
}

namespace {

struct DsaContext {
  const DsaProblem* problem = nullptr;
  const DsaSchedule* schedule = nullptr;
  int horizon = 0;
  double tau_scale = 0.0;
  double eta_scale = 0.0;
  double mu = 0.0;
  std::vector<SpdtState> states;
  std::vector<long> step_count;  // cumulative per stage, drives schedules
  std::vector<long> samples;
  std::vector<std::vector<double>> probs;  // realization weights per stage
  RngStream* rng = nullptr;
  long clips = 0;

  const Vector& quad_for(int t) const {
    static const Vector empty;
    if (problem->quad.empty() || problem->quad[t].size() == 0) return empty;
    return problem->quad[t];
  }

  SpdtParams params_for(int t) {
    long k = ++step_count[t];
    SpdtParams prm;
    prm.theta = schedule->theta;
    if (schedule->mode == DsaMode::Strong) {
      prm.tau = mu * static_cast<double>(k);
      prm.eta = eta_scale * std::sqrt(static_cast<double>(k));
    } else {
      prm.tau = tau_scale;
      prm.eta = eta_scale;
    }
    return prm;
  }

  void clip_dual(int t) {
    double norm = states[t].d.norm();
    if (norm > schedule->dual_radius) {
      states[t].d *= schedule->dual_radius / norm;
      ++clips;
    }
  }

  void advance(int t, const StageRealization& re, const Vector& u) {
    Vector qprime;
    if (t + 1 < horizon) {
      int j = rng->sample_index(probs[t + 1]);
      ++samples[t + 1];
      const StageRealization& child =
          problem->base.stages[t + 1].realizations[j];
      Vector dbar = run_stage(t + 1, child, states[t].p);
      qprime = -child.B.transpose() * dbar;
    }
    const StageBlock& block = problem->base.stages[t];
    SpdtParams prm = params_for(t);
    SpdtStep step = spdt(states[t], qprime, u, re.A, re.B, re.b, re.c,
                         quad_for(t), block.lower, block.upper, prm);
    states[t].d_prev = states[t].d;
    states[t].p = step.p;
    states[t].d = step.d;
    clip_dual(t);
  }

  // Runs the stage-t loop at parent decision u for one fixed realization
  // and returns the averaged dual, an approximate multiplier for the
  // sampled stage value at u.
  Vector run_stage(int t, const StageRealization& re, const Vector& u) {
    const int n = schedule->loops[t];
    Vector dbar = Vector::Zero(re.b.size());
    for (int i = 0; i < n; ++i) {
      advance(t, re, u);
      dbar += states[t].d;
    }
    return dbar / static_cast<double>(n);
  }
};

}  // namespace

DsaResult dsa_solve(const DsaProblem& problem, const DsaSchedule& schedule,
                    std::uint64_t seed) {
  auto errors = validate(problem.base);
  if (!errors.empty()) {
    std::ostringstream msg;
    msg << "invalid problem:";
    for (const auto& e : errors) msg << ' ' << e;
    throw std::invalid_argument(msg.str());
  }
  if (problem.base.dependence != Dependence::StagewiseIndependent)
    throw std::invalid_argument(
        "sampled primal-dual solve requires stagewise independence");
  const int T = problem.base.horizon;
  if (!problem.quad.empty() &&
      static_cast<int>(problem.quad.size()) != T)
    throw std::invalid_argument("quadratic terms must cover every stage");
  for (int t = 0; t < static_cast<int>(problem.quad.size()); ++t) {
    const Vector& q = problem.quad[t];
    if (q.size() == 0) continue;
    if (q.size() != problem.base.stages[t].num_vars())
      throw std::invalid_argument("quadratic term dimension mismatch");
    if (!q.allFinite() || q.minCoeff() < 0.0)
      throw std::invalid_argument("quadratic terms must be finite and >= 0");
  }
  if (static_cast<int>(schedule.loops.size()) != T)
    throw std::invalid_argument("schedule needs one loop size per stage");
  for (int n : schedule.loops)
    if (n < 1) throw std::invalid_argument("loop sizes must be positive");

  DsaContext ctx;
  ctx.problem = &problem;
  ctx.schedule = &schedule;
  ctx.horizon = T;

  double coupling = 1.0;
  bool any_quad = false;
  for (int t = 0; t < T; ++t) {
    for (const auto& re : problem.base.stages[t].realizations)
      if (re.A.size() > 0) coupling = std::max(coupling, re.A.norm());
    if (t < static_cast<int>(problem.quad.size()) &&
        problem.quad[t].size() > 0 && problem.quad[t].maxCoeff() > 0.0)
      any_quad = true;
  }
  ctx.tau_scale =
      schedule.tau_scale > 0.0 ? schedule.tau_scale : 2.0 * coupling;
  ctx.eta_scale =
      schedule.eta_scale > 0.0 ? schedule.eta_scale : 2.0 * coupling;
  if (schedule.mode == DsaMode::Strong) {
    if (schedule.mu > 0.0) {
      ctx.mu = schedule.mu;
    } else {
      double mu = kInf;
      for (int t = 0; t < T; ++t) {
        if (t >= static_cast<int>(problem.quad.size()) ||
            problem.quad[t].size() == 0) {
          mu = 0.0;
          break;
        }
        mu = std::min(mu, problem.quad[t].minCoeff());
      }
      if (!(mu > 0.0))
        throw std::invalid_argument(
            "strong mode needs a positive modulus on every stage");
      ctx.mu = mu;
    }
  }

  ctx.states.resize(T);
  ctx.step_count.assign(T, 0);
  ctx.samples.assign(T, 0);
  ctx.probs.resize(T);
  for (int t = 0; t < T; ++t) {
    const StageBlock& block = problem.base.stages[t];
    const int n = block.num_vars();
    SpdtState& s = ctx.states[t];
    s.p = Vector(n);
    for (int i = 0; i < n; ++i) {
      if (std::isfinite(block.lower[i]) && std::isfinite(block.upper[i]))
        s.p[i] = 0.5 * (block.lower[i] + block.upper[i]);
      else
        s.p[i] = std::clamp(0.0, block.lower[i], block.upper[i]);
    }
    s.d = Vector::Zero(block.num_rows());
    s.d_prev = s.d;
    for (const auto& re : block.realizations) ctx.probs[t].push_back(re.p);
  }

  RngStream rng(seed, "dsa-sample-path");
  ctx.rng = &rng;

  const StageRealization& root = problem.base.stages[0].realizations[0];
  const Vector no_parent;
  const int n1 = schedule.loops[0];
  Vector avg = Vector::Zero(problem.base.stages[0].num_vars());
  double weight_sum = 0.0;
  for (int k = 1; k <= n1; ++k) {
    ctx.advance(0, root, no_parent);
    double w;
    if (schedule.mode == DsaMode::Strong) {
      w = static_cast<double>(k);
    } else {
      // tail average: the first half is treated as burn-in
      w = (2 * k > n1) ? 1.0 : 0.0;
    }
    avg += w * ctx.states[0].p;
    weight_sum += w;
  }
  ctx.samples[0] = 1;

  DsaResult result;
  result.first_stage = avg / weight_sum;
  result.residual =
      root.b.size() == 0
          ? 0.0
          : stage_residual(root.A, root.B, root.b, no_parent,
                           result.first_stage)
                .lpNorm<Eigen::Infinity>();
  result.samples = ctx.samples;
  result.dual_clips = ctx.clips;
  result.tau_scale = ctx.tau_scale;
  result.eta_scale = ctx.eta_scale;
  result.mu = ctx.mu;
  result.mode = schedule.mode == DsaMode::Strong ? "strong" : "general";
  if (T > 3)
    result.warning =
        "sample demand grows exponentially with the horizon; nested "
        "sampling past three stages is a verification path only";

  result.objective_estimate = std::numeric_limits<double>::quiet_NaN();
  if (!any_quad) {
    // first-stage cost plus exact recourse at the returned point
    MultistageProblem pinned = problem.base;
    Vector x = result.first_stage;
    for (int i = 0; i < x.size(); ++i)
      x[i] = std::clamp(x[i], pinned.stages[0].lower[i],
                        pinned.stages[0].upper[i]);
    pinned.stages[0].lower = x;
    pinned.stages[0].upper = x;
    try {
      result.objective_estimate = oracle::extensive_solve(pinned).value;
    } catch (const std::exception&) {
      // tree over the cap or pinned point infeasible; leave NaN
    }
  }
  return result;
}

}  // namespace mssp
