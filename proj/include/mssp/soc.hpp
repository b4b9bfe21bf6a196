#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mssp/cuts.hpp"
#include "mssp/model.hpp"
#include "mssp/risk.hpp"
#include "mssp/rng.hpp"

namespace mssp {

struct SocConfig {
  int max_iterations = 200;
  std::uint64_t seed = 0;
  double floor_value = 0.0;  // initial constant minorant per pool
  int stabilization_window = 20;
  double stabilization_tol = 1e-6;
};

/// Empty result iff the problem is well formed.
std::vector<std::string> validate_soc(const SocProblem& problem);

/// pools[t] minorizes the value-to-go of the state produced by stage t's
/// transition; the last pool holds the terminal cost pieces exactly.
struct SocState {
  std::vector<CutPool> pools;
  int iteration = 0;
};

SocState init_soc_state(const SocProblem& problem, const SocConfig& config);

double terminal_cost_value(const SocProblem& problem, const Vector& x);
double stage_cost_value(const SocRealization& re, const Vector& x,
                        const Vector& u);

struct SocStageSolution {
  double value = 0.0;
  Vector u;
  double theta = 0.0;  // only meaningful for the risk form
  Vector gradient;     // subgradient of the stage value in the state
};

/// Solves the stage problem at state x against the current approximation:
/// expected stage cost plus approximate value of the next state, as an LP
/// over the control (epigraph rows for cost pieces and for cuts).
SocStageSolution soc_stage_solve(const SocProblem& problem,
                                 const SocConfig& config,
                                 const SocState& state, int t,
                                 const Vector& x);

/// One cut per stage t = T-1..1 at the supplied trial states, each added
/// to the previous stage's pool.
void soc_backward(const SocProblem& problem, const SocConfig& config,
                  SocState& state, const std::vector<Vector>& trial_states);

struct SocForwardResult {
  std::vector<Vector> states;  // entering state per stage, then the final
  std::vector<Vector> controls;
  std::vector<int> path;            // sampled realization per stage
  std::vector<double> stage_costs;  // realized cost per stage
  std::vector<double> thetas;       // stage theta (risk form), else 0
  double cost = 0.0;                // path cost including terminal
};

SocForwardResult soc_forward(const SocProblem& problem,
                             const SocConfig& config, const SocState& state,
                             RngStream& rng);

double soc_lower_bound(const SocProblem& problem, const SocConfig& config,
                       const SocState& state);

struct SocRunResult {
  double lower_bound = 0.0;
  std::vector<double> lb_history;
  SocState state;
  std::string stop_rule;
  int iterations = 0;
};

SocRunResult run_soc(const SocProblem& problem, const SocConfig& config);

/// Risk-averse stage solve: joint minimization over (control, theta) of
/// sum_j p_j Psi(cost_j + value_j, theta), as an LP. Identity Psi
/// delegates to the risk-neutral solve.
SocStageSolution risk_soc_stage_solve(const SocProblem& problem,
                                      const SocConfig& config,
                                      const PsiForm& psi,
                                      const SocState& state, int t,
                                      const Vector& x);

void risk_soc_backward(const SocProblem& problem, const SocConfig& config,
                       const PsiForm& psi, SocState& state,
                       const std::vector<Vector>& trial_states);

SocForwardResult risk_soc_forward(const SocProblem& problem,
                                  const SocConfig& config, const PsiForm& psi,
                                  const SocState& state, RngStream& rng);

SocRunResult run_risk_soc(const SocProblem& problem, const SocConfig& config,
                          const PsiForm& psi);

struct RiskBoundReport {
  double mean = 0.0;
  double std_error = 0.0;
  double edge = 0.0;
  int paths = 0;
};

/// Backward scalar recursion along forward paths:
/// v_t = Psi(realized stage cost + v_{t+1}, recorded theta), seeded with
/// the terminal cost. The Monte Carlo mean over-estimates the nested
/// policy value; identity Psi collapses to the plain path cost.
RiskBoundReport risk_upper_bound(const SocProblem& problem,
                                 const SocConfig& config, const PsiForm& psi,
                                 const SocState& state, int paths,
                                 double z_alpha);

/// Cuts on the joint (state, control) space; pools[t] minorizes the
/// stage-t action-value function.
struct QFactorState {
  std::vector<CutPool> pools;
  int iteration = 0;
};

QFactorState init_qfactor_state(const SocProblem& problem,
                                const SocConfig& config);

struct QPair {
  Vector x;
  Vector u;
};

struct QStageSolution {
  double value = 0.0;
  Vector gradient;  // over the joint (state, control)
};

/// Action-value at a fixed pair: realized cost plus, per realization, the
/// approximate next-stage value minimized over the next control; the
/// gradient in (x, u) comes from active pieces and active cuts through
/// the transition.
QStageSolution qfactor_stage_solve(const SocProblem& problem,
                                   const SocConfig& config,
                                   const QFactorState& state, int t,
                                   const Vector& x, const Vector& u);

void qfactor_backward(const SocProblem& problem, const SocConfig& config,
                      QFactorState& state,
                      const std::vector<QPair>& trial_pairs);

struct QPolicy {
  Vector u;
  double value = 0.0;
};

/// Minimizes the stage-t action-value approximation over the control box.
QPolicy qfactor_policy(const SocProblem& problem, const SocConfig& config,
                       const QFactorState& state, int t, const Vector& x);

SocForwardResult qfactor_forward(const SocProblem& problem,
                                 const SocConfig& config,
                                 const QFactorState& state, RngStream& rng);

struct QFactorRunResult {
  double lower_bound = 0.0;
  std::vector<double> lb_history;
  QFactorState state;
  std::string stop_rule;
  int iterations = 0;
};

QFactorRunResult run_qfactor(const SocProblem& problem,
                             const SocConfig& config);

}  // namespace mssp
