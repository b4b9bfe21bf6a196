#pragma once

#include <cstdint>
#include <vector>

#include "mssp/cuts.hpp"
#include "mssp/model.hpp"
#include "mssp/sddp.hpp"

namespace mssp {

struct DualConfig {
  int max_iterations = 200;
  double gap_tol = 1e-4;       // relative (upper - lower) stop
  double penalty_rho = -1.0;   // < 0: 1e4 * max |c| over the problem
  double majorant_cap = 1e6;   // initial constant majorant
  double pi_box = 1e6;         // multiplier box, logged if ever binding
};

struct DualState {
  // pools[t-2][i] holds affine majorants of the concave dual value
  // function of stage t as a function of the stage t-1 multiplier, for
  // previous realization i. Cuts are upper bounds: value = min over cuts.
  std::vector<std::vector<CutPool>> pools;
  bool penalty_used = false;
  bool cap_everywhere_replaced = false;
  long majorant_floor_hits = 0;  // solves still riding the initial cap
  long pi_box_hits = 0;  // multiplier box binding would taint the bound
};

/// Rewrites finite upper bounds as explicit rows with slack columns so the
/// problem is in the x >= 0 standard form the dual recursion assumes.
/// Requires zero lower bounds and stagewise independence.
MultistageProblem standardize_for_dual(const MultistageProblem& problem);

DualState init_dual_state(const MultistageProblem& problem,
                          const DualConfig& config);

/// Resolved stage-t dual value (1-based t in 2..T, previous realization i)
/// at the multiplier pi_prev against the current majorant pools. Exposed
/// for majorant-validity checks.
double dual_stage_value(const MultistageProblem& standardized,
                        const DualConfig& config, const DualState& state,
                        int t, int i, const Vector& pi_prev);

/// Min over majorant cuts (the pool's floor cut is the initial cap).
double majorant_value(const CutPool& pool, const Vector& pi);

/// Adds one majorant cut per stage t = T..2 at the supplied trial
/// multipliers (stage duals of a primal forward pass).
void dual_backward(const MultistageProblem& problem, const DualConfig& config,
                   DualState& state, const std::vector<Vector>& trial_pi,
                   const std::vector<int>& realization_path);

/// Value of the first-stage dual problem against the current majorants;
/// a deterministic upper bound on the primal optimum.
double dual_upper_bound(const MultistageProblem& problem,
                        const DualConfig& config, const DualState& state);

struct JointIterationRow {
  int iteration = 0;
  double primal_lb = 0.0;
  double dual_ub = 0.0;
};

struct DualResult {
  double upper_bound = 0.0;
  double primal_lower_bound = 0.0;
  DualState state;
  SolveState primal_state;
  std::vector<JointIterationRow> log;
  std::string stop_rule;
  int iterations = 0;
  double penalty_rho = 0.0;
};

/// Joint primal/dual run: each iteration does one primal forward+backward
/// pass and one dual backward pass at the forward pass's stage duals.
DualResult run_dual_sddp(const MultistageProblem& problem,
                         const SddpConfig& primal_config,
                         const DualConfig& dual_config);

}  // namespace mssp
