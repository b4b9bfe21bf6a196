#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mssp/cuts.hpp"
#include "mssp/model.hpp"
#include "mssp/risk.hpp"
#include "mssp/rng.hpp"

namespace mssp {

struct SddpConfig {
  int max_iterations = 200;
  int forward_paths_per_iter = 1;
  int upper_bound_paths = 2000;  // M
  double z_alpha = 2.0;
  std::uint64_t seed = 0;
  double gap_tol = 0.0;  // <= 0 disables the gap stop rule
  int stabilization_window = 20;
  double stabilization_tol = 1e-6;
  double floor_value = 0.0;  // initial constant lower bound per pool
  long policy_eval_cap = 10000;  // tree nodes for the exact gap check
  std::vector<CoherentRisk> stage_risks;  // empty = risk neutral

  const CoherentRisk risk_at(int t) const {
    if (stage_risks.empty()) return CoherentRisk::expectation();
    if (stage_risks.size() == 1) return stage_risks[0];
    return stage_risks[static_cast<std::size_t>(t)];
  }
};

struct SolveState {
  // pools[t][i] approximates the cost-to-go after deciding x_t while at
  // lattice node i of stage t (stagewise-independent problems have one
  // node per stage). Index t runs over 0..T-2.
  std::vector<std::vector<CutPool>> pools;
  int iteration = 0;
  std::vector<double> lb_history;
  std::uint64_t forward_paths_used = 0;

  const CutPool& pool(int t, int node) const { return pools[t][node]; }
  CutPool& pool(int t, int node) { return pools[t][node]; }
};

struct ForwardResult {
  std::vector<Vector> states;      // x_t for t = 0..T-1
  std::vector<int> node_path;      // lattice node per stage (zeros if iid)
  std::vector<int> realization_path;  // sampled realization index per stage
  std::vector<Vector> stage_duals; // equality-row duals per stage
  double cost = 0.0;               // realized path cost
};

struct UpperBoundReport {
  double mean = 0.0;
  double std_error = 0.0;
  double edge = 0.0;
  int paths = 0;
};

struct IterationRow {
  int iteration = 0;
  double lower_bound = 0.0;
  double elapsed_seconds = 0.0;
  long total_cuts = 0;
};

struct SddpResult {
  Vector first_stage;
  double lower_bound = 0.0;
  UpperBoundReport upper;
  std::string stop_rule;
  int iterations = 0;
  SolveState state;
  std::vector<IterationRow> log;
};

SolveState init_state(const MultistageProblem& problem,
                      const SddpConfig& config);

/// Samples one scenario path, solving each stage against the current
/// pools; the visited states become the next backward pass's trial points.
ForwardResult forward_pass(const MultistageProblem& problem,
                           const SddpConfig& config, const SolveState& state,
                           RngStream& rng);

/// Adds one cut per stage t = T-1..1 at the given trial points, averaging
/// stage values and duals over successor realizations with the stage risk
/// measure's weights.
void backward_pass(const MultistageProblem& problem, const SddpConfig& config,
                   SolveState& state, const std::vector<Vector>& trial_points,
                   const std::vector<int>& node_path);

/// Value of the first-stage problem against the current pools; a valid
/// deterministic lower bound on the optimum.
double lower_bound(const MultistageProblem& problem, const SddpConfig& config,
                   const SolveState& state);

UpperBoundReport statistical_upper_bound(const MultistageProblem& problem,
                                         const SddpConfig& config,
                                         SolveState& state, int paths);

/// Exact expected (or nested-risk) cost of the current cut-pool policy by
/// full tree enumeration. Throws when the tree exceeds the cap.
double evaluate_policy_exact(const MultistageProblem& problem,
                             const SddpConfig& config, const SolveState& state);

SddpResult run_sddp(const MultistageProblem& problem, const SddpConfig& config);

}  // namespace mssp
