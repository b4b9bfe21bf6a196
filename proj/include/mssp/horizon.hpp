#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mssp/cuts.hpp"
#include "mssp/model.hpp"
#include "mssp/rng.hpp"
#include "mssp/sddp.hpp"

namespace mssp {

/// Discounted stationary control problem, optionally periodic: one block
/// per phase with SOC-style dynamics and max-of-affine costs, iid noise.
/// The state box is used for the cost bound and the grid oracles.
struct StationaryProblem {
  std::vector<SocStage> blocks;  // period = blocks.size()
  double gamma = 0.9;
  double kappa = -1.0;  // |stage cost| bound; < 0: computed from the boxes
  Vector x1;
  Vector x_lower;
  Vector x_upper;

  int period() const { return static_cast<int>(blocks.size()); }
  int state_dim() const { return static_cast<int>(x1.size()); }
};

std::vector<std::string> validate_stationary(const StationaryProblem& problem);

/// Exact max |stage cost| over the state and control boxes (max of each
/// affine piece in closed form, min of the max-of-affine by epigraph LP).
double stage_cost_bound(const StationaryProblem& problem);

/// Smallest integer T with kappa * gamma^T / (1 - gamma) <= eps.
int truncation_horizon(double gamma, double kappa, double eps);

struct StationaryConfig {
  int max_iterations = 500;
  double epsilon = 1e-2;  // truncation tail tolerance
  std::uint64_t seed = 0;
  double floor_value = 0.0;
  int upper_bound_paths = 0;  // 0 disables the statistical bound
  double z_alpha = 2.0;
  int stabilization_window = 20;
  double stabilization_tol = 1e-6;
};

struct StationaryStageSolution {
  double value = 0.0;
  Vector u;
  Vector gradient;
};

/// One Bellman application at state x for phase `block`: LP over the
/// control with epigraphs for the cost pieces and the cyclically next
/// pool's cuts, the latter discounted by gamma.
StationaryStageSolution stationary_stage_solve(
    const StationaryProblem& problem, const std::vector<CutPool>& pools,
    int block, const Vector& x);

/// Adds one cut for phase `block` at x_tilde; pools are cyclic, so the
/// single-phase case refines one shared pool.
void stationary_backward(const StationaryProblem& problem,
                         std::vector<CutPool>& pools, int block,
                         const Vector& x_tilde);

struct TruncatedPath {
  std::vector<Vector> states;  // pre-control states x_0..x_{T-1}
  std::vector<Vector> controls;
  std::vector<int> path;  // sampled realization index per step
  double cost = 0.0;      // discounted realized cost over the T steps
};

/// Simulates T steps of the pool policy; the tail error of `cost` against
/// the infinite-horizon value is at most the epsilon that produced T.
TruncatedPath truncated_forward(const StationaryProblem& problem,
                                const std::vector<CutPool>& pools, int T,
                                RngStream& rng);

struct StationaryResult {
  double lower_bound = 0.0;
  UpperBoundReport upper;  // edge includes the +epsilon truncation tail
  int truncation = 0;      // forward horizon used
  double kappa = 0.0;      // cost bound used
  std::vector<CutPool> pools;  // one per phase
  std::vector<double> lb_history;
  std::string stop_rule;
  int iterations = 0;
};

StationaryResult periodic_solve(const StationaryProblem& problem,
                                const StationaryConfig& config);

/// Single-phase entry point; delegates to periodic_solve, so the two are
/// bit-identical at period 1.
StationaryResult stationary_solve(const StationaryProblem& problem,
                                  const StationaryConfig& config);

/// Tabular value iteration on a scalar state grid (period 1 only); linear
/// interpolation with clamping for off-grid successors.
std::vector<double> grid_value_iteration(const StationaryProblem& problem,
                                         const std::vector<double>& x_grid,
                                         int u_points, double tol = 1e-10,
                                         int max_sweeps = 100000);

}  // namespace mssp
