#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "mssp/model.hpp"
#include "mssp/sddp.hpp"

namespace mssp {

struct EddpConfig {
  double epsilon = 1e-3;
  double delta = -1.0;     // < 0: use epsilon
  int max_iterations = 2000;
  bool early_stop = false;  // truncate the forward pass at near-saturated
                            // selections
  double diameter = -1.0;   // < 0: largest linking-stage box diagonal
  int dimension = -1;       // < 0: largest linking-stage dimension
  double floor_value = 0.0;
};

/// Per linking stage: points whose cut approximation stopped improving
/// (gap certificate <= eps) and that are pairwise delta-distinguishable.
struct SaturatedSet {
  std::vector<std::vector<Vector>> points;
  std::vector<std::vector<double>> gaps;  // certificate stored at insertion
  std::vector<double> eps_t;
  std::vector<double> delta_t;

  double dist(int t, const Vector& x) const;
};

/// Index and distance of the candidate farthest from the saturated points;
/// ties to the lowest index, distance to an empty set is +inf.
std::pair<int, double> explorative_select(
    const std::vector<Vector>& candidates,
    const std::vector<Vector>& saturated);

/// Inserts x into stage t's set when gap <= eps_t and x is
/// delta-distinguishable from every stored point; returns whether inserted.
bool saturation_update(SaturatedSet& sat, int t, const Vector& x, double gap);

struct EddpResult {
  Vector first_stage;
  double lower_bound = 0.0;
  double policy_value = 0.0;  // exact value of committing to first_stage
  double gap = 0.0;           // policy_value - lower_bound
  double gap_bound = 0.0;     // 2 * m_hat * (T-1) * epsilon
  double m_hat = 0.0;         // largest observed cut gradient norm
  double iteration_bound = 0.0;
  int iterations = 0;
  std::string stop_rule;
  SolveState state;
  SaturatedSet saturated;
};

/// Deterministic explorative run: every forward stage solves all N
/// subproblems and advances through the candidate farthest from the
/// saturated points; stops when the first-stage solution lands within
/// delta of its saturated set.
EddpResult run_eddp(const MultistageProblem& problem,
                    const EddpConfig& config);

/// Audit dump: stage, certificate gap, point coordinates.
void dump_saturated(std::ostream& out, const SaturatedSet& sat);

}  // namespace mssp
