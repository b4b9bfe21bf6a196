#pragma once

#include <vector>

#include "mssp/model.hpp"
#include "mssp/risk.hpp"

namespace mssp::oracle {

struct ExtensiveResult {
  double value = 0.0;
  Vector first_stage;
  long node_count = 0;
};

/// Exact risk-neutral optimum via the deterministic equivalent LP.
ExtensiveResult extensive_solve(const MultistageProblem& problem,
                                long node_cap = 10000);

/// Exact optimum of the nested risk-averse problem: one LP over the full
/// scenario tree with variational-form epigraph variables at every node.
/// Stagewise-independent problems only; risks follow the same indexing
/// convention as SddpConfig (empty = expectation, one entry = shared).
double nested_risk_optimum(const MultistageProblem& problem,
                           const std::vector<CoherentRisk>& stage_risks,
                           long node_cap = 10000);

/// Inventory benchmark: orders at stages 1..T-1 face demands at stages
/// 2..T; holding/backlog costs are charged on the post-demand level.
struct InventorySpec {
  std::vector<double> order_cost;           // per ordering stage
  double holding = 0.0;
  double backlog = 0.0;
  std::vector<std::vector<double>> demand;  // per demand stage
  std::vector<std::vector<double>> demand_prob;
  double grid_lo = 0.0;
  double grid_hi = 0.0;
  double grid_step = 1e-3;
};

/// Order-up-to levels y*_t by backward grid recursion; the reported
/// resolution error is one grid step.
std::vector<double> basestock_levels(const InventorySpec& spec);

}  // namespace mssp::oracle
