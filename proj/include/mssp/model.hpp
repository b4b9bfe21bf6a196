#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mssp/linalg.hpp"
#include "mssp/lp.hpp"

namespace mssp {

/// One realization of the stage data: rows B x_{t-1} + A x_t = b with
/// per-unit cost c and probability p. Stage 1 has a single realization
/// with an empty B.
struct StageRealization {
  Vector c;
  Matrix B;
  Matrix A;
  Vector b;
  double p = 1.0;
};

struct StageBlock {
  std::vector<StageRealization> realizations;
  Vector lower;
  Vector upper;

  int num_vars() const { return static_cast<int>(lower.size()); }
  int num_rows() const {
    return realizations.empty() ? 0
                                : static_cast<int>(realizations[0].b.size());
  }
};

struct LatticeNode {
  Vector center;
  StageRealization data;
};

/// Markov-chain scenario lattice: per-stage node sets and row-stochastic
/// transition matrices. transitions[t] maps stage t+1 nodes to stage t+2
/// nodes (0-based), so there are horizon-1 matrices.
struct MarkovLattice {
  std::vector<std::vector<LatticeNode>> nodes;
  std::vector<Matrix> transitions;
};

enum class Dependence { StagewiseIndependent, MarkovChain };

struct MultistageProblem {
  int horizon = 0;
  std::vector<StageBlock> stages;
  Dependence dependence = Dependence::StagewiseIndependent;
  std::optional<MarkovLattice> lattice;
};

/// Max-of-affine cost piece over (state, control): wx'x + wu'u + w0.
struct AffinePiece {
  Vector wx;
  Vector wu;
  double w0 = 0.0;
};

struct SocRealization {
  Matrix A;
  Matrix B;
  Vector b;
  std::vector<AffinePiece> cost;
  double p = 1.0;
};

struct SocStage {
  std::vector<SocRealization> realizations;
  Vector u_lower;
  Vector u_upper;
};

/// State-optimization form: x_{t+1} = A x_t + B u_t + b, box controls,
/// max-of-affine stage and terminal costs, deterministic initial state.
struct SocProblem {
  int horizon = 0;
  std::vector<SocStage> stages;
  std::vector<AffinePiece> terminal_cost;  // pieces in x only
  Vector x1;

  int state_dim() const { return static_cast<int>(x1.size()); }
};

/// Report-based validation: empty result iff the problem is well formed.
std::vector<std::string> validate(const MultistageProblem& problem);

/// Per-stage finite noise support for the autoregressive lifting.
struct NoiseSupport {
  std::vector<Vector> points;
  std::vector<double> probs;
};

/// Lifts a problem whose randomness enters only through the rhs driven by
/// the recursion xi_t = mu + Phi xi_{t-1} + eps_t into a stagewise
/// independent problem over the decision (x_t, xi_t). Bounds for the xi
/// block come from interval propagation of the recursion.
MultistageProblem lift_autoregressive(const MultistageProblem& base,
                                      const Matrix& Phi, const Vector& mu,
                                      const std::vector<NoiseSupport>& noise);

struct ExtensiveForm {
  lp::LpProblem lp;
  std::vector<int> first_stage_vars;  // column indices of x_1
  long node_count = 0;
};

/// Deterministic-equivalent LP over the scenario tree. Refuses trees
/// larger than the node cap; this path exists for verification only.
ExtensiveForm to_extensive_form(const MultistageProblem& problem,
                                long node_cap = 10000);

}  // namespace mssp
