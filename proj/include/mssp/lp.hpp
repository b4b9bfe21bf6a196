#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "mssp/cuts.hpp"
#include "mssp/linalg.hpp"

namespace mssp::lp {

enum class LpStatus { Optimal, Infeasible, Unbounded };

/// min c'x  s.t.  A x = b,  lower <= x <= upper.
/// Bounds may be -inf / +inf entrywise.
struct LpProblem {
  Vector c;
  Matrix A;
  Vector b;
  Vector lower;
  Vector upper;

  int num_vars() const { return static_cast<int>(c.size()); }
  int num_rows() const { return static_cast<int>(b.size()); }
};

enum class VarStatus : unsigned char { Basic, AtLower, AtUpper, NonbasicFree };

/// Warm-start basis: one status per structural variable plus the basic set.
struct Basis {
  std::vector<VarStatus> status;
  std::vector<int> basic;  // variable index per row
};

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  double value = 0.0;
  Vector x;
  Vector duals;  // one multiplier per equality row
  Basis basis;
  int pivots = 0;
};

/// Thrown when the simplex exceeds its pivot cap without progress.
class DegenerateCycleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SimplexOptions {
  double pivot_tol = 1e-9;
  double feas_tol = 1e-7;
  double cost_tol = 1e-9;
  int bland_after_degenerate = 50;  // consecutive degenerate pivots
  int pivot_cap = 50000;
  int refactor_every = 64;  // pivots between basis refactorizations
};

LpSolution solve(const LpProblem& problem, const Basis* warm_start = nullptr,
                 const SimplexOptions& options = {});

/// Solution of a cut-augmented stage problem
///   min c'x + theta  s.t.  A x = rhs,  theta >= cut_i(x)  for every cut,
/// with duals reported for the original equality rows only.
struct StageSolution {
  LpStatus status = LpStatus::Infeasible;
  double value = 0.0;  // c'x + theta
  Vector x;
  double theta = 0.0;
  Vector duals;
};

/// Solves the stage LP with the linking term folded into the right-hand
/// side: rows become A x = b - B x_prev. Pass an empty B for the first stage.
StageSolution solve_with_cuts(const LpProblem& stage_lp, const CutPool& pool,
                              const Matrix& B, const Vector& x_prev,
                              const SimplexOptions& options = {});

/// Plain-text dump of an LP (objective row, constraint rows, bounds),
/// intended for bug reports.
std::string dump(const LpProblem& problem);

}  // namespace mssp::lp
