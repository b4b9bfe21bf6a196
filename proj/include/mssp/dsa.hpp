#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mssp/model.hpp"

namespace mssp {

/// Multistage problem for the sampling-based primal-dual solver: the base
/// linear model plus optional diagonal quadratic cost terms per stage,
/// stage cost c'x + 0.5 x'diag(q)x. Feasible sets are the base boxes.
struct DsaProblem {
  MultistageProblem base;
  std::vector<Vector> quad;  // per stage; empty entry = linear
};

struct SpdtState {
  Vector p;       // primal iterate, inside its box
  Vector d;       // dual iterate
  Vector d_prev;  // previous dual, for extrapolation
};

struct SpdtParams {
  double theta = 1.0;  // dual extrapolation weight in [0,1]
  double tau = 1.0;    // primal prox strength
  double eta = 1.0;    // dual step divisor
};

struct SpdtStep {
  Vector p;
  Vector d;
  Vector d_tilde;
};

/// One primal-dual transformation on the stage saddle
///   min_x max_d  f(x) + qprime'x + d'(b - B u - A x)
/// with f(x) = c'x + 0.5 x'diag(quad)x (quad may be empty). The prox is a
/// per-coordinate clamp, exact for separable f over a box.
SpdtStep spdt(const SpdtState& state, const Vector& qprime, const Vector& u,
              const Matrix& A, const Matrix& B, const Vector& b,
              const Vector& c, const Vector& quad, const Vector& lower,
              const Vector& upper, const SpdtParams& params);

/// Saddle gap of (x_bar, y_bar) at a supplied comparator (x_star, y_star):
/// L(x_bar, y_star) - L(x_star, y_bar). Zero at an exact saddle; a small
/// value certifies -B' y_bar as an approximate subgradient of the
/// parametric optimal value in u.
double subgrad_certificate(const Vector& x_bar, const Vector& y_bar,
                           const Vector& x_star, const Vector& y_star,
                           const Matrix& A, const Matrix& B, const Vector& b,
                           const Vector& u, const Vector& c,
                           const Vector& quad);

enum class DsaMode { General, Strong };

struct DsaSchedule {
  std::vector<int> loops;   // per-stage step counts N_1..N_T
  DsaMode mode = DsaMode::General;
  double mu = -1.0;         // strong-convexity modulus; < 0: from quad
  double tau_scale = -1.0;  // < 0: from data norms
  double eta_scale = -1.0;
  double theta = 1.0;
  double dual_radius = 1e6;  // Euclidean clip on stage duals
};

struct DsaResult {
  Vector first_stage;
  double objective_estimate = 0.0;  // NaN when costs are quadratic
  double residual = 0.0;            // first-stage equality violation
  std::vector<long> samples;        // realization draws per stage
  long dual_clips = 0;
  double tau_scale = 0.0;  // schedule echo
  double eta_scale = 0.0;
  double mu = 0.0;
  std::string mode;
  std::string warning;  // set when the horizon makes sampling exponential
};

/// Nested primal-dual solve: each stage-t step draws one stage-(t+1)
/// realization and recurses to build a stochastic subgradient of the
/// cost-to-go from the child loop's averaged duals.
DsaResult dsa_solve(const DsaProblem& problem, const DsaSchedule& schedule,
                    std::uint64_t seed);

}  // namespace mssp
