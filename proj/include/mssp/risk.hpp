#pragma once

#include <vector>

namespace mssp {

enum class RiskKind { Expectation, AVaR, Combo };

/// Finite-support coherent risk measure: expectation, average
/// value-at-risk at level alpha, or their convex combination
/// (1-lambda) E + lambda AV@R_alpha.
struct CoherentRisk {
  RiskKind kind = RiskKind::Expectation;
  double lambda = 0.0;
  double alpha = 0.5;

  static CoherentRisk expectation() { return {}; }
  static CoherentRisk avar(double alpha) {
    return {RiskKind::AVaR, 1.0, alpha};
  }
  static CoherentRisk combo(double lambda, double alpha) {
    return {RiskKind::Combo, lambda, alpha};
  }

  bool is_expectation() const {
    return kind == RiskKind::Expectation ||
           (kind == RiskKind::Combo && lambda == 0.0);
  }
};

/// Risk value of the finite distribution (Z, p). AV@R uses the
/// variational form minimized exactly over theta in {Z_j}.
double risk_evaluate(const CoherentRisk& risk, const std::vector<double>& Z,
                     const std::vector<double>& p);

/// Maximizing density zeta of the dual representation: zeta_j >= 0 and
/// sum p_j zeta_j = 1, with risk value = sum p_j zeta_j Z_j.
std::vector<double> risk_subgradient(const CoherentRisk& risk,
                                     const std::vector<double>& Z,
                                     const std::vector<double>& p);

/// Scalar kernel Psi(z, theta) = (1-lambda) z +
/// lambda (theta + (1-alpha)^{-1} [z - theta]_+), so that the risk equals
/// min_theta E[Psi(Z, theta)]. lambda = 0 is the identity in z.
struct PsiForm {
  double lambda = 0.0;
  double alpha = 0.5;

  bool identity() const { return lambda == 0.0; }
  double value(double z, double theta) const {
    double pos = z - theta;
    if (pos < 0.0) pos = 0.0;
    return (1.0 - lambda) * z + lambda * (theta + pos / (1.0 - alpha));
  }
  /// Partial subgradient in z; the kink z = theta takes the lower
  /// endpoint 1 - lambda for determinism.
  double slope_z(double z, double theta) const {
    if (z > theta) return 1.0 - lambda + lambda / (1.0 - alpha);
    return 1.0 - lambda;
  }
};

}  // namespace mssp
