#include "mssp/risk.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mssp {

namespace {

void check_inputs(const std::vector<double>& Z, const std::vector<double>& p) {
  if (Z.size() != p.size() || Z.empty())
    throw std::invalid_argument("risk: Z and p sizes must match and be nonempty");
  double sum = std::accumulate(p.begin(), p.end(), 0.0);
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("risk: probabilities must sum to 1");
}

double avar_value(double alpha, const std::vector<double>& Z,
                  const std::vector<double>& p) {
  // The variational form attains its minimum at an atom of Z.
  double best = 0.0;
  bool first = true;
  for (double theta : Z) {
    double tail = 0.0;
    for (std::size_t j = 0; j < Z.size(); ++j)
      tail += p[j] * std::max(Z[j] - theta, 0.0);
    double v = theta + tail / (1.0 - alpha);
    if (first || v < best) {
      best = v;
      first = false;
    }
  }
  return best;
}

std::vector<double> avar_density(double alpha, const std::vector<double>& Z,
                                 const std::vector<double>& p) {
  // Left alpha-quantile of the discrete distribution.
  std::vector<std::size_t> order(Z.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return Z[a] < Z[b]; });
  double acc = 0.0;
  double q = Z[order.back()];
  for (std::size_t k : order) {
    acc += p[k];
    if (acc >= alpha - 1e-12) {
      q = Z[k];
      break;
    }
  }
  double tail_prob = 0.0, atom_prob = 0.0;
  for (std::size_t j = 0; j < Z.size(); ++j) {
    if (Z[j] > q) tail_prob += p[j];
    else if (Z[j] == q) atom_prob += p[j];
  }
  double inv = 1.0 / (1.0 - alpha);
  double atom_weight =
      (atom_prob > 0.0) ? (1.0 - inv * tail_prob) / atom_prob : 0.0;
  std::vector<double> zeta(Z.size(), 0.0);
  for (std::size_t j = 0; j < Z.size(); ++j) {
    if (Z[j] > q) zeta[j] = inv;
    else if (Z[j] == q) zeta[j] = atom_weight;
  }
  return zeta;
}

}  // namespace

double risk_evaluate(const CoherentRisk& risk, const std::vector<double>& Z,
                     const std::vector<double>& p) {
  check_inputs(Z, p);
  double mean = 0.0;
  for (std::size_t j = 0; j < Z.size(); ++j) mean += p[j] * Z[j];
  switch (risk.kind) {
    case RiskKind::Expectation: return mean;
    case RiskKind::AVaR: return avar_value(risk.alpha, Z, p);
    case RiskKind::Combo:
      return (1.0 - risk.lambda) * mean +
             risk.lambda * avar_value(risk.alpha, Z, p);
  }
  throw std::logic_error("unreachable risk kind");
}

std::vector<double> risk_subgradient(const CoherentRisk& risk,
                                     const std::vector<double>& Z,
                                     const std::vector<double>& p) {
  check_inputs(Z, p);
  if (risk.kind == RiskKind::Expectation)
    return std::vector<double>(Z.size(), 1.0);
  std::vector<double> zeta = avar_density(risk.alpha, Z, p);
  if (risk.kind == RiskKind::AVaR) return zeta;
  for (double& z : zeta) z = (1.0 - risk.lambda) * 1.0 + risk.lambda * z;
  return zeta;
}

}  // namespace mssp
