#include <cmath>

#include "doctest.h"
#include "mssp/risk.hpp"
#include "mssp/rng.hpp"

using namespace mssp;

namespace {

std::pair<std::vector<double>, std::vector<double>> random_distribution(
    RngStream& rng, int n) {
  std::vector<double> Z(n), p(n);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    Z[i] = 10.0 * rng.uniform() - 5.0;
    p[i] = 0.05 + rng.uniform();
    sum += p[i];
  }
  for (double& w : p) w /= sum;
  return {Z, p};
}

}  // namespace

TEST_CASE("expectation and constants") {
  std::vector<double> Z{4.0, 4.0, 4.0}, p{0.2, 0.3, 0.5};
  for (auto risk : {CoherentRisk::expectation(), CoherentRisk::avar(0.7),
                    CoherentRisk::combo(0.4, 0.9)})
    CHECK(risk_evaluate(risk, Z, p) == doctest::Approx(4.0));
}

TEST_CASE("tail average of a two-point distribution") {
  std::vector<double> Z{0.0, 1.0}, p{0.5, 0.5};
  CHECK(risk_evaluate(CoherentRisk::avar(0.5), Z, p) == doctest::Approx(1.0));
  auto zeta = risk_subgradient(CoherentRisk::avar(0.5), Z, p);
  CHECK(zeta[0] == doctest::Approx(0.0));
  CHECK(zeta[1] == doctest::Approx(2.0));
}

TEST_CASE("zero mixing weight reproduces the expectation bitwise") {
  std::vector<double> Z{1.5, -2.0, 7.0}, p{0.25, 0.25, 0.5};
  auto combo0 = CoherentRisk::combo(0.0, 0.9);
  CHECK(risk_evaluate(combo0, Z, p) ==
        risk_evaluate(CoherentRisk::expectation(), Z, p));
  auto za = risk_subgradient(combo0, Z, p);
  auto zb = risk_subgradient(CoherentRisk::expectation(), Z, p);
  for (std::size_t i = 0; i < za.size(); ++i) CHECK(za[i] == zb[i]);
}

TEST_CASE("degenerate all-equal values return unit density") {
  std::vector<double> Z{2.0, 2.0}, p{0.5, 0.5};
  auto zeta = risk_subgradient(CoherentRisk::avar(0.3), Z, p);
  CHECK(zeta[0] == doctest::Approx(1.0));
  CHECK(zeta[1] == doctest::Approx(1.0));
}

TEST_CASE("dual consistency and density normalization") {
  RngStream rng(11, "risk-dual");
  for (int trial = 0; trial < 200; ++trial) {
    auto [Z, p] = random_distribution(rng, 2 + trial % 6);
    for (auto risk :
         {CoherentRisk::expectation(), CoherentRisk::avar(0.6),
          CoherentRisk::avar(0.95), CoherentRisk::combo(0.3, 0.8)}) {
      auto zeta = risk_subgradient(risk, Z, p);
      double norm = 0.0, value = 0.0;
      for (std::size_t j = 0; j < Z.size(); ++j) {
        CHECK(zeta[j] >= -1e-12);
        norm += p[j] * zeta[j];
        value += p[j] * zeta[j] * Z[j];
      }
      CHECK(norm == doctest::Approx(1.0).epsilon(1e-10));
      CHECK(value == doctest::Approx(risk_evaluate(risk, Z, p)).epsilon(1e-9));
    }
  }
}

TEST_CASE("coherence axioms on random finite distributions") {
  RngStream rng(13, "risk-coherence");
  for (int trial = 0; trial < 100; ++trial) {
    auto [Z, p] = random_distribution(rng, 4);
    auto [W, q] = random_distribution(rng, 4);
    (void)q;
    for (auto risk : {CoherentRisk::avar(0.7), CoherentRisk::combo(0.5, 0.6)}) {
      double rz = risk_evaluate(risk, Z, p);
      // Monotonicity.
      std::vector<double> Zup = Z;
      for (double& z : Zup) z += 0.5 * rng.uniform();
      CHECK(risk_evaluate(risk, Zup, p) >= rz - 1e-9);
      // Translation equivariance.
      double c = 3.0 * rng.uniform() - 1.5;
      std::vector<double> Zc = Z;
      for (double& z : Zc) z += c;
      CHECK(risk_evaluate(risk, Zc, p) == doctest::Approx(rz + c).epsilon(1e-9));
      // Positive homogeneity.
      double s = 0.1 + 2.0 * rng.uniform();
      std::vector<double> Zs = Z;
      for (double& z : Zs) z *= s;
      CHECK(risk_evaluate(risk, Zs, p) == doctest::Approx(s * rz).epsilon(1e-9));
      // Subadditivity on the same probability space.
      std::vector<double> ZW = Z;
      for (std::size_t j = 0; j < ZW.size(); ++j) ZW[j] += W[j];
      CHECK(risk_evaluate(risk, ZW, p) <=
            rz + risk_evaluate(risk, W, p) + 1e-9);
    }
  }
}

TEST_CASE("mixing weight is monotone when the tail dominates the mean") {
  std::vector<double> Z{0.0, 1.0, 5.0}, p{0.5, 0.3, 0.2};
  double prev = -1e100;
  for (double lam : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    double v = risk_evaluate(CoherentRisk::combo(lam, 0.8), Z, p);
    CHECK(v >= prev - 1e-12);
    prev = v;
  }
}

TEST_CASE("piecewise-linear risk kernel") {
  PsiForm psi{0.4, 0.75};
  // Below the knee only the linear part is active.
  CHECK(psi.value(1.0, 2.0) == doctest::Approx(0.6 * 1.0 + 0.4 * 2.0));
  CHECK(psi.slope_z(1.0, 2.0) == doctest::Approx(0.6));
  // Above the knee the tail term kicks in with weight lambda/(1-alpha).
  CHECK(psi.value(3.0, 2.0) ==
        doctest::Approx(0.6 * 3.0 + 0.4 * (2.0 + 4.0 * 1.0)));
  CHECK(psi.slope_z(3.0, 2.0) == doctest::Approx(0.6 + 1.6));
  // Kink takes the lower slope.
  CHECK(psi.slope_z(2.0, 2.0) == doctest::Approx(0.6));
  // Minimizing over theta recovers the risk value.
  std::vector<double> Z{0.0, 1.0}, p{0.5, 0.5};
  double want = risk_evaluate(CoherentRisk::combo(0.4, 0.75), Z, p);
  double best = 1e100;
  for (double theta = -1.0; theta <= 2.0; theta += 1e-4) {
    double v = 0.0;
    for (std::size_t j = 0; j < Z.size(); ++j)
      v += p[j] * psi.value(Z[j], theta);
    best = std::min(best, v);
  }
  CHECK(best == doctest::Approx(want).epsilon(1e-3));
  // Identity case.
  PsiForm id{0.0, 0.5};
  CHECK(id.identity());
  CHECK(id.value(7.0, -3.0) == 7.0);
}
