// Shared desk-scale test instances.
#pragma once

#include <vector>

#include "mssp/model.hpp"
#include "mssp/rng.hpp"

namespace testutil {

using mssp::Matrix;
using mssp::MultistageProblem;
using mssp::StageBlock;
using mssp::StageRealization;
using mssp::Vector;

inline Matrix mat1(double v) { return Matrix::Constant(1, 1, v); }
inline Vector vec1(double v) { return Vector::Constant(1, v); }

// Two-stage simple recourse: stage 1 orders x at unit cost, stage 2 covers
// the shortfall y >= d - x at unit cost, d in {1, 3} equiprobable.
inline MultistageProblem simple_recourse() {
  MultistageProblem p;
  p.horizon = 2;
  p.stages.resize(2);

  StageRealization s1;
  s1.c = vec1(1.0);
  s1.A = Matrix(0, 1);
  s1.b = Vector(0);
  p.stages[0].realizations.push_back(s1);
  p.stages[0].lower = vec1(0.0);
  p.stages[0].upper = vec1(10.0);

  for (double d : {1.0, 3.0}) {
    StageRealization s2;
    s2.p = 0.5;
    s2.c = Vector(2);
    s2.c << 1.0, 0.0;  // y, slack
    s2.B = mat1(1.0);  // y - slack = d - x
    s2.A = Matrix(1, 2);
    s2.A << 1.0, -1.0;
    s2.b = vec1(d);
    p.stages[1].realizations.push_back(s2);
  }
  p.stages[1].lower = Vector::Zero(2);
  p.stages[1].upper = Vector::Constant(2, mssp::kInf);
  return p;
}

// Newsvendor: order cost 1, backorder 2, holding 0.5, demand {1,3}
// equiprobable. Optimum 3 at x = 1.
inline MultistageProblem newsvendor() {
  MultistageProblem p;
  p.horizon = 2;
  p.stages.resize(2);

  StageRealization s1;
  s1.c = vec1(1.0);
  s1.A = Matrix(0, 1);
  s1.b = Vector(0);
  p.stages[0].realizations.push_back(s1);
  p.stages[0].lower = vec1(0.0);
  p.stages[0].upper = vec1(10.0);

  for (double d : {1.0, 3.0}) {
    StageRealization s2;
    s2.p = 0.5;
    s2.c = Vector(2);
    s2.c << 2.0, 0.5;  // shortage, excess
    s2.B = mat1(1.0);  // x + s - e = d
    s2.A = Matrix(1, 2);
    s2.A << 1.0, -1.0;
    s2.b = vec1(d);
    p.stages[1].realizations.push_back(s2);
  }
  p.stages[1].lower = Vector::Zero(2);
  p.stages[1].upper = Vector::Constant(2, mssp::kInf);
  return p;
}

inline constexpr double kNewsvendorOptimum = 3.0;

// Random linear instance with relatively complete recourse by
// construction: every stage row carries a surplus/deficit slack pair with
// positive cost, so any incoming state is feasible; boxes are bounded.
inline MultistageProblem random_recourse_instance(mssp::RngStream& rng,
                                                  int T, int N) {
  auto u = [&]() { return rng.uniform(); };
  auto pick = [&](double a, double b) { return a + (b - a) * u(); };
  MultistageProblem p;
  p.horizon = T;
  p.stages.resize(T);
  int prev_n = 0;
  for (int t = 0; t < T; ++t) {
    const int nx = 1 + static_cast<int>(u() * 3.0);  // 1..3 structural vars
    const int m = 1;
    const int n = nx + 2 * m;  // plus slack pair, n_t <= 5
    StageBlock& blk = p.stages[t];
    blk.lower = Vector::Zero(n);
    blk.upper = Vector::Constant(n, mssp::kInf);
    blk.upper.head(nx).setConstant(2.0);

    const int reals = (t == 0) ? 1 : N;
    std::vector<double> probs(reals, 1.0 / reals);
    for (int r = 0; r < reals; ++r) {
      StageRealization re;
      re.p = probs[r];
      re.c = Vector(n);
      for (int j = 0; j < nx; ++j) re.c[j] = pick(0.1, 2.0);
      re.c[nx] = pick(1.0, 3.0);
      re.c[nx + 1] = pick(1.0, 3.0);
      re.A = Matrix::Zero(m, n);
      for (int j = 0; j < nx; ++j) re.A(0, j) = pick(-1.0, 1.0);
      re.A(0, nx) = 1.0;
      re.A(0, nx + 1) = -1.0;
      re.b = vec1(pick(-1.0, 2.0));
      if (t > 0) {
        re.B = Matrix::Zero(m, prev_n);
        for (int j = 0; j < prev_n; ++j) re.B(0, j) = pick(-1.0, 1.0);
      } else {
        re.A.conservativeResize(m, n);
      }
      blk.realizations.push_back(std::move(re));
    }
    prev_n = n;
  }
  return p;
}

// Newsvendor in state-control form: one control stage ordering u, the
// terminal cost holds the holding/backorder pieces. Same optimum as the
// two-stage version above.
inline mssp::SocProblem soc_newsvendor() {
  mssp::SocProblem p;
  p.horizon = 1;
  p.x1 = vec1(0.0);
  p.stages.resize(1);
  p.stages[0].u_lower = vec1(0.0);
  p.stages[0].u_upper = vec1(10.0);
  for (double d : {1.0, 3.0}) {
    mssp::SocRealization re;
    re.p = 0.5;
    re.A = mat1(0.0);
    re.B = mat1(1.0);
    re.b = vec1(-d);
    mssp::AffinePiece order;
    order.wx = vec1(0.0);
    order.wu = vec1(1.0);
    order.w0 = 0.0;
    re.cost.push_back(order);
    p.stages[0].realizations.push_back(re);
  }
  mssp::AffinePiece hold;
  hold.wx = vec1(0.5);
  hold.wu = Vector(0);
  mssp::AffinePiece back;
  back.wx = vec1(-2.0);
  back.wu = Vector(0);
  p.terminal_cost = {hold, back};
  return p;
}

// Scalar chain: x' = x + u - d, order cost u, terminal cost |x|. The
// deterministic flavor (d = 1.5 both stages) has hand value 2.5 from
// x1 = 0.5: min u1 + u2 + |u1 + u2 - 2.5|.
inline mssp::SocProblem soc_scalar_chain(bool stochastic) {
  mssp::SocProblem p;
  p.horizon = 2;
  p.x1 = vec1(0.5);
  p.stages.resize(2);
  mssp::AffinePiece order;
  order.wx = vec1(0.0);
  order.wu = vec1(1.0);
  for (int t = 0; t < 2; ++t) {
    p.stages[t].u_lower = vec1(0.0);
    p.stages[t].u_upper = vec1(2.0);
    std::vector<double> demands =
        stochastic ? std::vector<double>{1.0, 2.0} : std::vector<double>{1.5};
    for (double d : demands) {
      mssp::SocRealization re;
      re.p = 1.0 / demands.size();
      re.A = mat1(1.0);
      re.B = mat1(1.0);
      re.b = vec1(-d);
      re.cost.push_back(order);
      p.stages[t].realizations.push_back(re);
    }
  }
  mssp::AffinePiece up;
  up.wx = vec1(1.0);
  up.wu = Vector(0);
  mssp::AffinePiece down;
  down.wx = vec1(-1.0);
  down.wu = Vector(0);
  p.terminal_cost = {up, down};
  return p;
}

}  // namespace testutil
