// Test-only exact LP oracle. Enumerates basic solutions of
//   min c'x  s.t.  A x = b,  lo <= x <= hi   (all bounds finite)
// in rational arithmetic, so the box guarantees every instance is either
// Optimal or Infeasible. Intended for small random instances only.
#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <vector>

#include "mssp/lp.hpp"
#include "mssp/rng.hpp"

namespace testutil {

using Rat = boost::multiprecision::cpp_rational;
using RatVec = std::vector<Rat>;
using RatMat = std::vector<RatVec>;

struct RatLp {
  RatVec c, b, lo, hi;
  RatMat A;  // m rows of n entries
};

enum class RatStatus { Optimal, Infeasible, RankDeficient };

struct RatResult {
  RatStatus status = RatStatus::Infeasible;
  Rat value = 0;
  RatVec x;
};

// Solves the m x m system M z = r by Gaussian elimination. Returns false
// when M is singular.
inline bool rat_solve(RatMat M, RatVec r, RatVec& z) {
  const int m = static_cast<int>(r.size());
  for (int col = 0; col < m; ++col) {
    int piv = -1;
    for (int row = col; row < m; ++row)
      if (M[row][col] != 0) {
        piv = row;
        break;
      }
    if (piv < 0) return false;
    std::swap(M[piv], M[col]);
    std::swap(r[piv], r[col]);
    for (int row = 0; row < m; ++row) {
      if (row == col || M[row][col] == 0) continue;
      Rat f = M[row][col] / M[col][col];
      for (int k = col; k < m; ++k) M[row][k] -= f * M[col][k];
      r[row] -= f * r[col];
    }
  }
  z.resize(m);
  for (int i = 0; i < m; ++i) z[i] = r[i] / M[i][i];
  return true;
}

inline int rat_rank(RatMat M) {
  if (M.empty()) return 0;
  const int m = static_cast<int>(M.size());
  const int n = static_cast<int>(M[0].size());
  int rank = 0;
  for (int col = 0; col < n && rank < m; ++col) {
    int piv = -1;
    for (int row = rank; row < m; ++row)
      if (M[row][col] != 0) {
        piv = row;
        break;
      }
    if (piv < 0) continue;
    std::swap(M[piv], M[rank]);
    for (int row = rank + 1; row < m; ++row) {
      if (M[row][col] == 0) continue;
      Rat f = M[row][col] / M[rank][col];
      for (int k = col; k < n; ++k) M[row][k] -= f * M[rank][k];
    }
    ++rank;
  }
  return rank;
}

inline RatResult solve_exact(const RatLp& lp) {
  const int n = static_cast<int>(lp.c.size());
  const int m = static_cast<int>(lp.b.size());
  RatResult out;
  if (m > 0 && rat_rank(lp.A) < m) {
    out.status = RatStatus::RankDeficient;
    return out;
  }

  std::vector<int> basic(m);
  for (int i = 0; i < m; ++i) basic[i] = i;
  bool found = false;

  auto try_basis = [&](const std::vector<int>& bas) {
    std::vector<bool> is_basic(n, false);
    for (int j : bas) is_basic[j] = true;
    std::vector<int> nonbasic;
    for (int j = 0; j < n; ++j)
      if (!is_basic[j]) nonbasic.push_back(j);
    const int nn = static_cast<int>(nonbasic.size());
    for (unsigned long mask = 0; mask < (1ul << nn); ++mask) {
      RatVec x(n);
      for (int k = 0; k < nn; ++k) {
        int j = nonbasic[k];
        x[j] = (mask >> k & 1) ? lp.hi[j] : lp.lo[j];
      }
      RatVec rhs = lp.b;
      for (int i = 0; i < m; ++i)
        for (int k = 0; k < nn; ++k) rhs[i] -= lp.A[i][nonbasic[k]] * x[nonbasic[k]];
      RatMat B(m, RatVec(m));
      for (int i = 0; i < m; ++i)
        for (int r = 0; r < m; ++r) B[i][r] = lp.A[i][bas[r]];
      RatVec xb;
      if (m > 0 && !rat_solve(B, rhs, xb)) continue;
      bool feasible = true;
      for (int r = 0; r < m; ++r) {
        x[bas[r]] = xb[r];
        if (xb[r] < lp.lo[bas[r]] || xb[r] > lp.hi[bas[r]]) feasible = false;
      }
      if (!feasible) continue;
      Rat value = 0;
      for (int j = 0; j < n; ++j) value += lp.c[j] * x[j];
      if (!found || value < out.value) {
        out.value = value;
        out.x = x;
        found = true;
      }
    }
  };

  if (m == 0) {
    try_basis({});
  } else {
    // All m-subsets of variables in lexicographic order.
    for (;;) {
      try_basis(basic);
      int i = m - 1;
      while (i >= 0 && basic[i] == n - m + i) --i;
      if (i < 0) break;
      ++basic[i];
      for (int k = i + 1; k < m; ++k) basic[k] = basic[k - 1] + 1;
    }
  }

  out.status = found ? RatStatus::Optimal : RatStatus::Infeasible;
  return out;
}

// Random small-integer LP over an all-finite box; regenerates until the
// constraint matrix has full row rank so the oracle's enumeration is valid.
inline std::pair<RatLp, mssp::lp::LpProblem> random_boxed_lp(
    mssp::RngStream& rng, int max_vars = 6) {
  auto rand_int = [&](int a, int b) {
    return a + static_cast<int>(rng.uniform() * (b - a + 1));
  };
  for (;;) {
    int n = rand_int(2, max_vars);
    int m = rand_int(1, std::min(n - 1, 3));
    RatLp lp;
    lp.c.resize(n);
    lp.lo.resize(n);
    lp.hi.resize(n);
    lp.A.assign(m, RatVec(n));
    lp.b.resize(m);
    for (int j = 0; j < n; ++j) {
      lp.c[j] = rand_int(-5, 5);
      lp.lo[j] = rand_int(-4, 0);
      lp.hi[j] = rand_int(1, 5);
    }
    for (int i = 0; i < m; ++i) {
      lp.b[i] = rand_int(-5, 5);
      for (int j = 0; j < n; ++j) lp.A[i][j] = rand_int(-3, 3);
    }
    if (rat_rank(lp.A) < m) continue;

    mssp::lp::LpProblem dp;
    dp.c = mssp::Vector(n);
    dp.lower = mssp::Vector(n);
    dp.upper = mssp::Vector(n);
    dp.A = mssp::Matrix(m, n);
    dp.b = mssp::Vector(m);
    for (int j = 0; j < n; ++j) {
      dp.c[j] = static_cast<double>(lp.c[j]);
      dp.lower[j] = static_cast<double>(lp.lo[j]);
      dp.upper[j] = static_cast<double>(lp.hi[j]);
    }
    for (int i = 0; i < m; ++i) {
      dp.b[i] = static_cast<double>(lp.b[i]);
      for (int j = 0; j < n; ++j) dp.A(i, j) = static_cast<double>(lp.A[i][j]);
    }
    return {lp, dp};
  }
}

}  // namespace testutil
