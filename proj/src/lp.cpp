#include "mssp/lp.hpp"

#include <cmath>
#include <sstream>
#include <string>

namespace mssp::lp {

namespace {

// Drifted eta updates can let a numerically false pivot through; the next
// refactorization then sees an exactly singular basis. Recoverable by
// re-solving with an exact inverse at every pivot.
struct SingularBasisError : std::runtime_error {
  SingularBasisError() : std::runtime_error("singular simplex basis") {}
};

// Bounded-variable primal simplex working set. Columns past the structural
// variables are phase-1 artificials; phase 2 pins their bounds to [0,0].
struct Working {
  Matrix A;
  Vector c, b, lo, hi;
  std::vector<VarStatus> stat;
  std::vector<int> basic;  // variable index per row
  Vector xB;               // basic variable values, per row
  Vector y;                // row duals at the last factorization
  int pivots = 0;

  int rows() const { return static_cast<int>(b.size()); }
  int cols() const { return static_cast<int>(c.size()); }

  double nonbasic_value(int j) const {
    switch (stat[j]) {
      case VarStatus::AtLower: return lo[j];
      case VarStatus::AtUpper: return hi[j];
      default: return 0.0;  // NonbasicFree rests at 0
    }
  }

  Vector full_x() const {
    Vector x(cols());
    for (int j = 0; j < cols(); ++j)
      x[j] = (stat[j] == VarStatus::Basic) ? 0.0 : nonbasic_value(j);
    for (int r = 0; r < rows(); ++r) x[basic[r]] = xB[r];
    return x;
  }
};

enum class IterResult { Optimal, Unbounded };

IterResult iterate(Working& w, const SimplexOptions& opt) {
  const int m = w.rows();
  const int n = w.cols();
  int degenerate_run = 0;

  // Explicit basis inverse with rank-1 eta updates per pivot; refactorized
  // periodically so drift cannot accumulate.
  Matrix Binv;
  int since_refactor = 0;
  auto refactor = [&]() {
    Matrix B(m, m);
    for (int r = 0; r < m; ++r) B.col(r) = w.A.col(w.basic[r]);
    Eigen::FullPivLU<Matrix> lu(B);
    if (m > 0 && !lu.isInvertible()) throw SingularBasisError();
    if (m > 0) Binv = lu.inverse();
    since_refactor = 0;
  };
  refactor();

  for (;;) {
    if (w.pivots > opt.pivot_cap)
      throw DegenerateCycleError("simplex pivot cap exceeded");
    if (since_refactor >= opt.refactor_every) refactor();

    Vector rhs = w.b;
    for (int j = 0; j < n; ++j) {
      if (w.stat[j] == VarStatus::Basic) continue;
      double v = w.nonbasic_value(j);
      if (v != 0.0) rhs -= w.A.col(j) * v;
    }
    w.xB = (m > 0) ? Vector(Binv * rhs) : Vector(0);

    Vector cB(m);
    for (int r = 0; r < m; ++r) cB[r] = w.c[w.basic[r]];
    w.y = (m > 0) ? Vector(Binv.transpose() * cB) : Vector(0);
    Vector red = w.c;
    if (m > 0) red.noalias() -= w.A.transpose() * w.y;

    bool bland = degenerate_run >= opt.bland_after_degenerate;
    int enter = -1, dir = 0;
    double best_gain = opt.cost_tol;
    for (int j = 0; j < n; ++j) {
      if (w.stat[j] == VarStatus::Basic) continue;
      if (w.lo[j] == w.hi[j]) continue;  // fixed, never enters
      double d = red[j];
      int cand_dir = 0;
      if ((w.stat[j] == VarStatus::AtLower ||
           w.stat[j] == VarStatus::NonbasicFree) &&
          d < -opt.cost_tol)
        cand_dir = +1;
      else if ((w.stat[j] == VarStatus::AtUpper ||
                w.stat[j] == VarStatus::NonbasicFree) &&
               d > opt.cost_tol)
        cand_dir = -1;
      if (cand_dir == 0) continue;
      if (bland) {
        enter = j;
        dir = cand_dir;
        break;
      }
      double gain = std::abs(d);
      if (gain > best_gain) {
        best_gain = gain;
        enter = j;
        dir = cand_dir;
      }
    }
    if (enter < 0) {
      // confirm optimality against a fresh inverse so the returned duals
      // carry no eta-update drift
      if (since_refactor > 0) {
        refactor();
        continue;
      }
      return IterResult::Optimal;
    }

    Vector col = (m > 0) ? Vector(Binv * w.A.col(enter)) : Vector(0);
    // Scale the pivot tolerance so a tiny element of a large column never
    // becomes the pivot; that is what turns the basis numerically singular.
    double piv_tol =
        opt.pivot_tol * std::max(1.0, (m > 0) ? col.lpNorm<Eigen::Infinity>() : 0.0);

    // Step length limits: entering variable's far bound, then each basic
    // variable hitting one of its own bounds.
    double t_max = kInf;
    int leave_row = -1;
    VarStatus leave_to = VarStatus::AtLower;
    if (dir > 0 && std::isfinite(w.hi[enter]))
      t_max = w.hi[enter] - w.nonbasic_value(enter);
    else if (dir < 0 && std::isfinite(w.lo[enter]))
      t_max = w.nonbasic_value(enter) - w.lo[enter];

    for (int r = 0; r < m; ++r) {
      double delta = -dir * col[r];  // x_B[r] moves by delta * t
      int jb = w.basic[r];
      double limit = kInf;
      VarStatus to = VarStatus::AtLower;
      if (delta > piv_tol && std::isfinite(w.hi[jb])) {
        limit = (w.hi[jb] - w.xB[r]) / delta;
        to = VarStatus::AtUpper;
      } else if (delta < -piv_tol && std::isfinite(w.lo[jb])) {
        limit = (w.lo[jb] - w.xB[r]) / delta;
        to = VarStatus::AtLower;
      } else {
        continue;
      }
      if (limit < 0.0) limit = 0.0;
      bool tie = leave_row >= 0 && std::abs(limit - t_max) <= 1e-12;
      if (tie ? jb < w.basic[leave_row] : limit < t_max) {
        t_max = limit;
        leave_row = r;
        leave_to = to;
      }
    }

    if (!std::isfinite(t_max)) return IterResult::Unbounded;

    ++w.pivots;
    degenerate_run = (t_max <= 1e-12) ? degenerate_run + 1 : 0;

    if (leave_row < 0) {
      // Bound flip: entering variable runs to its opposite bound.
      w.stat[enter] =
          (dir > 0) ? VarStatus::AtUpper : VarStatus::AtLower;
      continue;
    }

    int jb = w.basic[leave_row];
    w.stat[jb] = leave_to;
    w.stat[enter] = VarStatus::Basic;
    w.basic[leave_row] = enter;

    double piv = col[leave_row];
    Vector lrow = Binv.row(leave_row).transpose() / piv;
    Vector factor = col;
    factor[leave_row] = piv - 1.0;
    Binv.noalias() -= factor * lrow.transpose();
    ++since_refactor;
  }
}

bool basis_feasible(Working& w, double feas_tol) {
  const int m = w.rows();
  Matrix B(m, m);
  for (int r = 0; r < m; ++r) B.col(r) = w.A.col(w.basic[r]);
  Eigen::FullPivLU<Matrix> lu(B);
  if (m > 0 && !lu.isInvertible()) return false;
  Vector rhs = w.b;
  for (int j = 0; j < w.cols(); ++j) {
    if (w.stat[j] == VarStatus::Basic) continue;
    double v = w.nonbasic_value(j);
    if (v != 0.0) rhs -= w.A.col(j) * v;
  }
  w.xB = (m > 0) ? Vector(lu.solve(rhs)) : Vector(0);
  for (int r = 0; r < m; ++r) {
    int jb = w.basic[r];
    if (w.xB[r] < w.lo[jb] - feas_tol || w.xB[r] > w.hi[jb] + feas_tol)
      return false;
  }
  return true;
}

VarStatus initial_status(double lo, double hi) {
  if (std::isfinite(lo)) return VarStatus::AtLower;
  if (std::isfinite(hi)) return VarStatus::AtUpper;
  return VarStatus::NonbasicFree;
}

LpSolution finish(const LpProblem& p, Working& w, int pivots) {
  const int n = p.num_vars();
  const int m = p.num_rows();
  LpSolution sol;
  sol.status = LpStatus::Optimal;
  Vector x = w.full_x();
  sol.x = x.head(n);
  sol.value = p.c.dot(sol.x);
  sol.duals = (m > 0) ? Vector(w.y.head(m)) : Vector(0);
  sol.pivots = pivots;
  bool clean = true;  // basis reusable only if no artificial stayed basic
  for (int idx : w.basic)
    if (idx >= n) clean = false;
  if (clean) {
    sol.basis.basic = w.basic;
    sol.basis.status.assign(w.stat.begin(), w.stat.begin() + n);
  }
  return sol;
}

// Inf-norm row/column equilibration with power-of-two factors, so scaling
// and unscaling are exact in floating point.
void equilibrate(LpProblem& p, Vector& rscale, Vector& cscale) {
  const int m = p.num_rows();
  const int n = p.num_vars();
  rscale = Vector::Ones(m);
  cscale = Vector::Ones(n);
  auto pow2 = [](double v) { return std::exp2(-std::round(std::log2(v))); };
  for (int i = 0; i < m; ++i) {
    double s = p.A.row(i).cwiseAbs().maxCoeff();
    if (s > 0.0 && std::isfinite(s)) rscale[i] = pow2(s);
    p.A.row(i) *= rscale[i];
    p.b[i] *= rscale[i];
  }
  for (int j = 0; j < n; ++j) {
    double s = (m > 0) ? p.A.col(j).cwiseAbs().maxCoeff() : 0.0;
    if (s == 0.0) s = std::abs(p.c[j]);
    if (s > 0.0 && std::isfinite(s)) cscale[j] = pow2(s);
    if (m > 0) p.A.col(j) *= cscale[j];
    p.c[j] *= cscale[j];
    if (std::isfinite(p.lower[j])) p.lower[j] /= cscale[j];
    if (std::isfinite(p.upper[j])) p.upper[j] /= cscale[j];
  }
}

LpSolution solve_once(const LpProblem& p, const Basis* warm_start,
                      const SimplexOptions& opt) {
  const int n = p.num_vars();
  const int m = p.num_rows();
  if (p.A.rows() != m || p.A.cols() != n || p.lower.size() != n ||
      p.upper.size() != n)
    throw std::invalid_argument("inconsistent LP dimensions");
  for (int j = 0; j < n; ++j)
    if (p.lower[j] > p.upper[j]) {
      LpSolution sol;
      sol.status = LpStatus::Infeasible;
      return sol;
    }

  // Warm-start path: reuse the caller's basis when it is still primal
  // feasible; otherwise fall back to a cold start.
  if (warm_start && static_cast<int>(warm_start->status.size()) == n &&
      static_cast<int>(warm_start->basic.size()) == m) {
    Working w;
    w.A = p.A;
    w.c = p.c;
    w.b = p.b;
    w.lo = p.lower;
    w.hi = p.upper;
    w.stat = warm_start->status;
    w.basic = warm_start->basic;
    bool shape_ok = true;
    for (int idx : w.basic)
      if (idx < 0 || idx >= n || w.stat[idx] != VarStatus::Basic)
        shape_ok = false;
    if (shape_ok && basis_feasible(w, opt.feas_tol)) {
      IterResult r = iterate(w, opt);
      if (r == IterResult::Unbounded) {
        LpSolution sol;
        sol.status = LpStatus::Unbounded;
        sol.pivots = w.pivots;
        return sol;
      }
      return finish(p, w, w.pivots);
    }
  }

  // Phase 1: artificial variables with columns sign(residual) * e_i.
  Working w;
  w.A = Matrix::Zero(m, n + m);
  w.A.leftCols(n) = p.A;
  w.c = Vector::Zero(n + m);
  w.b = p.b;
  w.lo = Vector(n + m);
  w.hi = Vector(n + m);
  w.lo.head(n) = p.lower;
  w.hi.head(n) = p.upper;
  w.stat.resize(n + m);
  w.basic.resize(m);
  for (int j = 0; j < n; ++j) w.stat[j] = initial_status(p.lower[j], p.upper[j]);

  Vector x0 = Vector::Zero(n);
  for (int j = 0; j < n; ++j) {
    switch (w.stat[j]) {
      case VarStatus::AtLower: x0[j] = p.lower[j]; break;
      case VarStatus::AtUpper: x0[j] = p.upper[j]; break;
      default: x0[j] = 0.0;
    }
  }
  Vector resid = p.b - p.A * x0;
  for (int i = 0; i < m; ++i) {
    double sigma = (resid[i] < 0.0) ? -1.0 : 1.0;
    w.A(i, n + i) = sigma;
    w.c[n + i] = 1.0;
    w.lo[n + i] = 0.0;
    w.hi[n + i] = kInf;
    w.stat[n + i] = VarStatus::Basic;
    w.basic[i] = n + i;
  }

  IterResult r1 = iterate(w, opt);
  (void)r1;  // phase-1 objective is bounded below by 0
  double art_sum = 0.0;
  Vector x1 = w.full_x();
  for (int i = 0; i < m; ++i) art_sum += x1[n + i];
  if (art_sum > opt.feas_tol * std::max(1.0, p.b.lpNorm<Eigen::Infinity>())) {
    LpSolution sol;
    sol.status = LpStatus::Infeasible;
    sol.pivots = w.pivots;
    return sol;
  }

  // Phase 2: real costs, artificials pinned to zero.
  w.c.setZero();
  w.c.head(n) = p.c;
  for (int i = 0; i < m; ++i) {
    w.hi[n + i] = 0.0;
    if (w.stat[n + i] != VarStatus::Basic) w.stat[n + i] = VarStatus::AtLower;
  }

  IterResult r2 = iterate(w, opt);
  if (r2 == IterResult::Unbounded) {
    LpSolution sol;
    sol.status = LpStatus::Unbounded;
    sol.pivots = w.pivots;
    return sol;
  }
  return finish(p, w, w.pivots);
}

}  // namespace

LpSolution solve(const LpProblem& p, const Basis* warm_start,
                 const SimplexOptions& opt) {
  // Solve the equilibrated problem so the tolerances act on data of unit
  // scale; the power-of-two factors unscale exactly. Basis membership and
  // statuses are scale-free, so warm starts pass through.
  LpProblem q = p;
  Vector rscale, cscale;
  equilibrate(q, rscale, cscale);
  auto unscale = [&](LpSolution sol) {
    if (sol.status == LpStatus::Optimal) {
      sol.x = sol.x.cwiseProduct(cscale);
      sol.duals = sol.duals.cwiseProduct(rscale);
      sol.value = p.c.dot(sol.x);
    }
    return sol;
  };
  try {
    return unscale(solve_once(q, warm_start, opt));
  } catch (const SingularBasisError&) {
    if (opt.refactor_every <= 1) throw;
    // degenerate pivot slipped through between refactorizations; redo with
    // an exact inverse at every pivot
    SimplexOptions exact = opt;
    exact.refactor_every = 1;
    return unscale(solve_once(q, nullptr, exact));
  }
}

StageSolution solve_with_cuts(const LpProblem& stage_lp, const CutPool& pool,
                              const Matrix& B, const Vector& x_prev,
                              const SimplexOptions& opt) {
  const int n = stage_lp.num_vars();
  const int m = stage_lp.num_rows();
  const int k = static_cast<int>(pool.size());
  if (k == 0) throw std::logic_error("solve_with_cuts needs a nonempty pool");
  if (pool.dim() != n)
    throw std::invalid_argument("cut pool dimension mismatch");

  Vector rhs = stage_lp.b;
  if (B.size() > 0) rhs -= B * x_prev;

  // Variables: x, theta, one surplus per cut. Rows: stage rows, then
  // theta - beta_i'x - s_i = alpha_i.
  const int nv = n + 1 + k;
  LpProblem aug;
  aug.c = Vector::Zero(nv);
  aug.c.head(n) = stage_lp.c;
  aug.c[n] = 1.0;
  aug.A = Matrix::Zero(m + k, nv);
  aug.A.topLeftCorner(m, n) = stage_lp.A;
  aug.b = Vector(m + k);
  aug.b.head(m) = rhs;
  aug.lower = Vector(nv);
  aug.upper = Vector(nv);
  aug.lower.head(n) = stage_lp.lower;
  aug.upper.head(n) = stage_lp.upper;
  aug.lower[n] = -kInf;
  aug.upper[n] = kInf;
  for (int i = 0; i < k; ++i) {
    const Cut& cut = pool.cuts()[i];
    aug.A.block(m + i, 0, 1, n) = -cut.gradient.transpose();
    aug.A(m + i, n) = 1.0;
    aug.A(m + i, n + 1 + i) = -1.0;
    aug.b[m + i] = cut.intercept;
    aug.lower[n + 1 + i] = 0.0;
    aug.upper[n + 1 + i] = kInf;
  }

  LpSolution sol = solve(aug, nullptr, opt);
  StageSolution out;
  out.status = sol.status;
  if (sol.status == LpStatus::Optimal) {
    out.x = sol.x.head(n);
    out.theta = sol.x[n];
    out.value = sol.value;
    out.duals = (m > 0) ? Vector(sol.duals.head(m)) : Vector(0);
  }
  return out;
}

std::string dump(const LpProblem& p) {
  std::ostringstream out;
  out.precision(17);
  out << "min";
  for (int j = 0; j < p.num_vars(); ++j) out << ' ' << p.c[j];
  out << '\n';
  for (int i = 0; i < p.num_rows(); ++i) {
    out << "row";
    for (int j = 0; j < p.num_vars(); ++j) out << ' ' << p.A(i, j);
    out << " = " << p.b[i] << '\n';
  }
  out << "lo";
  for (int j = 0; j < p.num_vars(); ++j) out << ' ' << p.lower[j];
  out << "\nhi";
  for (int j = 0; j < p.num_vars(); ++j) out << ' ' << p.upper[j];
  out << '\n';
  return out.str();
}

}  // namespace mssp::lp
