#include "mssp/horizon.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mssp/lp.hpp"

namespace mssp {

namespace {

AffinePiece zero_piece(int nx, int nu) {
  AffinePiece z;
  z.wx = Vector::Zero(nx);
  z.wu = Vector::Zero(nu);
  z.w0 = 0.0;
  return z;
}

std::vector<AffinePiece> pieces_of(const SocRealization& re, int nx, int nu) {
  if (!re.cost.empty()) return re.cost;
  return {zero_piece(nx, nu)};
}

double stage_cost_value_at(const SocRealization& re, const Vector& x,
                           const Vector& u) {
  if (re.cost.empty()) return 0.0;
  double best = -kInf;
  for (const AffinePiece& pc : re.cost)
    best = std::max(best, pc.wx.dot(x) + pc.wu.dot(u) + pc.w0);
  return best;
}

// Max of one affine piece over a box, in closed form.
double piece_max(const AffinePiece& pc, const Vector& xl, const Vector& xu,
                 const Vector& ul, const Vector& uu) {
  double v = pc.w0;
  for (int i = 0; i < pc.wx.size(); ++i)
    v += pc.wx[i] > 0 ? pc.wx[i] * xu[i] : pc.wx[i] * xl[i];
  for (int i = 0; i < pc.wu.size(); ++i)
    v += pc.wu[i] > 0 ? pc.wu[i] * uu[i] : pc.wu[i] * ul[i];
  return v;
}

// Min of a max-of-affine over a box: epigraph LP over (x, u, w).
double pieces_min(const std::vector<AffinePiece>& pieces, const Vector& xl,
                  const Vector& xu, const Vector& ul, const Vector& uu) {
  const int nx = static_cast<int>(xl.size());
  const int nu = static_cast<int>(ul.size());
  const int K = static_cast<int>(pieces.size());
  lp::LpProblem lp;
  const int cols = nx + nu + 1 + K;
  lp.c = Vector::Zero(cols);
  lp.c[nx + nu] = 1.0;
  lp.A = Matrix::Zero(K, cols);
  lp.b = Vector::Zero(K);
  lp.lower = Vector::Zero(cols);
  lp.upper = Vector::Constant(cols, kInf);
  lp.lower.head(nx) = xl;
  lp.upper.head(nx) = xu;
  lp.lower.segment(nx, nu) = ul;
  lp.upper.segment(nx, nu) = uu;
  lp.lower[nx + nu] = -kInf;
  for (int k = 0; k < K; ++k) {
    lp.A(k, nx + nu) = 1.0;
    lp.A.block(k, 0, 1, nx) = -pieces[k].wx.transpose();
    lp.A.block(k, nx, 1, nu) = -pieces[k].wu.transpose();
    lp.A(k, nx + nu + 1 + k) = -1.0;
    lp.b[k] = pieces[k].w0;
  }
  auto sol = lp::solve(lp);
  if (sol.status != lp::LpStatus::Optimal)
    throw std::runtime_error("cost bound subproblem failed to solve");
  return sol.value;
}

}  // namespace

std::vector<std::string> validate_stationary(const StationaryProblem& p) {
  std::vector<std::string> errs;
  auto fail = [&](const std::string& m) { errs.push_back(m); };
  if (p.blocks.empty()) fail("no phase blocks");
  if (!(p.gamma > 0.0 && p.gamma < 1.0)) fail("discount outside (0,1)");
  const int nx = p.state_dim();
  if (nx <= 0) fail("initial state is empty");
  if (p.x_lower.size() != nx || p.x_upper.size() != nx)
    fail("state box mismatch");
  if (!errs.empty()) return errs;
  for (int k = 0; k < p.period(); ++k) {
    const SocStage& blk = p.blocks[k];
    std::ostringstream tag;
    tag << "phase " << k + 1 << ": ";
    const int nu = static_cast<int>(blk.u_lower.size());
    if (blk.u_upper.size() != nu) fail(tag.str() + "control box mismatch");
    for (int i = 0; i < nu; ++i)
      if (!std::isfinite(blk.u_lower[i]) || !std::isfinite(blk.u_upper[i]))
        fail(tag.str() + "control box unbounded");
    if (blk.realizations.empty()) fail(tag.str() + "no realizations");
    double psum = 0.0;
    for (const SocRealization& re : blk.realizations) {
      psum += re.p;
      if (re.A.rows() != nx || re.A.cols() != nx)
        fail(tag.str() + "state matrix shape");
      if (re.B.rows() != nx || re.B.cols() != nu)
        fail(tag.str() + "control matrix shape");
      if (re.b.size() != nx) fail(tag.str() + "offset size");
      for (const AffinePiece& pc : re.cost)
        if (pc.wx.size() != nx || pc.wu.size() != nu)
          fail(tag.str() + "cost piece shape");
    }
    if (!blk.realizations.empty() && std::abs(psum - 1.0) > 1e-9) {
      std::ostringstream s;
      s << tag.str() << "probability sum " << psum;
      fail(s.str());
    }
  }
  if (errs.empty())
    for (int i = 0; i < nx; ++i)
      if (!std::isfinite(p.x_lower[i]) || !std::isfinite(p.x_upper[i]))
        fail("state box unbounded");
  if (errs.empty() && p.kappa >= 0.0 &&
      p.kappa < stage_cost_bound(p) - 1e-9)
    fail("kappa below the achievable stage cost bound");
  return errs;
}

double stage_cost_bound(const StationaryProblem& p) {
  double hi = 0.0, lo = 0.0;
  const int nx = p.state_dim();
  for (const SocStage& blk : p.blocks) {
    const int nu = static_cast<int>(blk.u_lower.size());
    for (const SocRealization& re : blk.realizations) {
      auto pcs = pieces_of(re, nx, nu);
      for (const AffinePiece& pc : pcs)
        hi = std::max(hi, piece_max(pc, p.x_lower, p.x_upper, blk.u_lower,
                                    blk.u_upper));
      lo = std::min(lo, pieces_min(pcs, p.x_lower, p.x_upper, blk.u_lower,
                                   blk.u_upper));
    }
  }
  return std::max(hi, -lo);
}

int truncation_horizon(double gamma, double kappa, double eps) {
  if (eps <= 0.0) throw std::invalid_argument("tolerance must be positive");
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw std::invalid_argument("discount outside [0,1)");
  auto tail_ok = [&](int T) {
    return kappa * std::pow(gamma, T) / (1.0 - gamma) <= eps;
  };
  if (kappa <= 0.0 || tail_ok(0)) return 0;
  int T = std::max(
      0, static_cast<int>(std::ceil(std::log(eps * (1.0 - gamma) / kappa) /
                                    std::log(gamma))));
  while (!tail_ok(T)) ++T;
  while (T > 0 && tail_ok(T - 1)) --T;
  return T;
}

StationaryStageSolution stationary_stage_solve(
    const StationaryProblem& p, const std::vector<CutPool>& pools, int block,
    const Vector& x) {
  const SocStage& blk = p.blocks[block];
  const CutPool& next = pools[(block + 1) % p.period()];
  const int nx = p.state_dim();
  const int nu = static_cast<int>(blk.u_lower.size());
  const int N = static_cast<int>(blk.realizations.size());
  const int K = static_cast<int>(next.size());

  std::vector<std::vector<AffinePiece>> pieces(N);
  int piece_rows = 0;
  for (int j = 0; j < N; ++j) {
    pieces[j] = pieces_of(blk.realizations[j], nx, nu);
    piece_rows += static_cast<int>(pieces[j].size());
  }
  const int rows = piece_rows + N * K;
  const int w_off = nu;
  const int v_off = nu + N;
  const int sl_off = nu + 2 * N;
  const int cols = sl_off + rows;

  lp::LpProblem lp;
  lp.c = Vector::Zero(cols);
  lp.A = Matrix::Zero(rows, cols);
  lp.b = Vector::Zero(rows);
  lp.lower = Vector::Zero(cols);
  lp.upper = Vector::Constant(cols, kInf);
  lp.lower.head(nu) = blk.u_lower;
  lp.upper.head(nu) = blk.u_upper;
  for (int j = 0; j < N; ++j) {
    double pj = blk.realizations[j].p;
    lp.lower[w_off + j] = -kInf;
    lp.lower[v_off + j] = -kInf;
    lp.c[w_off + j] = pj;
    lp.c[v_off + j] = pj * p.gamma;
  }

  // rhs sensitivity to the state per row; subgradient is the dual-weighted
  // sum as in the finite-horizon state-control solver.
  std::vector<Vector> row_grads(rows, Vector::Zero(nx));
  int row = 0;
  for (int j = 0; j < N; ++j)
    for (const AffinePiece& pc : pieces[j]) {
      lp.A(row, w_off + j) = 1.0;
      lp.A.block(row, 0, 1, nu) = -pc.wu.transpose();
      lp.A(row, sl_off + row) = -1.0;
      lp.b[row] = pc.wx.dot(x) + pc.w0;
      row_grads[row] = pc.wx;
      ++row;
    }
  for (int j = 0; j < N; ++j) {
    const SocRealization& re = blk.realizations[j];
    Vector base = re.A * x + re.b;
    for (const Cut& cut : next.cuts()) {
      lp.A(row, v_off + j) = 1.0;
      lp.A.block(row, 0, 1, nu) =
          -(re.B.transpose() * cut.gradient).transpose();
      lp.A(row, sl_off + row) = -1.0;
      lp.b[row] = cut.intercept + cut.gradient.dot(base);
      row_grads[row] = re.A.transpose() * cut.gradient;
      ++row;
    }
  }

  auto sol = lp::solve(lp);
  if (sol.status == lp::LpStatus::Unbounded) {
    std::ostringstream s;
    s << "phase " << block + 1 << " control problem unbounded over its box";
    throw std::runtime_error(s.str());
  }
  if (sol.status != lp::LpStatus::Optimal)
    throw std::runtime_error("phase control problem failed to solve");

  StationaryStageSolution out;
  out.value = sol.value;
  out.u = sol.x.head(nu);
  out.gradient = Vector::Zero(nx);
  for (int r = 0; r < rows; ++r)
    out.gradient += sol.duals[r] * row_grads[r];
  return out;
}

void stationary_backward(const StationaryProblem& p,
                         std::vector<CutPool>& pools, int block,
                         const Vector& x_tilde) {
  auto sol = stationary_stage_solve(p, pools, block, x_tilde);
  Cut cut;
  cut.intercept = sol.value - sol.gradient.dot(x_tilde);
  cut.gradient = sol.gradient;
  pools[block].add(cut);
}

TruncatedPath truncated_forward(const StationaryProblem& p,
                                const std::vector<CutPool>& pools, int T,
                                RngStream& rng) {
  TruncatedPath out;
  Vector x = p.x1;
  double disc = 1.0;
  for (int t = 0; t < T; ++t) {
    int block = t % p.period();
    auto sol = stationary_stage_solve(p, pools, block, x);
    out.states.push_back(x);
    out.controls.push_back(sol.u);
    const SocStage& blk = p.blocks[block];
    std::vector<double> probs;
    for (const auto& re : blk.realizations) probs.push_back(re.p);
    int j = rng.sample_index(probs);
    out.path.push_back(j);
    const SocRealization& re = blk.realizations[j];
    out.cost += disc * stage_cost_value_at(re, x, sol.u);
    disc *= p.gamma;
    x = re.A * x + re.B * sol.u + re.b;
  }
  return out;
}

StationaryResult periodic_solve(const StationaryProblem& p,
                                const StationaryConfig& cfg) {
  auto errs = validate_stationary(p);
  if (!errs.empty())
    throw std::invalid_argument("invalid problem: " + errs.front());

  StationaryResult result;
  result.kappa = p.kappa >= 0.0 ? p.kappa : stage_cost_bound(p);
  result.truncation = truncation_horizon(p.gamma, result.kappa, cfg.epsilon);
  // at least two steps so the forward pass yields a trial candidate
  const int T = std::max(result.truncation, 2);
  const int nx = p.state_dim();
  for (int k = 0; k < p.period(); ++k)
    result.pools.emplace_back(k, nx, cfg.floor_value);

  std::string stop = "iteration-cap";
  int iters = 0;
  std::vector<double> pick_probs(T - 1, 1.0 / (T - 1));
  for (int k = 1; k <= cfg.max_iterations; ++k) {
    iters = k;
    RngStream rng(cfg.seed, "stationary-forward-path", k - 1);
    TruncatedPath path = truncated_forward(p, result.pools, T, rng);
    RngStream pick(cfg.seed, "stationary-trial-pick", k - 1);
    int idx = 1 + pick.sample_index(pick_probs);
    stationary_backward(p, result.pools, idx % p.period(), path.states[idx]);

    double lb = stationary_stage_solve(p, result.pools, 0, p.x1).value;
    result.lb_history.push_back(lb);
    int w = cfg.stabilization_window;
    if (w > 0 && static_cast<int>(result.lb_history.size()) > w) {
      double old = result.lb_history[result.lb_history.size() - 1 - w];
      if (lb - old < cfg.stabilization_tol * std::max(1.0, std::abs(lb))) {
        stop = "stabilization";
        break;
      }
    }
  }
  result.stop_rule = stop;
  result.iterations = iters;
  result.lower_bound = result.lb_history.back();

  if (cfg.upper_bound_paths >= 2) {
    const int M = cfg.upper_bound_paths;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < M; ++i) {
      RngStream rng(cfg.seed, "stationary-upper-path", i);
      double c = truncated_forward(p, result.pools, T, rng).cost;
      sum += c;
      sumsq += c * c;
    }
    result.upper.paths = M;
    result.upper.mean = sum / M;
    double var = (sumsq - M * result.upper.mean * result.upper.mean) / (M - 1);
    result.upper.std_error = std::sqrt(std::max(var, 0.0) / M);
    // epsilon covers the discarded discounted tail
    result.upper.edge = result.upper.mean +
                        cfg.z_alpha * result.upper.std_error + cfg.epsilon;
  }
  return result;
}

StationaryResult stationary_solve(const StationaryProblem& p,
                                  const StationaryConfig& cfg) {
  if (p.period() != 1)
    throw std::invalid_argument("stationary solve expects a single phase");
  return periodic_solve(p, cfg);
}

std::vector<double> grid_value_iteration(const StationaryProblem& p,
                                         const std::vector<double>& x_grid,
                                         int u_points, double tol,
                                         int max_sweeps) {
  if (p.period() != 1 || p.state_dim() != 1)
    throw std::invalid_argument(
        "grid oracle handles scalar single-phase problems only");
  if (x_grid.size() < 2 || u_points < 1)
    throw std::invalid_argument("grid too small");
  const SocStage& blk = p.blocks[0];
  const int n = static_cast<int>(x_grid.size());
  const double lo = x_grid.front(), hi = x_grid.back();

  auto interp = [&](const std::vector<double>& V, double x) {
    double xc = std::clamp(x, lo, hi);
    int i = static_cast<int>(
        std::upper_bound(x_grid.begin(), x_grid.end(), xc) - x_grid.begin());
    i = std::clamp(i, 1, n - 1);
    double t = (xc - x_grid[i - 1]) / (x_grid[i] - x_grid[i - 1]);
    return (1.0 - t) * V[i - 1] + t * V[i];
  };

  std::vector<double> u_grid(u_points);
  for (int k = 0; k < u_points; ++k) {
    double t = u_points == 1 ? 0.0 : static_cast<double>(k) / (u_points - 1);
    u_grid[k] = blk.u_lower[0] + t * (blk.u_upper[0] - blk.u_lower[0]);
  }

  std::vector<double> V(n, 0.0), Vn(n);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double diff = 0.0;
    for (int i = 0; i < n; ++i) {
      Vector x = Vector::Constant(1, x_grid[i]);
      double best = kInf;
      for (double uv : u_grid) {
        Vector u = Vector::Constant(1, uv);
        double val = 0.0;
        for (const SocRealization& re : blk.realizations) {
          double xn = re.A(0, 0) * x_grid[i] + re.B(0, 0) * uv + re.b[0];
          val += re.p *
                 (stage_cost_value_at(re, x, u) + p.gamma * interp(V, xn));
        }
        best = std::min(best, val);
      }
      Vn[i] = best;
      diff = std::max(diff, std::abs(Vn[i] - V[i]));
    }
    V.swap(Vn);
    if (diff < tol) break;
  }
  return V;
}

}  // namespace mssp
