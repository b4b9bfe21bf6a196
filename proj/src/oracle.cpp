#include "mssp/oracle.hpp"

#include <cmath>
#include <stdexcept>

namespace mssp::oracle {

ExtensiveResult extensive_solve(const MultistageProblem& problem,
                                long node_cap) {
  ExtensiveForm ext = to_extensive_form(problem, node_cap);
  auto sol = lp::solve(ext.lp);
  if (sol.status != lp::LpStatus::Optimal)
    throw std::runtime_error("extensive form did not solve to optimality");
  ExtensiveResult out;
  out.value = sol.value;
  out.node_count = ext.node_count;
  out.first_stage = Vector(ext.first_stage_vars.size());
  for (std::size_t i = 0; i < ext.first_stage_vars.size(); ++i)
    out.first_stage[i] = sol.x[ext.first_stage_vars[i]];
  return out;
}

namespace {

CoherentRisk risk_for(const std::vector<CoherentRisk>& risks, int t) {
  if (risks.empty()) return CoherentRisk::expectation();
  if (risks.size() == 1) return risks[0];
  return risks[static_cast<std::size_t>(t)];
}

struct TreeNode {
  int stage;
  int parent;
  const StageRealization* data;
  int x_off = 0;
  int r_idx = -1;      // nested-risk value entering from this node's children
  int theta_idx = -1;  // variational parameter (non-expectation stages)
  int s_off = -1;      // excess variables, one per child
  int e_off = -1;      // row slacks, one per child
  std::vector<int> children;
};

}  // namespace

double nested_risk_optimum(const MultistageProblem& p,
                           const std::vector<CoherentRisk>& stage_risks,
                           long node_cap) {
  if (p.dependence != Dependence::StagewiseIndependent)
    throw std::invalid_argument(
        "nested risk oracle handles stagewise-independent problems only");
  auto errs = validate(p);
  if (!errs.empty())
    throw std::invalid_argument("invalid problem: " + errs.front());
  const int T = p.horizon;

  std::vector<TreeNode> tree;
  tree.push_back({0, -1, &p.stages[0].realizations[0]});
  std::size_t level_begin = 0;
  for (int t = 1; t < T; ++t) {
    std::size_t level_end = tree.size();
    for (std::size_t v = level_begin; v < level_end; ++v) {
      for (const StageRealization& re : p.stages[t].realizations) {
        tree[v].children.push_back(static_cast<int>(tree.size()));
        tree.push_back({t, static_cast<int>(v), &re});
      }
      if (static_cast<long>(tree.size()) > node_cap)
        throw std::runtime_error("risk oracle tree exceeds the node cap");
    }
    level_begin = level_end;
  }

  // Column layout: per-node decisions, then per non-leaf node the risk
  // value r, and for non-expectation stages theta plus (s, e) per child.
  int cols = 0;
  for (TreeNode& v : tree) {
    v.x_off = cols;
    cols += p.stages[v.stage].num_vars();
  }
  int rows = 0;
  for (TreeNode& v : tree) rows += static_cast<int>(v.data->b.size());
  for (TreeNode& v : tree) {
    if (v.children.empty()) continue;
    CoherentRisk risk = risk_for(stage_risks, v.stage + 1);
    v.r_idx = cols++;
    rows += 1;  // definition of r
    if (!risk.is_expectation()) {
      v.theta_idx = cols++;
      v.s_off = cols;
      cols += static_cast<int>(v.children.size());
      v.e_off = cols;
      cols += static_cast<int>(v.children.size());
      rows += static_cast<int>(v.children.size());
    }
  }

  lp::LpProblem lp;
  lp.c = Vector::Zero(cols);
  lp.A = Matrix::Zero(rows, cols);
  lp.b = Vector::Zero(rows);
  lp.lower = Vector::Zero(cols);
  lp.upper = Vector::Zero(cols);
  for (const TreeNode& v : tree) {
    int n = p.stages[v.stage].num_vars();
    lp.lower.segment(v.x_off, n) = p.stages[v.stage].lower;
    lp.upper.segment(v.x_off, n) = p.stages[v.stage].upper;
  }
  for (const TreeNode& v : tree) {
    if (v.children.empty()) continue;
    lp.lower[v.r_idx] = -kInf;
    lp.upper[v.r_idx] = kInf;
    if (v.theta_idx >= 0) {
      lp.lower[v.theta_idx] = -kInf;
      lp.upper[v.theta_idx] = kInf;
      for (std::size_t j = 0; j < v.children.size(); ++j) {
        lp.upper[v.s_off + static_cast<int>(j)] = kInf;
        lp.upper[v.e_off + static_cast<int>(j)] = kInf;
      }
    }
  }

  int row = 0;
  for (const TreeNode& v : tree) {
    int n = p.stages[v.stage].num_vars();
    int m = static_cast<int>(v.data->b.size());
    lp.A.block(row, v.x_off, m, n) = v.data->A;
    if (v.parent >= 0) {
      const TreeNode& par = tree[v.parent];
      lp.A.block(row, par.x_off, m, p.stages[par.stage].num_vars()) =
          v.data->B;
    }
    lp.b.segment(row, m) = v.data->b;
    row += m;
  }
  for (const TreeNode& v : tree) {
    if (v.children.empty()) continue;
    CoherentRisk risk = risk_for(stage_risks, v.stage + 1);
    double lambda = risk.is_expectation() ? 0.0
                    : (risk.kind == RiskKind::AVaR ? 1.0 : risk.lambda);
    // Child rows: Z_j - theta - s_j + e_j = 0 with Z_j = c_j'x_j + r_j.
    if (v.theta_idx >= 0) {
      for (std::size_t j = 0; j < v.children.size(); ++j) {
        const TreeNode& ch = tree[v.children[j]];
        int cn = p.stages[ch.stage].num_vars();
        lp.A.block(row, ch.x_off, 1, cn) = ch.data->c.transpose();
        if (ch.r_idx >= 0) lp.A(row, ch.r_idx) = 1.0;
        lp.A(row, v.theta_idx) = -1.0;
        lp.A(row, v.s_off + static_cast<int>(j)) = -1.0;
        lp.A(row, v.e_off + static_cast<int>(j)) = 1.0;
        ++row;
      }
    }
    // Definition row:
    // r = (1-lambda) sum p_j Z_j + lambda theta + lambda/(1-alpha) sum p_j s_j.
    lp.A(row, v.r_idx) = 1.0;
    for (std::size_t j = 0; j < v.children.size(); ++j) {
      const TreeNode& ch = tree[v.children[j]];
      int cn = p.stages[ch.stage].num_vars();
      double pj = ch.data->p;
      lp.A.block(row, ch.x_off, 1, cn) -=
          (1.0 - lambda) * pj * ch.data->c.transpose();
      if (ch.r_idx >= 0) lp.A(row, ch.r_idx) -= (1.0 - lambda) * pj;
      if (v.theta_idx >= 0)
        lp.A(row, v.s_off + static_cast<int>(j)) -=
            lambda / (1.0 - risk.alpha) * pj;
    }
    if (v.theta_idx >= 0) lp.A(row, v.theta_idx) = -lambda;
    ++row;
  }

  int root_n = p.stages[0].num_vars();
  lp.c.segment(tree[0].x_off, root_n) = tree[0].data->c;
  if (tree[0].r_idx >= 0) lp.c[tree[0].r_idx] = 1.0;

  auto sol = lp::solve(lp);
  if (sol.status != lp::LpStatus::Optimal)
    throw std::runtime_error("nested risk oracle LP did not solve");
  return sol.value;
}

std::vector<double> basestock_levels(const InventorySpec& spec) {
  const int orders = static_cast<int>(spec.order_cost.size());
  if (static_cast<int>(spec.demand.size()) != orders)
    throw std::invalid_argument("one demand stage per ordering stage");
  if (spec.grid_hi <= spec.grid_lo || spec.grid_step <= 0.0)
    throw std::invalid_argument("bad basestock grid");
  const int G =
      static_cast<int>(std::floor((spec.grid_hi - spec.grid_lo) / spec.grid_step)) +
      1;
  auto grid_at = [&](int i) { return spec.grid_lo + i * spec.grid_step; };
  auto interp = [&](const std::vector<double>& f, double x) {
    double pos = (x - spec.grid_lo) / spec.grid_step;
    if (pos <= 0.0) return f.front();
    if (pos >= G - 1) return f.back();
    int i = static_cast<int>(pos);
    double w = pos - i;
    return (1.0 - w) * f[i] + w * f[i + 1];
  };

  // V[t](x): cost-to-go before ordering at stage t with level x.
  std::vector<double> V(G, 0.0);
  std::vector<double> ystar(orders, 0.0);
  for (int t = orders - 1; t >= 0; --t) {
    std::vector<double> g(G);  // G_t(y) = c y + E[psi(y,d) + V(y-d)]
    for (int i = 0; i < G; ++i) {
      double y = grid_at(i);
      double val = spec.order_cost[t] * y;
      for (std::size_t k = 0; k < spec.demand[t].size(); ++k) {
        double d = spec.demand[t][k];
        double pk = spec.demand_prob[t][k];
        double post = y - d;
        double psi = (post >= 0.0) ? spec.holding * post : -spec.backlog * post;
        val += pk * (psi + interp(V, post));
      }
      g[i] = val;
    }
    int best = 0;
    for (int i = 1; i < G; ++i)
      if (g[i] < g[best]) best = i;
    ystar[t] = grid_at(best);
    // V_t(x) = min_{y >= x} G_t(y) - c x  via a suffix minimum of g.
    std::vector<double> suffix(G);
    suffix[G - 1] = g[G - 1];
    for (int i = G - 2; i >= 0; --i) suffix[i] = std::min(g[i], suffix[i + 1]);
    std::vector<double> Vnext(G);
    for (int i = 0; i < G; ++i)
      Vnext[i] = suffix[i] - spec.order_cost[t] * grid_at(i);
    V = std::move(Vnext);
  }
  return ystar;
}

}  // namespace mssp::oracle
