#include "mssp/model.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mssp {

namespace {

std::string at_stage(int t) {
  std::ostringstream s;
  s << "stage " << t + 1 << ": ";
  return s.str();
}

}  // namespace

std::vector<std::string> validate(const MultistageProblem& p) {
  std::vector<std::string> out;
  if (p.horizon < 2) out.push_back("horizon must be at least 2");
  if (static_cast<int>(p.stages.size()) != p.horizon) {
    out.push_back("stage count does not match horizon");
    return out;
  }
  for (int t = 0; t < p.horizon; ++t) {
    const StageBlock& blk = p.stages[t];
    if (blk.realizations.empty()) {
      out.push_back(at_stage(t) + "no realizations");
      continue;
    }
    if (t == 0 && blk.realizations.size() != 1)
      out.push_back(at_stage(t) + "first stage must have one realization");
    int n = blk.num_vars();
    int m = blk.num_rows();
    if (blk.upper.size() != n)
      out.push_back(at_stage(t) + "bound vectors disagree in length");
    for (int j = 0; j < std::min<int>(n, blk.upper.size()); ++j) {
      if (!std::isfinite(blk.lower[j]))
        out.push_back(at_stage(t) + "lower bound must be finite");
      if (blk.lower[j] > blk.upper[j])
        out.push_back(at_stage(t) + "crossed bounds");
    }
    double psum = 0.0;
    for (std::size_t r = 0; r < blk.realizations.size(); ++r) {
      const StageRealization& re = blk.realizations[r];
      psum += re.p;
      if (re.p <= 0.0) out.push_back(at_stage(t) + "nonpositive probability");
      if (re.c.size() != n || re.A.rows() != m || re.A.cols() != n ||
          re.b.size() != m) {
        std::ostringstream s;
        s << at_stage(t) << "realization " << r << " dimension mismatch";
        out.push_back(s.str());
      }
      int prev_n = (t == 0) ? 0 : p.stages[t - 1].num_vars();
      if (t == 0) {
        if (re.B.size() != 0)
          out.push_back(at_stage(t) + "first stage must have empty B");
      } else if (re.B.rows() != m || re.B.cols() != prev_n) {
        std::ostringstream s;
        s << at_stage(t) << "realization " << r
          << " linking matrix has wrong shape";
        out.push_back(s.str());
      }
    }
    if (std::abs(psum - 1.0) > 1e-12) {
      std::ostringstream s;
      s << at_stage(t) << "probability sum " << psum;
      out.push_back(s.str());
    }
  }
  if (p.dependence == Dependence::MarkovChain) {
    if (!p.lattice) {
      out.push_back("Markov dependence declared without a lattice");
    } else {
      const MarkovLattice& lat = *p.lattice;
      if (static_cast<int>(lat.nodes.size()) != p.horizon)
        out.push_back("lattice stage count does not match horizon");
      if (static_cast<int>(lat.transitions.size()) + 1 !=
          static_cast<int>(lat.nodes.size()))
        out.push_back("lattice needs one transition matrix per stage gap");
      for (std::size_t t = 0; t < lat.nodes.size(); ++t)
        if (lat.nodes[t].empty())
          out.push_back(at_stage(static_cast<int>(t)) + "lattice has no nodes");
      for (std::size_t t = 0; t < lat.transitions.size(); ++t) {
        const Matrix& P = lat.transitions[t];
        if (t + 1 < lat.nodes.size() &&
            (P.rows() != static_cast<int>(lat.nodes[t].size()) ||
             P.cols() != static_cast<int>(lat.nodes[t + 1].size()))) {
          out.push_back(at_stage(static_cast<int>(t)) +
                        "transition matrix shape mismatch");
          continue;
        }
        for (int i = 0; i < P.rows(); ++i)
          if (std::abs(P.row(i).sum() - 1.0) > 1e-12)
            out.push_back(at_stage(static_cast<int>(t)) +
                          "transition row does not sum to 1");
      }
    }
  }
  return out;
}

MultistageProblem lift_autoregressive(const MultistageProblem& base,
                                      const Matrix& Phi, const Vector& mu,
                                      const std::vector<NoiseSupport>& noise) {
  const int T = base.horizon;
  const int d = static_cast<int>(mu.size());
  if (Phi.rows() != d || Phi.cols() != d)
    throw std::invalid_argument("lift: Phi and mu dimensions disagree");
  if (static_cast<int>(noise.size()) != T - 1)
    throw std::invalid_argument("lift: need noise support per stage 2..T");
  for (int t = 0; t < T; ++t) {
    const StageBlock& blk = base.stages[t];
    if (blk.num_rows() != d)
      throw std::invalid_argument("lift: every stage must have d rows");
    const StageRealization& first = blk.realizations[0];
    for (const StageRealization& re : blk.realizations) {
      if ((re.A - first.A).lpNorm<Eigen::Infinity>() != 0.0 ||
          (re.c - first.c).lpNorm<Eigen::Infinity>() != 0.0 ||
          (t > 0 && (re.B - first.B).lpNorm<Eigen::Infinity>() != 0.0))
        throw std::invalid_argument(
            "lift: randomness must enter through the rhs only");
    }
  }

  MultistageProblem lifted;
  lifted.horizon = T;
  lifted.dependence = Dependence::StagewiseIndependent;
  lifted.stages.resize(T);

  // Interval propagation of xi_t = mu + Phi xi_{t-1} + eps_t, padded so the
  // box never cuts into the reachable set numerically.
  Vector xi_lo = base.stages[0].realizations[0].b;
  Vector xi_hi = xi_lo;
  auto pad = [](Vector& lo, Vector& hi) {
    for (int i = 0; i < lo.size(); ++i) {
      double w = 1e-6 * (1.0 + std::max(std::abs(lo[i]), std::abs(hi[i])));
      lo[i] -= w;
      hi[i] += w;
    }
  };

  for (int t = 0; t < T; ++t) {
    const StageBlock& src = base.stages[t];
    StageBlock& dst = lifted.stages[t];
    const int n = src.num_vars();
    dst.lower = Vector(n + d);
    dst.upper = Vector(n + d);
    dst.lower.head(n) = src.lower;
    dst.upper.head(n) = src.upper;

    if (t == 0) {
      Vector lo = xi_lo, hi = xi_hi;
      pad(lo, hi);
      dst.lower.tail(d) = lo;
      dst.upper.tail(d) = hi;
      const StageRealization& src_re = src.realizations[0];
      StageRealization re;
      re.p = 1.0;
      re.c = Vector::Zero(n + d);
      re.c.head(n) = src_re.c;
      re.A = Matrix::Zero(2 * d, n + d);
      re.A.topLeftCorner(d, n) = src_re.A;
      re.A.topRightCorner(d, d) = -Matrix::Identity(d, d);
      re.A.bottomRightCorner(d, d) = Matrix::Identity(d, d);
      re.b = Vector::Zero(2 * d);
      re.b.tail(d) = src_re.b;  // xi_1 pinned to the observed value
      dst.realizations.push_back(std::move(re));
      continue;
    }

    const NoiseSupport& eps = noise[t - 1];
    if (eps.points.size() != eps.probs.size() || eps.points.empty())
      throw std::invalid_argument("lift: malformed noise support");

    Vector eps_lo = eps.points[0], eps_hi = eps.points[0];
    for (const Vector& e : eps.points) {
      eps_lo = eps_lo.cwiseMin(e);
      eps_hi = eps_hi.cwiseMax(e);
    }
    Vector next_lo(d), next_hi(d);
    for (int i = 0; i < d; ++i) {
      double lo = mu[i] + eps_lo[i], hi = mu[i] + eps_hi[i];
      for (int j = 0; j < d; ++j) {
        double a = Phi(i, j) * xi_lo[j], b2 = Phi(i, j) * xi_hi[j];
        lo += std::min(a, b2);
        hi += std::max(a, b2);
      }
      next_lo[i] = lo;
      next_hi[i] = hi;
    }
    xi_lo = next_lo;
    xi_hi = next_hi;
    Vector blo = xi_lo, bhi = xi_hi;
    pad(blo, bhi);
    dst.lower.tail(d) = blo;
    dst.upper.tail(d) = bhi;

    const StageRealization& src_re = src.realizations[0];
    const int prev_n = base.stages[t - 1].num_vars();
    for (std::size_t j = 0; j < eps.points.size(); ++j) {
      StageRealization re;
      re.p = eps.probs[j];
      re.c = Vector::Zero(n + d);
      re.c.head(n) = src_re.c;
      re.B = Matrix::Zero(2 * d, prev_n + d);
      re.B.topLeftCorner(d, prev_n) = src_re.B;
      re.B.bottomRightCorner(d, d) = -Phi;
      re.A = Matrix::Zero(2 * d, n + d);
      re.A.topLeftCorner(d, n) = src_re.A;
      re.A.topRightCorner(d, d) = -Matrix::Identity(d, d);
      re.A.bottomRightCorner(d, d) = Matrix::Identity(d, d);
      re.b = Vector::Zero(2 * d);
      re.b.tail(d) = mu + eps.points[j];
      dst.realizations.push_back(std::move(re));
    }
  }
  return lifted;
}

ExtensiveForm to_extensive_form(const MultistageProblem& p, long node_cap) {
  auto errs = validate(p);
  if (!errs.empty())
    throw std::invalid_argument("extensive form on invalid problem: " +
                                errs.front());
  const int T = p.horizon;
  const bool markov = p.dependence == Dependence::MarkovChain;

  // Tree nodes in breadth-first order. Each node carries its stage, its
  // data (a realization), path probability, and parent index.
  struct Node {
    int stage;
    int parent;
    double prob;
    const StageRealization* data;
    int var_offset = 0;
  };
  std::vector<Node> tree;
  tree.push_back({0, -1, 1.0,
                  markov ? &p.lattice->nodes[0][0].data
                         : &p.stages[0].realizations[0]});
  std::vector<int> markov_node{0};  // lattice node index per tree node

  std::size_t level_begin = 0;
  for (int t = 1; t < T; ++t) {
    std::size_t level_end = tree.size();
    for (std::size_t v = level_begin; v < level_end; ++v) {
      if (markov) {
        const Matrix& P = p.lattice->transitions[t - 1];
        int src = markov_node[v];
        for (int j = 0; j < P.cols(); ++j) {
          if (P(src, j) <= 0.0) continue;
          tree.push_back({t, static_cast<int>(v), tree[v].prob * P(src, j),
                          &p.lattice->nodes[t][j].data});
          markov_node.push_back(j);
        }
      } else {
        for (const StageRealization& re : p.stages[t].realizations) {
          tree.push_back({t, static_cast<int>(v), tree[v].prob * re.p, &re});
          markov_node.push_back(-1);
        }
      }
      if (static_cast<long>(tree.size()) > node_cap)
        throw std::runtime_error("extensive-form tree exceeds the node cap");
    }
    level_begin = level_end;
  }

  int total_vars = 0, total_rows = 0;
  for (Node& node : tree) {
    node.var_offset = total_vars;
    total_vars += p.stages[node.stage].num_vars();
    total_rows += static_cast<int>(node.data->b.size());
  }

  ExtensiveForm out;
  out.node_count = static_cast<long>(tree.size());
  lp::LpProblem& lp = out.lp;
  lp.c = Vector::Zero(total_vars);
  lp.A = Matrix::Zero(total_rows, total_vars);
  lp.b = Vector::Zero(total_rows);
  lp.lower = Vector(total_vars);
  lp.upper = Vector(total_vars);

  int row = 0;
  for (const Node& node : tree) {
    const StageBlock& blk = p.stages[node.stage];
    const int n = blk.num_vars();
    const int m = static_cast<int>(node.data->b.size());
    lp.c.segment(node.var_offset, n) = node.prob * node.data->c;
    lp.lower.segment(node.var_offset, n) = blk.lower;
    lp.upper.segment(node.var_offset, n) = blk.upper;
    lp.A.block(row, node.var_offset, m, n) = node.data->A;
    if (node.parent >= 0) {
      const Node& par = tree[node.parent];
      lp.A.block(row, par.var_offset, m,
                 p.stages[par.stage].num_vars()) = node.data->B;
    }
    lp.b.segment(row, m) = node.data->b;
    row += m;
  }
  for (int j = 0; j < p.stages[0].num_vars(); ++j)
    out.first_stage_vars.push_back(j);
  return out;
}

}  // namespace mssp
