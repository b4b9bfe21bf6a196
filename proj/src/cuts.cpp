#include "mssp/cuts.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace mssp {

std::pair<double, int> CutPool::evaluate(const Vector& x) const {
  if (cuts_.empty()) throw std::logic_error("CutPool::evaluate on empty pool");
  double best = cuts_[0].value_at(x);
  int best_idx = 0;
  for (std::size_t i = 1; i < cuts_.size(); ++i) {
    double v = cuts_[i].value_at(x);
    if (v > best) {
      best = v;
      best_idx = static_cast<int>(i);
    }
  }
  return {best, best_idx};
}

Vector CutPool::subgradient_at(const Vector& x) const {
  return cuts_[evaluate(x).second].gradient;
}

bool CutPool::add(const Cut& cut) {
  if (cut.gradient.size() != dim())
    throw std::invalid_argument("cut gradient dimension mismatch");
  if (!std::isfinite(cut.intercept) || !cut.gradient.allFinite())
    throw std::invalid_argument("cut has non-finite entries");
  for (Cut& existing : cuts_) {
    if ((existing.gradient - cut.gradient).lpNorm<Eigen::Infinity>() > 1e-12)
      continue;
    bool tighter = majorant_ ? cut.intercept < existing.intercept - 1e-10
                             : cut.intercept > existing.intercept + 1e-10;
    if (!tighter) return false;
    existing.intercept = cut.intercept;
    existing.iteration = cut.iteration;
    return true;
  }
  cuts_.push_back(cut);
  return true;
}

void write_pools(std::ostream& out, const std::vector<CutPool>& pools) {
  out.precision(17);
  for (const CutPool& pool : pools) {
    out << "pool " << pool.stage() << ' ' << pool.node() << ' ' << pool.dim()
        << ' ' << pool.floor_value() << ' ' << pool.size() << '\n';
    for (const Cut& cut : pool.cuts()) {
      out << cut.iteration << ' ' << cut.intercept;
      for (int i = 0; i < cut.gradient.size(); ++i) out << ' ' << cut.gradient[i];
      out << '\n';
    }
  }
}

std::vector<CutPool> read_pools(std::istream& in) {
  std::vector<CutPool> pools;
  std::string tag;
  while (in >> tag) {
    if (tag != "pool") throw std::runtime_error("bad pool checkpoint header");
    int stage, node, dim;
    double floor_value;
    std::size_t count;
    in >> stage >> node >> dim >> floor_value >> count;
    CutPool pool(stage, dim, floor_value, node);
    for (std::size_t k = 0; k < count; ++k) {
      Cut cut;
      cut.gradient = Vector(dim);
      in >> cut.iteration >> cut.intercept;
      for (int i = 0; i < dim; ++i) in >> cut.gradient[i];
      if (k > 0) pool.add(cut);  // k = 0 is the floor cut, already present
    }
    pools.push_back(std::move(pool));
  }
  return pools;
}

}  // namespace mssp
