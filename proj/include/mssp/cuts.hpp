#pragma once

#include <iosfwd>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mssp/linalg.hpp"

namespace mssp {

/// Affine minorant  l(x) = intercept + gradient'x  of a convex
/// expected cost-to-go function.
struct Cut {
  double intercept = 0.0;
  Vector gradient;
  int iteration = 0;

  double value_at(const Vector& x) const { return intercept + gradient.dot(x); }
};

/// Growing family of cuts for one stage (and lattice node, when present).
/// Always holds a constant floor cut so evaluation is finite everywhere.
class CutPool {
 public:
  CutPool() = default;
  CutPool(int stage, int dim, double floor_value, int node = -1)
      : stage_(stage), node_(node), floor_(floor_value) {
    Cut floor_cut;
    floor_cut.intercept = floor_value;
    floor_cut.gradient = Vector::Zero(dim);
    cuts_.push_back(std::move(floor_cut));
  }
  // Seeded pool: starts from a real affine cut instead of a constant
  // floor, for pools that represent an exactly known max-of-affine
  // function (terminal costs).
  CutPool(int stage, const Cut& seed, int node = -1)
      : stage_(stage), node_(node), floor_(seed.intercept) {
    cuts_.push_back(seed);
  }

  int stage() const { return stage_; }
  int node() const { return node_; }
  int dim() const { return static_cast<int>(cuts_.front().gradient.size()); }
  double floor_value() const { return floor_; }
  std::size_t size() const { return cuts_.size(); }
  bool empty() const { return cuts_.empty(); }
  const std::vector<Cut>& cuts() const { return cuts_; }

  /// max over cuts and the index achieving it; ties go to the lowest index.
  std::pair<double, int> evaluate(const Vector& x) const;

  /// Gradient of the active cut at x (a valid subgradient of the max).
  Vector subgradient_at(const Vector& x) const;

  /// Adds a cut, keeping gradients unique: a cut whose gradient matches an
  /// existing one replaces it when tighter and is dropped otherwise
  /// (pointwise dominance, so the represented function only improves).
  /// Returns whether the pool changed.
  bool add(const Cut& cut);

  /// Majorant pools (evaluated as a min) keep the lower of two cuts with
  /// matching gradients instead of the higher.
  void set_majorant() { majorant_ = true; }

 private:
  int stage_ = 0;
  int node_ = -1;
  double floor_ = 0.0;
  bool majorant_ = false;
  std::vector<Cut> cuts_;
};

/// Text checkpoint format, one cut per line: stage node alpha beta...
void write_pools(std::ostream& out, const std::vector<CutPool>& pools);
std::vector<CutPool> read_pools(std::istream& in);

}  // namespace mssp
