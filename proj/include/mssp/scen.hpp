#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <variant>
#include <vector>

#include "mssp/model.hpp"

namespace mssp::scen {

struct KmeansResult {
  std::vector<Vector> centers;
  std::vector<int> assignment;     // sample -> center index
  std::vector<double> distortion;  // per sweep, non-increasing
  long reseeds = 0;                // empty-cell repairs

  double final_distortion() const { return distortion.back(); }
};

/// Index of the closest center in Euclidean distance; ties go to the
/// lowest index so cell boundaries are assigned deterministically.
int nearest_center(const Vector& x, const std::vector<Vector>& centers);

/// Lloyd quantization of the sample cloud into n_centers cells. Seeding is
/// farthest-point: the first center is drawn by the seed, each next center
/// is the sample farthest from those chosen. Cells that empty out during a
/// sweep are reseeded the same way. Stops when the relative distortion
/// improvement drops below 1e-9 or after 500 sweeps.
KmeansResult fit_centers(const std::vector<Vector>& samples, int n_centers,
                         std::uint64_t seed);

struct TransitionEstimate {
  Matrix matrix;           // row-stochastic, rows sum to 1 exactly
  long smoothed_rows = 0;  // all-zero rows replaced by a uniform row
};

/// Empirical conditional frequencies of moving between cells, from paired
/// consecutive observations. Rows with no observations get a uniform
/// pseudo-count row and are counted in smoothed_rows.
TransitionEstimate estimate_transitions(
    const std::vector<std::pair<Vector, Vector>>& pairs,
    const std::vector<Vector>& from_centers,
    const std::vector<Vector>& to_centers);

struct DiscreteGenerator {
  std::vector<Vector> points;
  std::vector<double> probs;
};

struct UniformBoxGenerator {
  Vector lower;
  Vector upper;
};

struct GaussianGenerator {
  Vector mean;
  Matrix covariance;
};

using Generator =
    std::variant<DiscreteGenerator, UniformBoxGenerator, GaussianGenerator>;

/// n iid draws from the generator, reproducible by seed.
std::vector<Vector> saa_draw(const Generator& gen, int n, std::uint64_t seed);

/// Sample-average stage block: n copies of the template realization with
/// probability 1/n each and the drawn vector substituted for the rhs b.
std::vector<StageRealization> saa_realizations(const StageRealization& base,
                                               const Generator& gen, int n,
                                               std::uint64_t seed);

/// Historical series, one time step per CSV row. A non-numeric first row
/// is treated as a header and skipped.
std::vector<Vector> read_series_csv(std::istream& in);

/// Periodic lattice skeleton fitted from one historical series: per-phase
/// center sets and cyclic phase-to-phase transition matrices
/// (transitions[p] maps phase p to phase (p+1) mod period).
struct LatticeFit {
  std::vector<KmeansResult> phases;
  std::vector<TransitionEstimate> transitions;
};

LatticeFit fit_lattice(const std::vector<Vector>& series, int clusters,
                       int period, std::uint64_t seed);

}  // namespace mssp::scen
