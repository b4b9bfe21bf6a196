#include "mssp/scen.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <istream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

#include "mssp/rng.hpp"

namespace mssp::scen {

namespace {

double sqdist(const Vector& a, const Vector& b) {
  return (a - b).squaredNorm();
}

// farthest sample from the chosen centers, lowest index on ties
int farthest_sample(const std::vector<Vector>& samples,
                    const std::vector<Vector>& centers) {
  int best = 0;
  double best_d = -1.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double d = kInf;
    for (const Vector& c : centers) d = std::min(d, sqdist(samples[i], c));
    if (d > best_d) {
      best_d = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

}  // namespace

int nearest_center(const Vector& x, const std::vector<Vector>& centers) {
  int best = 0;
  double best_d = sqdist(x, centers[0]);
  for (std::size_t j = 1; j < centers.size(); ++j) {
    double d = sqdist(x, centers[j]);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(j);
    }
  }
  return best;
}

KmeansResult fit_centers(const std::vector<Vector>& samples, int n_centers,
                         std::uint64_t seed) {
  if (n_centers < 1) throw std::invalid_argument("need at least one center");
  if (samples.empty()) throw std::invalid_argument("no samples");
  const int dim = static_cast<int>(samples[0].size());
  std::set<std::vector<double>> distinct;
  for (const Vector& s : samples) {
    if (s.size() != dim)
      throw std::invalid_argument("samples disagree in dimension");
    distinct.insert(std::vector<double>(s.data(), s.data() + s.size()));
  }
  if (static_cast<int>(distinct.size()) < n_centers)
    throw std::invalid_argument("fewer distinct samples than centers");

  KmeansResult out;
  RngStream rng(seed, "kmeans-seed");
  std::vector<double> uniform_pick(samples.size(),
                                   1.0 / static_cast<double>(samples.size()));
  out.centers.push_back(samples[rng.sample_index(uniform_pick)]);
  while (static_cast<int>(out.centers.size()) < n_centers)
    out.centers.push_back(samples[farthest_sample(samples, out.centers)]);

  out.assignment.assign(samples.size(), 0);
  for (int sweep = 0; sweep < 500; ++sweep) {
    double dist = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      out.assignment[i] = nearest_center(samples[i], out.centers);
      dist += sqdist(samples[i], out.centers[out.assignment[i]]);
    }
    out.distortion.push_back(dist);
    if (sweep > 0) {
      double prev = out.distortion[sweep - 1];
      if (prev - dist <= 1e-9 * std::max(1.0, prev)) break;
    }
    std::vector<Vector> sums(n_centers, Vector::Zero(dim));
    std::vector<long> counts(n_centers, 0);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      sums[out.assignment[i]] += samples[i];
      ++counts[out.assignment[i]];
    }
    for (int j = 0; j < n_centers; ++j) {
      if (counts[j] > 0) {
        out.centers[j] = sums[j] / static_cast<double>(counts[j]);
      } else {
        out.centers[j] = samples[farthest_sample(samples, out.centers)];
        ++out.reseeds;
      }
    }
  }
  return out;
}

TransitionEstimate estimate_transitions(
    const std::vector<std::pair<Vector, Vector>>& pairs,
    const std::vector<Vector>& from_centers,
    const std::vector<Vector>& to_centers) {
  if (from_centers.empty() || to_centers.empty())
    throw std::invalid_argument("empty center set");
  const int k = static_cast<int>(from_centers.size());
  const int l = static_cast<int>(to_centers.size());
  TransitionEstimate out;
  out.matrix = Matrix::Zero(k, l);
  for (const auto& [from, to] : pairs)
    out.matrix(nearest_center(from, from_centers),
               nearest_center(to, to_centers)) += 1.0;
  for (int i = 0; i < k; ++i) {
    double row_sum = out.matrix.row(i).sum();
    if (row_sum == 0.0) {
      out.matrix.row(i).setConstant(1.0);
      row_sum = static_cast<double>(l);
      ++out.smoothed_rows;
    }
    out.matrix.row(i) /= row_sum;
    // push rounding residue into the largest entry so the row sums to 1
    for (int rep = 0; rep < 10 && out.matrix.row(i).sum() != 1.0; ++rep) {
      int top;
      out.matrix.row(i).maxCoeff(&top);
      out.matrix(i, top) += 1.0 - out.matrix.row(i).sum();
    }
  }
  return out;
}

std::vector<Vector> saa_draw(const Generator& gen, int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("need at least one draw");
  RngStream rng(seed, "saa-draw");
  std::vector<Vector> out;
  out.reserve(n);
  if (const auto* d = std::get_if<DiscreteGenerator>(&gen)) {
    if (d->points.size() != d->probs.size() || d->points.empty())
      throw std::invalid_argument("discrete generator shape mismatch");
    double psum = 0.0;
    for (double p : d->probs) psum += p;
    if (std::abs(psum - 1.0) > 1e-9)
      throw std::invalid_argument("discrete probabilities must sum to 1");
    for (int i = 0; i < n; ++i)
      out.push_back(d->points[rng.sample_index(d->probs)]);
  } else if (const auto* u = std::get_if<UniformBoxGenerator>(&gen)) {
    if (u->lower.size() != u->upper.size() || !u->lower.allFinite() ||
        !u->upper.allFinite() || (u->lower.array() > u->upper.array()).any())
      throw std::invalid_argument("uniform generator needs a finite box");
    for (int i = 0; i < n; ++i) {
      Vector x(u->lower.size());
      for (int j = 0; j < x.size(); ++j)
        x[j] = u->lower[j] + rng.uniform() * (u->upper[j] - u->lower[j]);
      out.push_back(std::move(x));
    }
  } else {
    const auto& g = std::get<GaussianGenerator>(gen);
    if (g.covariance.rows() != g.mean.size() ||
        g.covariance.cols() != g.mean.size())
      throw std::invalid_argument("gaussian moment shape mismatch");
    Eigen::LLT<Matrix> llt(g.covariance);
    if (llt.info() != Eigen::Success)
      throw std::invalid_argument(
          "gaussian covariance must be positive definite");
    Matrix chol = llt.matrixL();
    for (int i = 0; i < n; ++i) {
      Vector z(g.mean.size());
      for (int j = 0; j < z.size(); ++j) z[j] = rng.gaussian();
      out.push_back(g.mean + chol * z);
    }
  }
  return out;
}

std::vector<StageRealization> saa_realizations(const StageRealization& base,
                                               const Generator& gen, int n,
                                               std::uint64_t seed) {
  auto draws = saa_draw(gen, n, seed);
  std::vector<StageRealization> out;
  out.reserve(n);
  for (Vector& draw : draws) {
    if (draw.size() != base.b.size())
      throw std::invalid_argument("draw dimension does not match the rhs");
    StageRealization re = base;
    re.b = std::move(draw);
    re.p = 1.0 / static_cast<double>(n);
    out.push_back(std::move(re));
  }
  return out;
}

std::vector<Vector> read_series_csv(std::istream& in) {
  std::vector<Vector> out;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r\n,") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream fields(line);
    std::string field;
    bool numeric = true;
    while (std::getline(fields, field, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(field, &used));
        while (used < field.size() && std::isspace(
                   static_cast<unsigned char>(field[used])))
          ++used;
        if (used != field.size()) numeric = false;
      } catch (const std::exception&) {
        numeric = false;
      }
      if (!numeric) break;
    }
    if (!numeric) {
      if (first) {  // header row
        first = false;
        continue;
      }
      throw std::runtime_error("non-numeric series entry: " + line);
    }
    first = false;
    if (!out.empty() && static_cast<int>(row.size()) != out[0].size())
      throw std::runtime_error("ragged series row: " + line);
    out.push_back(Eigen::Map<Vector>(row.data(), row.size()));
  }
  return out;
}

LatticeFit fit_lattice(const std::vector<Vector>& series, int clusters,
                       int period, std::uint64_t seed) {
  if (period < 1) throw std::invalid_argument("period must be positive");
  if (static_cast<int>(series.size()) < 2 * period)
    throw std::invalid_argument("series too short for the period");
  LatticeFit fit;
  for (int phase = 0; phase < period; ++phase) {
    std::vector<Vector> bucket;
    for (std::size_t i = phase; i < series.size();
         i += static_cast<std::size_t>(period))
      bucket.push_back(series[i]);
    fit.phases.push_back(
        fit_centers(bucket, clusters, seed + static_cast<std::uint64_t>(phase)));
  }
  for (int phase = 0; phase < period; ++phase) {
    std::vector<std::pair<Vector, Vector>> pairs;
    for (std::size_t i = phase; i + 1 < series.size();
         i += static_cast<std::size_t>(period))
      pairs.emplace_back(series[i], series[i + 1]);
    fit.transitions.push_back(
        estimate_transitions(pairs, fit.phases[phase].centers,
                             fit.phases[(phase + 1) % period].centers));
  }
  return fit;
}

}  // namespace mssp::scen
