#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace mssp {

/// Named, counter-addressable random stream. All randomness in the toolkit
/// flows from one master seed through streams keyed by (seed, name, index),
/// so results do not depend on scheduling or thread count.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string_view name, std::uint64_t index = 0)
      : engine_(mix(seed, name, index)) {}

  double uniform() {
    return std::generate_canonical<double, 53>(engine_);
  }

  double gaussian() {
    // Box-Muller on demand; no cached spare so the stream state is
    // a pure function of the number of draws.
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  /// Inverse-CDF draw over a finite distribution (probabilities sum to 1).
  int sample_index(const std::vector<double>& probs) {
    double u = uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  static std::uint64_t mix(std::uint64_t seed, std::string_view name,
                           std::uint64_t index) {
    // FNV-1a over the name, then splitmix64 to spread the bits.
    std::uint64_t h = 14695981039346656037ull;
    for (char ch : name) {
      h ^= static_cast<unsigned char>(ch);
      h *= 1099511628211ull;
    }
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (h ^ (index + 1));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::mt19937_64 engine_;
};

}  // namespace mssp
