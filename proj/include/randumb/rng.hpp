#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace randumb {

/// Seeded Gaussian source used for every random basis in the project.
///
/// Engine: std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Gaussians come from the Box-Muller transform on 53-bit uniforms
/// (u1 in (0,1], u2 in [0,1)); each uniform pair yields two normals, cosine
/// branch first. The standard library's normal_distribution is avoided since
/// its algorithm is implementation-defined.
class GaussianRng {
 public:
  static constexpr std::string_view kName = "mt19937_64+box-muller";

  explicit GaussianRng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();

  /// Uniform integer in [0, bound) by rejection, bound > 0.
  std::uint64_t below(std::uint64_t bound);

  /// Standard normal draw.
  double normal();

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace randumb
