#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace rblo {

/// Seeded pseudorandom source.
///
/// Bits come from std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Real-valued draws are derived from those bits here (53-bit
/// uniforms, Box-Muller normals) instead of through <random> distributions,
/// whose algorithms are implementation-defined. The same seed therefore yields
/// the same stream on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform();
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);
  double normal();
  Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols);

  /// Stream-splitting helper: a well-mixed seed for child stream `index`.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t index);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace rblo
