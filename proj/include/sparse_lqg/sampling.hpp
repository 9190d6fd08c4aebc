#pragma once

// Reproducible Gaussian noise. Every draw is keyed by
// (seed, run, step, kind, agent), so a run's noise never depends on how many
// other runs were simulated or in which order, and parallel rollouts are
// bit-identical to serial ones.

#include "sparse_lqg/linalg.hpp"

#include <cstdint>
#include <random>

namespace sparse_lqg {

enum class NoiseKind : std::uint64_t {
  kInitialState = 1,
  kProcess = 2,
  kObservation = 3,
};

/// SplitMix64-mixed key of one noise draw.
std::uint64_t stream_key(std::uint64_t seed, std::uint64_t run,
                         std::uint64_t step, NoiseKind kind,
                         std::uint64_t agent = 0);

/// Zero-mean Gaussian with a fixed covariance, sampled through a symmetric
/// square root (eigendecomposition, negative eigenvalues clipped at 0).
class GaussianSampler {
 public:
  GaussianSampler() = default;
  explicit GaussianSampler(const Matrix& covariance);

  Eigen::Index dim() const { return root_.rows(); }
  const Matrix& root() const { return root_; }

  /// One draw from a generator seeded with `key`.
  Vector draw(std::uint64_t key) const;

 private:
  Matrix root_;
  bool zero_ = true;
};

}  // namespace sparse_lqg
