#include "sparse_lqg/sampling.hpp"

#include <Eigen/Eigenvalues>

namespace sparse_lqg {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t stream_key(std::uint64_t seed, std::uint64_t run,
                         std::uint64_t step, NoiseKind kind,
                         std::uint64_t agent) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ run);
  h = splitmix64(h ^ step);
  h = splitmix64(h ^ static_cast<std::uint64_t>(kind));
  return splitmix64(h ^ agent);
}

GaussianSampler::GaussianSampler(const Matrix& covariance) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrized(covariance));
  const Vector sqrt_vals = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  root_ = eig.eigenvectors() * sqrt_vals.asDiagonal() *
          eig.eigenvectors().transpose();
  zero_ = sqrt_vals.maxCoeff() == 0.0;
}

Vector GaussianSampler::draw(std::uint64_t key) const {
  if (zero_) return Vector::Zero(root_.rows());
  std::mt19937_64 gen(key);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(root_.rows());
  for (Eigen::Index k = 0; k < z.size(); ++k) z(k) = normal(gen);
  return root_ * z;
}

}  // namespace sparse_lqg
