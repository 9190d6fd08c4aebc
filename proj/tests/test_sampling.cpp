#include "sparse_lqg/sampling.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace sparse_lqg;

TEST(Sampling, KeysDifferAcrossEveryField) {
  std::set<std::uint64_t> keys;
  for (std::uint64_t run = 0; run < 4; ++run)
    for (std::uint64_t t = 0; t < 4; ++t)
      for (auto kind : {NoiseKind::kInitialState, NoiseKind::kProcess,
                        NoiseKind::kObservation})
        for (std::uint64_t a = 0; a < 3; ++a)
          keys.insert(stream_key(11, run, t, kind, a));
  EXPECT_EQ(keys.size(), 4u * 4u * 3u * 3u);
  EXPECT_NE(stream_key(1, 0, 0, NoiseKind::kProcess),
            stream_key(2, 0, 0, NoiseKind::kProcess));
}

TEST(Sampling, DrawIsAFunctionOfTheKey) {
  const GaussianSampler s(Matrix::Identity(3, 3));
  EXPECT_EQ(s.draw(42), s.draw(42));
  EXPECT_NE(s.draw(42), s.draw(43));
}

TEST(Sampling, EmpiricalCovarianceMatches) {
  Matrix cov(2, 2);
  cov << 2.0, 0.6, 0.6, 0.5;
  const GaussianSampler s(cov);
  EXPECT_NEAR((s.root() * s.root().transpose() - cov).norm(), 0.0, 1e-12);
  const int n = 200000;
  Matrix acc = Matrix::Zero(2, 2);
  for (int k = 0; k < n; ++k) {
    const Vector x = s.draw(stream_key(5, k, 0, NoiseKind::kProcess));
    acc += x * x.transpose();
  }
  acc /= n;
  EXPECT_LT((acc - cov).norm() / cov.norm(), 0.01);
}

TEST(Sampling, IndefiniteCovarianceIsClipped) {
  Matrix cov(2, 2);
  cov << 1.0, 0.0, 0.0, -1e-12;
  const GaussianSampler s(cov);
  EXPECT_TRUE(s.root().allFinite());
  EXPECT_NEAR(s.root()(1, 1), 0.0, 1e-12);
}

TEST(Sampling, ZeroCovarianceDrawsZero) {
  const GaussianSampler s(Matrix::Zero(2, 2));
  EXPECT_EQ(s.draw(3), Vector::Zero(2));
}
