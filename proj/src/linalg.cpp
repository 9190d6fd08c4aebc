#include "sparse_lqg/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace sparse_lqg {

Matrix block_diag(std::span<const Matrix> blocks) {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  for (const auto& b : blocks) {
    rows += b.rows();
    cols += b.cols();
  }
  Matrix out = Matrix::Zero(rows, cols);
  Eigen::Index r = 0;
  Eigen::Index c = 0;
  for (const auto& b : blocks) {
    out.block(r, c, b.rows(), b.cols()) = b;
    r += b.rows();
    c += b.cols();
  }
  return out;
}

Matrix tile(const Matrix& block, std::size_t copies) {
  const auto k = static_cast<Eigen::Index>(copies);
  return block.replicate(k, k);
}

double min_eigenvalue(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrized(m),
                                            Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

double max_singular_value(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

double min_singular_value(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& s = svd.singularValues();
  return s(s.size() - 1);
}

std::vector<Eigen::Index> offsets_of(std::span<const Eigen::Index> sizes) {
  std::vector<Eigen::Index> out(sizes.size() + 1, 0);
  for (std::size_t k = 0; k < sizes.size(); ++k) out[k + 1] = out[k] + sizes[k];
  return out;
}

}  // namespace sparse_lqg
