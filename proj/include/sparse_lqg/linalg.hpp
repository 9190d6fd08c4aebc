#pragma once

// Dense linear-algebra aliases and small helpers shared by every module.

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace sparse_lqg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Sequence of matrices indexed by time step (0-based).
using MatrixSeq = std::vector<Matrix>;
using VectorSeq = std::vector<Vector>;

inline Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

inline void symmetrize(Matrix& m) { m = symmetrized(m); }

/// Block-diagonal composite with blocks in the given order.
Matrix block_diag(std::span<const Matrix> blocks);

/// N×N block matrix with every block equal to `block`.
Matrix tile(const Matrix& block, std::size_t copies);

/// Smallest eigenvalue of the symmetric part of `m`.
double min_eigenvalue(const Matrix& m);

double max_singular_value(const Matrix& m);
double min_singular_value(const Matrix& m);

/// Prefix offsets of a size list: {0, s0, s0+s1, ...}.
std::vector<Eigen::Index> offsets_of(std::span<const Eigen::Index> sizes);

}  // namespace sparse_lqg
