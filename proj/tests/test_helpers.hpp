#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "lstmkf/matrix.hpp"
#include "lstmkf/rng.hpp"

namespace lstmkf::testing {

inline Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = scale * rng.normal();
  return m;
}

/// Random SPD matrix B B^T + shift I.
inline Matrix random_spd(std::size_t n, Rng& rng, double shift = 1.0) {
  const Matrix b = random_matrix(n, n, rng);
  return matmul(b, transpose(b)) + Matrix::identity(n) * shift;
}

inline Eigen::MatrixXd to_eigen(const Matrix& m) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(i, j);
  return out;
}

inline double min_eigenvalue(const Matrix& symmetric) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(symmetric));
  return es.eigenvalues().minCoeff();
}

inline double asymmetry(const Matrix& m) { return max_abs_diff(m, transpose(m)); }

}  // namespace lstmkf::testing
