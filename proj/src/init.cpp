#include "lstmkf/init.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lstmkf/rng.hpp"

namespace lstmkf {

Matrix init_orthogonal(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  if (rows == 0 || cols == 0) throw std::invalid_argument("init_orthogonal: empty shape");
  const auto tall = static_cast<Eigen::Index>(std::max(rows, cols));
  const auto thin = static_cast<Eigen::Index>(std::min(rows, cols));

  Rng rng(seed);
  Eigen::MatrixXd gaussian(tall, thin);
  for (Eigen::Index i = 0; i < tall; ++i)
    for (Eigen::Index j = 0; j < thin; ++j) gaussian(i, j) = rng.normal();

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(tall, thin);
  const Eigen::MatrixXd r = qr.matrixQR().topLeftCorner(thin, thin);
  for (Eigen::Index j = 0; j < thin; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }

  Matrix out(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      out(i, j) = rows >= cols ? q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))
                               : q(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
    }
  }
  return out;
}

Matrix init_uniform(std::size_t rows, std::size_t cols, double bound, std::uint64_t seed) {
  if (!(bound > 0.0)) throw std::invalid_argument("init_uniform: bound must be positive");
  Rng rng(seed);
  Matrix out(rows, cols);
  for (double& v : out.data()) v = rng.uniform(-bound, bound);
  return out;
}

Matrix init_xavier(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  return init_uniform(rows, cols, bound, seed);
}

}  // namespace lstmkf
