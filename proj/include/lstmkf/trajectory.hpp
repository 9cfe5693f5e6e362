#pragma once

#include <vector>

#include "lstmkf/matrix.hpp"

namespace lstmkf {

/// Ground-truth states and measurements for one sequence, both T x d.
struct SequencePair {
  Matrix truth;
  Matrix measurements;

  std::size_t length() const { return truth.rows(); }
  std::size_t dim() const { return truth.cols(); }
};

/// Per-step Euclidean distance between the rows of two T x d matrices.
std::vector<double> euclidean_errors(const Matrix& estimates, const Matrix& truth);
double mean_euclidean_error(const Matrix& estimates, const Matrix& truth);
double median(std::vector<double> values);

}  // namespace lstmkf
