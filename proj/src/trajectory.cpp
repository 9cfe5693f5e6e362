#include "lstmkf/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lstmkf {

std::vector<double> euclidean_errors(const Matrix& estimates, const Matrix& truth) {
  require_same_shape("euclidean_errors", estimates, truth);
  std::vector<double> out(truth.rows());
  for (std::size_t t = 0; t < truth.rows(); ++t) {
    double s = 0.0;
    for (std::size_t k = 0; k < truth.cols(); ++k) {
      const double d = estimates(t, k) - truth(t, k);
      s += d * d;
    }
    out[t] = std::sqrt(s);
  }
  return out;
}

double mean_euclidean_error(const Matrix& estimates, const Matrix& truth) {
  const std::vector<double> e = euclidean_errors(estimates, truth);
  if (e.empty()) return 0.0;
  return std::accumulate(e.begin(), e.end(), 0.0) / static_cast<double>(e.size());
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace lstmkf
