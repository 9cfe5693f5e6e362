#include "lstmkf/grid_search.hpp"

#include <algorithm>
#include <cstdio>
#include <tuple>

namespace lstmkf {

std::string to_string(BaselineFamily family) {
  switch (family) {
    case BaselineFamily::ConstantVelocity: return "kalman_vel";
    case BaselineFamily::ConstantAcceleration: return "kalman_acc";
    case BaselineFamily::Ema: return "ema";
  }
  return "unknown";
}

Matrix run_baseline(const Matrix& measurements, BaselineFamily family, const GridPoint& point, double dt) {
  const std::size_t d = measurements.cols();
  switch (family) {
    case BaselineFamily::ConstantVelocity:
      return kf_estimates(measurements, build_cv_model(d, dt, point.q, point.r));
    case BaselineFamily::ConstantAcceleration:
      return kf_estimates(measurements, build_ca_model(d, dt, point.q, point.r));
    case BaselineFamily::Ema:
      return ema_filter(measurements, point.window);
  }
  throw std::invalid_argument("run_baseline: unknown family");
}

double pooled_mean_error(std::span<const Matrix> estimates, std::span<const SequencePair> pairs) {
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t s = 0; s < pairs.size(); ++s) {
    for (double e : euclidean_errors(estimates[s], pairs[s].truth)) {
      total += e;
      ++count;
    }
  }
  return count == 0 ? 0.0 : total / static_cast<double>(count);
}

GridSearchResult grid_search(std::span<const SequencePair> train, BaselineFamily family,
                             std::span<const double> q_grid, std::span<const double> r_grid,
                             std::span<const std::size_t> window_grid, double dt) {
  if (train.empty()) throw std::invalid_argument("grid_search: no training data");
  std::vector<GridPoint> points;
  if (family == BaselineFamily::Ema) {
    for (std::size_t w : window_grid) points.push_back({0.0, 0.0, w});
  } else {
    for (double q : q_grid)
      for (double r : r_grid) points.push_back({q, r, 0});
  }
  if (points.empty()) throw std::invalid_argument("grid_search: empty grid");

  GridSearchResult result;
  for (const GridPoint& p : points) {
    std::vector<Matrix> estimates;
    estimates.reserve(train.size());
    for (const SequencePair& pair : train) estimates.push_back(run_baseline(pair.measurements, family, p, dt));
    result.table.push_back({p, pooled_mean_error(estimates, train)});
  }
  const auto key = [](const GridRow& row) {
    return std::make_tuple(row.mean_error, row.point.q, row.point.r, row.point.window);
  };
  const auto best = std::min_element(result.table.begin(), result.table.end(),
                                     [&](const GridRow& a, const GridRow& b) { return key(a) < key(b); });
  result.best = best->point;
  result.best_error = best->mean_error;
  return result;
}

std::string grid_table_csv(const GridSearchResult& result, BaselineFamily family) {
  std::string out = family == BaselineFamily::Ema ? "window,mean_error\n" : "q,r,mean_error\n";
  char buf[128];
  for (const GridRow& row : result.table) {
    if (family == BaselineFamily::Ema) {
      std::snprintf(buf, sizeof buf, "%zu,%.17g\n", row.point.window, row.mean_error);
    } else {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", row.point.q, row.point.r, row.mean_error);
    }
    out += buf;
  }
  return out;
}

}  // namespace lstmkf
