#pragma once

#include <span>
#include <string>
#include <vector>

#include "lstmkf/kalman.hpp"

namespace lstmkf {

enum class BaselineFamily { ConstantVelocity, ConstantAcceleration, Ema };

std::string to_string(BaselineFamily family);

struct GridPoint {
  double q = 0.0;
  double r = 0.0;
  std::size_t window = 0;
};

struct GridRow {
  GridPoint point;
  double mean_error = 0.0;
};

struct GridSearchResult {
  GridPoint best;
  double best_error = 0.0;
  std::vector<GridRow> table;  // grid order: q outer, r inner; or windows ascending as given
};

/// Estimates (T x d) of one baseline at one grid point.
Matrix run_baseline(const Matrix& measurements, BaselineFamily family, const GridPoint& point, double dt);

/**
 * Evaluates every grid point on `train` and returns the one with the lowest
 * mean Euclidean error over all steps of all sequences. Kalman families use
 * q_grid x r_grid; EMA uses window_grid. Exact ties go to the smallest q,
 * then r, then window.
 */
GridSearchResult grid_search(std::span<const SequencePair> train, BaselineFamily family,
                             std::span<const double> q_grid, std::span<const double> r_grid,
                             std::span<const std::size_t> window_grid, double dt);

/// CSV with one header row: "q,r,mean_error" or "window,mean_error".
std::string grid_table_csv(const GridSearchResult& result, BaselineFamily family);

/// Mean Euclidean error over every step of every sequence.
double pooled_mean_error(std::span<const Matrix> estimates, std::span<const SequencePair> pairs);

}  // namespace lstmkf
