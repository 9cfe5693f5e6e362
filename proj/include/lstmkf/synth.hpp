#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lstmkf/trajectory.hpp"

namespace lstmkf {

/// Burst intervals are 1-indexed and inclusive: {50, 60} covers steps 50..60.
struct BurstSpec {
  std::vector<std::size_t> starts;
  std::vector<std::size_t> ends;
  double scale = 1.0;

  bool empty() const { return starts.empty(); }
  /// Throws std::out_of_range unless intervals lie in [1, length], are
  /// ordered, and do not overlap.
  void validate(std::size_t length) const;
  /// True if 0-based step t lies inside a burst.
  bool contains(std::size_t t) const;
};

struct DatasetMetadata {
  std::string generator;                 // "linear_cv" or "oscillator"
  std::map<std::string, double> params;  // generator parameters (q, r, amplitude, ...)
  std::uint64_t seed = 0;
  double dt = 1.0;
  BurstSpec bursts;
  std::uint64_t burst_seed = 0;

  friend bool operator==(const DatasetMetadata& a, const DatasetMetadata& b) {
    return a.generator == b.generator && a.params == b.params && a.seed == b.seed && a.dt == b.dt &&
           a.bursts.starts == b.bursts.starts && a.bursts.ends == b.bursts.ends &&
           a.bursts.scale == b.bursts.scale && a.burst_seed == b.burst_seed;
  }
};

struct TrajectoryDataset {
  std::vector<SequencePair> sequences;
  DatasetMetadata meta;

  std::size_t dim() const { return sequences.empty() ? 0 : sequences.front().dim(); }
  std::size_t length() const { return sequences.empty() ? 0 : sequences.front().length(); }
};

/**
 * Constant-velocity trajectories with state [pose; velocity]:
 *   x_0: pose and velocity ~ N(0, 1) per coordinate
 *   x_t = A x_{t-1} + w,  w ~ N(0, q I) on the velocity block
 *   z_t = pose_t + v,     v ~ N(0, r I)
 * Truth is the pose. Sequence i draws from Rng(derive_seed(seed, i)).
 */
TrajectoryDataset gen_linear_cv(std::size_t d, std::size_t length, std::size_t n_seq, double q, double r,
                                double dt, std::uint64_t seed);

/**
 * Lissajous motion: coordinate k follows
 *   amplitude * sin(2 pi frequency (k + 1) t dt + phase_k),  phase_k ~ U[0, 2 pi)
 * and measurements add N(0, r) noise per coordinate.
 */
TrajectoryDataset gen_oscillator(std::size_t d, std::size_t length, std::size_t n_seq, double amplitude,
                                 double frequency, double r, double dt, std::uint64_t seed);

/// Re-samples measurement noise inside bursts with standard deviation
/// scale * sqrt(r). Truth and out-of-burst measurements are untouched.
TrajectoryDataset apply_bursts(const TrajectoryDataset& dataset, const BurstSpec& spec, std::uint64_t seed);

/// Rebuilds a dataset from its metadata alone.
TrajectoryDataset regenerate(const DatasetMetadata& meta, std::size_t n_seq);

struct OracleReport {
  double oracle_kf = 0.0;     // KF with the generating (A, Q, R)
  double measurements = 0.0;  // raw measurement error
};

/// Mean Euclidean error of the exact-model KF on a linear_cv dataset.
/// Throws std::invalid_argument if the metadata does not describe linear_cv data.
OracleReport oracle_error(const TrajectoryDataset& dataset);

/// Mean Euclidean error of raw measurements against truth.
double measurement_error(const TrajectoryDataset& dataset);

}  // namespace lstmkf
