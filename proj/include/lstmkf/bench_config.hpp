#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lstmkf/lstm_kf.hpp"
#include "lstmkf/synth.hpp"
#include "lstmkf/train.hpp"

namespace lstmkf {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DataConfig {
  std::string generator = "oscillator";
  std::size_t dim = 2;
  std::size_t length = 100;
  std::size_t train_sequences = 20;
  std::size_t test_sequences = 10;
  double dt = 0.1;
  double q = 0.05;  // linear_cv only
  double r = 0.1;
  double amplitude = 1.0;  // oscillator only
  double frequency = 1.0;
  std::vector<std::size_t> burst_starts;
  std::vector<std::size_t> burst_ends;
  double burst_scale = 10.0;
};

/// Training fields left unset fall back to the preset defaults.
struct TrainOverrides {
  std::vector<std::string> models{"lstm_kf", "std_lstm"};
  std::optional<double> learning_rate;
  std::optional<double> decay;
  std::optional<std::size_t> decay_start_epoch;
  std::optional<std::size_t> truncation;
  std::optional<std::size_t> batch_size;
  std::optional<std::size_t> epochs;
  std::optional<double> lambda;
  std::optional<double> clip_norm;
};

struct EvalConfig {
  std::vector<std::string> methods{"measurements", "kalman_vel", "kalman_acc", "ema", "std_lstm", "lstm_kf"};
  std::vector<double> q_grid{1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0, 1000.0};
  std::vector<double> r_grid{1e-3, 1e-2, 1e-1, 1.0, 10.0};
  std::vector<std::size_t> ema_windows{1, 2, 3, 5, 8, 13, 21};
};

struct RunConfig {
  std::uint64_t seed = 0;
  DataConfig data;
  Preset preset = Preset::Small;
  TrainOverrides train;
  EvalConfig eval;
  std::size_t noise_trace_sequence = 0;

  /// Cross-field checks; throws ConfigError.
  void validate() const;
  TrainConfig train_config() const;
};

/// All method names accepted in [eval] methods, in table order.
const std::vector<std::string>& known_methods();

/**
 * Parses the sectioned key = value format. Unknown sections or keys, repeated
 * keys, and malformed values are errors. Lists are comma separated.
 */
RunConfig parse_run_config(std::istream& in);
RunConfig load_run_config(const std::string& path);

/// Canonical text form; parse_run_config(to_ini(c)) reproduces c.
std::string to_ini(const RunConfig& config);

/// Dataset metadata the [data] section describes for the train (split 0) or
/// test (split 1) set.
DatasetMetadata dataset_metadata(const RunConfig& config, int split);
TrajectoryDataset make_dataset(const RunConfig& config, int split);

}  // namespace lstmkf
