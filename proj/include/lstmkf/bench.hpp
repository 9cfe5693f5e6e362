#pragma once

#include <filesystem>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "lstmkf/bench_config.hpp"
#include "lstmkf/grid_search.hpp"
#include "lstmkf/lstm_kf.hpp"

namespace lstmkf {

/// Missing inputs, bad arguments and malformed files met by a command.
class BenchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File names used inside an output directory.
struct BenchPaths {
  std::filesystem::path dir;

  std::filesystem::path train_data() const { return dir / "train.dataset"; }
  std::filesystem::path test_data() const { return dir / "test.dataset"; }
  std::filesystem::path checkpoint(const std::string& model) const { return dir / (model + ".checkpoint.json"); }
  std::filesystem::path training_log(const std::string& model) const { return dir / (model + ".log.csv"); }
  std::filesystem::path metrics_csv() const { return dir / "metrics.csv"; }
  std::filesystem::path metrics_txt() const { return dir / "metrics.txt"; }
  std::filesystem::path gain_curve() const { return dir / "gain_curve.csv"; }
  std::filesystem::path noise_trace() const { return dir / "noise_trace.csv"; }
};

// Checkpoints -------------------------------------------------------------

nlohmann::json lstm_kf_checkpoint(const LstmKfParams& params, const RunConfig& config);
nlohmann::json std_lstm_checkpoint(const NetModule& module, const RunConfig& config);
LstmKfParams load_lstm_kf_checkpoint(const std::filesystem::path& path);
NetModule load_std_lstm_checkpoint(const std::filesystem::path& path);

/// Fresh, untrained models for a run.
LstmKfParams initial_lstm_kf(const RunConfig& config);
NetModule initial_std_lstm(const RunConfig& config);

// Metrics ------------------------------------------------------------------

struct MetricsRow {
  std::string method;
  double mean_error = 0.0;
  double median_error = 0.0;
  std::vector<double> rmse;  // per dimension
  std::string detail;        // chosen grid point, if any
};

struct MetricsTable {
  std::vector<MetricsRow> rows;
  std::string banner;

  const MetricsRow& row(const std::string& method) const;
};

MetricsRow score(const std::string& method, std::span<const Matrix> estimates, std::span<const SequencePair> truth);

/// Header "method,mean_error,median_error,rmse_1..rmse_d,detail".
std::string metrics_csv(const MetricsTable& table);
std::string metrics_text(const MetricsTable& table);

// Commands ------------------------------------------------------------------
// Each command writes its files into `out_dir` and returns the text the CLI
// prints. Progress lines, if any, go to `log`.

std::string cmd_generate(const RunConfig& config, const std::filesystem::path& out_dir);
std::string cmd_train(const RunConfig& config, const std::filesystem::path& out_dir, std::ostream* log = nullptr);
MetricsTable cmd_eval(const RunConfig& config, const std::filesystem::path& out_dir);

/// Reads a training log and keeps epoch, loss and mean_gain. Throws
/// BenchError on a malformed log.
std::string gain_curve_csv(const std::string& training_log);
std::string cmd_gain_curve(const std::filesystem::path& training_log, const std::filesystem::path& out_path);

/// Columns t, in_burst, r_norm, q_norm, r_norm_scaled, q_norm_scaled; the
/// scaled columns are min-max normalised to [0, 1].
std::string noise_trace_csv(const FilterTrace& trace, const BurstSpec& bursts);
std::string cmd_noise_trace(const RunConfig& config, const std::filesystem::path& out_dir, std::size_t sequence);

}  // namespace lstmkf
