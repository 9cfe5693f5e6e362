#include "lstmkf/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lstmkf/dataset_io.hpp"
#include "lstmkf/train.hpp"
#include "lstmkf/weights_io.hpp"

namespace lstmkf {

namespace fs = std::filesystem;

namespace {

constexpr const char* kCheckpointFormat = "lstmkf-checkpoint";
constexpr int kCheckpointVersion = 1;

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::string real(double v) { return fmt("%.17g", v); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw BenchError("cannot write '" + path.string() + "'");
  out << text;
  if (!out.flush()) throw BenchError("error writing '" + path.string() + "'");
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw BenchError("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw BenchError("cannot create directory '" + dir.string() + "': " + ec.message());
}

/// Loads a split and checks it matches what the config would generate.
TrajectoryDataset load_split(const RunConfig& config, const BenchPaths& paths, int split) {
  const fs::path path = split == 0 ? paths.train_data() : paths.test_data();
  if (!fs::exists(path)) throw BenchError("missing '" + path.string() + "'; run generate first");
  TrajectoryDataset ds;
  try {
    ds = load_dataset(path.string());
  } catch (const ParseError& e) {
    throw BenchError(path.string() + ": " + e.what());
  }
  const std::size_t expected = split == 0 ? config.data.train_sequences : config.data.test_sequences;
  if (!(ds.meta == dataset_metadata(config, split)) || ds.sequences.size() != expected) {
    throw BenchError("'" + path.string() + "' was generated from a different [data] section or seed; run generate again");
  }
  return ds;
}

nlohmann::json train_config_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"decay", c.decay},         {"decay_start_epoch", c.decay_start_epoch},
          {"truncation", c.truncation},       {"batch_size", c.batch_size}, {"epochs", c.epochs},
          {"lambda", c.lambda},               {"clip_norm", c.clip_norm},   {"seed", c.seed}};
}

nlohmann::json checkpoint_header(const std::string& model, const RunConfig& config) {
  return {{"format", kCheckpointFormat},
          {"version", kCheckpointVersion},
          {"model", model},
          {"preset", to_string(config.preset)},
          {"seed", config.seed},
          {"config", to_ini(config)},
          {"train_config", train_config_json(config.train_config())}};
}

std::map<std::string, NetModule> read_checkpoint(const fs::path& path, const std::string& model) {
  if (!fs::exists(path)) throw BenchError("missing checkpoint '" + path.string() + "'; run train first");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw BenchError(path.string() + ": " + e.what());
  }
  if (!j.is_object() || j.value("format", "") != kCheckpointFormat || j.value("version", 0) != kCheckpointVersion) {
    throw BenchError(path.string() + ": not a version-1 checkpoint");
  }
  if (j.value("model", "") != model) {
    throw BenchError(path.string() + ": holds model '" + j.value("model", "") + "', expected '" + model + "'");
  }
  try {
    return modules_from_json(j.at("weights"));
  } catch (const WeightFormatError& e) {
    throw BenchError(path.string() + ": " + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw BenchError(path.string() + ": " + e.what());
  }
}

std::string grid_detail(BaselineFamily family, const GridPoint& p) {
  if (family == BaselineFamily::Ema) return "window=" + std::to_string(p.window);
  return "q=" + fmt("%g", p.q) + " r=" + fmt("%g", p.r);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::vector<double> min_max_scale(const std::vector<double>& v) {
  if (v.empty()) return {};
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  std::vector<double> out(v.size(), 0.0);
  if (*hi > *lo) {
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - *lo) / (*hi - *lo);
  }
  return out;
}

}  // namespace

nlohmann::json lstm_kf_checkpoint(const LstmKfParams& params, const RunConfig& config) {
  nlohmann::json j = checkpoint_header("lstm_kf", config);
  j["weights"] = modules_to_json({{"f", &params.f}, {"q", &params.q}, {"r", &params.r}});
  return j;
}

nlohmann::json std_lstm_checkpoint(const NetModule& module, const RunConfig& config) {
  nlohmann::json j = checkpoint_header("std_lstm", config);
  j["weights"] = modules_to_json({{"lstm", &module}});
  return j;
}

LstmKfParams load_lstm_kf_checkpoint(const fs::path& path) {
  std::map<std::string, NetModule> modules = read_checkpoint(path, "lstm_kf");
  LstmKfParams p;
  for (const char* name : {"f", "q", "r"}) {
    if (!modules.contains(name)) throw BenchError(path.string() + ": missing module '" + name + "'");
  }
  p.f = std::move(modules.at("f"));
  p.q = std::move(modules.at("q"));
  p.r = std::move(modules.at("r"));
  try {
    p.validate();
  } catch (const std::exception& e) {
    throw BenchError(path.string() + ": " + e.what());
  }
  return p;
}

NetModule load_std_lstm_checkpoint(const fs::path& path) {
  std::map<std::string, NetModule> modules = read_checkpoint(path, "std_lstm");
  if (!modules.contains("lstm")) throw BenchError(path.string() + ": missing module 'lstm'");
  return std::move(modules.at("lstm"));
}

LstmKfParams initial_lstm_kf(const RunConfig& config) {
  return make_lstm_kf_params(config.preset, config.data.dim, derive_seed(config.seed, 20));
}

NetModule initial_std_lstm(const RunConfig& config) {
  const std::uint64_t s = derive_seed(config.seed, 21);
  return config.preset == Preset::Big ? preset_big_f(config.data.dim, s) : preset_small(config.data.dim, s);
}

const MetricsRow& MetricsTable::row(const std::string& method) const {
  for (const MetricsRow& r : rows)
    if (r.method == method) return r;
  throw std::out_of_range("metrics table has no row '" + method + "'");
}

MetricsRow score(const std::string& method, std::span<const Matrix> estimates, std::span<const SequencePair> truth) {
  if (estimates.size() != truth.size() || truth.empty()) {
    throw DimensionError("score: estimate and truth counts differ or are empty");
  }
  MetricsRow row;
  row.method = method;
  const std::size_t d = truth.front().dim();
  std::vector<double> errors;
  std::vector<double> sq(d, 0.0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const std::vector<double> e = euclidean_errors(estimates[i], truth[i].truth);
    errors.insert(errors.end(), e.begin(), e.end());
    for (std::size_t t = 0; t < truth[i].length(); ++t)
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = estimates[i](t, k) - truth[i].truth(t, k);
        sq[k] += diff * diff;
      }
  }
  row.mean_error = pooled_mean_error(estimates, truth);
  row.median_error = median(errors);
  for (double s : sq) row.rmse.push_back(std::sqrt(s / static_cast<double>(errors.size())));
  return row;
}

std::string metrics_csv(const MetricsTable& table) {
  std::string out = "method,mean_error,median_error";
  const std::size_t d = table.rows.empty() ? 0 : table.rows.front().rmse.size();
  for (std::size_t k = 1; k <= d; ++k) out += ",rmse_" + std::to_string(k);
  out += ",detail\n";
  for (const MetricsRow& r : table.rows) {
    out += r.method + "," + real(r.mean_error) + "," + real(r.median_error);
    for (double v : r.rmse) out += "," + real(v);
    out += "," + r.detail + "\n";
  }
  return out;
}

std::string metrics_text(const MetricsTable& table) {
  std::vector<std::string> header{"method", "mean", "median"};
  const std::size_t d = table.rows.empty() ? 0 : table.rows.front().rmse.size();
  for (std::size_t k = 1; k <= d; ++k) header.push_back("rmse_" + std::to_string(k));
  header.emplace_back("chosen");
  std::vector<std::vector<std::string>> cells{header};
  for (const MetricsRow& r : table.rows) {
    std::vector<std::string> line{r.method, fmt("%.4f", r.mean_error), fmt("%.4f", r.median_error)};
    for (double v : r.rmse) line.push_back(fmt("%.4f", v));
    line.push_back(r.detail);
    cells.push_back(std::move(line));
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& line : cells)
    for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());

  std::string out = table.banner + "\n\n";
  for (std::size_t i = 0; i < cells.size(); ++i) {
    std::string line;
    for (std::size_t c = 0; c < cells[i].size(); ++c) {
      const std::string& s = cells[i][c];
      const std::string pad(width[c] - s.size(), ' ');
      // Text columns left aligned, numbers right aligned.
      line += (c == 0 || c + 1 == cells[i].size()) ? s + pad : pad + s;
      if (c + 1 < cells[i].size()) line += "  ";
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
    if (i == 0) {
      std::size_t total = 0;
      for (std::size_t w : width) total += w + 2;
      out += std::string(total - 2, '-') + "\n";
    }
  }
  return out;
}

std::string cmd_generate(const RunConfig& config, const fs::path& out_dir) {
  const BenchPaths paths{out_dir};
  ensure_dir(out_dir);
  std::string summary;
  for (int split = 0; split < 2; ++split) {
    const TrajectoryDataset ds = make_dataset(config, split);
    const fs::path path = split == 0 ? paths.train_data() : paths.test_data();
    save_dataset(ds, path.string());
    double sq = 0.0;
    std::size_t n = 0;
    for (const SequencePair& s : ds.sequences) {
      for (std::size_t t = 0; t < s.length(); ++t)
        for (std::size_t k = 0; k < s.dim(); ++k) {
          const double e = s.measurements(t, k) - s.truth(t, k);
          sq += e * e;
          ++n;
        }
    }
    summary += path.filename().string() + ": " + std::to_string(ds.sequences.size()) + " sequences, T=" +
               std::to_string(ds.length()) + ", d=" + std::to_string(ds.dim()) + ", generator " +
               ds.meta.generator + ", measurement noise rms " + fmt("%.4f", std::sqrt(sq / static_cast<double>(n))) +
               " (nominal " + fmt("%.4f", std::sqrt(config.data.r)) + ")";
    if (!ds.meta.bursts.empty()) summary += ", " + std::to_string(ds.meta.bursts.starts.size()) + " bursts";
    summary += "\n";
  }
  return summary;
}

std::string cmd_train(const RunConfig& config, const fs::path& out_dir, std::ostream* log) {
  const BenchPaths paths{out_dir};
  const TrajectoryDataset train = load_split(config, paths, 0);
  const TrainConfig tc = config.train_config();
  std::string summary;
  for (const std::string& model : config.train.models) {
    const EpochCallback progress = [&](const EpochLog& e) {
      if (log != nullptr) {
        *log << model << " epoch " << e.epoch << "/" << tc.epochs << " loss " << fmt("%.6f", e.loss)
             << " mean_gain " << fmt("%.4f", e.mean_gain) << "\n";
        log->flush();
      }
    };
    std::vector<EpochLog> history;
    nlohmann::json checkpoint;
    if (model == "lstm_kf") {
      LstmKfParams params = initial_lstm_kf(config);
      history = train_lstm_kf(params, train.sequences, tc, progress);
      checkpoint = lstm_kf_checkpoint(params, config);
    } else {
      NetModule module = initial_std_lstm(config);
      history = train_standalone(module, train.sequences, tc, progress);
      checkpoint = std_lstm_checkpoint(module, config);
    }
    write_text(paths.checkpoint(model), checkpoint.dump(1) + "\n");
    write_text(paths.training_log(model), training_log_csv(history));
    summary += model + ": " + std::to_string(history.size()) + " epochs";
    if (!history.empty()) {
      summary += ", loss " + fmt("%.6f", history.front().loss) + " -> " + fmt("%.6f", history.back().loss);
      if (model == "lstm_kf") {
        summary += ", mean gain " + fmt("%.4f", history.front().mean_gain) + " -> " +
                   fmt("%.4f", history.back().mean_gain);
      }
    }
    summary += "\n";
  }
  return summary;
}

MetricsTable cmd_eval(const RunConfig& config, const fs::path& out_dir) {
  const BenchPaths paths{out_dir};
  const TrajectoryDataset train = load_split(config, paths, 0);
  const TrajectoryDataset test = load_split(config, paths, 1);
  const double dt = config.data.dt;

  MetricsTable table;
  table.banner = "Synthetic data: " + test.meta.generator + ", d=" + std::to_string(test.dim()) +
                 ", T=" + std::to_string(test.length()) + ", " + std::to_string(test.sequences.size()) +
                 " test sequences, seed " + std::to_string(config.seed) +
                 ". Errors are Euclidean distances in data units.";

  for (const std::string& method : config.eval.methods) {
    std::vector<Matrix> estimates;
    std::string detail;
    if (method == "measurements") {
      for (const SequencePair& s : test.sequences) estimates.push_back(s.measurements);
    } else if (method == "kalman_vel" || method == "kalman_acc" || method == "ema") {
      const BaselineFamily family = method == "kalman_vel"   ? BaselineFamily::ConstantVelocity
                                    : method == "kalman_acc" ? BaselineFamily::ConstantAcceleration
                                                             : BaselineFamily::Ema;
      const GridSearchResult best =
          grid_search(train.sequences, family, config.eval.q_grid, config.eval.r_grid, config.eval.ema_windows, dt);
      for (const SequencePair& s : test.sequences) estimates.push_back(run_baseline(s.measurements, family, best.best, dt));
      detail = grid_detail(family, best.best);
    } else if (method == "std_lstm") {
      const NetModule module = load_std_lstm_checkpoint(paths.checkpoint("std_lstm"));
      for (const SequencePair& s : test.sequences) estimates.push_back(standalone_lstm_filter(s.measurements, module));
    } else {
      const LstmKfParams params = load_lstm_kf_checkpoint(paths.checkpoint("lstm_kf"));
      for (const SequencePair& s : test.sequences) estimates.push_back(filter_sequence(s.measurements, params).estimates());
    }
    MetricsRow row = score(method, estimates, test.sequences);
    row.detail = detail;
    table.rows.push_back(std::move(row));
  }

  write_text(paths.metrics_csv(), metrics_csv(table));
  write_text(paths.metrics_txt(), metrics_text(table) + "\nconfiguration:\n" + to_ini(config));
  return table;
}

std::string gain_curve_csv(const std::string& training_log) {
  std::istringstream in(training_log);
  std::string line;
  std::size_t line_no = 0;
  const auto fail = [&](const std::string& what) {
    return BenchError("training log line " + std::to_string(line_no) + ": " + what);
  };
  if (!std::getline(in, line)) throw BenchError("training log is empty");
  ++line_no;
  const std::vector<std::string> header = split_fields(line);
  const std::vector<std::string> expected{"epoch", "loss", "mean_gain", "learning_rate"};
  if (header != expected) throw fail("expected header 'epoch,loss,mean_gain,learning_rate'");

  std::string out = "epoch,loss,mean_gain\n";
  long long last_epoch = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> f = split_fields(line);
    if (f.size() != 4) throw fail("expected 4 fields, found " + std::to_string(f.size()));
    char* end = nullptr;
    const long long epoch = std::strtoll(f[0].c_str(), &end, 10);
    if (f[0].empty() || *end != '\0') throw fail("epoch '" + f[0] + "' is not an integer");
    if (epoch <= last_epoch) throw fail("epochs must increase strictly");
    for (std::size_t c = 1; c < 3; ++c) {
      std::strtod(f[c].c_str(), &end);
      if (f[c].empty() || *end != '\0') throw fail("'" + f[c] + "' is not a number");
    }
    last_epoch = epoch;
    out += f[0] + "," + f[1] + "," + f[2] + "\n";
  }
  return out;
}

std::string cmd_gain_curve(const fs::path& training_log, const fs::path& out_path) {
  if (!fs::exists(training_log)) throw BenchError("missing training log '" + training_log.string() + "'");
  const std::string csv = gain_curve_csv(read_text(training_log));
  if (out_path.has_parent_path()) ensure_dir(out_path.parent_path());
  write_text(out_path, csv);
  const auto rows = static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) - 1;
  return out_path.filename().string() + ": " + std::to_string(rows) + " epochs\n";
}

std::string noise_trace_csv(const FilterTrace& trace, const BurstSpec& bursts) {
  std::vector<double> r_norm, q_norm;
  for (std::size_t t = 0; t < trace.length(); ++t) {
    r_norm.push_back(std::sqrt(squared_norm(trace.R[t].diag())));
    q_norm.push_back(std::sqrt(squared_norm(trace.Q[t].diag())));
  }
  const std::vector<double> r_scaled = min_max_scale(r_norm);
  const std::vector<double> q_scaled = min_max_scale(q_norm);
  std::string out = "t,in_burst,r_norm,q_norm,r_norm_scaled,q_norm_scaled\n";
  for (std::size_t t = 0; t < trace.length(); ++t) {
    out += std::to_string(t + 1) + "," + (bursts.contains(t) ? "1" : "0") + "," + real(r_norm[t]) + "," +
           real(q_norm[t]) + "," + real(r_scaled[t]) + "," + real(q_scaled[t]) + "\n";
  }
  return out;
}

std::string cmd_noise_trace(const RunConfig& config, const fs::path& out_dir, std::size_t sequence) {
  const BenchPaths paths{out_dir};
  const TrajectoryDataset test = load_split(config, paths, 1);
  if (sequence >= test.sequences.size()) {
    throw BenchError("sequence index " + std::to_string(sequence) + " out of range; the test set has " +
                     std::to_string(test.sequences.size()) + " sequences");
  }
  const LstmKfParams params = load_lstm_kf_checkpoint(paths.checkpoint("lstm_kf"));
  const FilterTrace trace = filter_sequence(test.sequences[sequence].measurements, params);
  write_text(paths.noise_trace(), noise_trace_csv(trace, test.meta.bursts));
  return paths.noise_trace().filename().string() + ": " + std::to_string(trace.length()) + " steps of test sequence " +
         std::to_string(sequence) + "\n";
}

}  // namespace lstmkf
