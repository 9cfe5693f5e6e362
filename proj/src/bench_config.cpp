#include "lstmkf/bench_config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>

#include "CLI11.hpp"

namespace lstmkf {

namespace {

using Inputs = std::vector<std::string>;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& raw) {
  const std::string text = trim(raw);
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError(key + ": cannot parse '" + raw + "' as a number");
  }
  return value;
}

const std::string& single(const std::string& key, const Inputs& in) {
  if (in.size() != 1) throw ConfigError(key + ": expected a single value");
  return in.front();
}

template <class T>
std::vector<T> parse_list(const std::string& key, const Inputs& in) {
  std::vector<T> out;
  for (const std::string& s : in) {
    if constexpr (std::is_same_v<T, std::string>) {
      out.push_back(trim(s));
    } else {
      out.push_back(parse_number<T>(key, s));
    }
  }
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&, const Inputs&)>;

template <class T, class S>
Setter number(S RunConfig::*section, T S::*field) {
  return [=](RunConfig& c, const std::string& key, const Inputs& in) {
    c.*section.*field = parse_number<T>(key, single(key, in));
  };
}

template <class T>
Setter optional_number(std::optional<T> TrainOverrides::*field) {
  return [=](RunConfig& c, const std::string& key, const Inputs& in) {
    c.train.*field = parse_number<T>(key, single(key, in));
  };
}

template <class T, class S>
Setter list(S RunConfig::*section, std::vector<T> S::*field) {
  return [=](RunConfig& c, const std::string& key, const Inputs& in) {
    c.*section.*field = parse_list<T>(key, in);
  };
}

const std::map<std::string, Setter>& schema() {
  static const std::map<std::string, Setter> table{
      {"run.seed", [](RunConfig& c, const std::string& k, const Inputs& in) {
         c.seed = parse_number<std::uint64_t>(k, single(k, in));
       }},
      {"data.generator", [](RunConfig& c, const std::string& k, const Inputs& in) {
         c.data.generator = trim(single(k, in));
       }},
      {"data.dim", number(&RunConfig::data, &DataConfig::dim)},
      {"data.length", number(&RunConfig::data, &DataConfig::length)},
      {"data.train_sequences", number(&RunConfig::data, &DataConfig::train_sequences)},
      {"data.test_sequences", number(&RunConfig::data, &DataConfig::test_sequences)},
      {"data.dt", number(&RunConfig::data, &DataConfig::dt)},
      {"data.q", number(&RunConfig::data, &DataConfig::q)},
      {"data.r", number(&RunConfig::data, &DataConfig::r)},
      {"data.amplitude", number(&RunConfig::data, &DataConfig::amplitude)},
      {"data.frequency", number(&RunConfig::data, &DataConfig::frequency)},
      {"data.burst_starts", list(&RunConfig::data, &DataConfig::burst_starts)},
      {"data.burst_ends", list(&RunConfig::data, &DataConfig::burst_ends)},
      {"data.burst_scale", number(&RunConfig::data, &DataConfig::burst_scale)},
      {"model.preset", [](RunConfig& c, const std::string& k, const Inputs& in) {
         try {
           c.preset = parse_preset(trim(single(k, in)));
         } catch (const std::invalid_argument& e) {
           throw ConfigError(k + ": " + e.what());
         }
       }},
      {"train.models", list(&RunConfig::train, &TrainOverrides::models)},
      {"train.learning_rate", optional_number(&TrainOverrides::learning_rate)},
      {"train.decay", optional_number(&TrainOverrides::decay)},
      {"train.decay_start_epoch", optional_number(&TrainOverrides::decay_start_epoch)},
      {"train.truncation", optional_number(&TrainOverrides::truncation)},
      {"train.batch_size", optional_number(&TrainOverrides::batch_size)},
      {"train.epochs", optional_number(&TrainOverrides::epochs)},
      {"train.lambda", optional_number(&TrainOverrides::lambda)},
      {"train.clip_norm", optional_number(&TrainOverrides::clip_norm)},
      {"eval.methods", list(&RunConfig::eval, &EvalConfig::methods)},
      {"eval.q_grid", list(&RunConfig::eval, &EvalConfig::q_grid)},
      {"eval.r_grid", list(&RunConfig::eval, &EvalConfig::r_grid)},
      {"eval.ema_windows", list(&RunConfig::eval, &EvalConfig::ema_windows)},
      {"noise_trace.sequence", [](RunConfig& c, const std::string& k, const Inputs& in) {
         c.noise_trace_sequence = parse_number<std::size_t>(k, single(k, in));
       }},
  };
  return table;
}

std::string real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ", ";
    if constexpr (std::is_same_v<T, double>) {
      out += real(values[i]);
    } else if constexpr (std::is_same_v<T, std::string>) {
      out += values[i];
    } else {
      out += std::to_string(values[i]);
    }
  }
  return out;
}

void check_unique(const std::vector<std::string>& names, const std::string& key) {
  std::set<std::string> seen;
  for (const std::string& n : names) {
    if (!seen.insert(n).second) throw ConfigError(key + ": '" + n + "' listed twice");
  }
}

}  // namespace

const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> names{"measurements", "kalman_vel", "kalman_acc", "ema", "std_lstm", "lstm_kf"};
  return names;
}

void RunConfig::validate() const {
  if (data.generator != "linear_cv" && data.generator != "oscillator") {
    throw ConfigError("data.generator: expected linear_cv or oscillator, got '" + data.generator + "'");
  }
  if (data.dim < 1 || data.length < 1 || data.train_sequences < 1 || data.test_sequences < 1) {
    throw ConfigError("data: dim, length, train_sequences and test_sequences must be >= 1");
  }
  if (!(data.dt > 0.0)) throw ConfigError("data.dt must be > 0");
  if (!(data.r >= 0.0) || !(data.q >= 0.0)) throw ConfigError("data: q and r must be >= 0");
  if (data.generator == "oscillator" && (!(data.amplitude > 0.0) || !(data.frequency > 0.0))) {
    throw ConfigError("data: amplitude and frequency must be > 0");
  }
  if (!data.burst_starts.empty() || !data.burst_ends.empty()) {
    try {
      BurstSpec{data.burst_starts, data.burst_ends, data.burst_scale}.validate(data.length);
    } catch (const std::out_of_range& e) {
      throw ConfigError(std::string("data.") + e.what());
    }
  }
  for (const std::string& m : train.models) {
    if (m != "lstm_kf" && m != "std_lstm") throw ConfigError("train.models: unknown model '" + m + "'");
  }
  check_unique(train.models, "train.models");
  for (const std::string& m : eval.methods) {
    if (std::find(known_methods().begin(), known_methods().end(), m) == known_methods().end()) {
      throw ConfigError("eval.methods: unknown method '" + m + "'");
    }
  }
  check_unique(eval.methods, "eval.methods");
  if (eval.methods.empty()) throw ConfigError("eval.methods: empty");
  if (eval.q_grid.empty() || eval.r_grid.empty() || eval.ema_windows.empty()) {
    throw ConfigError("eval: q_grid, r_grid and ema_windows must be non-empty");
  }
  for (double v : eval.q_grid)
    if (!(v >= 0.0)) throw ConfigError("eval.q_grid: values must be >= 0");
  for (double v : eval.r_grid)
    if (!(v > 0.0)) throw ConfigError("eval.r_grid: values must be > 0");
  for (std::size_t w : eval.ema_windows)
    if (w < 1) throw ConfigError("eval.ema_windows: values must be >= 1");
  try {
    train_config().validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

TrainConfig RunConfig::train_config() const {
  TrainConfig c = default_train_config(preset);
  if (train.learning_rate) c.learning_rate = *train.learning_rate;
  if (train.decay) c.decay = *train.decay;
  if (train.decay_start_epoch) c.decay_start_epoch = *train.decay_start_epoch;
  if (train.truncation) c.truncation = *train.truncation;
  if (train.batch_size) c.batch_size = *train.batch_size;
  if (train.epochs) c.epochs = *train.epochs;
  if (train.lambda) c.lambda = *train.lambda;
  if (train.clip_norm) c.clip_norm = *train.clip_norm;
  c.seed = derive_seed(seed, 22);
  return c;
}

RunConfig parse_run_config(std::istream& in) {
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_config(in);
  } catch (const CLI::Error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  RunConfig config;
  std::set<std::string> seen;
  for (const CLI::ConfigItem& item : items) {
    if (item.name == "++" || item.name == "--") continue;  // section markers
    const std::string key = item.fullname();
    const auto it = schema().find(key);
    if (it == schema().end()) {
      throw ConfigError(item.parents.empty() ? "config: key '" + key + "' must appear inside a section"
                                             : "config: unknown key '" + key + "'");
    }
    if (!seen.insert(key).second) throw ConfigError("config: key '" + key + "' given twice");
    it->second(config, key, item.inputs);
  }
  config.validate();
  return config;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  return parse_run_config(in);
}

std::string to_ini(const RunConfig& c) {
  std::string s;
  s += "[run]\nseed = " + std::to_string(c.seed) + "\n\n";
  s += "[data]\ngenerator = " + c.data.generator + "\n";
  s += "dim = " + std::to_string(c.data.dim) + "\n";
  s += "length = " + std::to_string(c.data.length) + "\n";
  s += "train_sequences = " + std::to_string(c.data.train_sequences) + "\n";
  s += "test_sequences = " + std::to_string(c.data.test_sequences) + "\n";
  s += "dt = " + real(c.data.dt) + "\n";
  s += "q = " + real(c.data.q) + "\n";
  s += "r = " + real(c.data.r) + "\n";
  s += "amplitude = " + real(c.data.amplitude) + "\n";
  s += "frequency = " + real(c.data.frequency) + "\n";
  if (!c.data.burst_starts.empty()) {
    s += "burst_starts = " + join(c.data.burst_starts) + "\n";
    s += "burst_ends = " + join(c.data.burst_ends) + "\n";
  }
  s += "burst_scale = " + real(c.data.burst_scale) + "\n\n";
  s += "[model]\npreset = " + to_string(c.preset) + "\n\n";
  const TrainConfig t = c.train_config();
  s += "[train]\nmodels = " + join(c.train.models) + "\n";
  s += "learning_rate = " + real(t.learning_rate) + "\n";
  s += "decay = " + real(t.decay) + "\n";
  s += "decay_start_epoch = " + std::to_string(t.decay_start_epoch) + "\n";
  s += "truncation = " + std::to_string(t.truncation) + "\n";
  s += "batch_size = " + std::to_string(t.batch_size) + "\n";
  s += "epochs = " + std::to_string(t.epochs) + "\n";
  s += "lambda = " + real(t.lambda) + "\n";
  s += "clip_norm = " + real(t.clip_norm) + "\n\n";
  s += "[eval]\nmethods = " + join(c.eval.methods) + "\n";
  s += "q_grid = " + join(c.eval.q_grid) + "\n";
  s += "r_grid = " + join(c.eval.r_grid) + "\n";
  s += "ema_windows = " + join(c.eval.ema_windows) + "\n\n";
  s += "[noise_trace]\nsequence = " + std::to_string(c.noise_trace_sequence) + "\n";
  return s;
}

namespace {

TrajectoryDataset generate_split(const RunConfig& config, int split, std::size_t n) {
  config.validate();
  const DataConfig& d = config.data;
  const auto idx = static_cast<std::uint64_t>(split);
  TrajectoryDataset ds =
      d.generator == "linear_cv"
          ? gen_linear_cv(d.dim, d.length, n, d.q, d.r, d.dt, derive_seed(config.seed, idx))
          : gen_oscillator(d.dim, d.length, n, d.amplitude, d.frequency, d.r, d.dt, derive_seed(config.seed, idx));
  if (!d.burst_starts.empty()) {
    ds = apply_bursts(ds, BurstSpec{d.burst_starts, d.burst_ends, d.burst_scale}, derive_seed(config.seed, 10 + idx));
  }
  return ds;
}

}  // namespace

DatasetMetadata dataset_metadata(const RunConfig& config, int split) { return generate_split(config, split, 1).meta; }

TrajectoryDataset make_dataset(const RunConfig& config, int split) {
  return generate_split(config, split, split == 0 ? config.data.train_sequences : config.data.test_sequences);
}

}  // namespace lstmkf
