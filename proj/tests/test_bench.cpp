#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "lstmkf/bench.hpp"
#include "lstmkf/dataset_io.hpp"

using namespace lstmkf;
namespace fs = std::filesystem;

namespace {

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_run_config(in);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const char* name) : path(fs::temp_directory_path() / name) { fs::remove_all(path); }
  ~TempDir() { fs::remove_all(path); }
};

RunConfig tiny_config() {
  return parse(
      "[run]\nseed = 5\n"
      "[data]\ndim = 2\nlength = 12\ntrain_sequences = 3\ntest_sequences = 2\n"
      "[train]\nepochs = 2\n"
      "[eval]\nq_grid = 0.01, 1\nr_grid = 0.1, 1\nema_windows = 1, 3\n");
}

}  // namespace

TEST_CASE("config parsing") {
  const RunConfig c = parse(
      "# comment\n[run]\nseed = 42\n\n[data]\ngenerator = linear_cv\ndim = 3\nq = 0.2\n"
      "burst_starts = 5, 20\nburst_ends = 10, 30\n[model]\npreset = big\n"
      "[train]\nepochs = 7\nlearning_rate = 0.01\n[eval]\nmethods = ema, measurements\nema_windows = 2, 4\n");
  CHECK(c.seed == 42);
  CHECK(c.data.generator == "linear_cv");
  CHECK(c.data.dim == 3);
  CHECK(c.data.q == 0.2);
  CHECK(c.data.burst_starts == std::vector<std::size_t>{5, 20});
  CHECK(c.preset == Preset::Big);
  CHECK(c.eval.methods == std::vector<std::string>{"ema", "measurements"});
  const TrainConfig t = c.train_config();
  CHECK(t.epochs == 7);
  CHECK(t.learning_rate == 0.01);
  CHECK(t.truncation == 100);  // big-preset default survives
  CHECK(t.decay == 0.95);

  const RunConfig defaults = parse("");
  CHECK(defaults.train_config().learning_rate == 5e-4);
  CHECK(defaults.train_config().batch_size == 2);
  CHECK(defaults.train_config().truncation == 10);
  CHECK(defaults.train_config().lambda == 0.8);
  CHECK(defaults.eval.methods == known_methods());
}

TEST_CASE("config round trips through its canonical text") {
  const RunConfig c = parse("[data]\nburst_starts = 3\nburst_ends = 9\ndt = 0.3\n[eval]\nq_grid = 0.1, 0.30000000000000004\n");
  const std::string text = to_ini(c);
  const RunConfig back = parse(text);
  CHECK(to_ini(back) == text);
  CHECK(back.eval.q_grid[1] == 0.30000000000000004);
  CHECK(back.data.dt == 0.3);
}

TEST_CASE("config errors fail fast") {
  CHECK_THROWS_AS(parse("[data]\ncolour = red\n"), ConfigError);
  CHECK_THROWS_AS(parse("[plot]\nwidth = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse("seed = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse("[data]\ndim = two\n"), ConfigError);
  CHECK_THROWS_AS(parse("[data]\ndim = 2\ndim = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse("[data]\ndim = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse("[data]\ngenerator = spiral\n"), ConfigError);
  CHECK_THROWS_AS(parse("[data]\nburst_starts = 5\nburst_ends = 500\n"), ConfigError);
  CHECK_THROWS_AS(parse("[model]\npreset = medium\n"), ConfigError);
  CHECK_THROWS_AS(parse("[eval]\nmethods = ema, ema\n"), ConfigError);
  CHECK_THROWS_AS(parse("[eval]\nmethods = kalman_jerk\n"), ConfigError);
  CHECK_THROWS_AS(parse("[train]\ntruncation = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse("[train]\nmodels = gru\n"), ConfigError);
  CHECK_THROWS_AS(parse("[data]\ndt = 1, 2\n"), ConfigError);
  try {
    parse("[data]\ncolour = red\n");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("data.colour") != std::string::npos);
  }
  CHECK_THROWS_AS(load_run_config("/nonexistent/run.ini"), ConfigError);
}

TEST_CASE("train and test splits use different seeds") {
  const RunConfig c = tiny_config();
  const TrajectoryDataset a = make_dataset(c, 0);
  const TrajectoryDataset b = make_dataset(c, 1);
  CHECK(a.meta.seed != b.meta.seed);
  CHECK(a.sequences[0].truth != b.sequences[0].truth);
  CHECK(a.sequences.size() == 3);
  CHECK(b.sequences.size() == 2);
}

TEST_CASE("score and metrics tables") {
  const std::vector<SequencePair> pairs{{Matrix{{0, 0}, {1, 1}}, Matrix{{3, 4}, {1, 1}}}};
  const std::vector<Matrix> est{pairs[0].measurements};
  const MetricsRow row = score("measurements", est, pairs);
  CHECK(row.mean_error == 2.5);
  CHECK(row.median_error == 2.5);
  REQUIRE(row.rmse.size() == 2);
  CHECK(row.rmse[0] == doctest::Approx(std::sqrt(4.5)));
  CHECK(row.rmse[1] == doctest::Approx(std::sqrt(8.0)));

  MetricsTable table;
  table.banner = "Synthetic data";
  table.rows.push_back(row);
  const std::string csv = metrics_csv(table);
  CHECK(csv.rfind("method,mean_error,median_error,rmse_1,rmse_2,detail\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
  const std::string text = metrics_text(table);
  CHECK(text.rfind("Synthetic data", 0) == 0);
  CHECK(text.find("measurements") != std::string::npos);
}

TEST_CASE("gain curve extraction") {
  const std::string log = "epoch,loss,mean_gain,learning_rate\n1,2.5,0.7,0.001\n2,1.5,0.4,0.001\n3,1,0.3,0.001\n";
  const std::string csv = gain_curve_csv(log);
  CHECK(csv == "epoch,loss,mean_gain\n1,2.5,0.7\n2,1.5,0.4\n3,1,0.3\n");
  CHECK(gain_curve_csv(training_log_csv({})) == "epoch,loss,mean_gain\n");
  CHECK_THROWS_AS(gain_curve_csv(""), BenchError);
  CHECK_THROWS_AS(gain_curve_csv("epoch,loss\n1,2\n"), BenchError);
  CHECK_THROWS_AS(gain_curve_csv("epoch,loss,mean_gain,learning_rate\n2,1,1,1\n1,1,1,1\n"), BenchError);
  CHECK_THROWS_AS(gain_curve_csv("epoch,loss,mean_gain,learning_rate\n1,abc,1,1\n"), BenchError);
  CHECK_THROWS_AS(gain_curve_csv("epoch,loss,mean_gain,learning_rate\n1,1,1\n"), BenchError);
}

TEST_CASE("noise trace csv") {
  FilterTrace trace;
  for (int t = 0; t < 5; ++t) {
    trace.R.push_back(Matrix::identity(2) * (1.0 + t * t));
    trace.Q.push_back(Matrix::identity(2));
    trace.y.push_back(Matrix(2, 1));
  }
  const std::string csv = noise_trace_csv(trace, BurstSpec{{2}, {3}, 10.0});
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,in_burst,r_norm,q_norm,r_norm_scaled,q_norm_scaled");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    std::vector<double> v;
    std::istringstream ls(line);
    std::string f;
    while (std::getline(ls, f, ',')) v.push_back(std::stod(f));
    REQUIRE(v.size() == 6);
    CHECK(v[4] >= 0.0);
    CHECK(v[4] <= 1.0);
    CHECK(v[5] == 0.0);  // constant column scales to 0
    CHECK(v[1] == ((rows == 2 || rows == 3) ? 1.0 : 0.0));
  }
  CHECK(rows == 5);
}

TEST_CASE("commands run end to end and are reproducible") {
  TempDir a("lstmkf_bench_a"), b("lstmkf_bench_b");
  const RunConfig c = tiny_config();
  for (const fs::path& dir : {a.path, b.path}) {
    cmd_generate(c, dir);
    cmd_train(c, dir);
    cmd_eval(c, dir);
    cmd_gain_curve(BenchPaths{dir}.training_log("lstm_kf"), BenchPaths{dir}.gain_curve());
    cmd_noise_trace(c, dir, 1);
  }
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(a.path)) {
    ++files;
    CAPTURE(entry.path().filename().string());
    CHECK(slurp(entry.path()) == slurp(b.path / entry.path().filename()));
  }
  CHECK(files == 10);

  // The measurements row is the plain measurement error.
  const MetricsTable t = cmd_eval(c, a.path);
  const TrajectoryDataset test = load_dataset(BenchPaths{a.path}.test_data().string());
  CHECK(t.row("measurements").mean_error == measurement_error(test));
  CHECK(t.rows.size() == known_methods().size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) CHECK(t.rows[i].method == known_methods()[i]);

  RunConfig only_ema = c;
  only_ema.eval.methods = {"ema"};
  CHECK(cmd_eval(only_ema, a.path).rows.size() == 1);

  // Checkpoints load back into working models.
  const LstmKfParams p = load_lstm_kf_checkpoint(BenchPaths{a.path}.checkpoint("lstm_kf"));
  CHECK(p.dim() == 2);
  CHECK_THROWS_AS(load_lstm_kf_checkpoint(BenchPaths{a.path}.checkpoint("std_lstm")), BenchError);
  CHECK_THROWS_AS(cmd_noise_trace(c, a.path, 2), BenchError);
}

TEST_CASE("commands report missing or stale inputs") {
  TempDir dir("lstmkf_bench_missing");
  const RunConfig c = tiny_config();
  CHECK_THROWS_AS(cmd_train(c, dir.path), BenchError);
  CHECK_THROWS_AS(cmd_eval(c, dir.path), BenchError);
  CHECK_THROWS_AS(cmd_gain_curve(dir.path / "none.csv", dir.path / "out.csv"), BenchError);
  cmd_generate(c, dir.path);
  CHECK_THROWS_AS(cmd_eval(c, dir.path), BenchError);  // no checkpoints yet
  RunConfig other = c;
  other.seed = 6;
  CHECK_THROWS_AS(cmd_train(other, dir.path), BenchError);
}
