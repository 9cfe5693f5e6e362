#include "lstmkf/synth.hpp"

#include <cmath>
#include <numbers>

#include "lstmkf/kalman.hpp"
#include "lstmkf/grid_search.hpp"
#include "lstmkf/rng.hpp"

namespace lstmkf {

void BurstSpec::validate(std::size_t length) const {
  if (starts.size() != ends.size()) throw std::out_of_range("bursts: start and end lists differ in length");
  if (!(scale > 0.0)) throw std::out_of_range("bursts: scale must be positive");
  for (std::size_t k = 0; k < starts.size(); ++k) {
    if (starts[k] < 1 || ends[k] > length || starts[k] > ends[k]) {
      throw std::out_of_range("bursts: interval [" + std::to_string(starts[k]) + ", " + std::to_string(ends[k]) +
                              "] outside [1, " + std::to_string(length) + "]");
    }
    if (k > 0 && starts[k] <= ends[k - 1]) {
      throw std::out_of_range("bursts: interval " + std::to_string(k) + " overlaps or precedes its predecessor");
    }
  }
}

bool BurstSpec::contains(std::size_t t) const {
  const std::size_t step = t + 1;
  for (std::size_t k = 0; k < starts.size(); ++k) {
    if (step >= starts[k] && step <= ends[k]) return true;
  }
  return false;
}

TrajectoryDataset gen_linear_cv(std::size_t d, std::size_t length, std::size_t n_seq, double q, double r,
                                double dt, std::uint64_t seed) {
  if (d < 1 || length < 1 || n_seq < 1) throw std::invalid_argument("gen_linear_cv: counts must be >= 1");
  if (!(q >= 0.0) || !(r >= 0.0) || !(dt > 0.0)) {
    throw std::invalid_argument("gen_linear_cv: q, r must be >= 0 and dt > 0");
  }
  TrajectoryDataset out;
  out.meta.generator = "linear_cv";
  out.meta.params = {{"d", static_cast<double>(d)}, {"length", static_cast<double>(length)}, {"q", q}, {"r", r}};
  out.meta.seed = seed;
  out.meta.dt = dt;
  const double q_std = std::sqrt(q);
  const double r_std = std::sqrt(r);
  for (std::size_t i = 0; i < n_seq; ++i) {
    Rng rng(derive_seed(seed, i));
    std::vector<double> pose(d), vel(d);
    for (std::size_t k = 0; k < d; ++k) pose[k] = rng.normal();
    for (std::size_t k = 0; k < d; ++k) vel[k] = rng.normal();
    SequencePair pair{Matrix(length, d), Matrix(length, d)};
    for (std::size_t t = 0; t < length; ++t) {
      if (t > 0) {
        for (std::size_t k = 0; k < d; ++k) pose[k] += dt * vel[k];
        for (std::size_t k = 0; k < d; ++k) vel[k] += q_std * rng.normal();
      }
      for (std::size_t k = 0; k < d; ++k) {
        pair.truth(t, k) = pose[k];
        pair.measurements(t, k) = pose[k] + r_std * rng.normal();
      }
    }
    out.sequences.push_back(std::move(pair));
  }
  return out;
}

TrajectoryDataset gen_oscillator(std::size_t d, std::size_t length, std::size_t n_seq, double amplitude,
                                 double frequency, double r, double dt, std::uint64_t seed) {
  if (d < 1 || length < 1 || n_seq < 1) throw std::invalid_argument("gen_oscillator: counts must be >= 1");
  if (!(amplitude > 0.0) || !(frequency > 0.0) || !(r >= 0.0) || !(dt > 0.0)) {
    throw std::invalid_argument("gen_oscillator: amplitude, frequency, dt must be > 0 and r >= 0");
  }
  TrajectoryDataset out;
  out.meta.generator = "oscillator";
  out.meta.params = {{"d", static_cast<double>(d)},
                     {"length", static_cast<double>(length)},
                     {"amplitude", amplitude},
                     {"frequency", frequency},
                     {"r", r}};
  out.meta.seed = seed;
  out.meta.dt = dt;
  const double r_std = std::sqrt(r);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t i = 0; i < n_seq; ++i) {
    Rng rng(derive_seed(seed, i));
    std::vector<double> phase(d);
    for (std::size_t k = 0; k < d; ++k) phase[k] = two_pi * rng.uniform01();
    SequencePair pair{Matrix(length, d), Matrix(length, d)};
    for (std::size_t t = 0; t < length; ++t) {
      for (std::size_t k = 0; k < d; ++k) {
        // Reduce the angle's cycle count first so whole periods land exactly.
        const double cycles = std::fmod(frequency * static_cast<double>(k + 1) * static_cast<double>(t) * dt, 1.0);
        const double y = amplitude * std::sin(two_pi * cycles + phase[k]);
        pair.truth(t, k) = y;
        pair.measurements(t, k) = y + r_std * rng.normal();
      }
    }
    out.sequences.push_back(std::move(pair));
  }
  return out;
}

TrajectoryDataset apply_bursts(const TrajectoryDataset& dataset, const BurstSpec& spec, std::uint64_t seed) {
  spec.validate(dataset.length());
  const auto r_it = dataset.meta.params.find("r");
  if (r_it == dataset.meta.params.end()) throw std::invalid_argument("apply_bursts: metadata lacks noise level r");
  const double burst_std = spec.scale * std::sqrt(r_it->second);
  TrajectoryDataset out = dataset;
  out.meta.bursts = spec;
  out.meta.burst_seed = seed;
  for (std::size_t i = 0; i < out.sequences.size(); ++i) {
    Rng rng(derive_seed(seed, i));
    SequencePair& pair = out.sequences[i];
    for (std::size_t t = 0; t < pair.length(); ++t) {
      if (!spec.contains(t)) continue;
      for (std::size_t k = 0; k < pair.dim(); ++k) {
        pair.measurements(t, k) = pair.truth(t, k) + burst_std * rng.normal();
      }
    }
  }
  return out;
}

namespace {

double require_param(const DatasetMetadata& meta, const std::string& key) {
  const auto it = meta.params.find(key);
  if (it == meta.params.end()) throw std::invalid_argument("dataset metadata lacks parameter '" + key + "'");
  return it->second;
}

}  // namespace

TrajectoryDataset regenerate(const DatasetMetadata& meta, std::size_t n_seq) {
  const auto d = static_cast<std::size_t>(require_param(meta, "d"));
  const auto length = static_cast<std::size_t>(require_param(meta, "length"));
  TrajectoryDataset out;
  if (meta.generator == "linear_cv") {
    out = gen_linear_cv(d, length, n_seq, require_param(meta, "q"), require_param(meta, "r"), meta.dt, meta.seed);
  } else if (meta.generator == "oscillator") {
    out = gen_oscillator(d, length, n_seq, require_param(meta, "amplitude"), require_param(meta, "frequency"),
                         require_param(meta, "r"), meta.dt, meta.seed);
  } else {
    throw std::invalid_argument("unknown generator '" + meta.generator + "'");
  }
  if (!meta.bursts.empty()) out = apply_bursts(out, meta.bursts, meta.burst_seed);
  return out;
}

double measurement_error(const TrajectoryDataset& dataset) {
  std::vector<Matrix> estimates;
  for (const SequencePair& s : dataset.sequences) estimates.push_back(s.measurements);
  return pooled_mean_error(estimates, dataset.sequences);
}

OracleReport oracle_error(const TrajectoryDataset& dataset) {
  if (dataset.meta.generator != "linear_cv") {
    throw std::invalid_argument("oracle_error: dataset was not generated by linear_cv");
  }
  if (!dataset.meta.bursts.empty()) throw std::invalid_argument("oracle_error: burst noise breaks the exact model");
  const double q = require_param(dataset.meta, "q");
  const double r = require_param(dataset.meta, "r");
  OracleReport report;
  report.measurements = measurement_error(dataset);
  if (r == 0.0) {
    // Exact measurements: the posterior mean is the measurement itself.
    report.oracle_kf = report.measurements;
    return report;
  }
  const LinearKfModel model = build_cv_model(dataset.dim(), dataset.meta.dt, q, r);
  std::vector<Matrix> estimates;
  for (const SequencePair& s : dataset.sequences) estimates.push_back(kf_estimates(s.measurements, model));
  report.oracle_kf = pooled_mean_error(estimates, dataset.sequences);
  return report;
}

}  // namespace lstmkf
