#include "lstmkf/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "lstmkf/adam.hpp"

namespace lstmkf {

void TrainConfig::validate() const {
  if (truncation < 1) throw std::invalid_argument("TrainConfig: truncation must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (!(lambda >= 0.0)) throw std::invalid_argument("TrainConfig: lambda must be >= 0");
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("TrainConfig: learning rate must be >= 0");
  if (!(decay > 0.0)) throw std::invalid_argument("TrainConfig: decay must be positive");
  if (decay_start_epoch < 1) throw std::invalid_argument("TrainConfig: decay_start_epoch must be >= 1");
}

double TrainConfig::learning_rate_at(std::size_t epoch) const {
  const std::size_t exponent = epoch + 1 > decay_start_epoch ? epoch + 1 - decay_start_epoch : 0;
  return learning_rate * std::pow(decay, static_cast<double>(exponent));
}

TrainConfig default_train_config(Preset preset) {
  TrainConfig c;
  if (preset == Preset::Big) {
    c.learning_rate = 1e-5;
    c.decay = 0.95;
    c.decay_start_epoch = 2;
    c.truncation = 100;
  } else {
    c.learning_rate = 5e-4;
    c.decay = 1.0;
    c.truncation = 10;
  }
  c.batch_size = 2;
  c.lambda = 0.8;
  return c;
}

namespace {

std::vector<std::size_t> shuffled_order(std::size_t n, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  return order;
}

void check_data(std::span<const SequencePair> data, std::size_t dim) {
  if (data.empty()) throw std::invalid_argument("train: empty dataset");
  for (const SequencePair& s : data) {
    if (s.measurements.cols() != dim || s.truth.cols() != dim || !s.truth.same_shape(s.measurements)) {
      throw DimensionError("train: sequence " + s.truth.shape_string() + "/" + s.measurements.shape_string() +
                           " does not match model dimension " + std::to_string(dim));
    }
    if (s.length() == 0) throw std::invalid_argument("train: empty sequence");
  }
}

/// Shared epoch/batch/segment driver. `run_segment` processes steps
/// [begin, end) of sequence `seq` on the tape and returns its loss node; it
/// also reports per-step loss and gain sums through the accumulators.
struct EpochTotals {
  double loss_sum = 0.0;
  std::size_t steps = 0;
  double gain_sum = 0.0;
  std::size_t gain_count = 0;
};

template <class Carry, class InitFn, class SegmentFn>
std::vector<EpochLog> run_training(std::vector<Parameter*> params, std::span<const SequencePair> data,
                                   const TrainConfig& config, const EpochCallback& on_epoch, InitFn init,
                                   SegmentFn run_segment) {
  config.validate();
  AdamState adam;
  std::vector<EpochLog> log;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    adam.hyper.learning_rate = config.learning_rate_at(epoch);
    Rng rng(derive_seed(config.seed, epoch));
    const std::vector<std::size_t> order = shuffled_order(data.size(), rng);
    EpochTotals totals;

    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_index) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                     order.begin() + static_cast<std::ptrdiff_t>(stop));
      std::vector<Carry> carry;
      std::size_t longest = 0;
      for (std::size_t s : batch) {
        carry.push_back(init(data[s]));
        longest = std::max(longest, data[s].length());
      }

      for (std::size_t begin = 0; begin < longest; begin += config.truncation) {
        for (Parameter* p : params) p->zero_grad();
        Tape tape(true);
        Var total = tape.constant(Matrix(1, 1));
        std::size_t active = 0;
        for (std::size_t b = 0; b < batch.size(); ++b) {
          const SequencePair& seq = data[batch[b]];
          if (begin >= seq.length()) continue;
          const std::size_t end = std::min(seq.length(), begin + config.truncation);
          try {
            total = ops::add(total, run_segment(tape, seq, begin, end, carry[b], rng, totals));
          } catch (const NonFiniteError& e) {
            throw TrainingError(epoch, batch_index, e.what());
          } catch (const SingularMatrixError& e) {
            throw TrainingError(epoch, batch_index, e.what());
          }
          ++active;
        }
        const Var loss = ops::scale(total, 1.0 / static_cast<double>(active));
        if (!std::isfinite(loss.value()[0])) {
          throw TrainingError(epoch, batch_index, "non-finite loss");
        }
        tape.backward(loss);
        for (const Parameter* p : params) {
          if (!p->grad.all_finite()) throw TrainingError(epoch, batch_index, "non-finite gradient in " + p->name);
        }
        clip_gradient_norm(params, config.clip_norm);
        adam_step(params, adam);
      }
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.loss = totals.steps == 0 ? 0.0 : totals.loss_sum / static_cast<double>(totals.steps);
    entry.mean_gain = totals.gain_count == 0 ? 0.0 : totals.gain_sum / static_cast<double>(totals.gain_count);
    entry.learning_rate = adam.hyper.learning_rate;
    log.push_back(entry);
    if (on_epoch) on_epoch(entry);
  }
  return log;
}

}  // namespace

std::vector<EpochLog> train_lstm_kf(LstmKfParams& params, std::span<const SequencePair> data,
                                    const TrainConfig& config, const EpochCallback& on_epoch) {
  params.validate();
  check_data(data, params.dim());
  const auto init = [&params](const SequencePair& seq) { return initial_state(seq.measurements.row(0), params); };
  const auto segment = [&params, &config](Tape& tape, const SequencePair& seq, std::size_t begin, std::size_t end,
                                          LstmKfRuntimeState& carry, Rng& rng, EpochTotals& totals) {
    TapeFilterState state = to_tape(tape, carry);
    std::vector<TapeStep> steps;
    for (std::size_t t = begin; t < end; ++t) {
      StepMasks masks{sample_dropout_masks(params.f, rng), sample_dropout_masks(params.q, rng),
                      sample_dropout_masks(params.r, rng)};
      steps.push_back(filter_step(tape, params, state, seq.measurements.row(t), nullptr, masks));
      const TapeStep& s = steps.back();
      const Matrix y = seq.truth.row(t);
      totals.loss_sum += squared_norm(y - s.y.value()) + config.lambda * squared_norm(y - s.y_prior.value());
      ++totals.steps;
      const Matrix k = s.gain.value().diag();
      totals.gain_sum += sum(k);
      totals.gain_count += k.size();
    }
    carry = from_tape(state, end);
    return tape_loss(tape, steps, seq.truth, begin, config.lambda);
  };
  return run_training<LstmKfRuntimeState>(params.parameters(), data, config, on_epoch, init, segment);
}

std::vector<EpochLog> train_standalone(NetModule& module, std::span<const SequencePair> data,
                                       const TrainConfig& config, const EpochCallback& on_epoch) {
  module.validate();
  if (module.input_size() != module.output_size()) {
    throw DimensionError("train_standalone: module must map d -> d");
  }
  check_data(data, module.input_size());
  const auto init = [&module](const SequencePair&) { return module.zero_state(); };
  const auto segment = [&module](Tape& tape, const SequencePair& seq, std::size_t begin, std::size_t end,
                                 LstmState& carry, Rng& rng, EpochTotals& totals) {
    TapeLstmState state = to_tape(tape, carry);
    Var total = tape.constant(Matrix(1, 1));
    for (std::size_t t = begin; t < end; ++t) {
      const Var out = module_forward(tape, module, tape.constant(seq.measurements.row(t)), state,
                                     sample_dropout_masks(module, rng));
      const Var err = ops::sum_squares(ops::sub(tape.constant(seq.truth.row(t)), out));
      totals.loss_sum += err.value()[0];
      ++totals.steps;
      total = ops::add(total, err);
    }
    carry = from_tape(state);
    return ops::scale(total, 1.0 / static_cast<double>(end - begin));
  };
  return run_training<LstmState>(module.parameters(), data, config, on_epoch, init, segment);
}

std::string training_log_csv(const std::vector<EpochLog>& log) {
  std::string out = "epoch,loss,mean_gain,learning_rate\n";
  char buf[160];
  for (const EpochLog& e : log) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", e.epoch, e.loss, e.mean_gain, e.learning_rate);
    out += buf;
  }
  return out;
}

}  // namespace lstmkf
