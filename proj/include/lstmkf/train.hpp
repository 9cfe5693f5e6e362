#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lstmkf/lstm_kf.hpp"
#include "lstmkf/trajectory.hpp"

namespace lstmkf {

struct TrainConfig {
  double learning_rate = 5e-4;
  /// Multiplicative per-epoch decay applied from `decay_start_epoch` on.
  double decay = 1.0;
  std::size_t decay_start_epoch = 2;
  /// Truncated-BPTT segment length in steps.
  std::size_t truncation = 10;
  std::size_t batch_size = 2;
  std::size_t epochs = 10;
  double lambda = 0.8;
  /// Global gradient-norm clip; <= 0 disables clipping.
  double clip_norm = 5.0;
  std::uint64_t seed = 0;

  void validate() const;
  /// lr0 * decay^max(0, epoch - decay_start_epoch + 1), epochs 1-indexed.
  double learning_rate_at(std::size_t epoch) const;
};

/// Preset training defaults: small = lr 5e-4, batch 2, truncation 10, no decay;
/// big = lr 1e-5, decay 0.95 from epoch 2, truncation 100. lambda = 0.8.
TrainConfig default_train_config(Preset preset);

struct EpochLog {
  std::size_t epoch = 0;
  /// Mean per-step loss over the epoch (values seen before each update).
  double loss = 0.0;
  /// Mean of the diagonal entries of K_t over all steps of the epoch.
  double mean_gain = 0.0;
  double learning_rate = 0.0;
};

class TrainingError : public std::runtime_error {
 public:
  TrainingError(std::size_t epoch, std::size_t batch, const std::string& what)
      : std::runtime_error("epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch) + ": " + what),
        epoch_(epoch),
        batch_(batch) {}
  std::size_t epoch() const noexcept { return epoch_; }
  std::size_t batch() const noexcept { return batch_; }

 private:
  std::size_t epoch_;
  std::size_t batch_;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/**
 * End-to-end training of the three modules with truncated BPTT.
 *
 * Sequences are shuffled each epoch and grouped into batches. Each batch is
 * advanced one truncation segment at a time: the segment loss is averaged
 * over the batch, backpropagated, and applied with one Adam step. Belief and
 * recurrent states carry over segment boundaries as values only. The
 * Jacobian F enters every step as a constant.
 */
std::vector<EpochLog> train_lstm_kf(LstmKfParams& params, std::span<const SequencePair> data,
                                    const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Same schedule for the standalone LSTM baseline, trained with mean squared
/// error between module output and truth. mean_gain is reported as 0.
std::vector<EpochLog> train_standalone(NetModule& module, std::span<const SequencePair> data,
                                       const TrainConfig& config, const EpochCallback& on_epoch = {});

/// CSV with header "epoch,loss,mean_gain,learning_rate".
std::string training_log_csv(const std::vector<EpochLog>& log);

}  // namespace lstmkf
