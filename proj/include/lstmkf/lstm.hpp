#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "lstmkf/matrix.hpp"
#include "lstmkf/rng.hpp"
#include "lstmkf/tape.hpp"

namespace lstmkf {

/// Initialization bounds used by every LSTM and linear layer.
inline constexpr double kInputWeightBound = 0.01;
inline constexpr double kForgetBias = 1.0;

/**
 * One LSTM layer with forget gates:
 *
 *   f = sigmoid(W_fh h + W_fx x + b_f)
 *   i = sigmoid(W_ih h + W_ix x + b_i)
 *   o = sigmoid(W_oh h + W_ox x + b_o)
 *   c~ = tanh(W_ch h + W_cx x + b_c)
 *   c' = f * c + i * c~
 *   h' = o * tanh(c')
 */
struct LstmLayer {
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
  Parameter W_fh, W_fx, W_ih, W_ix, W_oh, W_ox, W_ch, W_cx;
  Parameter b_f, b_i, b_o, b_c;

  LstmLayer() = default;
  /// All-zero parameters named with `prefix`.
  LstmLayer(std::size_t input, std::size_t hidden, const std::string& prefix = "lstm");

  /// State-to-state matrices orthogonal, input matrices uniform in
  /// [-0.01, 0.01], forget bias 1, other biases 0.
  void initialize(std::uint64_t seed);

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
};

/// Fully connected layer y = W x + b, optionally followed by max(0, .).
struct LinearLayer {
  Parameter weight;
  Parameter bias;
  bool rectify = false;

  LinearLayer() = default;
  LinearLayer(std::size_t input, std::size_t output, bool rectify, const std::string& prefix = "fc");

  std::size_t input_size() const { return weight.value.cols(); }
  std::size_t output_size() const { return weight.value.rows(); }

  /// Xavier-uniform weight, zero bias.
  void initialize(std::uint64_t seed);

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
};

struct LayerState {
  Matrix h;
  Matrix c;
};

struct LstmState {
  std::vector<LayerState> layers;
};

/// LSTM layers followed by linear layers. Dropout (inverted, keep probability
/// `keep_prob`) is applied to the output of every LSTM layer when training.
struct NetModule {
  std::vector<LstmLayer> lstm;
  std::vector<LinearLayer> linear;
  double keep_prob = 1.0;

  std::size_t input_size() const;
  std::size_t output_size() const;

  /// Throws DimensionError if consecutive layer sizes do not chain.
  void validate() const;
  LstmState zero_state() const;
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  std::size_t parameter_count() const;
  /// Re-initializes every layer; parameter k uses derive_seed(seed, k).
  void initialize(std::uint64_t seed);
};

/// One scaled mask per LSTM layer; empty means no dropout.
struct DropoutMasks {
  std::vector<Matrix> per_layer;
  bool empty() const { return per_layer.empty(); }
};

/// Draws Bernoulli(keep) masks scaled by 1/keep. Returns empty masks if
/// keep_prob == 1.
DropoutMasks sample_dropout_masks(const NetModule& module, Rng& rng);

// ---------------------------------------------------------------------------
// Differentiable forms.

struct TapeLayerState {
  Var h;
  Var c;
};

struct TapeLstmState {
  std::vector<TapeLayerState> layers;
};

/// Places a state on the tape as constants (no gradient flows into it).
TapeLstmState to_tape(Tape& tape, const LstmState& state);
LstmState from_tape(const TapeLstmState& state);

struct TapeGates {
  Var forget, input, output, candidate;
};

/// When `gates` is non-null the four gate activations are written to it.
TapeLayerState lstm_cell(Tape& tape, const LstmLayer& layer, Var x, const TapeLayerState& prev,
                         TapeGates* gates = nullptr);

/// Runs x through the module, replacing `state` with the new recurrent state.
Var module_forward(Tape& tape, const NetModule& module, Var x, TapeLstmState& state,
                   const DropoutMasks& masks = {});

// ---------------------------------------------------------------------------
// Plain evaluation.

LayerState lstm_cell(const LstmLayer& layer, const Matrix& x, const LayerState& prev);

struct GateValues {
  Matrix forget, input, output, candidate;
};

GateValues lstm_gates(const LstmLayer& layer, const Matrix& x, const LayerState& prev);

struct ModuleOutput {
  Matrix y;
  LstmState state;
};

/// With dropout_rng == nullptr the module runs in evaluation mode (no
/// dropout) and is a pure function of its arguments.
ModuleOutput module_forward(const NetModule& module, const Matrix& x, const LstmState& state,
                            Rng* dropout_rng = nullptr);

// ---------------------------------------------------------------------------
// Presets.

/// 3 LSTM layers of 1024 units with keep probability 0.7, then FC
/// 1024 -> 1024 -> dim with rectifiers on all but the last.
NetModule preset_big_f(std::size_t dim, std::uint64_t seed);
/// 1 LSTM layer of 256 units, then one FC layer to dim.
NetModule preset_big_noise(std::size_t dim, std::uint64_t seed);
/// 1 LSTM layer of 16 units, then one FC layer to dim without nonlinearity.
NetModule preset_small(std::size_t dim, std::uint64_t seed);
/// Any-width variant of the small preset, used by tests.
NetModule make_single_layer(std::size_t input, std::size_t hidden, std::size_t output,
                            std::uint64_t seed);

// ---------------------------------------------------------------------------
// Standalone LSTM baseline.

/// Feeds each measurement row through `module` recurrently from a zero state
/// and returns the module outputs as rows of a T x d matrix.
Matrix standalone_lstm_filter(const Matrix& measurements, const NetModule& module);

}  // namespace lstmkf
