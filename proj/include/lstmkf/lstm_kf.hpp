#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "lstmkf/kalman.hpp"
#include "lstmkf/lstm.hpp"
#include "lstmkf/tape.hpp"

namespace lstmkf {

/// Log-diagonal outputs of the noise modules are clamped to this range
/// before exponentiation.
inline constexpr double kLogDiagMin = -10.0;
inline constexpr double kLogDiagMax = 10.0;

enum class Preset { Small, Big };

Preset parse_preset(const std::string& name);
std::string to_string(Preset preset);

/// The three recurrent modules: transition f, process noise Q, measurement
/// noise R. All map d -> d; Q and R outputs are log-diagonals.
struct LstmKfParams {
  NetModule f;
  NetModule q;
  NetModule r;

  std::size_t dim() const { return f.output_size(); }
  void validate() const;
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  void zero_grad();
};

/// f from the big-f or small preset, Q and R from big-noise or small.
/// Module seeds are derive_seed(seed, 0/1/2).
LstmKfParams make_lstm_kf_params(Preset preset, std::size_t dim, std::uint64_t seed);

struct LstmKfRuntimeState {
  GaussianBelief belief;
  LstmState f_state;
  LstmState q_state;
  LstmState r_state;
  std::size_t t = 0;
};

/// Mean = first measurement, covariance = I, recurrent states zero, t = 0.
LstmKfRuntimeState initial_state(const Matrix& first_measurement, const LstmKfParams& params);

/// Jacobian of the module output with respect to its input x at the given
/// recurrent state, by one reverse pass per output component.
Matrix module_jacobian(const NetModule& module, const Matrix& x, const LstmState& state,
                       const DropoutMasks& masks = {});

struct PredictResult {
  Matrix y_prior;   // f(y_{t-1})
  Matrix P_prior;   // sym(F P F^T + Q)
  Matrix Q;         // diag(exp(clamp(q_module(y_prior))))
  Matrix F;
  LstmState f_state;
  LstmState q_state;
};

PredictResult predict(const LstmKfRuntimeState& state, const LstmKfParams& params);

struct UpdateResult {
  Matrix y;         // y_prior + K (z - y_prior)
  Matrix P;         // sym((I - K) P_prior)
  Matrix K;         // P_prior (P_prior + R)^-1
  Matrix R;         // diag(exp(clamp(r_module(z))))
  LstmState r_state;
};

UpdateResult update(const Matrix& y_prior, const Matrix& P_prior, const Matrix& z,
                    const LstmState& r_state, const LstmKfParams& params);

/// Per-step diagnostics of one filtered sequence.
struct FilterTrace {
  std::vector<Matrix> y;
  std::vector<Matrix> y_prior;
  std::vector<Matrix> gain;
  std::vector<Matrix> Q;
  std::vector<Matrix> R;
  std::vector<Matrix> P;
  std::vector<Matrix> P_prior;

  std::size_t length() const { return y.size(); }
  /// Posterior means as rows of a T x d matrix.
  Matrix estimates() const;
};

FilterTrace filter_sequence(const Matrix& measurements, const LstmKfParams& params,
                            const LstmKfRuntimeState& init);
/// filter_sequence from initial_state(z_1).
FilterTrace filter_sequence(const Matrix& measurements, const LstmKfParams& params);

/// (1/T) sum_t |y_t - yhat_t|^2 + lambda |y_t - yhat'_t|^2
double lstm_kf_loss(const Matrix& truth, const FilterTrace& trace, double lambda);

// ---------------------------------------------------------------------------
// Differentiable unrolling, used by training and gradient checks.

struct TapeFilterState {
  Var mean;
  Var cov;
  TapeLstmState f;
  TapeLstmState q;
  TapeLstmState r;
};

/// Places a runtime state on the tape as constants (gradients stop here).
TapeFilterState to_tape(Tape& tape, const LstmKfRuntimeState& state);
LstmKfRuntimeState from_tape(const TapeFilterState& state, std::size_t t);

struct TapeStep {
  Var y_prior;
  Var y;
  Var gain;
  Var P_prior;
  Var P;
  Var Q;
  Var R;
  Matrix F;
};

struct StepMasks {
  DropoutMasks f;
  DropoutMasks q;
  DropoutMasks r;
};

/**
 * One predict/update step on the tape. F enters as a constant: either the
 * exact Jacobian at the current values or `fixed_jacobian` when given.
 */
TapeStep filter_step(Tape& tape, const LstmKfParams& params, TapeFilterState& state, const Matrix& z,
                     const Matrix* fixed_jacobian = nullptr, const StepMasks& masks = {});

/// Loss over a run of steps against truth rows [first, first + steps.size()).
Var tape_loss(Tape& tape, const std::vector<TapeStep>& steps, const Matrix& truth, std::size_t first,
              double lambda);

/**
 * Unrolls the whole sequence on `tape` from initial_state(z_1) and returns the
 * loss node. If `fixed_jacobians` is non-null it supplies F per step; if
 * `jacobians_out` is non-null the F used at each step is appended to it.
 */
Var sequence_loss(Tape& tape, const LstmKfParams& params, const SequencePair& pair, double lambda,
                  const std::vector<Matrix>* fixed_jacobians = nullptr,
                  std::vector<Matrix>* jacobians_out = nullptr);

}  // namespace lstmkf
