#include "lstmkf/lstm_kf.hpp"

#include <cmath>

namespace lstmkf {

Preset parse_preset(const std::string& name) {
  if (name == "small") return Preset::Small;
  if (name == "big") return Preset::Big;
  throw std::invalid_argument("unknown preset '" + name + "' (expected small or big)");
}

std::string to_string(Preset preset) { return preset == Preset::Small ? "small" : "big"; }

void LstmKfParams::validate() const {
  f.validate();
  q.validate();
  r.validate();
  const std::size_t d = f.output_size();
  for (const NetModule* m : {&f, &q, &r}) {
    if (m->input_size() != d || m->output_size() != d) {
      throw DimensionError("LstmKfParams: every module must map " + std::to_string(d) + " -> " +
                           std::to_string(d) + ", found " + std::to_string(m->input_size()) + " -> " +
                           std::to_string(m->output_size()));
    }
  }
}

std::vector<Parameter*> LstmKfParams::parameters() {
  std::vector<Parameter*> out = f.parameters();
  for (Parameter* p : q.parameters()) out.push_back(p);
  for (Parameter* p : r.parameters()) out.push_back(p);
  return out;
}

std::vector<const Parameter*> LstmKfParams::parameters() const {
  std::vector<const Parameter*> out = f.parameters();
  for (const Parameter* p : q.parameters()) out.push_back(p);
  for (const Parameter* p : r.parameters()) out.push_back(p);
  return out;
}

void LstmKfParams::zero_grad() {
  for (Parameter* p : parameters()) p->zero_grad();
}

LstmKfParams make_lstm_kf_params(Preset preset, std::size_t dim, std::uint64_t seed) {
  LstmKfParams p;
  if (preset == Preset::Big) {
    p.f = preset_big_f(dim, derive_seed(seed, 0));
    p.q = preset_big_noise(dim, derive_seed(seed, 1));
    p.r = preset_big_noise(dim, derive_seed(seed, 2));
  } else {
    p.f = preset_small(dim, derive_seed(seed, 0));
    p.q = preset_small(dim, derive_seed(seed, 1));
    p.r = preset_small(dim, derive_seed(seed, 2));
  }
  return p;
}

LstmKfRuntimeState initial_state(const Matrix& first_measurement, const LstmKfParams& params) {
  if (first_measurement.rows() != params.dim() || first_measurement.cols() != 1) {
    throw DimensionError("initial_state: measurement " + first_measurement.shape_string() +
                         " does not match state dimension " + std::to_string(params.dim()));
  }
  LstmKfRuntimeState s;
  s.belief = {first_measurement, Matrix::identity(params.dim())};
  s.f_state = params.f.zero_state();
  s.q_state = params.q.zero_state();
  s.r_state = params.r.zero_state();
  return s;
}

Matrix module_jacobian(const NetModule& module, const Matrix& x, const LstmState& state,
                       const DropoutMasks& masks) {
  Tape tape(false);
  const Var input = tape.input(x);
  TapeLstmState s = to_tape(tape, state);
  const Var y = module_forward(tape, module, input, s, masks);
  const std::size_t m = y.rows();
  Matrix jac(m, x.rows());
  Matrix seed(m, 1);
  for (std::size_t i = 0; i < m; ++i) {
    tape.zero_grads();
    seed.fill(0.0);
    seed[i] = 1.0;
    tape.backward(y, seed);
    const Matrix g = tape.grad(input);
    for (std::size_t j = 0; j < x.rows(); ++j) jac(i, j) = g[j];
  }
  return jac;
}

namespace {

void require_finite(const Var& v, const char* what) {
  const Matrix& m = v.value();
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!std::isfinite(m[i])) {
      throw NonFiniteError(std::string(what) + " output component " + std::to_string(i) + " is not finite");
    }
  }
}

/// diag(exp(clamp(log_diag)))
Var covariance_from_log_diag(Var log_diag) {
  return ops::diag(ops::exp(ops::clamp(log_diag, kLogDiagMin, kLogDiagMax)));
}

struct TapePredict {
  Var y_prior;
  Var P_prior;
  Var Q;
  Matrix F;
};

TapePredict predict_on_tape(Tape& tape, const LstmKfParams& params, TapeFilterState& state,
                            const Matrix* fixed_jacobian, const StepMasks& masks) {
  Matrix F = fixed_jacobian != nullptr
                 ? *fixed_jacobian
                 : module_jacobian(params.f, state.mean.value(), from_tape(state.f), masks.f);
  const Var y_prior = module_forward(tape, params.f, state.mean, state.f, masks.f);
  require_finite(y_prior, "f_module");
  const Var q_out = module_forward(tape, params.q, y_prior, state.q, masks.q);
  require_finite(q_out, "q_module");
  const Var Q = covariance_from_log_diag(q_out);
  const Var Fv = tape.constant(F);
  const Var propagated = ops::matmul(ops::matmul(Fv, state.cov), ops::transpose(Fv));
  const Var P_prior = ops::symmetrize(ops::add(propagated, Q));
  return {y_prior, P_prior, Q, std::move(F)};
}

struct TapeUpdate {
  Var y;
  Var P;
  Var K;
  Var R;
};

TapeUpdate update_on_tape(Tape& tape, const LstmKfParams& params, Var y_prior, Var P_prior, const Matrix& z,
                          TapeLstmState& r_state, const DropoutMasks& r_masks) {
  const std::size_t d = params.dim();
  if (z.rows() != d || z.cols() != 1) {
    throw DimensionError("update: measurement " + z.shape_string() + " does not match state dimension " +
                         std::to_string(d));
  }
  const Var zv = tape.constant(z);
  const Var r_out = module_forward(tape, params.r, zv, r_state, r_masks);
  require_finite(r_out, "r_module");
  const Var R = covariance_from_log_diag(r_out);
  // K = P'(P' + R)^-1, so K^T = (P' + R)^-1 P'^T.
  const Var K = ops::transpose(ops::solve_spd(ops::add(P_prior, R), ops::transpose(P_prior)));
  const Var y = ops::add(y_prior, ops::matmul(K, ops::sub(zv, y_prior)));
  const Var I = tape.constant(Matrix::identity(d));
  const Var P = ops::symmetrize(ops::matmul(ops::sub(I, K), P_prior));
  return {y, P, K, R};
}

}  // namespace

PredictResult predict(const LstmKfRuntimeState& state, const LstmKfParams& params) {
  Tape tape(false);
  TapeFilterState ts = to_tape(tape, state);
  TapePredict p = predict_on_tape(tape, params, ts, nullptr, {});
  return {p.y_prior.value(), p.P_prior.value(), p.Q.value(), std::move(p.F), from_tape(ts.f), from_tape(ts.q)};
}

UpdateResult update(const Matrix& y_prior, const Matrix& P_prior, const Matrix& z, const LstmState& r_state,
                    const LstmKfParams& params) {
  Tape tape(false);
  TapeLstmState rs = to_tape(tape, r_state);
  TapeUpdate u = update_on_tape(tape, params, tape.constant(y_prior), tape.constant(P_prior), z, rs, {});
  return {u.y.value(), u.P.value(), u.K.value(), u.R.value(), from_tape(rs)};
}

TapeFilterState to_tape(Tape& tape, const LstmKfRuntimeState& state) {
  return {tape.constant(state.belief.mean), tape.constant(state.belief.cov), to_tape(tape, state.f_state),
          to_tape(tape, state.q_state), to_tape(tape, state.r_state)};
}

LstmKfRuntimeState from_tape(const TapeFilterState& state, std::size_t t) {
  return {{state.mean.value(), state.cov.value()}, from_tape(state.f), from_tape(state.q), from_tape(state.r), t};
}

TapeStep filter_step(Tape& tape, const LstmKfParams& params, TapeFilterState& state, const Matrix& z,
                     const Matrix* fixed_jacobian, const StepMasks& masks) {
  TapePredict p = predict_on_tape(tape, params, state, fixed_jacobian, masks);
  TapeUpdate u = update_on_tape(tape, params, p.y_prior, p.P_prior, z, state.r, masks.r);
  state.mean = u.y;
  state.cov = u.P;
  return {p.y_prior, u.y, u.K, p.P_prior, u.P, p.Q, u.R, std::move(p.F)};
}

Matrix FilterTrace::estimates() const {
  if (y.empty()) return {};
  Matrix out(y.size(), y.front().rows());
  for (std::size_t t = 0; t < y.size(); ++t) out.set_row(t, y[t]);
  return out;
}

FilterTrace filter_sequence(const Matrix& measurements, const LstmKfParams& params,
                            const LstmKfRuntimeState& init) {
  if (measurements.rows() > 0 && measurements.cols() != params.dim()) {
    throw DimensionError("filter_sequence: measurements " + measurements.shape_string() +
                         " do not match state dimension " + std::to_string(params.dim()));
  }
  FilterTrace trace;
  LstmKfRuntimeState state = init;
  for (std::size_t t = 0; t < measurements.rows(); ++t) {
    try {
      Tape tape(false);
      TapeFilterState ts = to_tape(tape, state);
      const TapeStep step = filter_step(tape, params, ts, measurements.row(t));
      trace.y.push_back(step.y.value());
      trace.y_prior.push_back(step.y_prior.value());
      trace.gain.push_back(step.gain.value());
      trace.Q.push_back(step.Q.value());
      trace.R.push_back(step.R.value());
      trace.P.push_back(step.P.value());
      trace.P_prior.push_back(step.P_prior.value());
      state = from_tape(ts, state.t + 1);
    } catch (const std::exception& e) {
      throw FilterStepError(t, e.what());
    }
  }
  return trace;
}

FilterTrace filter_sequence(const Matrix& measurements, const LstmKfParams& params) {
  if (measurements.rows() == 0) return {};
  return filter_sequence(measurements, params, initial_state(measurements.row(0), params));
}

double lstm_kf_loss(const Matrix& truth, const FilterTrace& trace, double lambda) {
  if (truth.rows() != trace.length()) {
    throw DimensionError("loss: truth has " + std::to_string(truth.rows()) + " steps, trace has " +
                         std::to_string(trace.length()));
  }
  if (trace.length() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t t = 0; t < trace.length(); ++t) {
    const Matrix y = truth.row(t);
    total += squared_norm(y - trace.y[t]) + lambda * squared_norm(y - trace.y_prior[t]);
  }
  return total / static_cast<double>(trace.length());
}

Var tape_loss(Tape& tape, const std::vector<TapeStep>& steps, const Matrix& truth, std::size_t first,
              double lambda) {
  if (first + steps.size() > truth.rows()) {
    throw DimensionError("loss: " + std::to_string(steps.size()) + " steps from " + std::to_string(first) +
                         " exceed truth length " + std::to_string(truth.rows()));
  }
  Var total = tape.constant(Matrix(1, 1));
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const Var y = tape.constant(truth.row(first + k));
    const Var post = ops::sum_squares(ops::sub(y, steps[k].y));
    const Var prior = ops::sum_squares(ops::sub(y, steps[k].y_prior));
    total = ops::add(total, ops::add(post, ops::scale(prior, lambda)));
  }
  return steps.empty() ? total : ops::scale(total, 1.0 / static_cast<double>(steps.size()));
}

Var sequence_loss(Tape& tape, const LstmKfParams& params, const SequencePair& pair, double lambda,
                  const std::vector<Matrix>* fixed_jacobians, std::vector<Matrix>* jacobians_out) {
  const Matrix& z = pair.measurements;
  TapeFilterState state = to_tape(tape, initial_state(z.row(0), params));
  std::vector<TapeStep> steps;
  for (std::size_t t = 0; t < z.rows(); ++t) {
    const Matrix* fixed = fixed_jacobians != nullptr ? &(*fixed_jacobians)[t] : nullptr;
    steps.push_back(filter_step(tape, params, state, z.row(t), fixed));
    if (jacobians_out != nullptr) jacobians_out->push_back(steps.back().F);
  }
  return tape_loss(tape, steps, pair.truth, 0, lambda);
}

}  // namespace lstmkf
