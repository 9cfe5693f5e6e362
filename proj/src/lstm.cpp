#include "lstmkf/lstm.hpp"

#include <string>

#include "lstmkf/init.hpp"

namespace lstmkf {

LstmLayer::LstmLayer(std::size_t input, std::size_t hidden, const std::string& prefix)
    : input_size(input),
      hidden_size(hidden),
      W_fh(prefix + ".W_fh", Matrix(hidden, hidden)),
      W_fx(prefix + ".W_fx", Matrix(hidden, input)),
      W_ih(prefix + ".W_ih", Matrix(hidden, hidden)),
      W_ix(prefix + ".W_ix", Matrix(hidden, input)),
      W_oh(prefix + ".W_oh", Matrix(hidden, hidden)),
      W_ox(prefix + ".W_ox", Matrix(hidden, input)),
      W_ch(prefix + ".W_ch", Matrix(hidden, hidden)),
      W_cx(prefix + ".W_cx", Matrix(hidden, input)),
      b_f(prefix + ".b_f", Matrix(hidden, 1)),
      b_i(prefix + ".b_i", Matrix(hidden, 1)),
      b_o(prefix + ".b_o", Matrix(hidden, 1)),
      b_c(prefix + ".b_c", Matrix(hidden, 1)) {}

void LstmLayer::initialize(std::uint64_t seed) {
  std::uint64_t k = 0;
  for (Parameter* w : {&W_fh, &W_ih, &W_oh, &W_ch}) {
    w->value = init_orthogonal(hidden_size, hidden_size, derive_seed(seed, k++));
  }
  for (Parameter* w : {&W_fx, &W_ix, &W_ox, &W_cx}) {
    w->value = init_uniform(hidden_size, input_size, kInputWeightBound, derive_seed(seed, k++));
  }
  b_f.value = Matrix(hidden_size, 1, kForgetBias);
  b_i.value = Matrix(hidden_size, 1);
  b_o.value = Matrix(hidden_size, 1);
  b_c.value = Matrix(hidden_size, 1);
  for (Parameter* p : parameters()) p->zero_grad();
}

std::vector<Parameter*> LstmLayer::parameters() {
  return {&W_fh, &W_fx, &W_ih, &W_ix, &W_oh, &W_ox, &W_ch, &W_cx, &b_f, &b_i, &b_o, &b_c};
}

std::vector<const Parameter*> LstmLayer::parameters() const {
  return {&W_fh, &W_fx, &W_ih, &W_ix, &W_oh, &W_ox, &W_ch, &W_cx, &b_f, &b_i, &b_o, &b_c};
}

LinearLayer::LinearLayer(std::size_t input, std::size_t output, bool rect, const std::string& prefix)
    : weight(prefix + ".W", Matrix(output, input)),
      bias(prefix + ".b", Matrix(output, 1)),
      rectify(rect) {}

void LinearLayer::initialize(std::uint64_t seed) {
  weight.value = init_xavier(output_size(), input_size(), seed);
  bias.value = Matrix(output_size(), 1);
  weight.zero_grad();
  bias.zero_grad();
}

std::vector<Parameter*> LinearLayer::parameters() { return {&weight, &bias}; }
std::vector<const Parameter*> LinearLayer::parameters() const { return {&weight, &bias}; }

std::size_t NetModule::input_size() const {
  if (!lstm.empty()) return lstm.front().input_size;
  if (!linear.empty()) return linear.front().input_size();
  return 0;
}

std::size_t NetModule::output_size() const {
  if (!linear.empty()) return linear.back().output_size();
  if (!lstm.empty()) return lstm.back().hidden_size;
  return 0;
}

void NetModule::validate() const {
  if (lstm.empty() && linear.empty()) throw std::invalid_argument("NetModule: module has no layers");
  std::size_t width = input_size();
  for (std::size_t k = 0; k < lstm.size(); ++k) {
    if (lstm[k].input_size != width) {
      throw DimensionError("NetModule: LSTM layer " + std::to_string(k) + " expects input " +
                           std::to_string(lstm[k].input_size) + " but receives " +
                           std::to_string(width));
    }
    width = lstm[k].hidden_size;
  }
  for (std::size_t k = 0; k < linear.size(); ++k) {
    if (linear[k].input_size() != width) {
      throw DimensionError("NetModule: linear layer " + std::to_string(k) + " expects input " +
                           std::to_string(linear[k].input_size()) + " but receives " +
                           std::to_string(width));
    }
    if (linear[k].bias.value.rows() != linear[k].output_size()) {
      throw DimensionError("NetModule: linear layer " + std::to_string(k) +
                           " bias does not match weight rows");
    }
    width = linear[k].output_size();
  }
  if (!(keep_prob > 0.0 && keep_prob <= 1.0)) {
    throw std::invalid_argument("NetModule: keep probability must lie in (0, 1]");
  }
}

LstmState NetModule::zero_state() const {
  LstmState s;
  for (const LstmLayer& l : lstm) {
    s.layers.push_back({Matrix(l.hidden_size, 1), Matrix(l.hidden_size, 1)});
  }
  return s;
}

std::vector<Parameter*> NetModule::parameters() {
  std::vector<Parameter*> out;
  for (LstmLayer& l : lstm)
    for (Parameter* p : l.parameters()) out.push_back(p);
  for (LinearLayer& l : linear)
    for (Parameter* p : l.parameters()) out.push_back(p);
  return out;
}

std::vector<const Parameter*> NetModule::parameters() const {
  std::vector<const Parameter*> out;
  for (const LstmLayer& l : lstm)
    for (const Parameter* p : l.parameters()) out.push_back(p);
  for (const LinearLayer& l : linear)
    for (const Parameter* p : l.parameters()) out.push_back(p);
  return out;
}

std::size_t NetModule::parameter_count() const {
  std::size_t n = 0;
  for (const Parameter* p : parameters()) n += p->value.size();
  return n;
}

void NetModule::initialize(std::uint64_t seed) {
  std::uint64_t k = 0;
  for (LstmLayer& l : lstm) l.initialize(derive_seed(seed, k++));
  for (LinearLayer& l : linear) l.initialize(derive_seed(seed, k++));
}

DropoutMasks sample_dropout_masks(const NetModule& module, Rng& rng) {
  DropoutMasks masks;
  if (module.keep_prob >= 1.0) return masks;
  const double inv_keep = 1.0 / module.keep_prob;
  for (const LstmLayer& l : module.lstm) {
    Matrix m(l.hidden_size, 1);
    for (double& v : m.data()) v = rng.uniform01() < module.keep_prob ? inv_keep : 0.0;
    masks.per_layer.push_back(std::move(m));
  }
  return masks;
}

TapeLstmState to_tape(Tape& tape, const LstmState& state) {
  TapeLstmState out;
  for (const LayerState& s : state.layers) out.layers.push_back({tape.constant(s.h), tape.constant(s.c)});
  return out;
}

LstmState from_tape(const TapeLstmState& state) {
  LstmState out;
  for (const TapeLayerState& s : state.layers) out.layers.push_back({s.h.value(), s.c.value()});
  return out;
}

namespace {

Var gate_preactivation(Tape& tape, const Parameter& wh, const Parameter& wx, const Parameter& b,
                       Var h, Var x) {
  return ops::add(ops::add(ops::matmul(tape.param(wh), h), ops::matmul(tape.param(wx), x)),
                  tape.param(b));
}

}  // namespace

TapeLayerState lstm_cell(Tape& tape, const LstmLayer& layer, Var x, const TapeLayerState& prev,
                         TapeGates* gates) {
  if (x.rows() != layer.input_size || x.cols() != 1) {
    throw DimensionError("lstm_cell: input " + x.value().shape_string() + " does not match input size " +
                         std::to_string(layer.input_size));
  }
  if (prev.h.rows() != layer.hidden_size || prev.c.rows() != layer.hidden_size) {
    throw DimensionError("lstm_cell: state " + prev.h.value().shape_string() +
                         " does not match hidden size " + std::to_string(layer.hidden_size));
  }
  const Var f = ops::sigmoid(gate_preactivation(tape, layer.W_fh, layer.W_fx, layer.b_f, prev.h, x));
  const Var i = ops::sigmoid(gate_preactivation(tape, layer.W_ih, layer.W_ix, layer.b_i, prev.h, x));
  const Var o = ops::sigmoid(gate_preactivation(tape, layer.W_oh, layer.W_ox, layer.b_o, prev.h, x));
  const Var candidate = ops::tanh(gate_preactivation(tape, layer.W_ch, layer.W_cx, layer.b_c, prev.h, x));
  const Var c = ops::add(ops::hadamard(f, prev.c), ops::hadamard(i, candidate));
  const Var h = ops::hadamard(o, ops::tanh(c));
  if (gates != nullptr) *gates = {f, i, o, candidate};
  return {h, c};
}

Var module_forward(Tape& tape, const NetModule& module, Var x, TapeLstmState& state,
                   const DropoutMasks& masks) {
  if (x.rows() != module.input_size() || x.cols() != 1) {
    throw DimensionError("module_forward: input " + x.value().shape_string() +
                         " does not match module input size " + std::to_string(module.input_size()));
  }
  if (state.layers.size() != module.lstm.size()) {
    throw DimensionError("module_forward: state has " + std::to_string(state.layers.size()) +
                         " layers, module has " + std::to_string(module.lstm.size()));
  }
  Var out = x;
  for (std::size_t k = 0; k < module.lstm.size(); ++k) {
    state.layers[k] = lstm_cell(tape, module.lstm[k], out, state.layers[k]);
    out = state.layers[k].h;
    if (!masks.empty()) out = ops::hadamard(out, tape.constant(masks.per_layer[k]));
  }
  for (const LinearLayer& l : module.linear) {
    out = ops::add(ops::matmul(tape.param(l.weight), out), tape.param(l.bias));
    if (l.rectify) out = ops::relu(out);
  }
  return out;
}

LayerState lstm_cell(const LstmLayer& layer, const Matrix& x, const LayerState& prev) {
  Tape tape(false);
  const TapeLayerState s = lstm_cell(tape, layer, tape.constant(x), {tape.constant(prev.h), tape.constant(prev.c)});
  return {s.h.value(), s.c.value()};
}

GateValues lstm_gates(const LstmLayer& layer, const Matrix& x, const LayerState& prev) {
  Tape tape(false);
  TapeGates g;
  lstm_cell(tape, layer, tape.constant(x), {tape.constant(prev.h), tape.constant(prev.c)}, &g);
  return {g.forget.value(), g.input.value(), g.output.value(), g.candidate.value()};
}

ModuleOutput module_forward(const NetModule& module, const Matrix& x, const LstmState& state,
                            Rng* dropout_rng) {
  Tape tape(false);
  TapeLstmState s = to_tape(tape, state);
  const DropoutMasks masks = dropout_rng != nullptr ? sample_dropout_masks(module, *dropout_rng) : DropoutMasks{};
  const Var y = module_forward(tape, module, tape.constant(x), s, masks);
  return {y.value(), from_tape(s)};
}

NetModule preset_big_f(std::size_t dim, std::uint64_t seed) {
  NetModule m;
  m.lstm.emplace_back(dim, 1024, "lstm0");
  m.lstm.emplace_back(1024, 1024, "lstm1");
  m.lstm.emplace_back(1024, 1024, "lstm2");
  m.linear.emplace_back(1024, 1024, true, "fc0");
  m.linear.emplace_back(1024, 1024, true, "fc1");
  m.linear.emplace_back(1024, dim, false, "fc2");
  m.keep_prob = 0.7;
  m.initialize(seed);
  return m;
}

NetModule preset_big_noise(std::size_t dim, std::uint64_t seed) {
  return make_single_layer(dim, 256, dim, seed);
}

NetModule preset_small(std::size_t dim, std::uint64_t seed) {
  return make_single_layer(dim, 16, dim, seed);
}

NetModule make_single_layer(std::size_t input, std::size_t hidden, std::size_t output,
                            std::uint64_t seed) {
  NetModule m;
  m.lstm.emplace_back(input, hidden, "lstm0");
  m.linear.emplace_back(hidden, output, false, "fc0");
  m.initialize(seed);
  return m;
}

Matrix standalone_lstm_filter(const Matrix& measurements, const NetModule& module) {
  if (measurements.cols() != module.input_size() || module.output_size() != module.input_size()) {
    throw DimensionError("standalone_lstm_filter: measurements " + measurements.shape_string() +
                         " do not match module " + std::to_string(module.input_size()) + " -> " +
                         std::to_string(module.output_size()));
  }
  Matrix out(measurements.rows(), measurements.cols());
  LstmState state = module.zero_state();
  for (std::size_t t = 0; t < measurements.rows(); ++t) {
    ModuleOutput step = module_forward(module, measurements.row(t), state);
    out.set_row(t, step.y);
    state = std::move(step.state);
  }
  return out;
}

}  // namespace lstmkf
