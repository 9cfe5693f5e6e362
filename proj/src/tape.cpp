#include "lstmkf/tape.hpp"

#include <algorithm>
#include <cmath>

namespace lstmkf {

const Matrix& Var::value() const { return tape->value(*this); }

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, false, false, nullptr, {}});
  return {this, nodes_.size() - 1};
}

Var Tape::input(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, true, false, nullptr, {}});
  return {this, nodes_.size() - 1};
}

Var Tape::param(const Parameter& p) {
  if (!track_parameters_) return constant(p.value);
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return {this, it->second};
  nodes_.push_back(Node{p.value, {}, true, false, const_cast<Parameter*>(&p), {}});
  param_nodes_.emplace(&p, nodes_.size() - 1);
  return {this, nodes_.size() - 1};
}

Var Tape::record(Matrix value, bool needs_grad, BackwardFn backward) {
  if (!needs_grad) backward = nullptr;
  nodes_.push_back(Node{std::move(value), {}, needs_grad, false, nullptr, std::move(backward)});
  return {this, nodes_.size() - 1};
}

Matrix Tape::grad(Var v) const {
  const Node& n = nodes_[v.id];
  if (!n.has_grad) return Matrix(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::accumulate(Var v, const Matrix& g) {
  Node& n = nodes_[v.id];
  if (!n.needs_grad) return;
  require_same_shape("accumulate", n.value, g);
  if (!n.has_grad) {
    n.grad = g;
    n.has_grad = true;
  } else {
    n.grad += g;
  }
}

std::size_t Tape::backward(Var out) {
  const Matrix& v = value(out);
  return backward(out, Matrix(v.rows(), v.cols(), 1.0));
}

std::size_t Tape::backward(Var out, const Matrix& seed) {
  accumulate(out, seed);
  std::size_t visited = 0;
  for (std::size_t i = out.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad) continue;
    if (n.backward) {
      n.backward(*this, Var{this, i}, n.grad);
      ++visited;
    }
    if (n.param != nullptr) n.param->grad += n.grad;
  }
  return visited;
}

void Tape::zero_grads() {
  for (Node& n : nodes_) {
    n.has_grad = false;
    n.grad = Matrix();
  }
}

namespace ops {

namespace {

Tape& same_tape(Var a, Var b) {
  if (a.tape == nullptr || a.tape != b.tape) throw std::invalid_argument("ops: operands on different tapes");
  return *a.tape;
}

bool any_grad(Tape& t, Var a) { return t.needs_grad(a); }
bool any_grad(Tape& t, Var a, Var b) { return t.needs_grad(a) || t.needs_grad(b); }

template <class F>
Matrix map(const Matrix& m, F f) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = f(m[i]);
  return out;
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  Matrix out = lstmkf::matmul(t.value(a), t.value(b));
  return t.record(std::move(out), any_grad(t, a, b), [a, b](Tape& tp, Var, const Matrix& g) {
    if (tp.needs_grad(a)) tp.accumulate(a, lstmkf::matmul(g, lstmkf::transpose(tp.value(b))));
    if (tp.needs_grad(b)) tp.accumulate(b, lstmkf::matmul(lstmkf::transpose(tp.value(a)), g));
  });
}

Var add(Var a, Var b) {
  Tape& t = same_tape(a, b);
  Matrix out = t.value(a) + t.value(b);
  return t.record(std::move(out), any_grad(t, a, b), [a, b](Tape& tp, Var, const Matrix& g) {
    tp.accumulate(a, g);
    tp.accumulate(b, g);
  });
}

Var sub(Var a, Var b) {
  Tape& t = same_tape(a, b);
  Matrix out = t.value(a) - t.value(b);
  return t.record(std::move(out), any_grad(t, a, b), [a, b](Tape& tp, Var, const Matrix& g) {
    tp.accumulate(a, g);
    if (tp.needs_grad(b)) tp.accumulate(b, g * -1.0);
  });
}

Var hadamard(Var a, Var b) {
  Tape& t = same_tape(a, b);
  Matrix out = lstmkf::hadamard(t.value(a), t.value(b));
  return t.record(std::move(out), any_grad(t, a, b), [a, b](Tape& tp, Var, const Matrix& g) {
    if (tp.needs_grad(a)) tp.accumulate(a, lstmkf::hadamard(g, tp.value(b)));
    if (tp.needs_grad(b)) tp.accumulate(b, lstmkf::hadamard(g, tp.value(a)));
  });
}

Var sigmoid(Var a) {
  Tape& t = *a.tape;
  Matrix out = map(t.value(a), [](double x) { return 1.0 / (1.0 + std::exp(-x)); });
  return t.record(std::move(out), any_grad(t, a), [a](Tape& tp, Var self, const Matrix& g) {
    const Matrix& y = tp.value(self);
    Matrix d(g.rows(), g.cols());
    for (std::size_t i = 0; i < g.size(); ++i) d[i] = g[i] * y[i] * (1.0 - y[i]);
    tp.accumulate(a, d);
  });
}

Var tanh(Var a) {
  Tape& t = *a.tape;
  Matrix out = map(t.value(a), [](double x) { return std::tanh(x); });
  return t.record(std::move(out), any_grad(t, a), [a](Tape& tp, Var self, const Matrix& g) {
    const Matrix& y = tp.value(self);
    Matrix d(g.rows(), g.cols());
    for (std::size_t i = 0; i < g.size(); ++i) d[i] = g[i] * (1.0 - y[i] * y[i]);
    tp.accumulate(a, d);
  });
}

Var exp(Var a) {
  Tape& t = *a.tape;
  Matrix out = map(t.value(a), [](double x) { return std::exp(x); });
  return t.record(std::move(out), any_grad(t, a), [a](Tape& tp, Var self, const Matrix& g) {
    tp.accumulate(a, lstmkf::hadamard(g, tp.value(self)));
  });
}

Var relu(Var a) {
  Tape& t = *a.tape;
  Matrix out = map(t.value(a), [](double x) { return x > 0.0 ? x : 0.0; });
  return t.record(std::move(out), any_grad(t, a), [a](Tape& tp, Var, const Matrix& g) {
    const Matrix& x = tp.value(a);
    Matrix d(g.rows(), g.cols());
    for (std::size_t i = 0; i < g.size(); ++i) d[i] = x[i] > 0.0 ? g[i] : 0.0;
    tp.accumulate(a, d);
  });
}

Var transpose(Var a) {
  Tape& t = *a.tape;
  return t.record(lstmkf::transpose(t.value(a)), any_grad(t, a),
                  [a](Tape& tp, Var, const Matrix& g) { tp.accumulate(a, lstmkf::transpose(g)); });
}

Var scale(Var a, double s) {
  Tape& t = *a.tape;
  return t.record(t.value(a) * s, any_grad(t, a),
                  [a, s](Tape& tp, Var, const Matrix& g) { tp.accumulate(a, g * s); });
}

Var clamp(Var a, double lo, double hi) {
  Tape& t = *a.tape;
  Matrix out = map(t.value(a), [lo, hi](double x) { return std::clamp(x, lo, hi); });
  return t.record(std::move(out), any_grad(t, a), [a, lo, hi](Tape& tp, Var, const Matrix& g) {
    const Matrix& x = tp.value(a);
    Matrix d(g.rows(), g.cols());
    for (std::size_t i = 0; i < g.size(); ++i) d[i] = (x[i] >= lo && x[i] <= hi) ? g[i] : 0.0;
    tp.accumulate(a, d);
  });
}

Var sum(Var a) {
  Tape& t = *a.tape;
  return t.record(Matrix(1, 1, lstmkf::sum(t.value(a))), any_grad(t, a),
                  [a](Tape& tp, Var, const Matrix& g) {
                    const Matrix& x = tp.value(a);
                    tp.accumulate(a, Matrix(x.rows(), x.cols(), g[0]));
                  });
}

Var sum_squares(Var a) {
  Tape& t = *a.tape;
  return t.record(Matrix(1, 1, squared_norm(t.value(a))), any_grad(t, a),
                  [a](Tape& tp, Var, const Matrix& g) { tp.accumulate(a, tp.value(a) * (2.0 * g[0])); });
}

Var diag(Var column) {
  Tape& t = *column.tape;
  const Matrix& c = t.value(column);
  if (c.cols() != 1) throw DimensionError("diag: expected a column vector, got " + c.shape_string());
  return t.record(Matrix::diagonal(c.data()), any_grad(t, column),
                  [column](Tape& tp, Var, const Matrix& g) { tp.accumulate(column, g.diag()); });
}

Var symmetrize(Var a) {
  Tape& t = *a.tape;
  return t.record(lstmkf::symmetrize(t.value(a)), any_grad(t, a),
                  [a](Tape& tp, Var, const Matrix& g) { tp.accumulate(a, lstmkf::symmetrize(g)); });
}

Var solve_spd(Var m, Var rhs) {
  Tape& t = same_tape(m, rhs);
  if (t.value(m).rows() != t.value(m).cols()) {
    throw DimensionError("solve_spd: " + t.value(m).shape_string() + " is not square");
  }
  Matrix x = lstmkf::solve_spd(t.value(m), t.value(rhs));
  return t.record(std::move(x), any_grad(t, m, rhs), [m, rhs](Tape& tp, Var self, const Matrix& g) {
    // For x = S^-1 b with symmetric S: db = S^-1 g, dS = -db x^T (then symmetrized).
    const Matrix gb = lstmkf::solve_spd(tp.value(m), g);
    if (tp.needs_grad(rhs)) tp.accumulate(rhs, gb);
    if (tp.needs_grad(m)) {
      Matrix gm = lstmkf::matmul(gb, lstmkf::transpose(tp.value(self))) * -1.0;
      tp.accumulate(m, lstmkf::symmetrize(gm));
    }
  });
}

Var elementwise(Elementwise op, Var a, Var b) {
  switch (op) {
    case Elementwise::Sigmoid: return sigmoid(a);
    case Elementwise::Tanh: return tanh(a);
    case Elementwise::Exp: return exp(a);
    case Elementwise::Relu: return relu(a);
    case Elementwise::Hadamard: return hadamard(a, b);
    case Elementwise::Add: return add(a, b);
    case Elementwise::Sub: return sub(a, b);
  }
  throw std::invalid_argument("elementwise: unknown op");
}

}  // namespace ops

}  // namespace lstmkf
