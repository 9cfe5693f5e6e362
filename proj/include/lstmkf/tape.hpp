#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "lstmkf/matrix.hpp"

namespace lstmkf {

/// A trainable matrix together with its accumulated gradient.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Matrix v)
      : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()) {}

  void zero_grad() { grad = Matrix(value.rows(), value.cols()); }
};

class Tape;

/// Handle to a node on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

/**
 * Records primitive operations of one forward pass so they can be replayed in
 * reverse. Nodes are appended in creation order; backward() walks them from
 * the last node to the first, calling each node's backward rule once.
 *
 * When `track_parameters` is false, param() yields constants: the tape then
 * only evaluates, which is how inference and Jacobian passes run.
 */
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, Var self, const Matrix& out_grad)>;

  explicit Tape(bool track_parameters = true) : track_parameters_(track_parameters) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf without gradient.
  Var constant(Matrix value);
  /// Leaf whose gradient is kept on the tape (read it with grad()).
  Var input(Matrix value);
  /// Leaf bound to a parameter; backward() adds its gradient into p.grad
  /// (the value is never written). Repeated calls for the same parameter
  /// return the same node.
  Var param(const Parameter& p);

  /// Appends an interior node. `backward` receives the node itself and its
  /// output gradient, and must route the gradient into its inputs with
  /// accumulate().
  Var record(Matrix value, bool needs_grad, BackwardFn backward);

  const Matrix& value(Var v) const { return nodes_[v.id].value; }
  bool needs_grad(Var v) const { return nodes_[v.id].needs_grad; }
  /// Gradient accumulated for v by the last backward(); zeros if none reached it.
  Matrix grad(Var v) const;

  void accumulate(Var v, const Matrix& g);

  /// Reverse pass seeded with `seed` (defaults to ones of out's shape).
  /// Returns the number of nodes whose backward rule ran.
  std::size_t backward(Var out);
  std::size_t backward(Var out, const Matrix& seed);

  /// Clears gradients held on the tape (parameter gradients are untouched).
  void zero_grads();

  std::size_t size() const noexcept { return nodes_.size(); }
  bool tracks_parameters() const noexcept { return track_parameters_; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool needs_grad = false;
    bool has_grad = false;
    Parameter* param = nullptr;
    BackwardFn backward;
  };

  bool track_parameters_;
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::size_t> param_nodes_;
};

/// Differentiable primitives. Every op checks shapes and throws DimensionError
/// naming both operands on mismatch.
namespace ops {

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var hadamard(Var a, Var b);
Var sigmoid(Var a);
Var tanh(Var a);
Var exp(Var a);
Var relu(Var a);
Var transpose(Var a);
Var scale(Var a, double s);
/// Elementwise clamp to [lo, hi]; gradient is zero where the clamp is active.
Var clamp(Var a, double lo, double hi);
/// Sum of all entries as a 1x1 node.
Var sum(Var a);
/// Sum of squared entries as a 1x1 node.
Var sum_squares(Var a);
/// n x 1 column to n x n diagonal matrix.
Var diag(Var column);
/// (a + a^T) / 2
Var symmetrize(Var a);
/// Solves sym(m) x = rhs where sym(m) = (m + m^T)/2 must be positive definite.
/// The gradient with respect to m is symmetrized to match.
Var solve_spd(Var m, Var rhs);

enum class Elementwise { Sigmoid, Tanh, Exp, Relu, Hadamard, Add, Sub };

/// Dispatch form of the elementwise primitives; binary ops require `b`.
Var elementwise(Elementwise op, Var a, Var b = {});

}  // namespace ops

}  // namespace lstmkf
