#pragma once

// Define-by-run reverse-mode differentiation over dense double arrays.
//
// A Tape records every operation as it executes; a Var is a handle to one
// recorded node. Calling Tape::backward(root) walks the record in reverse
// insertion order (which is a topological order, since a node is always
// appended after its inputs) and accumulates d(root)/d(leaf) into every leaf.
//
// Broadcasting is restricted to two cases: equal shapes, or one operand 1x1.
// Anything else is a DimensionError. Rows of a batch are broadcast explicitly
// with matmul against a column of ones.
//
// Conventions fixed for reproducibility:
//   relu'(0) = 0, abs'(0) = 0, and max() routes its gradient to the first
//   maximal element in row-major order.
//
// A Tape and the Vars that point into it belong to one thread.

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "balancereg/tensor.hpp"

namespace balancereg::ad {

// Persistent trainable array. `grad` accumulates across backward passes
// until zero_grad() is called. Mutable so that forward passes over a const
// model can still accumulate into it.
struct Parameter {
  std::string name;
  Tensor value;
  mutable Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(value.rows, value.cols) {}

  void zero_grad() const;
};

class Tape;

class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  // Leaves: the accumulated gradient. Interior nodes: the adjoint from the
  // most recent backward pass (zeros if unreached).
  Tensor grad() const;

  std::size_t rows() const { return value().rows; }
  std::size_t cols() const { return value().cols; }
  double item() const { return value().item(); }

  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  // Called once during backward with the node's own id; reads the node's
  // adjoint and pushes contributions into its inputs via accumulate().
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf without gradient tracking (data, masks, ones).
  Var constant(Tensor value);
  // Tape-owned leaf whose gradient accumulator lives on the tape.
  Var variable(Tensor value);
  // Leaf bound to a parameter; backward accumulates into p.grad.
  Var leaf(const Parameter& p);

  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward);
  Var record(Tensor value, std::span<const Var> inputs, BackwardFn backward);

  // root must be 1x1. Adjoints of interior nodes are recomputed from
  // scratch; leaf gradients accumulate, so calling backward twice without
  // zero_grad doubles them.
  void backward(Var root);

  // Clears accumulators of tape-owned variables (not bound parameters).
  void zero_grad();

  void accumulate(std::size_t id, const Tensor& contribution);
  void accumulate_scaled(std::size_t id, const Tensor& contribution, double scale);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  const Tensor& adjoint(std::size_t id) const { return nodes_[id].adjoint; }
  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }
  Tensor grad(std::size_t id) const;

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

 private:
  enum class Kind { constant, variable, parameter, op };

  struct Node {
    Kind kind = Kind::constant;
    Tensor value;
    Tensor adjoint;      // empty until reached during backward
    Tensor leaf_grad;    // Kind::variable only
    const Parameter* param = nullptr;
    bool needs_grad = false;
    BackwardFn backward;
  };

  Var push(Node node);

  std::vector<Node> nodes_;
};

// --- elementwise binary (equal shapes or scalar with array) ---
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);

// --- elementwise unary ---
Var relu(Var a);
Var exp(Var a);
Var square(Var a);
Var sigmoid(Var a);
Var sqrt(Var a);
Var abs(Var a);
Var scale(Var a, double c);
Var shift(Var a, double c);

// --- reductions to 1x1 ---
Var sum(Var a);
Var mean(Var a);
Var max(Var a);

// --- structural ---
Var matmul(Var a, Var b);
Var transpose(Var a);
Var concat_rows(std::span<const Var> parts);
Var gather_rows(Var a, std::span<const std::size_t> indices);
// D(i, j) = || a.row(i) - b.row(j) ||^2
Var pairwise_sq_dist(Var a, Var b);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator/(Var a, Var b) { return div(a, b); }
inline Var operator-(Var a) { return scale(a, -1.0); }
inline Var operator*(Var a, double c) { return scale(a, c); }
inline Var operator*(double c, Var a) { return scale(a, c); }
inline Var operator+(Var a, double c) { return shift(a, c); }
inline Var operator-(Var a, double c) { return shift(a, -c); }

}  // namespace balancereg::ad
