#include "balancereg/diffcore.hpp"

#include <algorithm>
#include <cmath>

#include "balancereg/errors.hpp"

namespace balancereg::ad {

void Parameter::zero_grad() const {
  grad = Tensor(value.rows, value.cols);
}

const Tensor& Var::value() const {
  return tape_->value(id_);
}

Tensor Var::grad() const {
  return tape_->grad(id_);
}

// ---------------------------------------------------------------- Tape

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  Node node;
  node.kind = Kind::constant;
  node.value = std::move(value);
  return push(std::move(node));
}

Var Tape::variable(Tensor value) {
  Node node;
  node.kind = Kind::variable;
  node.leaf_grad = Tensor(value.rows, value.cols);
  node.value = std::move(value);
  node.needs_grad = true;
  return push(std::move(node));
}

Var Tape::leaf(const Parameter& p) {
  if (!p.grad.same_shape(p.value)) p.zero_grad();
  Node node;
  node.kind = Kind::parameter;
  node.value = p.value;
  node.param = &p;
  node.needs_grad = true;
  return push(std::move(node));
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward) {
  return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(backward));
}

Var Tape::record(Tensor value, std::span<const Var> inputs, BackwardFn backward) {
  Node node;
  node.kind = Kind::op;
  node.value = std::move(value);
  for (const Var& in : inputs) {
    if (&in.tape() != this) throw ContractError("operation mixes Vars from different tapes");
    node.needs_grad = node.needs_grad || nodes_[in.id()].needs_grad;
  }
  if (node.needs_grad) node.backward = std::move(backward);
  return push(std::move(node));
}

void Tape::accumulate(std::size_t id, const Tensor& contribution) {
  Node& node = nodes_[id];
  if (!node.needs_grad) return;
  if (!contribution.same_shape(node.value)) {
    throw DimensionError("gradient " + contribution.shape_string() + " does not match value " +
                         node.value.shape_string());
  }
  if (node.adjoint.size() == 0 && node.value.size() != 0) {
    node.adjoint = contribution;
    return;
  }
  for (std::size_t i = 0; i < contribution.size(); ++i) node.adjoint.data[i] += contribution.data[i];
}

void Tape::accumulate_scaled(std::size_t id, const Tensor& contribution, double scale) {
  Tensor scaled = contribution;
  for (double& v : scaled.data) v *= scale;
  accumulate(id, scaled);
}

void Tape::backward(Var root) {
  if (&root.tape() != this) throw ContractError("backward root belongs to a different tape");
  const Tensor& rv = nodes_[root.id()].value;
  if (!rv.is_scalar()) {
    throw ContractError("backward requires a scalar root, got " + rv.shape_string());
  }
  for (Node& node : nodes_) node.adjoint = Tensor();
  if (!nodes_[root.id()].needs_grad) return;

  nodes_[root.id()].adjoint = Tensor::scalar(1.0);
  for (std::size_t id = root.id() + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (node.adjoint.size() == 0 && node.value.size() != 0) continue;
    switch (node.kind) {
      case Kind::op:
        if (node.backward) node.backward(*this, id);
        break;
      case Kind::variable:
        for (std::size_t i = 0; i < node.adjoint.size(); ++i) node.leaf_grad.data[i] += node.adjoint.data[i];
        break;
      case Kind::parameter:
        for (std::size_t i = 0; i < node.adjoint.size(); ++i) node.param->grad.data[i] += node.adjoint.data[i];
        break;
      case Kind::constant:
        break;
    }
  }
}

void Tape::zero_grad() {
  for (Node& node : nodes_) {
    if (node.kind == Kind::variable) node.leaf_grad = Tensor(node.value.rows, node.value.cols);
  }
}

Tensor Tape::grad(std::size_t id) const {
  const Node& node = nodes_[id];
  switch (node.kind) {
    case Kind::variable:
      return node.leaf_grad;
    case Kind::parameter:
      return node.param->grad;
    default:
      if (node.adjoint.same_shape(node.value)) return node.adjoint;
      return Tensor(node.value.rows, node.value.cols);
  }
}

// ---------------------------------------------------------------- helpers

namespace {

Tape& common_tape(Var a, Var b) {
  if (&a.tape() != &b.tape()) throw ContractError("operation mixes Vars from different tapes");
  return a.tape();
}

// Output shape for the scalar-or-equal broadcasting rule.
Tensor broadcast_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.same_shape(b)) return Tensor(a.rows, a.cols);
  if (a.is_scalar()) return Tensor(b.rows, b.cols);
  if (b.is_scalar()) return Tensor(a.rows, a.cols);
  throw DimensionError(std::string(op) + ": incompatible shapes " + a.shape_string() + " and " +
                       b.shape_string());
}

inline double at(const Tensor& t, std::size_t i) {
  return t.is_scalar() ? t.data[0] : t.data[i];
}

// Reduces an output-shaped gradient to the operand's shape (sums when the
// operand was a broadcast scalar).
Tensor reduce_to(const Tensor& operand, Tensor g) {
  if (operand.same_shape(g)) return g;
  double total = 0.0;
  for (double v : g.data) total += v;
  return Tensor::scalar(total);
}

template <typename Forward, typename LocalGrad>
Var unary(Var a, Forward f, LocalGrad dfdx) {
  const Tensor& x = a.value();
  Tensor out(x.rows, x.cols);
  for (std::size_t i = 0; i < x.size(); ++i) out.data[i] = f(x.data[i]);
  const std::size_t in = a.id();
  return a.tape().record(std::move(out), {a}, [in, dfdx](Tape& tape, std::size_t self) {
    const Tensor& g = tape.adjoint(self);
    const Tensor& xv = tape.value(in);
    const Tensor& yv = tape.value(self);
    Tensor dx(xv.rows, xv.cols);
    for (std::size_t i = 0; i < xv.size(); ++i) dx.data[i] = g.data[i] * dfdx(xv.data[i], yv.data[i]);
    tape.accumulate(in, dx);
  });
}

}  // namespace

// ---------------------------------------------------------------- binary

Var add(Var a, Var b) {
  Tape& tape = common_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor out = broadcast_shape(av, bv, "add");
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = at(av, i) + at(bv, i);
  const std::size_t ia = a.id(), ib = b.id();
  return tape.record(std::move(out), {a, b}, [ia, ib](Tape& t, std::size_t self) {
    const Tensor& g = t.adjoint(self);
    t.accumulate(ia, reduce_to(t.value(ia), g));
    t.accumulate(ib, reduce_to(t.value(ib), g));
  });
}

Var sub(Var a, Var b) {
  Tape& tape = common_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor out = broadcast_shape(av, bv, "sub");
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = at(av, i) - at(bv, i);
  const std::size_t ia = a.id(), ib = b.id();
  return tape.record(std::move(out), {a, b}, [ia, ib](Tape& t, std::size_t self) {
    const Tensor& g = t.adjoint(self);
    t.accumulate(ia, reduce_to(t.value(ia), g));
    Tensor neg = g;
    for (double& v : neg.data) v = -v;
    t.accumulate(ib, reduce_to(t.value(ib), std::move(neg)));
  });
}

Var mul(Var a, Var b) {
  Tape& tape = common_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor out = broadcast_shape(av, bv, "mul");
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = at(av, i) * at(bv, i);
  const std::size_t ia = a.id(), ib = b.id();
  return tape.record(std::move(out), {a, b}, [ia, ib](Tape& t, std::size_t self) {
    const Tensor& g = t.adjoint(self);
    const Tensor& x = t.value(ia);
    const Tensor& y = t.value(ib);
    if (t.needs_grad(ia)) {
      Tensor ga(g.rows, g.cols);
      for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] = g.data[i] * at(y, i);
      t.accumulate(ia, reduce_to(x, std::move(ga)));
    }
    if (t.needs_grad(ib)) {
      Tensor gb(g.rows, g.cols);
      for (std::size_t i = 0; i < g.size(); ++i) gb.data[i] = g.data[i] * at(x, i);
      t.accumulate(ib, reduce_to(y, std::move(gb)));
    }
  });
}

Var div(Var a, Var b) {
  Tape& tape = common_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor out = broadcast_shape(av, bv, "div");
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = at(av, i) / at(bv, i);
  const std::size_t ia = a.id(), ib = b.id();
  return tape.record(std::move(out), {a, b}, [ia, ib](Tape& t, std::size_t self) {
    const Tensor& g = t.adjoint(self);
    const Tensor& x = t.value(ia);
    const Tensor& y = t.value(ib);
    if (t.needs_grad(ia)) {
      Tensor ga(g.rows, g.cols);
      for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] = g.data[i] / at(y, i);
      t.accumulate(ia, reduce_to(x, std::move(ga)));
    }
    if (t.needs_grad(ib)) {
      Tensor gb(g.rows, g.cols);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double yi = at(y, i);
        gb.data[i] = -g.data[i] * at(x, i) / (yi * yi);
      }
      t.accumulate(ib, reduce_to(y, std::move(gb)));
    }
  });
}

// ---------------------------------------------------------------- unary

Var relu(Var a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var exp(Var a) {
  return unary(
      a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var square(Var a) {
  return unary(
      a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var sigmoid(Var a) {
  return unary(
      a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var sqrt(Var a) {
  return unary(
      a, [](double x) { return std::sqrt(x); }, [](double, double y) { return 0.5 / y; });
}

Var abs(Var a) {
  return unary(
      a, [](double x) { return std::fabs(x); },
      [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Var scale(Var a, double c) {
  return unary(
      a, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

Var shift(Var a, double c) {
  return unary(
      a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

// ---------------------------------------------------------------- reductions

Var sum(Var a) {
  const Tensor& x = a.value();
  double total = 0.0;
  for (double v : x.data) total += v;
  const std::size_t in = a.id();
  return a.tape().record(Tensor::scalar(total), {a}, [in](Tape& t, std::size_t self) {
    const Tensor& xv = t.value(in);
    t.accumulate(in, Tensor(xv.rows, xv.cols, t.adjoint(self).item()));
  });
}

Var mean(Var a) {
  const Tensor& x = a.value();
  if (x.size() == 0) throw ContractError("mean of an empty array");
  double total = 0.0;
  for (double v : x.data) total += v;
  const double n = static_cast<double>(x.size());
  const std::size_t in = a.id();
  return a.tape().record(Tensor::scalar(total / n), {a}, [in, n](Tape& t, std::size_t self) {
    const Tensor& xv = t.value(in);
    t.accumulate(in, Tensor(xv.rows, xv.cols, t.adjoint(self).item() / n));
  });
}

Var max(Var a) {
  const Tensor& x = a.value();
  if (x.size() == 0) throw ContractError("max of an empty array");
  std::size_t best = 0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (x.data[i] > x.data[best]) best = i;
  }
  const std::size_t in = a.id();
  return a.tape().record(Tensor::scalar(x.data[best]), {a}, [in, best](Tape& t, std::size_t self) {
    const Tensor& xv = t.value(in);
    Tensor g(xv.rows, xv.cols);
    g.data[best] = t.adjoint(self).item();
    t.accumulate(in, g);
  });
}

// ---------------------------------------------------------------- structural

Var matmul(Var a, Var b) {
  Tape& tape = common_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols != bv.rows) {
    throw DimensionError("matmul: inner dimensions disagree for " + av.shape_string() + " and " +
                         bv.shape_string());
  }
  const std::size_t m = av.rows, k = av.cols, n = bv.cols;
  Tensor out(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av.data[i * k + p];
      if (aip == 0.0) continue;
      const double* brow = bv.data.data() + p * n;
      double* orow = out.data.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
  const std::size_t ia = a.id(), ib = b.id();
  return tape.record(std::move(out), {a, b}, [ia, ib, m, k, n](Tape& t, std::size_t self) {
    const Tensor& g = t.adjoint(self);
    const Tensor& x = t.value(ia);
    const Tensor& y = t.value(ib);
    if (t.needs_grad(ia)) {
      // dA = G * B^T
      Tensor ga(m, k);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += g.data[i * n + j] * y.data[p * n + j];
          ga.data[i * k + p] = acc;
        }
      }
      t.accumulate(ia, ga);
    }
    if (t.needs_grad(ib)) {
      // dB = A^T * G
      Tensor gb(k, n);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = x.data[i * k + p];
          if (aip == 0.0) continue;
          for (std::size_t j = 0; j < n; ++j) gb.data[p * n + j] += aip * g.data[i * n + j];
        }
      }
      t.accumulate(ib, gb);
    }
  });
}

Var transpose(Var a) {
  const Tensor& x = a.value();
  Tensor out(x.cols, x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) {
    for (std::size_t j = 0; j < x.cols; ++j) out(j, i) = x(i, j);
  }
  const std::size_t in = a.id();
  return a.tape().record(std::move(out), {a}, [in](Tape& t, std::size_t self) {
    const Tensor& g = t.adjoint(self);
    Tensor gx(g.cols, g.rows);
    for (std::size_t i = 0; i < g.rows; ++i) {
      for (std::size_t j = 0; j < g.cols; ++j) gx(j, i) = g(i, j);
    }
    t.accumulate(in, gx);
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ContractError("concat_rows needs at least one input");
  Tape& tape = parts.front().tape();
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  for (const Var& p : parts) {
    if (p.cols() != cols) {
      throw DimensionError("concat_rows: column mismatch " + parts.front().value().shape_string() + " and " +
                           p.value().shape_string());
    }
    rows += p.rows();
  }
  Tensor out(rows, cols);
  std::vector<std::size_t> ids;
  std::size_t offset = 0;
  for (const Var& p : parts) {
    std::copy(p.value().data.begin(), p.value().data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(offset));
    offset += p.value().size();
    ids.push_back(p.id());
  }
  return tape.record(std::move(out), parts, [ids](Tape& t, std::size_t self) {
    const Tensor& g = t.adjoint(self);
    std::size_t off = 0;
    for (std::size_t id : ids) {
      const Tensor& v = t.value(id);
      Tensor piece(v.rows, v.cols);
      std::copy(g.data.begin() + static_cast<std::ptrdiff_t>(off),
                g.data.begin() + static_cast<std::ptrdiff_t>(off + v.size()), piece.data.begin());
      off += v.size();
      t.accumulate(id, piece);
    }
  });
}

Var gather_rows(Var a, std::span<const std::size_t> indices) {
  Tensor out = take_rows(a.value(), indices);
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  const std::size_t in = a.id();
  return a.tape().record(std::move(out), {a}, [in, idx = std::move(idx)](Tape& t, std::size_t self) {
    const Tensor& g = t.adjoint(self);
    const Tensor& x = t.value(in);
    Tensor gx(x.rows, x.cols);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      for (std::size_t c = 0; c < x.cols; ++c) gx(idx[r], c) += g(r, c);
    }
    t.accumulate(in, gx);
  });
}

Var pairwise_sq_dist(Var a, Var b) {
  Tape& tape = common_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols != bv.cols) {
    throw DimensionError("pairwise_sq_dist: feature widths differ for " + av.shape_string() + " and " +
                         bv.shape_string());
  }
  const std::size_t m = av.rows, n = bv.rows, d = av.cols;
  Tensor out(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = av.data[i * d + k] - bv.data[j * d + k];
        acc += diff * diff;
      }
      out.data[i * n + j] = acc;
    }
  }
  const std::size_t ia = a.id(), ib = b.id();
  return tape.record(std::move(out), {a, b}, [ia, ib, m, n, d](Tape& t, std::size_t self) {
    const Tensor& g = t.adjoint(self);
    const Tensor& x = t.value(ia);
    const Tensor& y = t.value(ib);
    Tensor ga(m, d), gb(n, d);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double gij = 2.0 * g.data[i * n + j];
        if (gij == 0.0) continue;
        for (std::size_t k = 0; k < d; ++k) {
          const double diff = x.data[i * d + k] - y.data[j * d + k];
          ga.data[i * d + k] += gij * diff;
          gb.data[j * d + k] -= gij * diff;
        }
      }
    }
    t.accumulate(ia, ga);
    t.accumulate(ib, gb);
  });
}

}  // namespace balancereg::ad
