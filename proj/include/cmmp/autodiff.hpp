#pragma once

// Tape-based reverse-mode differentiation.
//
// Every primitive evaluates its forward value eagerly, appends a node to the
// tape and (when any input needs a gradient) stores a closure that applies the
// vector-Jacobian product. Nodes are appended in evaluation order, so the tape
// is always topologically sorted and backward is a single reverse sweep.

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "cmmp/tensor.hpp"

namespace cmmp {

enum class OpTag {
  leaf,
  constant,
  matmul,
  matmul_nt,
  add,
  add_row_bias,
  mul,
  scale,
  sigmoid,
  tanh,
  relu,
  maximum,
  slice_last,
  concat,
  mean,
  sum,
  logsumexp,
  gather_rows,
  pick,
  reshape,
};

const char* op_name(OpTag tag);

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const;
};

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  /// A non-differentiable tape records values only (evaluation mode).
  explicit Tape(bool differentiable = true) : differentiable_(differentiable) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor value);
  Var constant(Tensor value);
  /// Same value as `v`, but gradients stop here.
  Var detach(Var v);

  void backward(Var root);

  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  /// Gradient accumulated by the last backward; zeros if nothing flowed.
  Tensor grad(Var v) const;

  std::size_t size() const { return nodes_.size(); }
  OpTag op(Var v) const { return nodes_[v.id].op; }
  const std::vector<std::size_t>& inputs(Var v) const { return nodes_[v.id].inputs; }
  bool differentiable() const { return differentiable_; }

  // Primitive-facing API.
  Var record(OpTag op, Tensor value, std::vector<std::size_t> inputs, BackwardFn fn);
  const Tensor& value_of(std::size_t id) const { return nodes_[id].value; }
  const Tensor& grad_of(std::size_t id) const { return grads_[id]; }
  Tensor& grad_slot(std::size_t id);
  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }

 private:
  struct Node {
    OpTag op;
    Tensor value;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    bool needs_grad = false;
  };

  bool differentiable_;
  std::deque<Node> nodes_;  // stable references: value() stays valid as the tape grows
  std::vector<Tensor> grads_;
  std::vector<bool> has_grad_;
};

// Primitive catalogue. All throw ShapeError on non-conforming operands and
// NumericError if a non-finite value appears.
namespace ad {

Var matmul(Var a, Var b);     // [m,k] x [k,n] -> [m,n]
Var matmul_nt(Var a, Var b);  // [m,k] x [n,k]^T -> [m,n]
/// Same-shape add, or row-broadcast of a [n] bias onto [m,n].
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double c);
Var sigmoid(Var a);
Var tanh(Var a);
/// max(x, 0); subgradient 0 at x == 0.
Var relu(Var a);
/// Elementwise max; on ties the gradient goes to `a`.
Var maximum(Var a, Var b);
Var slice_last(Var a, std::size_t begin, std::size_t length);
/// axis 0 stacks rows of rank-2 operands; axis 1 (or -1 for rank 1) joins the last axis.
Var concat(std::span<const Var> parts, std::size_t axis);
Var mean(Var a, std::size_t axis);
Var sum(Var a);
/// Max-shifted log-sum-exp over the last axis.
Var logsumexp(Var a);
Var gather_rows(Var a, std::span<const std::size_t> rows);
/// out[i] = a[i, index[i]].
Var pick(Var a, std::span<const std::size_t> index);
Var reshape(Var a, Shape shape);

}  // namespace ad

/// Central differences of a scalar function of several parameter tensors.
std::vector<Tensor> finite_difference_grad(
    const std::function<double(const std::vector<Tensor>&)>& f,
    const std::vector<Tensor>& params, double h);

double finite_difference_grad(const std::function<double(double)>& f, double theta,
                              double h);

/// max over elements of |a - b| / (1 + |b|).
double max_mixed_error(const Tensor& a, const Tensor& b);

}  // namespace cmmp
