#include "cmmp/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "cmmp/errors.hpp"

namespace cmmp {

const char* op_name(OpTag tag) {
  switch (tag) {
    case OpTag::leaf: return "leaf";
    case OpTag::constant: return "constant";
    case OpTag::matmul: return "matmul";
    case OpTag::matmul_nt: return "matmul_nt";
    case OpTag::add: return "add";
    case OpTag::add_row_bias: return "add_row_bias";
    case OpTag::mul: return "mul";
    case OpTag::scale: return "scale";
    case OpTag::sigmoid: return "sigmoid";
    case OpTag::tanh: return "tanh";
    case OpTag::relu: return "relu";
    case OpTag::maximum: return "maximum";
    case OpTag::slice_last: return "slice_last";
    case OpTag::concat: return "concat";
    case OpTag::mean: return "mean";
    case OpTag::sum: return "sum";
    case OpTag::logsumexp: return "logsumexp";
    case OpTag::gather_rows: return "gather_rows";
    case OpTag::pick: return "pick";
    case OpTag::reshape: return "reshape";
  }
  return "unknown";
}

const Tensor& Var::value() const { return tape->value(*this); }
const Shape& Var::shape() const { return tape->value(*this).shape; }

Var Tape::leaf(Tensor value) {
  if (!value.all_finite()) throw NumericError("numeric error: non-finite leaf input");
  nodes_.push_back(Node{OpTag::leaf, std::move(value), {}, nullptr, differentiable_});
  return Var{this, nodes_.size() - 1};
}

Var Tape::constant(Tensor value) {
  if (!value.all_finite()) throw NumericError("numeric error: non-finite constant input");
  nodes_.push_back(Node{OpTag::constant, std::move(value), {}, nullptr, false});
  return Var{this, nodes_.size() - 1};
}

Var Tape::detach(Var v) { return constant(value(v)); }

Var Tape::record(OpTag op, Tensor value, std::vector<std::size_t> inputs, BackwardFn fn) {
  if (!value.all_finite()) {
    throw NumericError(std::string("numeric error: ") + op_name(op) +
                       " produced a non-finite value");
  }
  bool needs = false;
  if (differentiable_) {
    for (auto in : inputs) needs = needs || nodes_[in].needs_grad;
  }
  nodes_.push_back(Node{op, std::move(value), std::move(inputs),
                        needs ? std::move(fn) : BackwardFn{}, needs});
  return Var{this, nodes_.size() - 1};
}

Tensor& Tape::grad_slot(std::size_t id) {
  if (!has_grad_[id]) {
    grads_[id] = Tensor(nodes_[id].value.shape, 0.0);
    has_grad_[id] = true;
  }
  return grads_[id];
}

Tensor Tape::grad(Var v) const {
  if (v.id < has_grad_.size() && has_grad_[v.id]) return grads_[v.id];
  return Tensor(nodes_[v.id].value.shape, 0.0);
}

void Tape::backward(Var root) {
  if (value(root).size() != 1) {
    throw ShapeError("backward requires scalar root, got " + to_string(value(root).shape));
  }
  grads_.assign(nodes_.size(), Tensor{});
  has_grad_.assign(nodes_.size(), false);
  grad_slot(root.id).data[0] = 1.0;
  for (std::size_t i = root.id + 1; i-- > 0;) {
    if (has_grad_[i] && nodes_[i].backward) nodes_[i].backward(*this, i);
  }
}

namespace ad {
namespace {

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string("shape error in ") + op + ": " + to_string(a) + " vs " +
                   to_string(b));
}

Tape& same_tape(Var a, Var b) {
  if (a.tape != b.tape) throw ShapeError("operands live on different tapes");
  return *a.tape;
}

// Views a rank-1 or rank-2 shape as rows x cols (rank 1 is one row).
std::pair<std::size_t, std::size_t> as_matrix(const Shape& s, const char* op) {
  if (s.size() == 1) return {1, s[0]};
  if (s.size() == 2) return {s[0], s[1]};
  throw ShapeError(std::string("shape error in ") + op + ": unsupported rank " +
                   to_string(s));
}

// c[m,n] += a[m,k] * b[k,n]
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      if (av == 0.0) continue;
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// c[m,n] += a[m,k] * b[n,k]^T
void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = b + j * k;
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      c[i * n + j] += acc;
    }
  }
}

// c[k,n] += a[m,k]^T * b[m,n]
void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* brow = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      if (av == 0.0) continue;
      double* crow = c + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <class Fwd, class Deriv>
Var unary(OpTag tag, Var a, Fwd fwd, Deriv deriv) {
  Tape& t = *a.tape;
  const Tensor& x = a.value();
  Tensor y(x.shape);
  for (std::size_t i = 0; i < x.size(); ++i) y.data[i] = fwd(x.data[i]);
  const std::size_t ia = a.id;
  return t.record(tag, std::move(y), {ia}, [ia, deriv](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad_of(self);
    const Tensor& xv = tp.value_of(ia);
    const Tensor& yv = tp.value_of(self);
    Tensor& ga = tp.grad_slot(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i] * deriv(xv.data[i], yv.data[i]);
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.shape[1] != bv.shape[0]) {
    shape_error("matmul", av.shape, bv.shape);
  }
  const std::size_t m = av.shape[0], k = av.shape[1], n = bv.shape[1];
  Tensor out({m, n});
  gemm_nn(av.data.data(), bv.data.data(), out.data.data(), m, k, n);
  const std::size_t ia = a.id, ib = b.id;
  return t.record(OpTag::matmul, std::move(out), {ia, ib}, [=](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad_of(self);
    if (tp.needs_grad(ia)) {
      gemm_nt(g.data.data(), tp.value_of(ib).data.data(), tp.grad_slot(ia).data.data(), m, n, k);
    }
    if (tp.needs_grad(ib)) {
      gemm_tn(tp.value_of(ia).data.data(), g.data.data(), tp.grad_slot(ib).data.data(), m, k, n);
    }
  });
}

Var matmul_nt(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.shape[1] != bv.shape[1]) {
    shape_error("matmul_nt", av.shape, bv.shape);
  }
  const std::size_t m = av.shape[0], k = av.shape[1], n = bv.shape[0];
  Tensor out({m, n});
  gemm_nt(av.data.data(), bv.data.data(), out.data.data(), m, k, n);
  const std::size_t ia = a.id, ib = b.id;
  return t.record(OpTag::matmul_nt, std::move(out), {ia, ib}, [=](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad_of(self);
    if (tp.needs_grad(ia)) {
      gemm_nn(g.data.data(), tp.value_of(ib).data.data(), tp.grad_slot(ia).data.data(), m, n, k);
    }
    if (tp.needs_grad(ib)) {
      gemm_tn(g.data.data(), tp.value_of(ia).data.data(), tp.grad_slot(ib).data.data(), m, n, k);
    }
  });
}

Var add(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const std::size_t ia = a.id, ib = b.id;
  if (av.shape == bv.shape) {
    Tensor out(av.shape);
    for (std::size_t i = 0; i < av.size(); ++i) out.data[i] = av.data[i] + bv.data[i];
    return t.record(OpTag::add, std::move(out), {ia, ib}, [=](Tape& tp, std::size_t self) {
      const Tensor& g = tp.grad_of(self);
      for (auto in : {ia, ib}) {
        if (!tp.needs_grad(in)) continue;
        Tensor& gi = tp.grad_slot(in);
        for (std::size_t i = 0; i < g.size(); ++i) gi.data[i] += g.data[i];
      }
    });
  }
  if (av.rank() == 2 && bv.rank() == 1 && bv.shape[0] == av.shape[1]) {
    const std::size_t m = av.shape[0], n = av.shape[1];
    Tensor out(av.shape);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) out.data[i * n + j] = av.data[i * n + j] + bv.data[j];
    return t.record(OpTag::add_row_bias, std::move(out), {ia, ib},
                    [=](Tape& tp, std::size_t self) {
                      const Tensor& g = tp.grad_of(self);
                      if (tp.needs_grad(ia)) {
                        Tensor& ga = tp.grad_slot(ia);
                        for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i];
                      }
                      if (tp.needs_grad(ib)) {
                        Tensor& gb = tp.grad_slot(ib);
                        for (std::size_t i = 0; i < m; ++i)
                          for (std::size_t j = 0; j < n; ++j) gb.data[j] += g.data[i * n + j];
                      }
                    });
  }
  shape_error("add", av.shape, bv.shape);
}

Var sub(Var a, Var b) { return add(a, scale(b, -1.0)); }

Var mul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.shape != bv.shape) shape_error("mul", av.shape, bv.shape);
  Tensor out(av.shape);
  for (std::size_t i = 0; i < av.size(); ++i) out.data[i] = av.data[i] * bv.data[i];
  const std::size_t ia = a.id, ib = b.id;
  return t.record(OpTag::mul, std::move(out), {ia, ib}, [=](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad_of(self);
    if (tp.needs_grad(ia)) {
      const Tensor& bv2 = tp.value_of(ib);
      Tensor& ga = tp.grad_slot(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i] * bv2.data[i];
    }
    if (tp.needs_grad(ib)) {
      const Tensor& av2 = tp.value_of(ia);
      Tensor& gb = tp.grad_slot(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb.data[i] += g.data[i] * av2.data[i];
    }
  });
}

Var scale(Var a, double c) {
  return unary(OpTag::scale, a, [c](double x) { return c * x; },
               [c](double, double) { return c; });
}

Var sigmoid(Var a) {
  return unary(
      OpTag::sigmoid, a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var a) {
  return unary(OpTag::tanh, a, [](double x) { return std::tanh(x); },
               [](double, double y) { return 1.0 - y * y; });
}

Var relu(Var a) {
  return unary(OpTag::relu, a, [](double x) { return x > 0.0 ? x : 0.0; },
               [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var maximum(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.shape != bv.shape) shape_error("maximum", av.shape, bv.shape);
  Tensor out(av.shape);
  for (std::size_t i = 0; i < av.size(); ++i) out.data[i] = std::max(av.data[i], bv.data[i]);
  const std::size_t ia = a.id, ib = b.id;
  return t.record(OpTag::maximum, std::move(out), {ia, ib}, [=](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad_of(self);
    const Tensor& x = tp.value_of(ia);
    const Tensor& y = tp.value_of(ib);
    if (tp.needs_grad(ia)) {
      Tensor& ga = tp.grad_slot(ia);
      for (std::size_t i = 0; i < g.size(); ++i)
        if (x.data[i] >= y.data[i]) ga.data[i] += g.data[i];
    }
    if (tp.needs_grad(ib)) {
      Tensor& gb = tp.grad_slot(ib);
      for (std::size_t i = 0; i < g.size(); ++i)
        if (x.data[i] < y.data[i]) gb.data[i] += g.data[i];
    }
  });
}

Var slice_last(Var a, std::size_t begin, std::size_t length) {
  const Tensor& av = a.value();
  const auto [m, n] = as_matrix(av.shape, "slice_last");
  if (length == 0 || begin + length > n) {
    throw ShapeError("shape error in slice_last: [" + std::to_string(begin) + ", " +
                     std::to_string(begin + length) + ") out of " + to_string(av.shape));
  }
  Shape out_shape = av.shape;
  out_shape.back() = length;
  Tensor out(out_shape);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < length; ++j) out.data[i * length + j] = av.data[i * n + begin + j];
  const std::size_t ia = a.id;
  return a.tape->record(OpTag::slice_last, std::move(out), {ia}, [=](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad_of(self);
    Tensor& ga = tp.grad_slot(ia);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < length; ++j) ga.data[i * n + begin + j] += g.data[i * length + j];
  });
}

Var concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("shape error in concat: no operands");
  Tape& t = *parts[0].tape;
  const Shape& first = parts[0].shape();
  std::vector<std::size_t> ids;
  ids.reserve(parts.size());
  for (const auto& p : parts) {
    same_tape(parts[0], p);
    ids.push_back(p.id);
  }

  if (axis == 0) {
    if (first.size() != 2) throw ShapeError("shape error in concat: axis 0 needs rank 2, got " + to_string(first));
    const std::size_t n = first[1];
    std::size_t rows = 0;
    for (const auto& p : parts) {
      if (p.shape().size() != 2 || p.shape()[1] != n) shape_error("concat", first, p.shape());
      rows += p.shape()[0];
    }
    Tensor out({rows, n});
    std::size_t offset = 0;
    for (const auto& p : parts) {
      const Tensor& v = p.value();
      std::copy(v.data.begin(), v.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(offset));
      offset += v.size();
    }
    return t.record(OpTag::concat, std::move(out), ids, [ids](Tape& tp, std::size_t self) {
      const Tensor& g = tp.grad_of(self);
      std::size_t off = 0;
      for (auto in : ids) {
        const std::size_t len = tp.value_of(in).size();
        if (tp.needs_grad(in)) {
          Tensor& gi = tp.grad_slot(in);
          for (std::size_t i = 0; i < len; ++i) gi.data[i] += g.data[off + i];
        }
        off += len;
      }
    });
  }

  if (axis + 1 != first.size()) {
    throw ShapeError("shape error in concat: axis " + std::to_string(axis) + " invalid for " +
                     to_string(first));
  }
  const auto [m, n0] = as_matrix(first, "concat");
  (void)n0;
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    if (s.size() != first.size() || (s.size() == 2 && s[0] != m)) shape_error("concat", first, s);
    widths.push_back(s.back());
    total += s.back();
  }
  Shape out_shape = first;
  out_shape.back() = total;
  Tensor out(out_shape);
  std::size_t col = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& v = parts[k].value();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < widths[k]; ++j) out.data[i * total + col + j] = v.data[i * widths[k] + j];
    col += widths[k];
  }
  return t.record(OpTag::concat, std::move(out), ids,
                  [ids, widths, m = m, total](Tape& tp, std::size_t self) {
                    const Tensor& g = tp.grad_of(self);
                    std::size_t c = 0;
                    for (std::size_t k = 0; k < ids.size(); ++k) {
                      if (tp.needs_grad(ids[k])) {
                        Tensor& gi = tp.grad_slot(ids[k]);
                        for (std::size_t i = 0; i < m; ++i)
                          for (std::size_t j = 0; j < widths[k]; ++j)
                            gi.data[i * widths[k] + j] += g.data[i * total + c + j];
                      }
                      c += widths[k];
                    }
                  });
}

Var mean(Var a, std::size_t axis) {
  const Tensor& av = a.value();
  const auto [m, n] = as_matrix(av.shape, "mean");
  const std::size_t ia = a.id;
  if (av.rank() == 1 && axis == 0) {
    double s = 0.0;
    for (double v : av.data) s += v;
    Tensor out = Tensor::scalar(s / static_cast<double>(n));
    if (std::all_of(av.data.begin(), av.data.end(), [&](double v) { return v == av.data[0]; })) {
      out.data[0] = av.data[0];
    }
    return a.tape->record(OpTag::mean, std::move(out), {ia}, [n = n, ia](Tape& tp, std::size_t self) {
      const double g = tp.grad_of(self).data[0] / static_cast<double>(n);
      for (auto& v : tp.grad_slot(ia).data) v += g;
    });
  }
  if (av.rank() != 2 || axis > 1) {
    throw ShapeError("shape error in mean: axis " + std::to_string(axis) + " invalid for " +
                     to_string(av.shape));
  }
  const std::size_t reduced = axis == 0 ? m : n;
  const std::size_t kept = axis == 0 ? n : m;
  Tensor out({kept});
  for (std::size_t k = 0; k < kept; ++k) {
    double s = 0.0;
    bool constant = true;
    const double first = axis == 0 ? av.data[k] : av.data[k * n];
    for (std::size_t r = 0; r < reduced; ++r) {
      const double v = axis == 0 ? av.data[r * n + k] : av.data[k * n + r];
      s += v;
      constant = constant && v == first;
    }
    // Exact on constant input; plain summation can round (e.g. 0.1 * 3 / 3).
    out.data[k] = constant ? first : s / static_cast<double>(reduced);
  }
  return a.tape->record(OpTag::mean, std::move(out), {ia}, [=, m = m, n = n](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad_of(self);
    Tensor& ga = tp.grad_slot(ia);
    const double inv = 1.0 / static_cast<double>(reduced);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) ga.data[i * n + j] += g.data[axis == 0 ? j : i] * inv;
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data) s += v;
  const std::size_t ia = a.id;
  return a.tape->record(OpTag::sum, Tensor::scalar(s), {ia}, [ia](Tape& tp, std::size_t self) {
    const double g = tp.grad_of(self).data[0];
    for (auto& v : tp.grad_slot(ia).data) v += g;
  });
}

Var logsumexp(Var a) {
  const Tensor& av = a.value();
  const auto [m, n] = as_matrix(av.shape, "logsumexp");
  Tensor out(av.rank() == 1 ? Shape{1} : Shape{m});
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = av.data.data() + i * n;
    const double mx = *std::max_element(row, row + n);
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += std::exp(row[j] - mx);
    out.data[i] = mx + std::log(s);
  }
  const std::size_t ia = a.id;
  return a.tape->record(OpTag::logsumexp, std::move(out), {ia}, [ia, m = m, n = n](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad_of(self);
    const Tensor& x = tp.value_of(ia);
    const Tensor& y = tp.value_of(self);
    Tensor& ga = tp.grad_slot(ia);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j)
        ga.data[i * n + j] += g.data[i] * std::exp(x.data[i * n + j] - y.data[i]);
  });
}

Var gather_rows(Var a, std::span<const std::size_t> rows) {
  const Tensor& av = a.value();
  if (av.rank() != 2 || rows.empty()) {
    throw ShapeError("shape error in gather_rows: needs rank 2 and at least one index, got " +
                     to_string(av.shape));
  }
  const std::size_t m = av.shape[0], n = av.shape[1];
  for (auto r : rows) {
    if (r >= m) throw ShapeError("shape error in gather_rows: row " + std::to_string(r) + " out of " + to_string(av.shape));
  }
  Tensor out({rows.size(), n});
  for (std::size_t k = 0; k < rows.size(); ++k)
    std::copy_n(av.data.begin() + static_cast<std::ptrdiff_t>(rows[k] * n), n,
                out.data.begin() + static_cast<std::ptrdiff_t>(k * n));
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  const std::size_t ia = a.id;
  return a.tape->record(OpTag::gather_rows, std::move(out), {ia}, [ia, idx, n](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad_of(self);
    Tensor& ga = tp.grad_slot(ia);
    for (std::size_t k = 0; k < idx.size(); ++k)
      for (std::size_t j = 0; j < n; ++j) ga.data[idx[k] * n + j] += g.data[k * n + j];
  });
}

Var pick(Var a, std::span<const std::size_t> index) {
  const Tensor& av = a.value();
  const auto [m, n] = as_matrix(av.shape, "pick");
  if (index.size() != m) {
    throw ShapeError("shape error in pick: " + std::to_string(index.size()) + " indices for " +
                     to_string(av.shape));
  }
  Tensor out(av.rank() == 1 ? Shape{1} : Shape{m});
  for (std::size_t i = 0; i < m; ++i) {
    if (index[i] >= n) throw ShapeError("shape error in pick: index " + std::to_string(index[i]) + " out of " + to_string(av.shape));
    out.data[i] = av.data[i * n + index[i]];
  }
  std::vector<std::size_t> idx(index.begin(), index.end());
  const std::size_t ia = a.id;
  return a.tape->record(OpTag::pick, std::move(out), {ia}, [ia, idx, n = n](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad_of(self);
    Tensor& ga = tp.grad_slot(ia);
    for (std::size_t i = 0; i < idx.size(); ++i) ga.data[i * n + idx[i]] += g.data[i];
  });
}

Var reshape(Var a, Shape shape) {
  const Tensor& av = a.value();
  if (element_count(shape) != av.size()) shape_error("reshape", av.shape, shape);
  Tensor out(std::move(shape), av.data);
  const std::size_t ia = a.id;
  return a.tape->record(OpTag::reshape, std::move(out), {ia}, [ia](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad_of(self);
    Tensor& ga = tp.grad_slot(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i];
  });
}

}  // namespace ad

std::vector<Tensor> finite_difference_grad(
    const std::function<double(const std::vector<Tensor>&)>& f,
    const std::vector<Tensor>& params, double h) {
  if (!(h > 0.0)) throw ConfigError("finite difference step must be positive");
  std::vector<Tensor> probe = params;
  std::vector<Tensor> grads;
  grads.reserve(params.size());
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor g(params[p].shape);
    for (std::size_t i = 0; i < params[p].size(); ++i) {
      const double orig = params[p].data[i];
      probe[p].data[i] = orig + h;
      const double fp = f(probe);
      probe[p].data[i] = orig - h;
      const double fm = f(probe);
      probe[p].data[i] = orig;
      g.data[i] = (fp - fm) / (2.0 * h);
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

double finite_difference_grad(const std::function<double(double)>& f, double theta,
                              double h) {
  if (!(h > 0.0)) throw ConfigError("finite difference step must be positive");
  return (f(theta + h) - f(theta - h)) / (2.0 * h);
}

double max_mixed_error(const Tensor& a, const Tensor& b) {
  if (a.shape != b.shape) throw ShapeError("max_mixed_error: " + to_string(a.shape) + " vs " + to_string(b.shape));
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a.data[i] - b.data[i]) / (1.0 + std::abs(b.data[i])));
  }
  return worst;
}

}  // namespace cmmp
