#include "abdoshape/neural/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Core>

#include "abdoshape/error.hpp"

namespace abdoshape::neural {
namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

ConstMap as_matrix(const Tensor& t) {
  return ConstMap(t.values.data(), static_cast<Eigen::Index>(t.shape[0]), static_cast<Eigen::Index>(t.shape[1]));
}
ConstMap as_matrix(const std::vector<double>& v, std::size_t rows, std::size_t cols) {
  return ConstMap(v.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}
MutMap as_matrix(std::vector<double>& v, std::size_t rows, std::size_t cols) {
  return MutMap(v.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw InvalidArgument(std::string(op) + ": incompatible shapes " + shape_string(a) + " and " + shape_string(b));
}

void require_rank2(const char* op, const Shape& s) {
  if (s.size() != 2) throw InvalidArgument(std::string(op) + ": expected a rank-2 tensor, got " + shape_string(s));
}

void require_same_tape(const Var& a, const Var& b) {
  if (&a.tape() != &b.tape()) throw InvalidArgument("operands live on different tapes");
}

// Row vector length of a broadcast operand: {n} or {1, n}.
std::size_t row_vector_length(const char* op, const Shape& x, const Shape& b) {
  if (b.size() == 1) return b[0];
  if (b.size() == 2 && b[0] == 1) return b[1];
  shape_error(op, x, b);
}

}  // namespace

std::size_t element_count(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream s;
  s << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) s << (i ? ", " : "") << shape[i];
  s << ']';
  return s.str();
}

Tensor::Tensor(Shape s, std::vector<double> v) : shape(std::move(s)), values(std::move(v)) {
  if (element_count(shape) != values.size()) {
    throw InvalidArgument("tensor of shape " + shape_string(shape) + " cannot hold " + std::to_string(values.size()) +
                          " values");
  }
}

Tensor Tensor::zeros(Shape s) { return filled(std::move(s), 0.0); }

Tensor Tensor::filled(Shape s, double value) {
  const auto n = element_count(s);
  return Tensor(std::move(s), std::vector<double>(n, value));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> v;
  v.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw InvalidArgument("ragged matrix literal");
    v.insert(v.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(v));
}

Tensor Tensor::vector(std::initializer_list<double> values) {
  return Tensor({values.size()}, std::vector<double>(values));
}

const Tensor& Var::value() const { return tape_->value(id_); }

Var Tape::leaf(Tensor value, bool requires_grad) {
  for (double v : value.values) {
    if (!std::isfinite(v)) throw NumericalError("non-finite value in tape input");
  }
  nodes_.push_back(Node{std::move(value), {}, {}, {}, requires_grad});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(const char* op, Tensor value, std::vector<std::size_t> parents, BackwardRule rule) {
  for (double v : value.values) {
    if (!std::isfinite(v)) throw NumericalError(std::string(op) + " produced a non-finite value");
  }
  bool needs = false;
  for (auto p : parents) needs = needs || nodes_.at(p).requires_grad;
  nodes_.push_back(Node{std::move(value), {}, std::move(parents), needs ? std::move(rule) : BackwardRule{}, needs});
  return Var(this, nodes_.size() - 1);
}

std::vector<double>& Tape::grad_buffer(std::size_t id) {
  auto& node = nodes_.at(id);
  if (node.grad.empty()) node.grad.assign(node.value.size(), 0.0);
  return node.grad;
}

void Tape::backward(Var loss) {
  if (&loss.tape() != this) throw InvalidArgument("loss belongs to another tape");
  if (value(loss.id()).size() != 1) {
    throw InvalidArgument("backward needs a scalar loss, got shape " + shape_string(value(loss.id()).shape));
  }
  for (auto& n : nodes_) n.grad.clear();
  grad_buffer(loss.id())[0] = 1.0;
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    const auto& node = nodes_[id];
    if (node.grad.empty() || !node.rule) continue;
    node.rule(*this, id);
  }
}

Tensor Tape::grad(Var v) const {
  const auto& node = nodes_.at(v.id());
  if (node.grad.empty()) return Tensor::zeros(node.value.shape);
  return Tensor(node.value.shape, node.grad);
}

Var matmul(Var a, Var b) {
  require_same_tape(a, b);
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  require_rank2("matmul", sa);
  require_rank2("matmul", sb);
  if (sa[1] != sb[0]) shape_error("matmul", sa, sb);
  Tensor out = Tensor::zeros({sa[0], sb[1]});
  as_matrix(out.values, sa[0], sb[1]).noalias() = as_matrix(a.value()) * as_matrix(b.value());
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record("matmul", std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    const auto& va = t.value(ia);
    const auto& vb = t.value(ib);
    const auto g = as_matrix(t.upstream(self), va.shape[0], vb.shape[1]);
    if (t.requires_grad(ia)) {
      as_matrix(t.grad_buffer(ia), va.shape[0], va.shape[1]).noalias() += g * as_matrix(vb).transpose();
    }
    if (t.requires_grad(ib)) {
      as_matrix(t.grad_buffer(ib), vb.shape[0], vb.shape[1]).noalias() += as_matrix(va).transpose() * g;
    }
  });
}

Var add_broadcast(Var x, Var b) {
  require_same_tape(x, b);
  const Shape& sx = x.shape();
  require_rank2("add_broadcast", sx);
  const std::size_t n = row_vector_length("add_broadcast", sx, b.shape());
  if (n != sx[1]) shape_error("add_broadcast", sx, b.shape());
  Tensor out = x.value();
  const auto& bv = b.value().values;
  for (std::size_t r = 0; r < sx[0]; ++r) {
    for (std::size_t c = 0; c < n; ++c) out.values[r * n + c] += bv[c];
  }
  const std::size_t ix = x.id(), ib = b.id();
  const std::size_t rows = sx[0];
  return x.tape().record("add_broadcast", std::move(out), {ix, ib}, [ix, ib, rows, n](Tape& t, std::size_t self) {
    const auto& g = t.upstream(self);
    if (t.requires_grad(ix)) {
      auto& gx = t.grad_buffer(ix);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    }
    if (t.requires_grad(ib)) {
      auto& gb = t.grad_buffer(ib);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < n; ++c) gb[c] += g[r * n + c];
      }
    }
  });
}

Var add(Var x, Var y) {
  require_same_tape(x, y);
  if (x.shape() != y.shape()) shape_error("add", x.shape(), y.shape());
  Tensor out = x.value();
  const auto& yv = y.value().values;
  for (std::size_t i = 0; i < out.size(); ++i) out.values[i] += yv[i];
  const std::size_t ix = x.id(), iy = y.id();
  return x.tape().record("add", std::move(out), {ix, iy}, [ix, iy](Tape& t, std::size_t self) {
    const auto& g = t.upstream(self);
    for (auto id : {ix, iy}) {
      if (!t.requires_grad(id)) continue;
      auto& gi = t.grad_buffer(id);
      for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
    }
  });
}

Var mul(Var x, Var y) {
  require_same_tape(x, y);
  if (x.shape() != y.shape()) shape_error("mul", x.shape(), y.shape());
  Tensor out = x.value();
  const auto& yv = y.value().values;
  for (std::size_t i = 0; i < out.size(); ++i) out.values[i] *= yv[i];
  const std::size_t ix = x.id(), iy = y.id();
  return x.tape().record("mul", std::move(out), {ix, iy}, [ix, iy](Tape& t, std::size_t self) {
    const auto& g = t.upstream(self);
    const auto& xv = t.value(ix).values;
    const auto& yv = t.value(iy).values;
    if (t.requires_grad(ix)) {
      auto& gx = t.grad_buffer(ix);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * yv[i];
    }
    if (t.requires_grad(iy)) {
      auto& gy = t.grad_buffer(iy);
      for (std::size_t i = 0; i < g.size(); ++i) gy[i] += g[i] * xv[i];
    }
  });
}

Var mul_broadcast(Var x, Var g) {
  require_same_tape(x, g);
  const Shape& sx = x.shape();
  require_rank2("mul_broadcast", sx);
  const std::size_t n = row_vector_length("mul_broadcast", sx, g.shape());
  if (n != sx[1]) shape_error("mul_broadcast", sx, g.shape());
  Tensor out = x.value();
  const auto& gv = g.value().values;
  for (std::size_t r = 0; r < sx[0]; ++r) {
    for (std::size_t c = 0; c < n; ++c) out.values[r * n + c] *= gv[c];
  }
  const std::size_t ix = x.id(), ig = g.id();
  const std::size_t rows = sx[0];
  return x.tape().record("mul_broadcast", std::move(out), {ix, ig}, [ix, ig, rows, n](Tape& t, std::size_t self) {
    const auto& up = t.upstream(self);
    const auto& xv = t.value(ix).values;
    const auto& gv = t.value(ig).values;
    if (t.requires_grad(ix)) {
      auto& gx = t.grad_buffer(ix);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < n; ++c) gx[r * n + c] += up[r * n + c] * gv[c];
      }
    }
    if (t.requires_grad(ig)) {
      auto& gg = t.grad_buffer(ig);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < n; ++c) gg[c] += up[r * n + c] * xv[r * n + c];
      }
    }
  });
}

Var scale(Var x, double factor) {
  Tensor out = x.value();
  for (auto& v : out.values) v *= factor;
  const std::size_t ix = x.id();
  return x.tape().record("scale", std::move(out), {ix}, [ix, factor](Tape& t, std::size_t self) {
    const auto& g = t.upstream(self);
    auto& gx = t.grad_buffer(ix);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += factor * g[i];
  });
}

Var relu(Var x) {
  Tensor out = x.value();
  for (auto& v : out.values) v = v > 0.0 ? v : 0.0;
  const std::size_t ix = x.id();
  return x.tape().record("relu", std::move(out), {ix}, [ix](Tape& t, std::size_t self) {
    const auto& g = t.upstream(self);
    const auto& xv = t.value(ix).values;
    auto& gx = t.grad_buffer(ix);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (xv[i] > 0.0) gx[i] += g[i];
    }
  });
}

Var max_over_points(Var x) {
  const Shape& sx = x.shape();
  require_rank2("max_over_points", sx);
  if (sx[0] == 0) throw InvalidArgument("max_over_points: no points");
  const std::size_t n = sx[0], d = sx[1];
  const auto& xv = x.value().values;
  Tensor out({1, d}, std::vector<double>(xv.begin(), xv.begin() + static_cast<std::ptrdiff_t>(d)));
  std::vector<std::size_t> argmax(d, 0);
  for (std::size_t r = 1; r < n; ++r) {
    const double* row = xv.data() + r * d;
    for (std::size_t c = 0; c < d; ++c) {
      if (row[c] > out.values[c]) {
        out.values[c] = row[c];
        argmax[c] = r;
      }
    }
  }
  const std::size_t ix = x.id();
  return x.tape().record("max_over_points", std::move(out), {ix},
                         [ix, d, argmax = std::move(argmax)](Tape& t, std::size_t self) {
                           const auto& g = t.upstream(self);
                           auto& gx = t.grad_buffer(ix);
                           for (std::size_t c = 0; c < d; ++c) gx[argmax[c] * d + c] += g[c];
                         });
}

std::vector<double> softmax(const std::vector<double>& logits) {
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - top);
    z += p[i];
  }
  for (auto& v : p) v /= z;
  return p;
}

Var softmax_cross_entropy(Var logits, std::size_t label) {
  const auto& lv = logits.value().values;
  if (lv.empty()) throw InvalidArgument("softmax_cross_entropy: empty logits");
  if (label >= lv.size()) {
    throw InvalidArgument("softmax_cross_entropy: label " + std::to_string(label) + " out of range for " +
                          std::to_string(lv.size()) + " classes");
  }
  const double top = *std::max_element(lv.begin(), lv.end());
  double z = 0.0;
  for (double v : lv) z += std::exp(v - top);
  const double loss = std::log(z) + top - lv[label];
  const std::size_t il = logits.id();
  return logits.tape().record("softmax_cross_entropy", Tensor({1}, {loss}), {il}, [il, label](Tape& t, std::size_t self) {
    const double g = t.upstream(self)[0];
    const auto p = softmax(t.value(il).values);
    auto& gl = t.grad_buffer(il);
    for (std::size_t i = 0; i < p.size(); ++i) gl[i] += g * (p[i] - (i == label ? 1.0 : 0.0));
  });
}

Var concat(Var x, Var y, std::size_t axis) {
  require_same_tape(x, y);
  const Shape& sx = x.shape();
  const Shape& sy = y.shape();
  require_rank2("concat", sx);
  require_rank2("concat", sy);
  if (axis > 1) throw InvalidArgument("concat: axis must be 0 or 1");
  if (sx[1 - axis] != sy[1 - axis]) shape_error("concat", sx, sy);
  Shape so = sx;
  so[axis] += sy[axis];
  Tensor out = Tensor::zeros(so);
  const auto& xv = x.value().values;
  const auto& yv = y.value().values;
  if (axis == 0) {
    std::copy(xv.begin(), xv.end(), out.values.begin());
    std::copy(yv.begin(), yv.end(), out.values.begin() + static_cast<std::ptrdiff_t>(xv.size()));
  } else {
    for (std::size_t r = 0; r < so[0]; ++r) {
      std::copy_n(xv.begin() + static_cast<std::ptrdiff_t>(r * sx[1]), sx[1],
                  out.values.begin() + static_cast<std::ptrdiff_t>(r * so[1]));
      std::copy_n(yv.begin() + static_cast<std::ptrdiff_t>(r * sy[1]), sy[1],
                  out.values.begin() + static_cast<std::ptrdiff_t>(r * so[1] + sx[1]));
    }
  }
  const std::size_t ix = x.id(), iy = y.id();
  return x.tape().record("concat", std::move(out), {ix, iy}, [ix, iy, axis, sx, sy, so](Tape& t, std::size_t self) {
    const auto& g = t.upstream(self);
    if (axis == 0) {
      if (t.requires_grad(ix)) {
        auto& gx = t.grad_buffer(ix);
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i];
      }
      if (t.requires_grad(iy)) {
        auto& gy = t.grad_buffer(iy);
        const std::size_t off = element_count(sx);
        for (std::size_t i = 0; i < gy.size(); ++i) gy[i] += g[off + i];
      }
      return;
    }
    for (std::size_t r = 0; r < so[0]; ++r) {
      if (t.requires_grad(ix)) {
        auto& gx = t.grad_buffer(ix);
        for (std::size_t c = 0; c < sx[1]; ++c) gx[r * sx[1] + c] += g[r * so[1] + c];
      }
      if (t.requires_grad(iy)) {
        auto& gy = t.grad_buffer(iy);
        for (std::size_t c = 0; c < sy[1]; ++c) gy[r * sy[1] + c] += g[r * so[1] + sx[1] + c];
      }
    }
  });
}

Var batch_matmul(Var points, Var transform) {
  require_same_tape(points, transform);
  const Shape& sp = points.shape();
  const Shape& st = transform.shape();
  require_rank2("batch_matmul", sp);
  if (st != Shape{3, 3} || sp[1] != 3) shape_error("batch_matmul", sp, st);
  Tensor out = Tensor::zeros(sp);
  as_matrix(out.values, sp[0], 3).noalias() = as_matrix(points.value()) * as_matrix(transform.value()).transpose();
  const std::size_t ip = points.id(), it = transform.id();
  const std::size_t n = sp[0];
  return points.tape().record("batch_matmul", std::move(out), {ip, it}, [ip, it, n](Tape& t, std::size_t self) {
    const auto g = as_matrix(t.upstream(self), n, 3);
    if (t.requires_grad(ip)) {
      as_matrix(t.grad_buffer(ip), n, 3).noalias() += g * as_matrix(t.value(it));
    }
    if (t.requires_grad(it)) {
      // d(P T^T)/dT: dT = G^T P.
      as_matrix(t.grad_buffer(it), 3, 3).noalias() += g.transpose() * as_matrix(t.value(ip));
    }
  });
}

Var reshape(Var x, Shape shape) {
  if (element_count(shape) != x.value().size()) shape_error("reshape", x.shape(), shape);
  Tensor out(std::move(shape), x.value().values);
  const std::size_t ix = x.id();
  return x.tape().record("reshape", std::move(out), {ix}, [ix](Tape& t, std::size_t self) {
    const auto& g = t.upstream(self);
    auto& gx = t.grad_buffer(ix);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

Var sum(Var x) {
  double total = 0.0;
  for (double v : x.value().values) total += v;
  const std::size_t ix = x.id();
  return x.tape().record("sum", Tensor({1}, {total}), {ix}, [ix](Tape& t, std::size_t self) {
    const double g = t.upstream(self)[0];
    for (auto& v : t.grad_buffer(ix)) v += g;
  });
}

}  // namespace abdoshape::neural
