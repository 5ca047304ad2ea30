#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

namespace abdoshape::neural {

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array of doubles.
struct Tensor {
  Shape shape;
  std::vector<double> values;

  Tensor() = default;
  Tensor(Shape s, std::vector<double> v);
  static Tensor zeros(Shape s);
  static Tensor filled(Shape s, double value);
  /// Rank-2 tensor from nested rows.
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor vector(std::initializer_list<double> values);

  std::size_t size() const { return values.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t rows() const { return shape.at(0); }
  std::size_t cols() const { return shape.at(1); }
  double& operator()(std::size_t r, std::size_t c) { return values[r * shape[1] + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values[r * shape[1] + c]; }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Records operations in creation order; backward() replays them in reverse.
///
/// A tape is single-threaded. Each node stores its forward value, a lazily
/// allocated gradient, parent ids and the rule that pushes its gradient to
/// the parents.
class Tape {
 public:
  using BackwardRule = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Input or parameter node. Only nodes reachable from a requires_grad leaf get gradients.
  Var leaf(Tensor value, bool requires_grad = false);

  /// Adds an op result. Throws NumericalError if any value is not finite.
  Var record(const char* op, Tensor value, std::vector<std::size_t> parents, BackwardRule rule);

  /// Reverse sweep from a scalar loss. Throws InvalidArgument for non-scalar losses.
  void backward(Var loss);

  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  /// Gradient of the last backward() loss w.r.t. the node; zeros if it was never reached.
  Tensor grad(Var v) const;

  /// Gradient storage of a node, zero-filled on first use. Backward rules accumulate into it.
  std::vector<double>& grad_buffer(std::size_t id);
  const std::vector<double>& upstream(std::size_t id) const { return nodes_.at(id).grad; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    std::vector<double> grad;  // empty until touched
    std::vector<std::size_t> parents;
    BackwardRule rule;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
};

// Ops. All inputs must live on the same tape. Shape mismatches throw
// InvalidArgument naming both shapes.

/// (m x k) * (k x n).
Var matmul(Var a, Var b);
/// x (m x n) plus a row vector b of n values (shape {n} or {1, n}) added to every row.
Var add_broadcast(Var x, Var b);
/// Elementwise sum of equal shapes.
Var add(Var x, Var y);
/// Elementwise product of equal shapes.
Var mul(Var x, Var y);
/// x (m x n) times a per-column factor g ({n} or {1, n}).
Var mul_broadcast(Var x, Var g);
Var scale(Var x, double factor);
Var relu(Var x);
/// Column-wise max over the rows (points) of an n x d matrix, giving 1 x d.
/// The gradient goes to the arg-max row of each column; ties go to the lowest row.
Var max_over_points(Var x);
/// Cross-entropy of softmax(logits) against an integer class; logits hold C values.
Var softmax_cross_entropy(Var logits, std::size_t label);
/// Concatenation of rank-2 tensors along axis 0 (rows) or 1 (columns).
Var concat(Var x, Var y, std::size_t axis);
/// Applies a 3x3 transform to every point: points (n x 3) -> points * T^T.
Var batch_matmul(Var points, Var transform);
Var reshape(Var x, Shape shape);
/// Sum of all entries, as a scalar of shape {1}.
Var sum(Var x);

/// Numerically stable softmax of a logit vector.
std::vector<double> softmax(const std::vector<double>& logits);

}  // namespace abdoshape::neural
