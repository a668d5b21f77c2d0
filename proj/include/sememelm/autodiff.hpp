#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace sememelm::ad {

// Dims of a dense tensor. Rank 0 (scalar), 1 (vector) and 2 (matrix) are
// supported; no dimension may be zero.
using Shape = std::vector<size_t>;

size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;  // sized lazily, zero-filled
  bool requires_grad = false;
  bool backward_done = false;  // set on nodes used as a backward root
  std::string op;              // producing operation; empty for leaves
  std::vector<std::shared_ptr<Node>> inputs;
  // Pulls this node's grad into the inputs' grads (additively).
  std::function<void(Node&)> backprop;

  size_t numel() const { return values.size(); }
  void ensure_grad() {
    if (grad.empty()) grad.assign(values.size(), 0.0);
  }
};

}  // namespace detail

// Value-semantics handle to a node of the computation graph. Copies share
// the node. Operations build new nodes that keep their inputs alive.
class Tensor {
 public:
  Tensor() = default;

  // Leaves.
  static Tensor constant(Shape shape, std::vector<double> values);
  static Tensor scalar(double value);
  static Tensor zeros(const Shape& shape);
  // Trainable leaf (participates in backward).
  static Tensor parameter(Shape shape, std::vector<double> values);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  size_t rank() const { return shape().size(); }
  size_t numel() const;
  const std::vector<double>& values() const;
  // In-place mutation of a leaf (optimizer updates, finite differences).
  std::vector<double>& values_mut();
  double item() const;  // value of a single-element tensor

  bool requires_grad() const;
  bool has_grad() const;
  const std::vector<double>& grad() const;  // fails if absent
  void zero_grad();

  // Same values, no provenance, no grad requirement.
  Tensor detach() const;

  const std::string& op() const;

 private:
  friend Tensor make_op(Shape shape, std::vector<double> values, std::string op,
                        std::vector<Tensor> inputs,
                        std::function<void(detail::Node&)> backprop);
  friend void backward(const Tensor& loss);
  std::shared_ptr<detail::Node> node_;
};

// ---- primitives ----
// Shapes must match exactly unless stated; every primitive checks its output
// for NaN/Inf and fails on the first non-finite value.

// [m,k]x[k,n] -> [m,n]; also [k]x[k,n] -> [n] and [m,k]x[k] -> [m].
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
// Convenience composition: a + (-1) * b.
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor leaky_relu(const Tensor& a, double slope);
// Row-wise softmax over allowed entries; mask is row-major m*n, nonzero =
// allowed. Disallowed outputs are exactly 0. Every row needs >=1 allowed.
Tensor masked_softmax_rows(const Tensor& a, const std::vector<uint8_t>& mask);
// [m,n] -> [n], column means.
Tensor mean_rows(const Tensor& a);
Tensor sum_all(const Tensor& a);
// mean((a-b)^2) over all elements -> scalar.
Tensor squared_error_mean(const Tensor& a, const Tensor& b);
// [m,n] -> [m] Euclidean norms; [n] -> scalar.
Tensor l2_norm_rows(const Tensor& a);
// Rows rescaled to unit Euclidean norm; zero rows are an error.
Tensor normalize_rows(const Tensor& a);
// Same shape (any rank), sum of elementwise products -> scalar.
Tensor dot(const Tensor& a, const Tensor& b);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
// Gather rows of a matrix; duplicate indices accumulate grads additively.
Tensor select_rows(const Tensor& a, std::vector<size_t> indices);
// Stack inputs by rows; a rank-1 input contributes one row.
Tensor concat_rows(std::span<const Tensor> parts);
Tensor transpose(const Tensor& a);

// Reverse sweep from a single-element root; accumulates into the grads of
// every requires_grad leaf reachable through the graph. Running backward
// twice from the same root is an error.
void backward(const Tensor& loss);

// Central-difference check of d(fn)/d(params). fn must rebuild its value
// from the current parameter values on every call. Returns the max relative
// error with denominator max(1, |analytic|, |numeric|).
double grad_check(const std::function<Tensor()>& fn, std::span<Tensor> params,
                  double eps);

}  // namespace sememelm::ad
