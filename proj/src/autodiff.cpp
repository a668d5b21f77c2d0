#include "sememelm/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <utility>

#include "sememelm/error.hpp"

namespace sememelm::ad {

using detail::Node;

size_t shape_numel(const Shape& shape) {
  size_t n = 1;
  for (size_t d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

namespace {

void check_shape_valid(const Shape& shape, const char* op) {
  require(shape.size() <= 2, op, ": rank > 2 unsupported");
  for (size_t d : shape) require(d > 0, op, ": zero dimension in shape");
}

void check_finite(const std::vector<double>& values, const char* op) {
  for (double v : values) {
    if (!std::isfinite(v)) fail(op, ": non-finite result");
  }
}

std::shared_ptr<Node> make_leaf(Shape shape, std::vector<double> values,
                                bool requires_grad) {
  check_shape_valid(shape, "leaf");
  require(values.size() == shape_numel(shape),
          "leaf: value count ", values.size(), " does not match shape ",
          shape_str(shape));
  check_finite(values, "leaf");
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->values = std::move(values);
  node->requires_grad = requires_grad;
  return node;
}

// Rows/cols treating rank-1 as a single row where a primitive says so.
size_t rows_of(const Shape& s) { return s.size() == 2 ? s[0] : 1; }
size_t cols_of(const Shape& s) { return s.size() == 2 ? s[1] : s[0]; }

}  // namespace

Tensor make_op(Shape shape, std::vector<double> values, std::string op,
               std::vector<Tensor> inputs,
               std::function<void(Node&)> backprop) {
  check_shape_valid(shape, op.c_str());
  check_finite(values, op.c_str());
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->values = std::move(values);
  node->op = std::move(op);
  for (const Tensor& t : inputs) {
    node->inputs.push_back(t.node_);
    if (t.requires_grad()) node->requires_grad = true;
  }
  if (node->requires_grad) node->backprop = std::move(backprop);
  Tensor out;
  out.node_ = std::move(node);
  return out;
}

// ---- Tensor ----

Tensor Tensor::constant(Shape shape, std::vector<double> values) {
  Tensor t;
  t.node_ = make_leaf(std::move(shape), std::move(values), false);
  return t;
}

Tensor Tensor::scalar(double value) { return constant({}, {value}); }

Tensor Tensor::zeros(const Shape& shape) {
  return constant(shape, std::vector<double>(shape_numel(shape), 0.0));
}

Tensor Tensor::parameter(Shape shape, std::vector<double> values) {
  Tensor t;
  t.node_ = make_leaf(std::move(shape), std::move(values), true);
  return t;
}

const Shape& Tensor::shape() const {
  require(defined(), "tensor: used before assignment");
  return node_->shape;
}

size_t Tensor::numel() const { return shape_numel(shape()); }

const std::vector<double>& Tensor::values() const {
  require(defined(), "tensor: used before assignment");
  return node_->values;
}

std::vector<double>& Tensor::values_mut() {
  require(defined(), "tensor: used before assignment");
  return node_->values;
}

double Tensor::item() const {
  require(numel() == 1, "item: tensor has ", numel(), " elements");
  return node_->values[0];
}

bool Tensor::requires_grad() const { return defined() && node_->requires_grad; }

bool Tensor::has_grad() const { return defined() && !node_->grad.empty(); }

const std::vector<double>& Tensor::grad() const {
  require(has_grad(), "grad: no gradient accumulated");
  return node_->grad;
}

void Tensor::zero_grad() {
  require(defined(), "tensor: used before assignment");
  node_->grad.clear();
  node_->backward_done = false;
}

Tensor Tensor::detach() const {
  return constant(shape(), values());
}

const std::string& Tensor::op() const {
  require(defined(), "tensor: used before assignment");
  return node_->op;
}

// ---- primitives ----

Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.rank() >= 1 && b.rank() >= 1 && (a.rank() == 2 || b.rank() == 2),
          "matmul: needs a matrix operand, got ", shape_str(a.shape()), " x ",
          shape_str(b.shape()));
  const size_t m = a.rank() == 2 ? a.shape()[0] : 1;
  const size_t k = a.rank() == 2 ? a.shape()[1] : a.shape()[0];
  const size_t k2 = b.rank() == 2 ? b.shape()[0] : b.shape()[0];
  const size_t n = b.rank() == 2 ? b.shape()[1] : 1;
  require(k == k2, "matmul: inner dims differ, ", shape_str(a.shape()), " x ",
          shape_str(b.shape()));

  std::vector<double> out(m * n, 0.0);
  const auto& av = a.values();
  const auto& bv = b.values();
  for (size_t i = 0; i < m; ++i) {
    for (size_t l = 0; l < k; ++l) {
      const double ail = av[i * k + l];
      if (ail == 0.0) continue;
      const double* brow = bv.data() + l * n;
      double* crow = out.data() + i * n;
      for (size_t j = 0; j < n; ++j) crow[j] += ail * brow[j];
    }
  }

  Shape out_shape;
  if (a.rank() == 2 && b.rank() == 2) out_shape = {m, n};
  else if (a.rank() == 1) out_shape = {n};
  else out_shape = {m};

  return make_op(out_shape, std::move(out), "matmul", {a, b},
                 [m, k, n](Node& node) {
                   auto& an = *node.inputs[0];
                   auto& bn = *node.inputs[1];
                   const auto& g = node.grad;
                   if (an.requires_grad) {
                     an.ensure_grad();
                     for (size_t i = 0; i < m; ++i)
                       for (size_t l = 0; l < k; ++l) {
                         double acc = 0.0;
                         for (size_t j = 0; j < n; ++j)
                           acc += g[i * n + j] * bn.values[l * n + j];
                         an.grad[i * k + l] += acc;
                       }
                   }
                   if (bn.requires_grad) {
                     bn.ensure_grad();
                     for (size_t l = 0; l < k; ++l)
                       for (size_t j = 0; j < n; ++j) {
                         double acc = 0.0;
                         for (size_t i = 0; i < m; ++i)
                           acc += an.values[i * k + l] * g[i * n + j];
                         bn.grad[l * n + j] += acc;
                       }
                   }
                 });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(), "add: shapes differ, ", shape_str(a.shape()),
          " vs ", shape_str(b.shape()));
  std::vector<double> out(a.numel());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + b.values()[i];
  return make_op(a.shape(), std::move(out), "add", {a, b}, [](Node& node) {
    for (int which = 0; which < 2; ++which) {
      auto& in = *node.inputs[which];
      if (!in.requires_grad) continue;
      in.ensure_grad();
      for (size_t i = 0; i < node.grad.size(); ++i) in.grad[i] += node.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) { return add(a, scale(b, -1.0)); }

Tensor scale(const Tensor& a, double factor) {
  require(std::isfinite(factor), "scale: non-finite factor");
  std::vector<double> out(a.numel());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * factor;
  return make_op(a.shape(), std::move(out), "scale", {a}, [factor](Node& node) {
    auto& in = *node.inputs[0];
    if (!in.requires_grad) return;
    in.ensure_grad();
    for (size_t i = 0; i < node.grad.size(); ++i)
      in.grad[i] += factor * node.grad[i];
  });
}

Tensor leaky_relu(const Tensor& a, double slope) {
  std::vector<double> out(a.numel());
  for (size_t i = 0; i < out.size(); ++i) {
    double x = a.values()[i];
    out[i] = x > 0.0 ? x : slope * x;
  }
  return make_op(a.shape(), std::move(out), "leaky_relu", {a},
                 [slope](Node& node) {
                   auto& in = *node.inputs[0];
                   if (!in.requires_grad) return;
                   in.ensure_grad();
                   for (size_t i = 0; i < node.grad.size(); ++i)
                     in.grad[i] +=
                         (in.values[i] > 0.0 ? 1.0 : slope) * node.grad[i];
                 });
}

Tensor masked_softmax_rows(const Tensor& a, const std::vector<uint8_t>& mask) {
  require(a.rank() == 2, "masked_softmax_rows: expects a matrix, got ",
          shape_str(a.shape()));
  const size_t m = a.shape()[0], n = a.shape()[1];
  require(mask.size() == m * n, "masked_softmax_rows: mask size ", mask.size(),
          " does not match ", shape_str(a.shape()));
  std::vector<double> out(m * n, 0.0);
  const auto& av = a.values();
  for (size_t i = 0; i < m; ++i) {
    double max_v = -std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < n; ++j)
      if (mask[i * n + j] && av[i * n + j] > max_v) max_v = av[i * n + j];
    require(std::isfinite(max_v), "masked_softmax_rows: row ", i,
            " has no allowed entries");
    double sum = 0.0;
    for (size_t j = 0; j < n; ++j) {
      if (!mask[i * n + j]) continue;
      double e = std::exp(av[i * n + j] - max_v);
      out[i * n + j] = e;
      sum += e;
    }
    for (size_t j = 0; j < n; ++j)
      if (mask[i * n + j]) out[i * n + j] /= sum;
  }
  auto out_vals = out;  // copied before the move below
  return make_op(a.shape(), std::move(out), "masked_softmax_rows", {a},
                 [m, n, mask, out_copy = std::move(out_vals)](Node& node) {
                   auto& in = *node.inputs[0];
                   if (!in.requires_grad) return;
                   in.ensure_grad();
                   for (size_t i = 0; i < m; ++i) {
                     double dot_gy = 0.0;
                     for (size_t j = 0; j < n; ++j)
                       if (mask[i * n + j])
                         dot_gy += node.grad[i * n + j] * out_copy[i * n + j];
                     for (size_t j = 0; j < n; ++j)
                       if (mask[i * n + j])
                         in.grad[i * n + j] += out_copy[i * n + j] *
                                               (node.grad[i * n + j] - dot_gy);
                   }
                 });
}

Tensor mean_rows(const Tensor& a) {
  require(a.rank() == 2, "mean_rows: expects a matrix, got ",
          shape_str(a.shape()));
  const size_t m = a.shape()[0], n = a.shape()[1];
  std::vector<double> out(n, 0.0);
  for (size_t i = 0; i < m; ++i)
    for (size_t j = 0; j < n; ++j) out[j] += a.values()[i * n + j];
  for (size_t j = 0; j < n; ++j) out[j] /= static_cast<double>(m);
  return make_op({n}, std::move(out), "mean_rows", {a}, [m, n](Node& node) {
    auto& in = *node.inputs[0];
    if (!in.requires_grad) return;
    in.ensure_grad();
    const double inv = 1.0 / static_cast<double>(m);
    for (size_t i = 0; i < m; ++i)
      for (size_t j = 0; j < n; ++j) in.grad[i * n + j] += node.grad[j] * inv;
  });
}

Tensor sum_all(const Tensor& a) {
  double s = 0.0;
  for (double v : a.values()) s += v;
  return make_op({}, {s}, "sum_all", {a}, [](Node& node) {
    auto& in = *node.inputs[0];
    if (!in.requires_grad) return;
    in.ensure_grad();
    for (double& g : in.grad) g += node.grad[0];
  });
}

Tensor squared_error_mean(const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(), "squared_error_mean: shapes differ, ",
          shape_str(a.shape()), " vs ", shape_str(b.shape()));
  const size_t n = a.numel();
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double d = a.values()[i] - b.values()[i];
    s += d * d;
  }
  s /= static_cast<double>(n);
  return make_op({}, {s}, "squared_error_mean", {a, b}, [n](Node& node) {
    auto& an = *node.inputs[0];
    auto& bn = *node.inputs[1];
    const double c = 2.0 * node.grad[0] / static_cast<double>(n);
    if (an.requires_grad) an.ensure_grad();
    if (bn.requires_grad) bn.ensure_grad();
    for (size_t i = 0; i < n; ++i) {
      double d = c * (an.values[i] - bn.values[i]);
      if (an.requires_grad) an.grad[i] += d;
      if (bn.requires_grad) bn.grad[i] -= d;
    }
  });
}

Tensor l2_norm_rows(const Tensor& a) {
  require(a.rank() >= 1, "l2_norm_rows: expects rank >= 1");
  const size_t m = rows_of(a.shape());
  const size_t n = cols_of(a.shape());
  std::vector<double> out(m, 0.0);
  for (size_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (size_t j = 0; j < n; ++j) {
      double v = a.values()[i * n + j];
      s += v * v;
    }
    out[i] = std::sqrt(s);
  }
  Shape out_shape = a.rank() == 2 ? Shape{m} : Shape{};
  auto norm_vals = out;  // copied before the move below
  return make_op(out_shape, std::move(out), "l2_norm_rows", {a},
                 [m, n, norms = std::move(norm_vals)](Node& node) {
                   auto& in = *node.inputs[0];
                   if (!in.requires_grad) return;
                   in.ensure_grad();
                   for (size_t i = 0; i < m; ++i) {
                     if (norms[i] == 0.0) continue;  // subgradient 0 at the kink
                     const double c = node.grad[i] / norms[i];
                     for (size_t j = 0; j < n; ++j)
                       in.grad[i * n + j] += c * in.values[i * n + j];
                   }
                 });
}

Tensor normalize_rows(const Tensor& a) {
  require(a.rank() >= 1, "normalize_rows: expects rank >= 1");
  const size_t m = rows_of(a.shape());
  const size_t n = cols_of(a.shape());
  std::vector<double> out(m * n);
  std::vector<double> norms(m);
  for (size_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (size_t j = 0; j < n; ++j) {
      double v = a.values()[i * n + j];
      s += v * v;
    }
    require(s > 0.0, "normalize_rows: zero row ", i);
    norms[i] = std::sqrt(s);
    for (size_t j = 0; j < n; ++j) out[i * n + j] = a.values()[i * n + j] / norms[i];
  }
  auto out_vals = out;  // copied before the move below
  return make_op(a.shape(), std::move(out), "normalize_rows", {a},
                 [m, n, norms = std::move(norms),
                  unit = std::move(out_vals)](Node& node) {
                   auto& in = *node.inputs[0];
                   if (!in.requires_grad) return;
                   in.ensure_grad();
                   for (size_t i = 0; i < m; ++i) {
                     double gy = 0.0;
                     for (size_t j = 0; j < n; ++j)
                       gy += node.grad[i * n + j] * unit[i * n + j];
                     for (size_t j = 0; j < n; ++j)
                       in.grad[i * n + j] +=
                           (node.grad[i * n + j] - gy * unit[i * n + j]) /
                           norms[i];
                   }
                 });
}

Tensor dot(const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(), "dot: shapes differ, ", shape_str(a.shape()),
          " vs ", shape_str(b.shape()));
  double s = 0.0;
  for (size_t i = 0; i < a.numel(); ++i) s += a.values()[i] * b.values()[i];
  return make_op({}, {s}, "dot", {a, b}, [](Node& node) {
    auto& an = *node.inputs[0];
    auto& bn = *node.inputs[1];
    const double g = node.grad[0];
    if (an.requires_grad) {
      an.ensure_grad();
      for (size_t i = 0; i < an.values.size(); ++i)
        an.grad[i] += g * bn.values[i];
    }
    if (bn.requires_grad) {
      bn.ensure_grad();
      for (size_t i = 0; i < bn.values.size(); ++i)
        bn.grad[i] += g * an.values[i];
    }
  });
}

Tensor exp(const Tensor& a) {
  std::vector<double> out(a.numel());
  for (size_t i = 0; i < out.size(); ++i) out[i] = std::exp(a.values()[i]);
  return make_op(a.shape(), std::move(out), "exp", {a}, [](Node& node) {
    auto& in = *node.inputs[0];
    if (!in.requires_grad) return;
    in.ensure_grad();
    for (size_t i = 0; i < node.grad.size(); ++i)
      in.grad[i] += node.values[i] * node.grad[i];
  });
}

Tensor log(const Tensor& a) {
  std::vector<double> out(a.numel());
  for (size_t i = 0; i < out.size(); ++i) out[i] = std::log(a.values()[i]);
  return make_op(a.shape(), std::move(out), "log", {a}, [](Node& node) {
    auto& in = *node.inputs[0];
    if (!in.requires_grad) return;
    in.ensure_grad();
    for (size_t i = 0; i < node.grad.size(); ++i)
      in.grad[i] += node.grad[i] / in.values[i];
  });
}

Tensor select_rows(const Tensor& a, std::vector<size_t> indices) {
  require(a.rank() == 2, "select_rows: expects a matrix, got ",
          shape_str(a.shape()));
  require(!indices.empty(), "select_rows: empty index list");
  const size_t m = a.shape()[0], n = a.shape()[1];
  for (size_t idx : indices)
    require(idx < m, "select_rows: index ", idx, " out of range for ", m,
            " rows");
  const size_t k = indices.size();
  std::vector<double> out(k * n);
  for (size_t r = 0; r < k; ++r)
    std::copy_n(a.values().data() + indices[r] * n, n, out.data() + r * n);
  return make_op({k, n}, std::move(out), "select_rows", {a},
                 [n, indices = std::move(indices)](Node& node) {
                   auto& in = *node.inputs[0];
                   if (!in.requires_grad) return;
                   in.ensure_grad();
                   for (size_t r = 0; r < indices.size(); ++r)
                     for (size_t j = 0; j < n; ++j)
                       in.grad[indices[r] * n + j] += node.grad[r * n + j];
                 });
}

Tensor concat_rows(std::span<const Tensor> parts) {
  require(!parts.empty(), "concat_rows: no inputs");
  const size_t n = cols_of(parts[0].shape());
  size_t total_rows = 0;
  for (const Tensor& p : parts) {
    require(p.rank() >= 1, "concat_rows: scalar input");
    require(cols_of(p.shape()) == n, "concat_rows: column mismatch, ", n,
            " vs ", cols_of(p.shape()));
    total_rows += rows_of(p.shape());
  }
  std::vector<double> out;
  out.reserve(total_rows * n);
  for (const Tensor& p : parts)
    out.insert(out.end(), p.values().begin(), p.values().end());
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  return make_op({total_rows, n}, std::move(out), "concat_rows",
                 std::move(inputs), [n](Node& node) {
                   size_t row = 0;
                   for (auto& in_ptr : node.inputs) {
                     auto& in = *in_ptr;
                     const size_t r = rows_of(in.shape);
                     if (in.requires_grad) {
                       in.ensure_grad();
                       for (size_t i = 0; i < r * n; ++i)
                         in.grad[i] += node.grad[row * n + i];
                     }
                     row += r;
                   }
                 });
}

Tensor transpose(const Tensor& a) {
  require(a.rank() == 2, "transpose: expects a matrix, got ",
          shape_str(a.shape()));
  const size_t m = a.shape()[0], n = a.shape()[1];
  std::vector<double> out(m * n);
  for (size_t i = 0; i < m; ++i)
    for (size_t j = 0; j < n; ++j) out[j * m + i] = a.values()[i * n + j];
  return make_op({n, m}, std::move(out), "transpose", {a}, [m, n](Node& node) {
    auto& in = *node.inputs[0];
    if (!in.requires_grad) return;
    in.ensure_grad();
    for (size_t i = 0; i < m; ++i)
      for (size_t j = 0; j < n; ++j)
        in.grad[i * n + j] += node.grad[j * m + i];
  });
}

// ---- backward ----

void backward(const Tensor& loss) {
  require(loss.defined(), "backward: undefined root");
  Node* root = loss.node_.get();
  require(root->numel() == 1, "backward: root is not scalar, shape ",
          shape_str(root->shape));
  require(!root->backward_done,
          "backward: called twice on the same root without reset");
  root->backward_done = true;
  if (!root->requires_grad) return;  // nothing trainable below

  // Iterative post-order DFS; tri-color marking doubles as cycle detection.
  enum : char { kUnseen = 0, kOpen = 1, kDone = 2 };
  std::unordered_map<Node*, char> state;
  std::vector<Node*> order;
  std::vector<std::pair<Node*, size_t>> stack{{root, 0}};
  state[root] = kOpen;
  while (!stack.empty()) {
    auto& [node, next_child] = stack.back();
    if (next_child < node->inputs.size()) {
      Node* child = node->inputs[next_child++].get();
      if (!child->requires_grad) continue;
      char& st = state[child];
      if (st == kOpen) fail("backward: cycle detected in computation graph");
      if (st == kUnseen) {
        st = kOpen;
        stack.emplace_back(child, 0);
      }
    } else {
      state[node] = kDone;
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->ensure_grad();
  root->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backprop && !node->grad.empty()) node->backprop(*node);
  }
}

double grad_check(const std::function<Tensor()>& fn, std::span<Tensor> params,
                  double eps) {
  require(eps > 0.0, "grad_check: eps must be positive");
  for (Tensor& p : params) p.zero_grad();
  Tensor loss = fn();
  require(loss.numel() == 1, "grad_check: fn must return a scalar");
  backward(loss);

  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const Tensor& p : params)
    analytic.push_back(p.has_grad() ? p.grad()
                                    : std::vector<double>(p.numel(), 0.0));

  double max_err = 0.0;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& p = params[pi];
    auto& v = p.values_mut();
    for (size_t i = 0; i < v.size(); ++i) {
      const double orig = v[i];
      v[i] = orig + eps;
      const double f_plus = fn().item();
      v[i] = orig - eps;
      const double f_minus = fn().item();
      v[i] = orig;
      const double numeric = (f_plus - f_minus) / (2.0 * eps);
      const double a = analytic[pi][i];
      const double denom = std::max({1.0, std::fabs(a), std::fabs(numeric)});
      max_err = std::max(max_err, std::fabs(a - numeric) / denom);
    }
  }
  return max_err;
}

}  // namespace sememelm::ad
