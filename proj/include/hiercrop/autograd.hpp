#pragma once

// Reverse-mode differentiation over Tensor values. Every op builds a node
// holding its value and, when gradients are being recorded, a closure that
// pushes the output gradient into its inputs.

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "hiercrop/kernels.hpp"
#include "hiercrop/tensor.hpp"

namespace hiercrop::ag {

struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;

  Tensor& grad_buffer();
};

class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  Tensor& value() { return node_->value; }
  const Tensor& grad() const { return node_->grad; }
  Tensor& grad() { return node_->grad; }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  const Shape& shape() const { return node_->value.shape(); }
  std::size_t rows() const { return node_->value.rows(); }
  std::size_t cols() const { return node_->value.cols(); }
  void zero_grad();

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// Leaf holding a trainable array.
Var parameter(Tensor value);
Var constant(Tensor value);

bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

// Accumulates d(root)/d(leaf) * seed into the grad of every leaf that
// requires it. Root must be a scalar.
void backward(const Var& root, double seed = 1.0);

// Row-index value that produces a zero row in gather_rows.
inline constexpr std::int64_t kPadRow = -1;

Var linear(const Var& x, const Var& w, const Var& b);
Var add(const Var& a, const Var& b);
Var scale(const Var& x, double s);
Var relu(const Var& x);
Var gelu(const Var& x);
Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5);
Var softmax_rows(const Var& x);
// out row r = x row idx[r] (x viewed as [*, x.cols()]), zero when idx[r] < 0.
Var gather_rows(const Var& x, std::shared_ptr<const std::vector<std::int64_t>> idx);
Var reshape(const Var& x, Shape shape);
Var concat_cols(const std::vector<Var>& parts);
Var attention(const Var& qkv, const Var& bias, std::shared_ptr<const std::vector<std::uint8_t>> mask,
              const kernels::AttentionDims& dims);

// Mean negative log-likelihood of logits rows against 1-based targets;
// target 0 rows are ignored. Returns a zero scalar when nothing is labeled.
Var masked_nll(const Var& logits, const std::vector<std::uint16_t>& targets);
Var sum(const Var& x);
Var dot_const(const Var& x, const Tensor& weights);
Var add_scalars(const std::vector<Var>& parts);

}  // namespace hiercrop::ag
