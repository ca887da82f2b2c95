#pragma once

// Minimal reverse-mode automatic differentiation over dense row-major
// matrices. Every op computes its value eagerly; when gradient recording is
// enabled and some input requires a gradient, the op also records a closure
// that propagates the output gradient to its inputs.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace mdta2g {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

namespace ad {

struct Node {
  Mat value;
  Mat grad;  // empty until something flows into it
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  void accumulate(const Mat& g);
};

class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  const Mat& value() const { return node_->value; }
  Mat& mutable_value() { return node_->value; }
  const Mat& grad() const { return node_->grad; }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }
  bool defined() const { return static_cast<bool>(node_); }

  /// Clears the accumulated gradient (leaves only).
  void zero_grad() { node_->grad.resize(0, 0); }

  /// Back-propagates from this 1x1 value, scaling the seed gradient.
  void backward(double seed = 1.0) const;

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

Var constant(Mat value);
Var leaf(Mat value);  // requires_grad = true

Var matmul(const Var& a, const Var& b);
Var matmul_nt(const Var& a, const Var& b);  // a * b^T
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var add_row(const Var& a, const Var& row);  // broadcast 1xC over rows
Var repeat_rows(const Var& row, Eigen::Index n);
Var linear(const Var& x, const Var& weight, const Var& bias);  // x W + b

Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5);
Var gelu(const Var& x);
Var silu(const Var& x);

/// Row-wise softmax. If `allowed` is non-empty it must match x's shape;
/// entries with allowed == 0 receive probability 0.
Var softmax_rows(const Var& x, const Mat& allowed = Mat());

/// Row-major reinterpretation with the same element count.
Var reshape(const Var& a, Eigen::Index rows, Eigen::Index cols);
Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index len);
Var concat_cols(std::span<const Var> parts);
Var gather_rows(const Var& a, std::span<const int> rows);
/// Output has `total` rows; row idx[k] = a.row(k), all others zero.
Var place_rows(const Var& a, std::span<const int> rows, Eigen::Index total);
/// Row i of the result is b.row(i) where pick_b[i] != 0, else a.row(i).
Var select_rows(const Var& a, const Var& b, std::span<const std::uint8_t> pick_b);

/// Mean over elements of the smooth-L1 penalty on (target - pred).
Var huber_mean(const Var& pred, const Mat& target, double delta);
Var mse_mean(const Var& pred, const Mat& target);

}  // namespace ad
}  // namespace mdta2g
