#pragma once

// Dense 2-D tensors with reverse-mode differentiation.
//
// Every op returns a new Tensor whose node keeps its inputs alive; the graph
// reachable from a scalar loss is the tape that `backward` walks in reverse
// topological order. Vectors are column matrices (n x 1).

#include <Eigen/Core>
#include <array>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace sentscore::nn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;

struct Node {
  Matrix value;
  Matrix grad;  // empty until something flows into it
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Propagates this node's grad into its parents.
  std::function<void(Node&)> backward;

  bool is_leaf() const noexcept { return parents.empty(); }
  void accumulate(const Matrix& g);
  template <typename Expr>
  void accumulate_expr(const Expr& g) {
    if (grad.size() == 0)
      grad = g;
    else
      grad += g;
  }
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Matrix value, bool requires_grad = false);

  static Tensor zeros(Index rows, Index cols, bool requires_grad = false);
  static Tensor column(std::span<const double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const noexcept { return static_cast<bool>(node_); }
  Index rows() const { return node_->value.rows(); }
  Index cols() const { return node_->value.cols(); }
  Index size() const { return node_->value.size(); }
  std::array<Index, 2> shape() const { return {rows(), cols()}; }

  const Matrix& value() const { return node_->value; }
  Matrix& mutable_value() { return node_->value; }
  double item() const;
  double at(Index r, Index c = 0) const { return node_->value(r, c); }

  bool requires_grad() const noexcept { return node_ && node_->requires_grad; }
  // Gradient accumulated so far; zeros when nothing has flowed in yet.
  Matrix grad() const;
  Matrix& mutable_grad();
  void zero_grad();

  // Root must be 1x1. Leaf gradients accumulate across calls; interior
  // gradients are recomputed on every call.
  void backward() const;

  const std::shared_ptr<Node>& node() const noexcept { return node_; }
  static Tensor from_node(std::shared_ptr<Node> node);

 private:
  std::shared_ptr<Node> node_;
};

// Graph recording is on by default. While a guard is alive on this thread,
// ops produce constant tensors (inference mode).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled() noexcept;

}  // namespace sentscore::nn
