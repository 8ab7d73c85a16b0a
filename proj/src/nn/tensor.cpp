#include "sentscore/nn/tensor.hpp"

#include <unordered_set>

#include "sentscore/error.hpp"

namespace sentscore::nn {
namespace {
thread_local bool g_grad_enabled = true;
}  // namespace

bool grad_enabled() noexcept { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

void Node::accumulate(const Matrix& g) {
  if (grad.size() == 0)
    grad = g;
  else
    grad += g;
}

Tensor::Tensor(Matrix value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Index rows, Index cols, bool requires_grad) {
  return Tensor(Matrix::Zero(rows, cols), requires_grad);
}

Tensor Tensor::column(std::span<const double> values, bool requires_grad) {
  Matrix m(static_cast<Index>(values.size()), 1);
  for (std::size_t i = 0; i < values.size(); ++i) m(static_cast<Index>(i), 0) = values[i];
  return Tensor(std::move(m), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  Matrix m(1, 1);
  m(0, 0) = value;
  return Tensor(std::move(m), requires_grad);
}

Tensor Tensor::from_node(std::shared_ptr<Node> node) {
  Tensor t;
  t.node_ = std::move(node);
  return t;
}

double Tensor::item() const {
  if (size() != 1) throw ShapeError("item: tensor is not a scalar");
  return node_->value(0, 0);
}

Matrix Tensor::grad() const {
  if (node_->grad.size() == 0) return Matrix::Zero(rows(), cols());
  return node_->grad;
}

Matrix& Tensor::mutable_grad() {
  if (node_->grad.size() == 0) node_->grad = Matrix::Zero(rows(), cols());
  return node_->grad;
}

void Tensor::zero_grad() {
  if (node_->grad.size() != 0) node_->grad.setZero();
}

void Tensor::backward() const {
  if (!node_ || rows() != 1 || cols() != 1)
    throw ContractError("backward: root must be a 1x1 tensor");
  if (!node_->requires_grad) return;

  // Iterative post-order DFS; `order` ends up with every node after all of
  // its parents.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* n : order)
    if (!n->is_leaf()) n->grad.resize(0, 0);
  node_->accumulate(Matrix::Ones(1, 1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && n->grad.size() != 0) n->backward(*n);
  }
}

}  // namespace sentscore::nn
