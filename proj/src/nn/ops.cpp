#include "sentscore/nn/ops.hpp"

#include <cmath>
#include <string>

#include "sentscore/error.hpp"
#include "sentscore/random.hpp"

namespace sentscore::nn {
namespace {

std::string shape_str(const Tensor& t) {
  return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

[[noreturn]] void shape_fail(const char* op, const std::string& detail) {
  throw ShapeError(std::string(op) + ": " + detail);
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    shape_fail(op, shape_str(a) + " vs " + shape_str(b));
}

// Wraps a forward value into a node; records parents and the backward rule
// only when recording is on and some input needs a gradient.
Tensor make(Matrix value, std::initializer_list<const Tensor*> inputs,
            std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  if (grad_enabled()) {
    bool needs = false;
    for (const Tensor* in : inputs) needs = needs || in->requires_grad();
    if (needs) {
      node->requires_grad = true;
      node->parents.reserve(inputs.size());
      for (const Tensor* in : inputs) node->parents.push_back(in->node());
      node->backward = std::move(backward);
    }
  }
  return Tensor::from_node(std::move(node));
}

Node& parent(Node& self, std::size_t i) { return *self.parents[i]; }

Matrix softmax_columns(const Matrix& z) {
  Matrix out(z.rows(), z.cols());
  for (Index c = 0; c < z.cols(); ++c) {
    const double m = z.col(c).maxCoeff();
    out.col(c) = (z.col(c).array() - m).exp().matrix();
    out.col(c) /= out.col(c).sum();
  }
  return out;
}

Matrix log_softmax_columns(const Matrix& z) {
  Matrix out(z.rows(), z.cols());
  for (Index c = 0; c < z.cols(); ++c) {
    const double m = z.col(c).maxCoeff();
    const double lse = m + std::log((z.col(c).array() - m).exp().sum());
    out.col(c) = (z.col(c).array() - lse).matrix();
  }
  return out;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) shape_fail("matmul", shape_str(a) + " * " + shape_str(b));
  return make(a.value() * b.value(), {&a, &b}, [](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    if (pa.requires_grad) pa.accumulate_expr(self.grad * pb.value.transpose());
    if (pb.requires_grad) pb.accumulate_expr(pa.value.transpose() * self.grad);
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  return make(a.value() + b.value(), {&a, &b}, [](Node& self) {
    for (auto& p : self.parents)
      if (p->requires_grad) p->accumulate(self.grad);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape("sub", a, b);
  return make(a.value() - b.value(), {&a, &b}, [](Node& self) {
    if (parent(self, 0).requires_grad) parent(self, 0).accumulate(self.grad);
    if (parent(self, 1).requires_grad) parent(self, 1).accumulate_expr(-self.grad);
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape("mul", a, b);
  return make(a.value().cwiseProduct(b.value()), {&a, &b}, [](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    if (pa.requires_grad) pa.accumulate_expr(self.grad.cwiseProduct(pb.value));
    if (pb.requires_grad) pb.accumulate_expr(self.grad.cwiseProduct(pa.value));
  });
}

Tensor scale(const Tensor& a, double factor) {
  return make(a.value() * factor, {&a},
              [factor](Node& self) { parent(self, 0).accumulate_expr(self.grad * factor); });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor tanh(const Tensor& a) {
  Matrix y = a.value().array().tanh().matrix();
  return make(y, {&a}, [](Node& self) {
    parent(self, 0).accumulate_expr(
        (self.grad.array() * (1.0 - self.value.array().square())).matrix());
  });
}

Tensor sigmoid(const Tensor& a) {
  Matrix y = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  return make(y, {&a}, [](Node& self) {
    parent(self, 0).accumulate_expr(
        (self.grad.array() * self.value.array() * (1.0 - self.value.array())).matrix());
  });
}

Tensor relu(const Tensor& a) {
  Matrix y = a.value().cwiseMax(0.0);
  return make(y, {&a}, [](Node& self) {
    Node& p = parent(self, 0);
    p.accumulate_expr((p.value.array() > 0.0).select(self.grad.array(), 0.0).matrix());
  });
}

Tensor transpose(const Tensor& a) {
  return make(a.value().transpose(), {&a},
              [](Node& self) { parent(self, 0).accumulate_expr(self.grad.transpose()); });
}

Tensor concat(std::span<const Tensor> parts, int axis) {
  if (parts.empty()) shape_fail("concat", "no inputs");
  if (axis != 0 && axis != 1) shape_fail("concat", "axis must be 0 or 1");
  Index rows = 0, cols = 0;
  for (const auto& p : parts) {
    if (axis == 0) {
      if (p.cols() != parts[0].cols()) shape_fail("concat", "column counts differ");
      rows += p.rows();
    } else {
      if (p.rows() != parts[0].rows()) shape_fail("concat", "row counts differ");
      cols += p.cols();
    }
  }
  if (axis == 0) cols = parts[0].cols();
  else rows = parts[0].rows();

  Matrix value(rows, cols);
  std::vector<Index> offsets;
  Index offset = 0;
  for (const auto& p : parts) {
    offsets.push_back(offset);
    if (axis == 0) value.middleRows(offset, p.rows()) = p.value();
    else value.middleCols(offset, p.cols()) = p.value();
    offset += axis == 0 ? p.rows() : p.cols();
  }

  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  bool needs = false;
  if (grad_enabled())
    for (const auto& p : parts) needs = needs || p.requires_grad();
  if (needs) {
    node->requires_grad = true;
    for (const auto& p : parts) node->parents.push_back(p.node());
    node->backward = [offsets = std::move(offsets), axis](Node& self) {
      for (std::size_t i = 0; i < self.parents.size(); ++i) {
        Node& p = *self.parents[i];
        if (!p.requires_grad) continue;
        if (axis == 0) p.accumulate_expr(self.grad.middleRows(offsets[i], p.value.rows()));
        else p.accumulate_expr(self.grad.middleCols(offsets[i], p.value.cols()));
      }
    };
  }
  return Tensor::from_node(std::move(node));
}

Tensor concat(std::initializer_list<Tensor> parts, int axis) {
  return concat(std::span<const Tensor>(parts.begin(), parts.size()), axis);
}

Tensor slice_rows(const Tensor& a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.rows())
    shape_fail("slice_rows", "rows [" + std::to_string(start) + ", " +
                                 std::to_string(start + count) + ") of " + shape_str(a));
  return make(a.value().middleRows(start, count), {&a}, [start, count](Node& self) {
    Node& p = parent(self, 0);
    if (p.grad.size() == 0) p.grad = Matrix::Zero(p.value.rows(), p.value.cols());
    p.grad.middleRows(start, count) += self.grad;
  });
}

Tensor embedding_lookup(const Tensor& table, Index index) {
  if (index < 0 || index >= table.rows())
    shape_fail("embedding_lookup", "index " + std::to_string(index) + " outside " +
                                       std::to_string(table.rows()) + " rows");
  return make(table.value().row(index).transpose(), {&table}, [index](Node& self) {
    Node& p = parent(self, 0);
    if (p.grad.size() == 0) p.grad = Matrix::Zero(p.value.rows(), p.value.cols());
    p.grad.row(index) += self.grad.transpose();
  });
}

Tensor softmax(const Tensor& a, int axis) {
  if (axis == 1) return transpose(softmax(transpose(a), 0));
  if (axis != 0) shape_fail("softmax", "axis must be 0 or 1");
  return make(softmax_columns(a.value()), {&a}, [](Node& self) {
    const auto& y = self.value;
    Matrix g(y.rows(), y.cols());
    for (Index c = 0; c < y.cols(); ++c) {
      const double dot = self.grad.col(c).dot(y.col(c));
      g.col(c) = (y.col(c).array() * (self.grad.col(c).array() - dot)).matrix();
    }
    parent(self, 0).accumulate(g);
  });
}

Tensor log_softmax(const Tensor& a, int axis) {
  if (axis == 1) return transpose(log_softmax(transpose(a), 0));
  if (axis != 0) shape_fail("log_softmax", "axis must be 0 or 1");
  return make(log_softmax_columns(a.value()), {&a}, [](Node& self) {
    const Matrix y = self.value.array().exp().matrix();
    Matrix g(y.rows(), y.cols());
    for (Index c = 0; c < y.cols(); ++c)
      g.col(c) = self.grad.col(c) - y.col(c) * self.grad.col(c).sum();
    parent(self, 0).accumulate(g);
  });
}

Tensor dropout(const Tensor& a, double rate, std::uint64_t seed) {
  if (rate < 0.0 || rate >= 1.0) throw ContractError("dropout: rate must be in [0, 1)");
  if (rate == 0.0 || !grad_enabled()) return a;
  Rng rng(seed);
  Matrix mask(a.rows(), a.cols());
  for (Index i = 0; i < mask.size(); ++i)
    mask.data()[i] = rng.bernoulli(rate) ? 0.0 : 1.0 / (1.0 - rate);
  Matrix y = a.value().cwiseProduct(mask);
  return make(std::move(y), {&a}, [mask = std::move(mask)](Node& self) {
    parent(self, 0).accumulate_expr(self.grad.cwiseProduct(mask));
  });
}

Tensor sum(const Tensor& a) {
  Matrix s(1, 1);
  s(0, 0) = a.value().sum();
  return make(std::move(s), {&a}, [](Node& self) {
    Node& p = parent(self, 0);
    p.accumulate_expr(Matrix::Constant(p.value.rows(), p.value.cols(), self.grad(0, 0)));
  });
}

Tensor pick(const Tensor& a, Index row, Index col) {
  if (row < 0 || row >= a.rows() || col < 0 || col >= a.cols())
    shape_fail("pick", "(" + std::to_string(row) + "," + std::to_string(col) + ") outside " +
                           shape_str(a));
  Matrix s(1, 1);
  s(0, 0) = a.value()(row, col);
  return make(std::move(s), {&a}, [row, col](Node& self) {
    Node& p = parent(self, 0);
    if (p.grad.size() == 0) p.grad = Matrix::Zero(p.value.rows(), p.value.cols());
    p.grad(row, col) += self.grad(0, 0);
  });
}

Tensor weighted_sum(const Tensor& a, const Matrix& weights) {
  if (weights.rows() != a.rows() || weights.cols() != a.cols())
    shape_fail("weighted_sum", shape_str(a) + " vs weights " + std::to_string(weights.rows()) +
                                   "x" + std::to_string(weights.cols()));
  Matrix s(1, 1);
  s(0, 0) = a.value().cwiseProduct(weights).sum();
  return make(std::move(s), {&a}, [weights](Node& self) {
    parent(self, 0).accumulate_expr(weights * self.grad(0, 0));
  });
}

Tensor lstm_cell(const Tensor& x, const Tensor& h, const Tensor& c, const Tensor& weight,
                 const Tensor& bias) {
  const Index hidden = h.rows();
  const Index input = x.rows();
  if (x.cols() != 1 || h.cols() != 1 || c.cols() != 1)
    shape_fail("lstm_cell", "x, h, c must be column vectors");
  if (c.rows() != hidden) shape_fail("lstm_cell", "h and c sizes differ");
  if (weight.rows() != 4 * hidden || weight.cols() != input + hidden)
    shape_fail("lstm_cell", "weight is " + shape_str(weight) + ", expected " +
                                std::to_string(4 * hidden) + "x" +
                                std::to_string(input + hidden));
  if (bias.rows() != 4 * hidden || bias.cols() != 1)
    shape_fail("lstm_cell", "bias is " + shape_str(bias));

  struct Saved {
    Matrix xh;
    Eigen::ArrayXd i, f, g, o, c_prev, tanh_c;
  };
  auto saved = std::make_shared<Saved>();
  saved->xh.resize(input + hidden, 1);
  saved->xh.topRows(input) = x.value();
  saved->xh.bottomRows(hidden) = h.value();
  const Eigen::VectorXd z = weight.value() * saved->xh + bias.value();
  auto sig = [](const auto& v) { return 1.0 / (1.0 + (-v).exp()); };
  saved->i = sig(z.segment(0, hidden).array());
  saved->f = sig(z.segment(hidden, hidden).array());
  saved->g = z.segment(2 * hidden, hidden).array().tanh();
  saved->o = sig(z.segment(3 * hidden, hidden).array());
  saved->c_prev = c.value().col(0).array();
  const Eigen::ArrayXd c_next = saved->f * saved->c_prev + saved->i * saved->g;
  saved->tanh_c = c_next.tanh();

  Matrix out(2 * hidden, 1);
  out.col(0).head(hidden) = (saved->o * saved->tanh_c).matrix();
  out.col(0).tail(hidden) = c_next.matrix();

  return make(std::move(out), {&x, &h, &c, &weight, &bias}, [saved, hidden, input](Node& self) {
    const auto& s = *saved;
    const Eigen::ArrayXd gh = self.grad.col(0).head(hidden).array();
    const Eigen::ArrayXd dc =
        self.grad.col(0).tail(hidden).array() + gh * s.o * (1.0 - s.tanh_c.square());
    Matrix dz(4 * hidden, 1);
    dz.col(0).segment(0, hidden) = (dc * s.g * s.i * (1.0 - s.i)).matrix();
    dz.col(0).segment(hidden, hidden) = (dc * s.c_prev * s.f * (1.0 - s.f)).matrix();
    dz.col(0).segment(2 * hidden, hidden) = (dc * s.i * (1.0 - s.g.square())).matrix();
    dz.col(0).segment(3 * hidden, hidden) = (gh * s.tanh_c * s.o * (1.0 - s.o)).matrix();

    Node& px = parent(self, 0);
    Node& ph = parent(self, 1);
    Node& pc = parent(self, 2);
    Node& pw = parent(self, 3);
    Node& pb = parent(self, 4);
    if (px.requires_grad || ph.requires_grad) {
      const Matrix dxh = pw.value.transpose() * dz;
      if (px.requires_grad) px.accumulate_expr(dxh.topRows(input));
      if (ph.requires_grad) ph.accumulate_expr(dxh.bottomRows(hidden));
    }
    if (pc.requires_grad) pc.accumulate_expr((dc * s.f).matrix());
    if (pw.requires_grad) {
      if (pw.grad.size() == 0) pw.grad = Matrix::Zero(pw.value.rows(), pw.value.cols());
      pw.grad.noalias() += dz * s.xh.transpose();
    }
    if (pb.requires_grad) pb.accumulate(dz);
  });
}

Tensor cross_entropy_with_logits(const Tensor& logits, Index target) {
  if (logits.cols() != 1) shape_fail("cross_entropy_with_logits", "logits must be a column");
  if (target < 0 || target >= logits.rows())
    shape_fail("cross_entropy_with_logits", "target outside logits");
  const Matrix logp = log_softmax_columns(logits.value());
  Matrix s(1, 1);
  s(0, 0) = -logp(target, 0);
  return make(std::move(s), {&logits}, [logp, target](Node& self) {
    Matrix g = logp.array().exp().matrix();
    g(target, 0) -= 1.0;
    parent(self, 0).accumulate_expr(g * self.grad(0, 0));
  });
}

Tensor kl_with_logits(std::span<const double> p, const Tensor& logits) {
  if (logits.cols() != 1 || static_cast<Index>(p.size()) != logits.rows())
    shape_fail("kl_with_logits", "distribution size differs from logits");
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) throw DomainError("kl_with_logits: negative or NaN probability");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) throw DomainError("kl_with_logits: p does not sum to 1");
  const Matrix logq = log_softmax_columns(logits.value());
  Matrix pm(logq.rows(), 1);
  double kl = 0.0;
  for (Index k = 0; k < logq.rows(); ++k) {
    pm(k, 0) = p[static_cast<std::size_t>(k)];
    if (pm(k, 0) > 0.0) kl += pm(k, 0) * (std::log(pm(k, 0)) - logq(k, 0));
  }
  Matrix s(1, 1);
  s(0, 0) = kl;
  return make(std::move(s), {&logits}, [logq, pm, total](Node& self) {
    const Matrix g = logq.array().exp().matrix() * total - pm;
    parent(self, 0).accumulate_expr(g * self.grad(0, 0));
  });
}

}  // namespace sentscore::nn
