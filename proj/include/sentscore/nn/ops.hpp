#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sentscore/nn/tensor.hpp"

namespace sentscore::nn {

// All ops throw ShapeError naming the op on incompatible inputs.

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor scale(const Tensor& a, double factor);
Tensor neg(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor transpose(const Tensor& a);

// Stacks along rows (axis 0) or columns (axis 1).
Tensor concat(std::span<const Tensor> parts, int axis = 0);
Tensor concat(std::initializer_list<Tensor> parts, int axis = 0);
Tensor slice_rows(const Tensor& a, Index start, Index count);

// Row `index` of a (vocab x dim) table, as a dim x 1 column.
Tensor embedding_lookup(const Tensor& table, Index index);

// Normalizes each column (axis 0) or each row (axis 1).
Tensor softmax(const Tensor& a, int axis = 0);
Tensor log_softmax(const Tensor& a, int axis = 0);

// Inverted dropout; identity when rate == 0 or recording is off.
Tensor dropout(const Tensor& a, double rate, std::uint64_t seed);

Tensor sum(const Tensor& a);
Tensor pick(const Tensor& a, Index row, Index col = 0);
// sum(a .* weights) for a constant weight matrix of the same shape.
Tensor weighted_sum(const Tensor& a, const Matrix& weights);

// Fused LSTM cell. Gate rows of `weight` (4H x (in + H)) are ordered input,
// forget, candidate, output; the result is [h'; c'] as a 2H x 1 column.
Tensor lstm_cell(const Tensor& x, const Tensor& h, const Tensor& c, const Tensor& weight,
                 const Tensor& bias);

// Losses on logits (column vectors).
// -log softmax(logits)[target]
Tensor cross_entropy_with_logits(const Tensor& logits, Index target);
// KL(p || softmax(logits)) for a constant distribution p; zero entries of p
// contribute nothing.
Tensor kl_with_logits(std::span<const double> p, const Tensor& logits);

}  // namespace sentscore::nn
