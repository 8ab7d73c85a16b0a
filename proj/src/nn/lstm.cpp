#include "sentscore/nn/lstm.hpp"

#include "sentscore/error.hpp"
#include "sentscore/random.hpp"

namespace sentscore::nn {

LstmParams make_lstm(ParamStore& store, const std::string& prefix, Index input_dim,
                     Index hidden_dim, Rng& rng) {
  const Index fan_in = input_dim + hidden_dim;
  store.add(prefix + ".weight", uniform_init(4 * hidden_dim, fan_in, fan_in, rng));
  Matrix bias = Matrix::Zero(4 * hidden_dim, 1);
  bias.middleRows(hidden_dim, hidden_dim).setOnes();
  store.add(prefix + ".bias", std::move(bias));
  return bind_lstm(store, prefix);
}

LstmParams bind_lstm(ParamStore& store, const std::string& prefix) {
  LstmParams p;
  p.weight = store.get(prefix + ".weight");
  p.bias = store.get(prefix + ".bias");
  p.hidden_dim = p.weight.rows() / 4;
  p.input_dim = p.weight.cols() - p.hidden_dim;
  if (p.weight.rows() % 4 != 0 || p.input_dim <= 0 || p.bias.rows() != p.weight.rows())
    throw ShapeError("lstm '" + prefix + "': inconsistent parameter shapes");
  return p;
}

LstmState zero_state(Index hidden_dim) {
  return {Tensor::zeros(hidden_dim, 1), Tensor::zeros(hidden_dim, 1)};
}

LstmState lstm_step(const Tensor& x, const LstmState& state, const LstmParams& params) {
  const Tensor both = lstm_cell(x, state.h, state.c, params.weight, params.bias);
  return {slice_rows(both, 0, params.hidden_dim),
          slice_rows(both, params.hidden_dim, params.hidden_dim)};
}

LstmState lstm_step_unfused(const Tensor& x, const LstmState& state, const LstmParams& params) {
  const Index h = params.hidden_dim;
  const Tensor z = add(matmul(params.weight, concat({x, state.h})), params.bias);
  const Tensor in_gate = sigmoid(slice_rows(z, 0, h));
  const Tensor forget_gate = sigmoid(slice_rows(z, h, h));
  const Tensor candidate = tanh(slice_rows(z, 2 * h, h));
  const Tensor out_gate = sigmoid(slice_rows(z, 3 * h, h));
  const Tensor c = add(mul(forget_gate, state.c), mul(in_gate, candidate));
  return {mul(out_gate, tanh(c)), c};
}

std::vector<Tensor> lstm_sequence(std::span<const Tensor> inputs, const LstmParams& params,
                                  bool reverse) {
  std::vector<Tensor> out(inputs.size());
  LstmState state = zero_state(params.hidden_dim);
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const std::size_t i = reverse ? inputs.size() - 1 - k : k;
    state = lstm_step(inputs[i], state, params);
    out[i] = state.h;
  }
  return out;
}

std::vector<Tensor> bilstm(std::span<const Tensor> inputs, const LstmParams& forward,
                           const LstmParams& backward) {
  const auto fwd = lstm_sequence(inputs, forward, false);
  const auto bwd = lstm_sequence(inputs, backward, true);
  std::vector<Tensor> out;
  out.reserve(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) out.push_back(concat({fwd[i], bwd[i]}));
  return out;
}

Linear make_linear(ParamStore& store, const std::string& prefix, Index input_dim,
                   Index output_dim, Rng& rng) {
  store.add(prefix + ".weight", uniform_init(output_dim, input_dim, input_dim, rng));
  store.add(prefix + ".bias", Matrix::Zero(output_dim, 1));
  return bind_linear(store, prefix);
}

Linear bind_linear(ParamStore& store, const std::string& prefix) {
  return {store.get(prefix + ".weight"), store.get(prefix + ".bias")};
}

Tensor apply(const Linear& layer, const Tensor& x) {
  return add(matmul(layer.weight, x), layer.bias);
}

}  // namespace sentscore::nn
