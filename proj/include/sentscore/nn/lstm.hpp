#pragma once

#include <span>
#include <string>
#include <vector>

#include "sentscore/nn/ops.hpp"
#include "sentscore/nn/params.hpp"

namespace sentscore::nn {

struct LstmParams {
  Tensor weight;  // 4H x (in + H), gate rows: input, forget, candidate, output
  Tensor bias;    // 4H x 1
  Index input_dim = 0;
  Index hidden_dim = 0;
};

// Registers `<prefix>.weight` and `<prefix>.bias`. Weights are uniform in
// +-1/sqrt(fan_in), biases zero except the forget gate at +1.
LstmParams make_lstm(ParamStore& store, const std::string& prefix, Index input_dim,
                     Index hidden_dim, Rng& rng);
// Rebinds to tensors already present in `store`.
LstmParams bind_lstm(ParamStore& store, const std::string& prefix);

struct LstmState {
  Tensor h;
  Tensor c;
};

LstmState zero_state(Index hidden_dim);
LstmState lstm_step(const Tensor& x, const LstmState& state, const LstmParams& params);

// Gate-by-gate composition of primitive ops; numerically the same function as
// lstm_step and used to cross-check the fused cell.
LstmState lstm_step_unfused(const Tensor& x, const LstmState& state, const LstmParams& params);

// Hidden states per position, in input order even when run right-to-left.
std::vector<Tensor> lstm_sequence(std::span<const Tensor> inputs, const LstmParams& params,
                                  bool reverse = false);

// Left-to-right and right-to-left passes concatenated per position (2H x 1).
std::vector<Tensor> bilstm(std::span<const Tensor> inputs, const LstmParams& forward,
                           const LstmParams& backward);

struct Linear {
  Tensor weight;  // out x in
  Tensor bias;    // out x 1
};

Linear make_linear(ParamStore& store, const std::string& prefix, Index input_dim,
                   Index output_dim, Rng& rng);
Linear bind_linear(ParamStore& store, const std::string& prefix);
Tensor apply(const Linear& layer, const Tensor& x);

}  // namespace sentscore::nn
