#pragma once

#include <cstdint>
#include <vector>

#include "sentscore/nn/params.hpp"

namespace sentscore::nn {

struct AdamWConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;

  void validate() const;
};

// One decoupled-decay update of a single tensor. `step` counts from 1 and
// drives bias correction of the moment estimates `m` and `v`.
void adamw_step(Matrix& param, const Matrix& grad, Matrix& m, Matrix& v,
                const AdamWConfig& config, std::uint64_t step);

class AdamW {
 public:
  AdamW(ParamStore& params, AdamWConfig config);

  // Applies one update using the gradients currently held by the store.
  void step();
  std::uint64_t step_count() const noexcept { return step_; }
  const AdamWConfig& config() const noexcept { return config_; }

 private:
  ParamStore& params_;
  AdamWConfig config_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  std::uint64_t step_ = 0;
};

}  // namespace sentscore::nn
