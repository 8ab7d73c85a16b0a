#include "sentscore/nn/adamw.hpp"

#include <cmath>

#include "sentscore/error.hpp"

namespace sentscore::nn {

void AdamWConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("adamw: learning_rate must be positive");
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0))
    throw ConfigError("adamw: betas must lie in (0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("adamw: epsilon must be positive");
  if (!(weight_decay >= 0.0)) throw ConfigError("adamw: weight_decay must be >= 0");
}

void adamw_step(Matrix& param, const Matrix& grad, Matrix& m, Matrix& v,
                const AdamWConfig& config, std::uint64_t step) {
  if (step == 0) throw ContractError("adamw_step: step counts from 1");
  const double t = static_cast<double>(step);
  const double bias1 = 1.0 - std::pow(config.beta1, t);
  const double bias2 = 1.0 - std::pow(config.beta2, t);
  // Decay acts on the weights directly and never enters the moments.
  param *= 1.0 - config.learning_rate * config.weight_decay;
  m = config.beta1 * m + (1.0 - config.beta1) * grad;
  v = config.beta2 * v + (1.0 - config.beta2) * grad.cwiseProduct(grad);
  param.array() -= config.learning_rate * (m.array() / bias1) /
                   ((v.array() / bias2).sqrt() + config.epsilon);
}

AdamW::AdamW(ParamStore& params, AdamWConfig config) : params_(params), config_(config) {
  config_.validate();
  for (const auto& t : params_.tensors()) {
    m_.push_back(Matrix::Zero(t.rows(), t.cols()));
    v_.push_back(Matrix::Zero(t.rows(), t.cols()));
  }
}

void AdamW::step() {
  ++step_;
  auto& tensors = params_.tensors();
  if (tensors.size() != m_.size()) throw ContractError("adamw: parameter store changed size");
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    auto& t = tensors[i];
    const Matrix grad = t.grad();
    adamw_step(t.mutable_value(), grad, m_[i], v_[i], config_, step_);
  }
}

}  // namespace sentscore::nn
