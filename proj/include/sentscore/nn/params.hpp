#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "sentscore/nn/tensor.hpp"

namespace sentscore {
class Rng;
}

namespace sentscore::nn {

// Named trainable tensors in registration order.
class ParamStore {
 public:
  static constexpr int kFormatVersion = 1;

  // Registers a trainable tensor; throws ContractError on a duplicate name.
  Tensor& add(const std::string& name, Matrix init);
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;

  std::size_t size() const noexcept { return tensors_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  std::vector<Tensor>& tensors() noexcept { return tensors_; }
  const std::vector<Tensor>& tensors() const noexcept { return tensors_; }
  std::size_t parameter_count() const;

  void zero_grad();
  double grad_norm() const;
  // Rescales all gradients so their global norm is at most `max_norm`.
  // Returns the norm before clipping.
  double clip_grad_norm(double max_norm);
  bool all_finite() const;

  // Value copies for checkpointing.
  std::vector<Matrix> snapshot() const;
  void restore(const std::vector<Matrix>& values);

  // Text container: header line with the format version, then one record per
  // tensor (name, rows, cols, hex-float values). Round-trips bit-exactly.
  void save(std::ostream& out) const;
  static ParamStore load(std::istream& in);
  // Copies values from a loaded store into this one (names and shapes must
  // match).
  void load_values(const ParamStore& other);

  friend bool operator==(const ParamStore& a, const ParamStore& b);

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> tensors_;
  std::unordered_map<std::string, std::size_t> index_;
};

// uniform(-1/sqrt(fan_in), 1/sqrt(fan_in))
Matrix uniform_init(Index rows, Index cols, Index fan_in, Rng& rng);

}  // namespace sentscore::nn
