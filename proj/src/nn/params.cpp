#include "sentscore/nn/params.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>

#include "sentscore/error.hpp"
#include "sentscore/random.hpp"

namespace sentscore::nn {

Tensor& ParamStore::add(const std::string& name, Matrix init) {
  if (name.empty() || name.find_first_of(" \t\n") != std::string::npos)
    throw ContractError("parameter name '" + name + "' is not a single word");
  if (!index_.emplace(name, tensors_.size()).second)
    throw ContractError("duplicate parameter '" + name + "'");
  names_.push_back(name);
  tensors_.emplace_back(std::move(init), true);
  return tensors_.back();
}

Tensor& ParamStore::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("unknown parameter '" + name + "'");
  return tensors_[it->second];
}

const Tensor& ParamStore::get(const std::string& name) const {
  return const_cast<ParamStore*>(this)->get(name);
}

std::size_t ParamStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += static_cast<std::size_t>(t.size());
  return n;
}

void ParamStore::zero_grad() {
  for (auto& t : tensors_) t.zero_grad();
}

double ParamStore::grad_norm() const {
  double sq = 0.0;
  for (const auto& t : tensors_)
    if (t.node()->grad.size() != 0) sq += t.node()->grad.squaredNorm();
  return std::sqrt(sq);
}

double ParamStore::clip_grad_norm(double max_norm) {
  const double norm = grad_norm();
  if (norm > max_norm && norm > 0.0) {
    const double factor = max_norm / norm;
    for (auto& t : tensors_)
      if (t.node()->grad.size() != 0) t.node()->grad *= factor;
  }
  return norm;
}

bool ParamStore::all_finite() const {
  for (const auto& t : tensors_)
    if (!t.value().allFinite()) return false;
  return true;
}

std::vector<Matrix> ParamStore::snapshot() const {
  std::vector<Matrix> out;
  out.reserve(tensors_.size());
  for (const auto& t : tensors_) out.push_back(t.value());
  return out;
}

void ParamStore::restore(const std::vector<Matrix>& values) {
  if (values.size() != tensors_.size()) throw ContractError("restore: tensor count differs");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i].rows() != tensors_[i].rows() || values[i].cols() != tensors_[i].cols())
      throw ShapeError("restore: shape of '" + names_[i] + "' differs");
    tensors_[i].mutable_value() = values[i];
  }
}

void ParamStore::save(std::ostream& out) const {
  out << "sentscore-params " << kFormatVersion << '\n' << tensors_.size() << '\n';
  char buf[64];
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    const auto& v = tensors_[i].value();
    out << names_[i] << ' ' << v.rows() << ' ' << v.cols() << '\n';
    for (Index k = 0; k < v.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%a", v.data()[k]);
      out << (k ? " " : "") << buf;
    }
    out << '\n';
  }
}

ParamStore ParamStore::load(std::istream& in) {
  std::string magic;
  int version = 0;
  std::size_t count = 0;
  if (!(in >> magic >> version >> count) || magic != "sentscore-params")
    throw IoError("parameter file: bad header");
  if (version != kFormatVersion)
    throw IoError("parameter file: unsupported version " + std::to_string(version));
  ParamStore store;
  for (std::size_t i = 0; i < count; ++i) {
    std::string name;
    Index rows = 0, cols = 0;
    if (!(in >> name >> rows >> cols) || rows < 0 || cols < 0)
      throw IoError("parameter file: bad record header at tensor " + std::to_string(i));
    Matrix m(rows, cols);
    std::string token;
    for (Index k = 0; k < m.size(); ++k) {
      if (!(in >> token)) throw IoError("parameter file: truncated values for '" + name + "'");
      char* end = nullptr;
      m.data()[k] = std::strtod(token.c_str(), &end);
      if (end == token.c_str() || *end != '\0')
        throw IoError("parameter file: bad number '" + token + "' in '" + name + "'");
    }
    store.add(name, std::move(m));
  }
  return store;
}

void ParamStore::load_values(const ParamStore& other) {
  if (other.names_ != names_) throw ContractError("load_values: parameter names differ");
  restore(other.snapshot());
}

bool operator==(const ParamStore& a, const ParamStore& b) {
  if (a.names_ != b.names_) return false;
  for (std::size_t i = 0; i < a.tensors_.size(); ++i) {
    const auto& x = a.tensors_[i].value();
    const auto& y = b.tensors_[i].value();
    if (x.rows() != y.rows() || x.cols() != y.cols()) return false;
    for (Index k = 0; k < x.size(); ++k)
      if (std::memcmp(&x.data()[k], &y.data()[k], sizeof(double)) != 0) return false;
  }
  return true;
}

Matrix uniform_init(Index rows, Index cols, Index fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<Index>(fan_in, 1)));
  Matrix m(rows, cols);
  for (Index k = 0; k < m.size(); ++k) m.data()[k] = rng.uniform(-bound, bound);
  return m;
}

}  // namespace sentscore::nn
