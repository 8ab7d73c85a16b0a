#include "sentscore/nn/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sentscore/error.hpp"

namespace sentscore::nn {

double logsumexp(std::span<const double> logits) {
  if (logits.empty()) throw DomainError("logsumexp: empty input");
  const double m = *std::max_element(logits.begin(), logits.end());
  if (m == -std::numeric_limits<double>::infinity())
    throw DomainError("logsumexp: every entry is masked");
  double s = 0.0;
  for (double v : logits) s += std::exp(v - m);
  return m + std::log(s);
}

std::vector<double> softmax(std::span<const double> logits, double temperature) {
  if (!(temperature > 0.0)) throw DomainError("softmax: temperature must be positive");
  std::vector<double> scaled(logits.begin(), logits.end());
  for (auto& v : scaled) v /= temperature;
  const double lse = logsumexp(scaled);
  for (auto& v : scaled) v = std::exp(v - lse);
  return scaled;
}

std::vector<double> log_softmax(std::span<const double> logits) {
  const double lse = logsumexp(logits);
  std::vector<double> out(logits.begin(), logits.end());
  for (auto& v : out) v -= lse;
  return out;
}

void require_distribution(std::span<const double> p, const char* what) {
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) throw DomainError(std::string(what) + ": negative or NaN probability");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw DomainError(std::string(what) + ": probabilities sum to " + std::to_string(total));
}

double cross_entropy(std::span<const double> y, std::span<const double> q) {
  if (y.size() != q.size()) throw DomainError("cross_entropy: size mismatch");
  require_distribution(y, "cross_entropy target");
  require_distribution(q, "cross_entropy prediction");
  double ce = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k)
    if (y[k] > 0.0) ce -= y[k] * std::log(q[k]);
  return ce;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw DomainError("kl_divergence: size mismatch");
  require_distribution(p, "kl_divergence p");
  require_distribution(q, "kl_divergence q");
  double kl = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k)
    if (p[k] > 0.0) kl += p[k] * (std::log(p[k]) - std::log(q[k]));
  return kl;
}

double cross_entropy_from_logits(std::span<const double> y, std::span<const double> logits) {
  if (y.size() != logits.size()) throw DomainError("cross_entropy: size mismatch");
  require_distribution(y, "cross_entropy target");
  const auto logq = log_softmax(logits);
  double ce = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k)
    if (y[k] > 0.0) ce -= y[k] * logq[k];
  return ce;
}

double kl_from_logits(std::span<const double> p, std::span<const double> logits) {
  if (p.size() != logits.size()) throw DomainError("kl_divergence: size mismatch");
  require_distribution(p, "kl_divergence p");
  const auto logq = log_softmax(logits);
  double kl = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k)
    if (p[k] > 0.0) kl += p[k] * (std::log(p[k]) - logq[k]);
  return kl;
}

}  // namespace sentscore::nn
