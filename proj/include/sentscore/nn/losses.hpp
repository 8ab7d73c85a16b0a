#pragma once

// Plain-vector forms of the distribution helpers used outside the graph:
// decoding, silver targets, and loss bookkeeping.

#include <span>
#include <vector>

namespace sentscore::nn {

// -inf entries are allowed (masked) as long as one entry is finite.
double logsumexp(std::span<const double> logits);
std::vector<double> softmax(std::span<const double> logits, double temperature = 1.0);
std::vector<double> log_softmax(std::span<const double> logits);

// Throws DomainError unless entries are >= 0 and sum to 1 within 1e-9.
void require_distribution(std::span<const double> p, const char* what);

// -sum_k y_k log q_k
double cross_entropy(std::span<const double> y, std::span<const double> q);
// sum_k p_k (log p_k - log q_k), with 0 log 0 = 0
double kl_divergence(std::span<const double> p, std::span<const double> q);

// Same quantities with q = softmax(logits), evaluated in log space.
double cross_entropy_from_logits(std::span<const double> y, std::span<const double> logits);
double kl_from_logits(std::span<const double> p, std::span<const double> logits);

}  // namespace sentscore::nn
