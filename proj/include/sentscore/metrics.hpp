#pragma once

// Exact-match span micro-F1 and the sentence-level Perfect score.

#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sentscore/corpus.hpp"
#include "sentscore/tags.hpp"

namespace sentscore {

struct LabelCounts {
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
  friend bool operator==(const LabelCounts&, const LabelCounts&) = default;
};

struct PrfScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// All-zero counts score 1.0 everywhere; otherwise an empty denominator gives 0.
PrfScores prf(const LabelCounts& counts);

struct EvalReport {
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double perfect = 0.0;
  std::size_t sentences = 0;
  std::map<std::string, LabelCounts> per_label;

  LabelCounts counts() const { return {true_positives, false_positives, false_negatives}; }
  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

struct SentenceSpans {
  std::string id;
  std::vector<Span> spans;
};

// Pooled exact (label, start, end) matching. Sentences are paired by id in
// order; a mismatch throws ContractError. `perfect` is left at 0.
EvalReport micro_f1(std::span<const SentenceSpans> gold, std::span<const SentenceSpans> pred);

double perfect(std::span<const TagSequence> gold, std::span<const TagSequence> pred);

// Both metrics for predictions aligned with the sentences of a gold split.
EvalReport evaluate(const DatasetSplit& gold, std::span<const TagSequence> pred);

void to_json(nlohmann::json& out, const EvalReport& report);
void from_json(const nlohmann::json& in, EvalReport& report);

// Aligned text rendering: one row per label then the micro total.
std::string format_report(const EvalReport& report);

}  // namespace sentscore
