#include "sentscore/scorer.hpp"

namespace sentscore {

std::vector<double> Scorer::score_batch(std::string_view input,
                                        std::span<const std::string> candidates) const {
  std::vector<double> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) out.push_back(score(input, c));
  return out;
}

void TableScorer::set(std::string input, std::string candidate, double score) {
  entries_[{std::move(input), std::move(candidate)}] = score;
}

double TableScorer::score(std::string_view input, std::string_view candidate) const {
  // Heterogeneous lookup on a pair key needs owning strings.
  auto it = entries_.find(std::pair<std::string, std::string>(input, candidate));
  return it == entries_.end() ? default_score_ : it->second;
}

}  // namespace sentscore
