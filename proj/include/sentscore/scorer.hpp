#pragma once

// Anything that assigns a natural-log likelihood to a candidate output string
// given an input string.

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sentscore {

class Scorer {
 public:
  virtual ~Scorer() = default;

  // Pure: equal arguments give equal results.
  virtual double score(std::string_view input, std::string_view candidate) const = 0;

  // Elementwise equal to score(); implementations may share work across
  // candidates. The default loops.
  virtual std::vector<double> score_batch(std::string_view input,
                                          std::span<const std::string> candidates) const;

  // False for scorers that talk to another process.
  virtual bool in_process() const noexcept { return true; }
};

class TableScorer final : public Scorer {
 public:
  explicit TableScorer(double default_score = 0.0) : default_score_(default_score) {}

  void set(std::string input, std::string candidate, double score);
  double default_score() const noexcept { return default_score_; }
  std::size_t size() const noexcept { return entries_.size(); }

  double score(std::string_view input, std::string_view candidate) const override;

 private:
  double default_score_;
  std::map<std::pair<std::string, std::string>, double, std::less<>> entries_;
};

}  // namespace sentscore
