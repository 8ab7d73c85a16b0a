#pragma once

// Independent reference implementations and random generators shared by the
// unit tests and the acceptance binary.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sentscore/metrics.hpp"
#include "sentscore/random.hpp"
#include "sentscore/scorer.hpp"
#include "sentscore/tags.hpp"

namespace sentscore::testing {

// Nested-loop exact matching over pooled spans. A gold span is consumed by the
// first equal prediction so that repeated spans are counted once each.
inline LabelCounts brute_force_counts(const std::vector<SentenceSpans>& gold,
                                      const std::vector<SentenceSpans>& pred) {
  LabelCounts c;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    const auto& g = gold[s].spans;
    const auto& p = pred[s].spans;
    std::vector<bool> used(g.size(), false);
    for (std::size_t i = 0; i < p.size(); ++i) {
      bool hit = false;
      for (std::size_t j = 0; j < g.size() && !hit; ++j) {
        if (used[j]) continue;
        if (p[i].label == g[j].label && p[i].start == g[j].start && p[i].end == g[j].end) {
          used[j] = true;
          hit = true;
        }
      }
      if (hit)
        ++c.true_positives;
      else
        ++c.false_positives;
    }
    for (bool u : used)
      if (!u) ++c.false_negatives;
  }
  return c;
}

// Uniform over tags subject to the continuation rule.
inline TagSequence random_sbio(Rng& rng, std::size_t length, const TagSet& tag_set) {
  TagSequence tags;
  for (std::size_t i = 0; i < length; ++i) {
    const auto mask = valid_next_tags(tags, tag_set);
    std::vector<std::size_t> allowed;
    for (std::size_t t = 0; t < mask.size(); ++t)
      if (mask[t]) allowed.push_back(t);
    tags.push_back(tag_set.tag_at(allowed[rng.index(allowed.size())]));
  }
  return tags;
}

// Gold with each position redrawn at `rate`; later positions that can no
// longer continue become Outside, so the result stays valid.
inline TagSequence perturb_sbio(Rng& rng, const TagSequence& gold, const TagSet& tag_set,
                                double rate) {
  TagSequence out;
  for (const auto& tag : gold) {
    const auto mask = valid_next_tags(out, tag_set);
    if (rng.bernoulli(rate)) {
      std::vector<std::size_t> allowed;
      for (std::size_t t = 0; t < mask.size(); ++t)
        if (mask[t]) allowed.push_back(t);
      out.push_back(tag_set.tag_at(allowed[rng.index(allowed.size())]));
    } else {
      out.push_back(mask[tag_set.index_of(tag)] ? tag : SbioTag::outside());
    }
  }
  return out;
}

inline std::vector<std::string> random_tokens(Rng& rng, std::size_t length) {
  static const std::vector<std::string> words{"play", "wow", "by", "jon", "theodore", "the",
                                              "set", "alarm", "at", "noon", "in", "rome"};
  std::vector<std::string> out;
  for (std::size_t i = 0; i < length; ++i) out.push_back(words[rng.index(words.size())]);
  return out;
}

enum class ScoreStyle { Continuous, Ties, Adversarial };

// A value for one table entry. Ties draws from three levels; Adversarial mixes
// in NaN, infinities and huge magnitudes.
inline double random_score(Rng& rng, ScoreStyle style) {
  switch (style) {
    case ScoreStyle::Continuous:
      return rng.uniform(-30.0, 0.0);
    case ScoreStyle::Ties:
      return -static_cast<double>(rng.index(3));
    case ScoreStyle::Adversarial: {
      switch (rng.index(7)) {
        case 0: return std::numeric_limits<double>::quiet_NaN();
        case 1: return std::numeric_limits<double>::infinity();
        case 2: return -std::numeric_limits<double>::infinity();
        case 3: return rng.uniform(-1e300, 1e300);
        case 4: return 0.0;
        default: return rng.uniform(-50.0, 50.0);
      }
    }
  }
  return 0.0;
}

// Every hypothesis string reachable by an unconstrained search gets an entry,
// so the table fully defines the search.
inline TableScorer random_table_scorer(Rng& rng, std::span<const std::string> tokens,
                                       const TagSet& tag_set, ScoreStyle style,
                                       const SentinelScheme& scheme = SentinelScheme()) {
  TableScorer table(random_score(rng, style));
  const std::string input = encode_input(tokens, scheme);
  std::vector<std::string> frontier{scheme.sentinel(0)};
  for (std::size_t i = 1; i <= tokens.size(); ++i) {
    std::vector<std::string> next;
    for (const auto& prefix : frontier)
      for (std::size_t t = 0; t < tag_set.size(); ++t) {
        auto text = prefix + ' ' + tag_set.tag_string(t) + ' ' + scheme.sentinel(i);
        table.set(input, text, random_score(rng, style));
        next.push_back(std::move(text));
      }
    frontier = std::move(next);
  }
  return table;
}

// For sentences too long to tabulate exhaustively: entries for every prefix of
// `paths` random unconstrained tag sequences, the rest falls to the default.
// Prefixes that break the continuation rule get the best scores on offer.
inline TableScorer sampled_table_scorer(Rng& rng, std::span<const std::string> tokens,
                                        const TagSet& tag_set, ScoreStyle style,
                                        std::size_t paths,
                                        const SentinelScheme& scheme = SentinelScheme()) {
  TableScorer table(random_score(rng, style));
  const std::string input = encode_input(tokens, scheme);
  for (std::size_t p = 0; p < paths; ++p) {
    std::string text = scheme.sentinel(0);
    std::optional<std::size_t> previous;
    bool broken = false;
    for (std::size_t i = 1; i <= tokens.size(); ++i) {
      const auto t = rng.index(tag_set.size());
      broken = broken || !continuation_permitted(tag_set, previous, t);
      previous = t;
      text += ' ' + tag_set.tag_string(t) + ' ' + scheme.sentinel(i);
      table.set(input, text,
                broken ? std::numeric_limits<double>::infinity() : random_score(rng, style));
    }
  }
  return table;
}

// Scores derived from a hash of the candidate: total on every string without
// storing a table.
class HashScorer final : public Scorer {
 public:
  HashScorer(std::uint64_t seed, ScoreStyle style) : seed_(seed), style_(style) {}
  double score(std::string_view input, std::string_view candidate) const override {
    Rng rng(seed_ ^ fnv1a(input) ^ mix64(fnv1a(candidate)));
    return random_score(rng, style_);
  }

 private:
  std::uint64_t seed_;
  ScoreStyle style_;
};

inline TagSet random_tag_set(Rng& rng, std::size_t max_labels) {
  std::vector<std::string> labels;
  const auto n = 1 + rng.index(max_labels);
  for (std::size_t i = 0; i < n; ++i) labels.push_back("L" + std::to_string(i));
  return TagSet(std::move(labels));
}

}  // namespace sentscore::testing
