#pragma once

// Tag-wise beam search over sentinel-interleaved output strings. Every
// hypothesis is built from tag strings and sentinels only, so any scorer
// yields a parseable, length-L output.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sentscore/scorer.hpp"
#include "sentscore/tags.hpp"

namespace sentscore {

// L rows of |T̄| cumulative log-likelihoods; masked continuations hold -inf.
using ScoreMatrix = std::vector<std::vector<double>>;

enum class TieBreak {
  // Equal scores: lower canonical tag index first, then lower parent rank.
  TagThenParent,
};

struct BeamConfig {
  std::size_t beam_size = 1;
  bool constrain_sbio = true;
  TieBreak tie_break = TieBreak::TagThenParent;

  void validate() const;
};

struct DecodeResult {
  // Ordered by final score, best first. Fewer than K entries only when fewer
  // valid sequences exist.
  std::vector<TagSequence> sequences;
  std::vector<ScoreMatrix> score_matrices;
  std::vector<double> final_scores;
  // Total scorer invocations (hypotheses scored), for diagnostics.
  std::size_t hypotheses_scored = 0;
};

DecodeResult sentscore_beam(const Scorer& scorer, std::span<const std::string> tokens,
                            const TagSet& tag_set, const BeamConfig& config,
                            const SentinelScheme& scheme = SentinelScheme());

struct GreedyResult {
  TagSequence tags;
  ScoreMatrix scores;
  double final_score = 0.0;
};

GreedyResult greedy(const Scorer& scorer, std::span<const std::string> tokens,
                    const TagSet& tag_set, const SentinelScheme& scheme = SentinelScheme(),
                    bool constrain_sbio = true);

struct OracleResult {
  TagSequence tags;
  double score = 0.0;
  std::uint64_t enumerated = 0;  // sequences visited
};

inline constexpr std::uint64_t kDefaultEnumerationCap = 1'000'000;

// Scores every (valid, when constrained) sequence and returns the argmax under
// the beam's tie-break. Throws SizeError when |T̄|^L exceeds `cap`.
OracleResult exhaustive_oracle(const Scorer& scorer, std::span<const std::string> tokens,
                               const TagSet& tag_set,
                               const SentinelScheme& scheme = SentinelScheme(),
                               bool constrain_sbio = true,
                               std::uint64_t cap = kDefaultEnumerationCap);

// softmax(row / tau) over unmasked entries; masked and -inf entries get 0.
// An empty mask means every entry is allowed.
std::vector<double> step_distribution(std::span<const double> row, const std::vector<bool>& mask,
                                      double tau);

// Mask of row i of a score matrix: finite-or-+inf entries are allowed.
std::vector<bool> row_mask(std::span<const double> row);

// Output string after a full tag sequence, e.g. "<extra_id_0> O <extra_id_1>".
std::string hypothesis_string(std::span<const SbioTag> tags, const SentinelScheme& scheme);

// One JSON line per decoded sentence; also the silver-cache record.
struct DecodedSentence {
  std::string id;
  std::vector<std::string> tokens;
  TagSequence tags;
  ScoreMatrix scores;
  std::vector<std::string> tag_order;
};

nlohmann::json to_json_line(const DecodedSentence& d);
// Validates shape and tags against tag_order; throws FormatError with `line`.
DecodedSentence decoded_from_json(const nlohmann::json& j, std::size_t line = 0);
void write_decoded(std::ostream& out, std::span<const DecodedSentence> records);
std::vector<DecodedSentence> read_decoded(std::istream& in);

}  // namespace sentscore
