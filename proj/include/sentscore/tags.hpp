#pragma once

// sBIO tag codec and the sentinel-interleaved string formats.
//
// Under sBIO a token that starts a labelled span carries the bare label, every
// continuation token carries the shared tag `I`, and every other token `O`.
// The full tag set is the label set plus {I, O}, indexed labels-first in
// insertion order, then I, then O.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace sentscore {

enum class TagKind : std::uint8_t { Label, Inside, Outside };

struct SbioTag {
  TagKind kind = TagKind::Outside;
  std::string label;  // non-empty iff kind == Label

  static SbioTag of_label(std::string label);
  static SbioTag inside() { return {TagKind::Inside, {}}; }
  static SbioTag outside() { return {TagKind::Outside, {}}; }

  // "I", "O", or the label itself.
  std::string str() const;

  friend bool operator==(const SbioTag&, const SbioTag&) = default;
};

using TagSequence = std::vector<SbioTag>;

class TagSet {
 public:
  TagSet() = default;
  // Throws ValidationError on duplicate, empty, whitespace-bearing, or reserved
  // ("I"/"O") labels.
  explicit TagSet(std::vector<std::string> labels);

  std::size_t label_count() const noexcept { return labels_.size(); }
  // |T| + 2
  std::size_t size() const noexcept { return labels_.size() + 2; }
  std::size_t inside_index() const noexcept { return labels_.size(); }
  std::size_t outside_index() const noexcept { return labels_.size() + 1; }

  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::optional<std::size_t> find_label(std::string_view label) const;
  // Throws ValidationError for a label outside the set.
  std::size_t index_of(const SbioTag& tag) const;
  SbioTag tag_at(std::size_t index) const;
  std::string tag_string(std::size_t index) const;
  // Inverse of tag_string; nullopt for anything not in the full tag set.
  std::optional<std::size_t> parse_tag_string(std::string_view text) const;
  // Full tag set as strings in canonical index order.
  std::vector<std::string> tag_order() const;

  std::vector<std::size_t> indices_of(std::span<const SbioTag> tags) const;
  TagSequence tags_at(std::span<const std::size_t> indices) const;

  friend bool operator==(const TagSet& a, const TagSet& b) {
    return a.labels_ == b.labels_;
  }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Labelled span over token indices, both ends inclusive.
struct Span {
  std::string label;
  std::size_t start = 0;
  std::size_t end = 0;

  friend auto operator<=>(const Span&, const Span&) = default;
};

TagSequence spans_to_sbio(std::size_t token_count, std::span<const Span> spans);
std::vector<Span> sbio_to_spans(std::span<const SbioTag> tags);

TagSequence bio_to_sbio(std::span<const std::string> bio);
std::vector<std::string> sbio_to_bio(std::span<const SbioTag> tags);

// Inside may only follow a Label or another Inside.
bool is_valid_sbio(std::span<const SbioTag> tags);
// Throws ValidationError naming the first offending position.
void require_valid_sbio(std::span<const SbioTag> tags);

// Index-level form of the continuation rule, shared by the decoder and the
// student: given the previous tag index (nullopt at the first position),
// whether tag `next` may follow.
bool continuation_permitted(const TagSet& tag_set,
                            std::optional<std::size_t> previous,
                            std::size_t next);

// Mask over the full tag set of tags that may extend `prefix`.
std::vector<bool> valid_next_tags(std::span<const SbioTag> prefix,
                                  const TagSet& tag_set);

// Number of valid sBIO sequences of the given length over |T| labels.
std::uint64_t count_valid_sequences(std::size_t length, std::size_t label_count);

class SentinelScheme {
 public:
  static constexpr std::string_view kDefaultPattern = "<extra_id_{k}>";

  // `pattern` must contain exactly one "{k}" placeholder.
  explicit SentinelScheme(std::string pattern = std::string(kDefaultPattern));

  std::string sentinel(std::size_t k) const;
  // k for a token that is a sentinel string, otherwise nullopt.
  std::optional<std::size_t> sentinel_index(std::string_view token) const;
  bool is_sentinel(std::string_view token) const {
    return sentinel_index(token).has_value();
  }
  const std::string& pattern() const noexcept { return pattern_; }

 private:
  std::string pattern_;
  std::string prefix_;
  std::string suffix_;
};

// SenT ends the input after the last token; SenTPrime appends one more
// sentinel so the next sentinel terminates every tag.
enum class FormatVariant { SenT, SenTPrime };

std::vector<std::string> split_whitespace(std::string_view text);

std::string encode_input(std::span<const std::string> tokens,
                         const SentinelScheme& scheme,
                         FormatVariant variant = FormatVariant::SenTPrime);

std::string encode_target(std::span<const SbioTag> tags,
                          const SentinelScheme& scheme,
                          FormatVariant variant = FormatVariant::SenTPrime);

struct OutputParseError {
  enum class Kind {
    WrongTokenCount,
    WrongSentinel,
    UnknownTag,
    InvalidSequence,
  };
  Kind kind;
  std::size_t position;  // index of the offending whitespace token
  std::string message;
};

using ParsedOutput = std::variant<TagSequence, OutputParseError>;

// Total on arbitrary strings: every failure is reported as a value.
ParsedOutput parse_output(std::string_view output, std::size_t token_count,
                          const TagSet& tag_set, const SentinelScheme& scheme,
                          FormatVariant variant = FormatVariant::SenTPrime,
                          bool require_valid = true);

}  // namespace sentscore
