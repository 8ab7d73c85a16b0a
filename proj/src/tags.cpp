#include "sentscore/tags.hpp"

#include <algorithm>
#include <cctype>

#include "sentscore/error.hpp"

namespace sentscore {
namespace {

bool has_whitespace(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.size() >= prefix.size() && s.substr(0, prefix.size()) == prefix;
}

}  // namespace

SbioTag SbioTag::of_label(std::string label) {
  if (label.empty()) throw ValidationError("empty span label");
  return {TagKind::Label, std::move(label)};
}

std::string SbioTag::str() const {
  switch (kind) {
    case TagKind::Label:
      return label;
    case TagKind::Inside:
      return "I";
    case TagKind::Outside:
      break;
  }
  return "O";
}

TagSet::TagSet(std::vector<std::string> labels) : labels_(std::move(labels)) {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    const auto& label = labels_[i];
    if (label.empty()) throw ValidationError("tag set: empty label");
    if (label == "I" || label == "O")
      throw ValidationError("tag set: label '" + label + "' is reserved");
    if (has_whitespace(label))
      throw ValidationError("tag set: label '" + label + "' contains whitespace");
    if (!index_.emplace(label, i).second)
      throw ValidationError("tag set: duplicate label '" + label + "'");
  }
}

std::optional<std::size_t> TagSet::find_label(std::string_view label) const {
  auto it = index_.find(std::string(label));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t TagSet::index_of(const SbioTag& tag) const {
  switch (tag.kind) {
    case TagKind::Inside:
      return inside_index();
    case TagKind::Outside:
      return outside_index();
    case TagKind::Label:
      break;
  }
  auto idx = find_label(tag.label);
  if (!idx) throw ValidationError("label '" + tag.label + "' is not in the tag set");
  return *idx;
}

SbioTag TagSet::tag_at(std::size_t index) const {
  if (index < labels_.size()) return SbioTag::of_label(labels_[index]);
  if (index == inside_index()) return SbioTag::inside();
  if (index == outside_index()) return SbioTag::outside();
  throw ContractError("tag index " + std::to_string(index) + " out of range");
}

std::string TagSet::tag_string(std::size_t index) const { return tag_at(index).str(); }

std::optional<std::size_t> TagSet::parse_tag_string(std::string_view text) const {
  if (text == "I") return inside_index();
  if (text == "O") return outside_index();
  return find_label(text);
}

std::vector<std::string> TagSet::tag_order() const {
  std::vector<std::string> out = labels_;
  out.emplace_back("I");
  out.emplace_back("O");
  return out;
}

std::vector<std::size_t> TagSet::indices_of(std::span<const SbioTag> tags) const {
  std::vector<std::size_t> out;
  out.reserve(tags.size());
  for (const auto& t : tags) out.push_back(index_of(t));
  return out;
}

TagSequence TagSet::tags_at(std::span<const std::size_t> indices) const {
  TagSequence out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(tag_at(i));
  return out;
}

TagSequence spans_to_sbio(std::size_t token_count, std::span<const Span> spans) {
  TagSequence tags(token_count, SbioTag::outside());
  std::vector<bool> covered(token_count, false);
  for (const auto& span : spans) {
    if (span.start > span.end || span.end >= token_count)
      throw ValidationError("span " + span.label + "[" + std::to_string(span.start) + "," +
                            std::to_string(span.end) + "] out of range for " +
                            std::to_string(token_count) + " tokens");
    for (std::size_t i = span.start; i <= span.end; ++i) {
      if (covered[i]) throw ValidationError("overlapping spans at token " + std::to_string(i));
      covered[i] = true;
      tags[i] = i == span.start ? SbioTag::of_label(span.label) : SbioTag::inside();
    }
  }
  return tags;
}

std::vector<Span> sbio_to_spans(std::span<const SbioTag> tags) {
  require_valid_sbio(tags);
  std::vector<Span> spans;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    switch (tags[i].kind) {
      case TagKind::Label:
        spans.push_back({tags[i].label, i, i});
        break;
      case TagKind::Inside:
        spans.back().end = i;
        break;
      case TagKind::Outside:
        break;
    }
  }
  return spans;
}

TagSequence bio_to_sbio(std::span<const std::string> bio) {
  TagSequence out;
  out.reserve(bio.size());
  std::string open;  // label of the span the previous token belongs to
  for (std::size_t i = 0; i < bio.size(); ++i) {
    const auto& tag = bio[i];
    if (tag == "O") {
      out.push_back(SbioTag::outside());
      open.clear();
    } else if (starts_with(tag, "B-") && tag.size() > 2) {
      open = tag.substr(2);
      out.push_back(SbioTag::of_label(open));
    } else if (starts_with(tag, "I-") && tag.size() > 2) {
      if (open != tag.substr(2))
        throw ValidationError("ragged BIO: '" + tag + "' at position " + std::to_string(i) +
                              " does not continue a " + tag.substr(2) + " span");
      out.push_back(SbioTag::inside());
    } else {
      throw ValidationError("not a BIO tag: '" + tag + "' at position " + std::to_string(i));
    }
  }
  return out;
}

std::vector<std::string> sbio_to_bio(std::span<const SbioTag> tags) {
  require_valid_sbio(tags);
  std::vector<std::string> out;
  out.reserve(tags.size());
  std::string current;
  for (const auto& tag : tags) {
    switch (tag.kind) {
      case TagKind::Label:
        current = tag.label;
        out.push_back("B-" + current);
        break;
      case TagKind::Inside:
        out.push_back("I-" + current);
        break;
      case TagKind::Outside:
        out.emplace_back("O");
        break;
    }
  }
  return out;
}

bool is_valid_sbio(std::span<const SbioTag> tags) {
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (tags[i].kind == TagKind::Label && tags[i].label.empty()) return false;
    if (tags[i].kind == TagKind::Inside &&
        (i == 0 || tags[i - 1].kind == TagKind::Outside))
      return false;
  }
  return true;
}

void require_valid_sbio(std::span<const SbioTag> tags) {
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (tags[i].kind == TagKind::Label && tags[i].label.empty())
      throw ValidationError("empty label at position " + std::to_string(i));
    if (tags[i].kind != TagKind::Inside) continue;
    if (i == 0) throw ValidationError("invalid sBIO: I at position 0");
    if (tags[i - 1].kind == TagKind::Outside)
      throw ValidationError("invalid sBIO: I after O at position " + std::to_string(i));
  }
}

bool continuation_permitted(const TagSet& tag_set, std::optional<std::size_t> previous,
                            std::size_t next) {
  if (next != tag_set.inside_index()) return true;
  return previous.has_value() && *previous != tag_set.outside_index();
}

std::vector<bool> valid_next_tags(std::span<const SbioTag> prefix, const TagSet& tag_set) {
  std::optional<std::size_t> previous;
  if (!prefix.empty()) previous = tag_set.index_of(prefix.back());
  std::vector<bool> mask(tag_set.size());
  for (std::size_t t = 0; t < mask.size(); ++t)
    mask[t] = continuation_permitted(tag_set, previous, t);
  return mask;
}

std::uint64_t count_valid_sequences(std::size_t length, std::size_t label_count) {
  if (length == 0) return 1;
  // Split by whether the sequence ends in O (I forbidden next) or not.
  std::uint64_t ends_outside = 1;
  std::uint64_t ends_open = label_count;
  for (std::size_t i = 1; i < length; ++i) {
    const std::uint64_t outside = ends_outside + ends_open;
    const std::uint64_t open = ends_outside * label_count + ends_open * (label_count + 1);
    ends_outside = outside;
    ends_open = open;
  }
  return ends_outside + ends_open;
}

SentinelScheme::SentinelScheme(std::string pattern) : pattern_(std::move(pattern)) {
  const auto pos = pattern_.find("{k}");
  if (pos == std::string::npos || pattern_.find("{k}", pos + 3) != std::string::npos)
    throw ConfigError("sentinel pattern must contain exactly one {k}: '" + pattern_ + "'");
  prefix_ = pattern_.substr(0, pos);
  suffix_ = pattern_.substr(pos + 3);
  if (prefix_.empty() && suffix_.empty())
    throw ConfigError("sentinel pattern must contain text besides {k}");
  if (has_whitespace(pattern_)) throw ConfigError("sentinel pattern contains whitespace");
}

std::string SentinelScheme::sentinel(std::size_t k) const {
  return prefix_ + std::to_string(k) + suffix_;
}

std::optional<std::size_t> SentinelScheme::sentinel_index(std::string_view token) const {
  if (token.size() <= prefix_.size() + suffix_.size()) return std::nullopt;
  if (token.substr(0, prefix_.size()) != prefix_) return std::nullopt;
  if (token.substr(token.size() - suffix_.size()) != suffix_) return std::nullopt;
  const auto digits = token.substr(prefix_.size(), token.size() - prefix_.size() - suffix_.size());
  if (digits.size() > 1 && digits[0] == '0') return std::nullopt;
  if (digits.size() > 9) return std::nullopt;
  std::size_t k = 0;
  for (char c : digits) {
    if (c < '0' || c > '9') return std::nullopt;
    k = k * 10 + static_cast<std::size_t>(c - '0');
  }
  return k;
}

std::vector<std::string> split_whitespace(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string encode_input(std::span<const std::string> tokens, const SentinelScheme& scheme,
                         FormatVariant variant) {
  if (tokens.empty()) throw ValidationError("encode_input: empty token sequence");
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].empty() || has_whitespace(tokens[i]))
      throw ValidationError("encode_input: token " + std::to_string(i) + " is not a word");
    if (scheme.is_sentinel(tokens[i]))
      throw ValidationError("encode_input: token '" + tokens[i] + "' collides with a sentinel");
    if (i > 0) out += ' ';
    out += scheme.sentinel(i);
    out += ' ';
    out += tokens[i];
  }
  if (variant == FormatVariant::SenTPrime) {
    out += ' ';
    out += scheme.sentinel(tokens.size());
  }
  return out;
}

std::string encode_target(std::span<const SbioTag> tags, const SentinelScheme& scheme,
                          FormatVariant variant) {
  if (tags.empty()) throw ValidationError("encode_target: empty tag sequence");
  require_valid_sbio(tags);
  std::string out;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const auto text = tags[i].str();
    if (scheme.is_sentinel(text))
      throw ValidationError("encode_target: label '" + text + "' collides with a sentinel");
    if (i > 0) out += ' ';
    out += scheme.sentinel(i);
    out += ' ';
    out += text;
  }
  if (variant == FormatVariant::SenTPrime) {
    out += ' ';
    out += scheme.sentinel(tags.size());
  }
  return out;
}

ParsedOutput parse_output(std::string_view output, std::size_t token_count,
                          const TagSet& tag_set, const SentinelScheme& scheme,
                          FormatVariant variant, bool require_valid) {
  using Kind = OutputParseError::Kind;
  const auto pieces = split_whitespace(output);
  const std::size_t expected =
      2 * token_count + (variant == FormatVariant::SenTPrime ? 1 : 0);
  // Walk what is there first so that a wrong sentinel or an unknown tag is
  // reported at its position even when the count is also off.
  TagSequence tags;
  tags.reserve(token_count);
  const std::size_t walk = std::min(pieces.size(), expected);
  for (std::size_t p = 0; p < walk; ++p) {
    if (p % 2 == 0) {
      const auto want = p / 2;
      const auto got = scheme.sentinel_index(pieces[p]);
      if (!got || *got != want)
        return OutputParseError{Kind::WrongSentinel, p,
                                "expected " + scheme.sentinel(want) + ", found '" + pieces[p] + "'"};
    } else {
      const auto idx = tag_set.parse_tag_string(pieces[p]);
      if (!idx)
        return OutputParseError{Kind::UnknownTag, p, "unknown tag '" + pieces[p] + "'"};
      tags.push_back(tag_set.tag_at(*idx));
    }
  }
  if (pieces.size() != expected)
    return OutputParseError{Kind::WrongTokenCount, walk,
                            "expected " + std::to_string(expected) + " tokens, found " +
                                std::to_string(pieces.size())};
  if (require_valid) {
    for (std::size_t i = 0; i < tags.size(); ++i) {
      if (tags[i].kind == TagKind::Inside &&
          (i == 0 || tags[i - 1].kind == TagKind::Outside))
        return OutputParseError{Kind::InvalidSequence, 2 * i + 1,
                                "I cannot follow " + std::string(i == 0 ? "the start" : "O")};
    }
  }
  return tags;
}

}  // namespace sentscore
