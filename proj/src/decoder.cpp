#include "sentscore/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

#include "sentscore/error.hpp"
#include "sentscore/nn/losses.hpp"

namespace sentscore {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// NaN never wins and never breaks the ordering.
double sanitize(double s) { return std::isnan(s) ? kNegInf : s; }

struct Entry {
  TagSequence tags;
  std::string text;
  ScoreMatrix rows;
  double score = 0.0;
};

struct Hypothesis {
  double score;
  std::size_t tag;
  std::size_t parent;
};

bool ranks_before(const Hypothesis& a, const Hypothesis& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.tag != b.tag) return a.tag < b.tag;
  return a.parent < b.parent;
}

bool permitted(const TagSequence& prefix, const TagSet& tag_set, std::size_t tag, bool constrain) {
  if (!constrain) return true;
  return tag != tag_set.inside_index() ||
         (!prefix.empty() && prefix.back().kind != TagKind::Outside);
}

}  // namespace

void BeamConfig::validate() const {
  if (beam_size == 0) throw ConfigError("beam size must be at least 1");
}

std::string hypothesis_string(std::span<const SbioTag> tags, const SentinelScheme& scheme) {
  std::string out = scheme.sentinel(0);
  for (std::size_t i = 0; i < tags.size(); ++i) {
    out += ' ';
    out += tags[i].str();
    out += ' ';
    out += scheme.sentinel(i + 1);
  }
  return out;
}

DecodeResult sentscore_beam(const Scorer& scorer, std::span<const std::string> tokens,
                            const TagSet& tag_set, const BeamConfig& config,
                            const SentinelScheme& scheme) {
  config.validate();
  if (tokens.empty()) throw ContractError("sentscore_beam: empty sentence");
  const std::string input = encode_input(tokens, scheme, FormatVariant::SenTPrime);
  const std::size_t width = tag_set.size();
  std::vector<std::string> tag_strings;
  for (std::size_t t = 0; t < width; ++t) tag_strings.push_back(tag_set.tag_string(t));

  DecodeResult result;
  std::vector<Entry> beam(1);
  beam[0].text = scheme.sentinel(0);

  std::vector<std::string> candidates;
  std::vector<std::pair<std::size_t, std::size_t>> owners;  // (parent, tag) per candidate
  for (std::size_t i = 1; i <= tokens.size(); ++i) {
    const std::string sentinel = scheme.sentinel(i);
    candidates.clear();
    owners.clear();
    for (std::size_t p = 0; p < beam.size(); ++p)
      for (std::size_t t = 0; t < width; ++t) {
        if (!permitted(beam[p].tags, tag_set, t, config.constrain_sbio)) continue;
        candidates.push_back(beam[p].text + ' ' + tag_strings[t] + ' ' + sentinel);
        owners.emplace_back(p, t);
      }
    const auto scores = scorer.score_batch(input, candidates);
    if (scores.size() != candidates.size())
      throw ContractError("scorer returned " + std::to_string(scores.size()) + " scores for " +
                          std::to_string(candidates.size()) + " candidates");
    result.hypotheses_scored += candidates.size();

    std::vector<std::vector<double>> rows(beam.size(), std::vector<double>(width, kNegInf));
    std::vector<Hypothesis> hyps;
    hyps.reserve(candidates.size());
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      const auto [p, t] = owners[c];
      rows[p][t] = sanitize(scores[c]);
      hyps.push_back({rows[p][t], t, p});
    }
    const std::size_t keep = std::min(config.beam_size, hyps.size());
    std::partial_sort(hyps.begin(), hyps.begin() + static_cast<std::ptrdiff_t>(keep), hyps.end(),
                      ranks_before);

    std::vector<Entry> next;
    next.reserve(keep);
    for (std::size_t k = 0; k < keep; ++k) {
      const auto& h = hyps[k];
      const Entry& parent = beam[h.parent];
      Entry e;
      e.tags = parent.tags;
      e.tags.push_back(tag_set.tag_at(h.tag));
      e.text = parent.text + ' ' + tag_strings[h.tag] + ' ' + sentinel;
      e.rows = parent.rows;
      e.rows.push_back(rows[h.parent]);
      e.score = h.score;
      next.push_back(std::move(e));
    }
    beam = std::move(next);
  }

  for (auto& e : beam) {
    result.sequences.push_back(std::move(e.tags));
    result.score_matrices.push_back(std::move(e.rows));
    result.final_scores.push_back(e.score);
  }
  return result;
}

GreedyResult greedy(const Scorer& scorer, std::span<const std::string> tokens,
                    const TagSet& tag_set, const SentinelScheme& scheme, bool constrain_sbio) {
  auto r = sentscore_beam(scorer, tokens, tag_set, {1, constrain_sbio, TieBreak::TagThenParent},
                          scheme);
  return {std::move(r.sequences.front()), std::move(r.score_matrices.front()),
          r.final_scores.front()};
}

OracleResult exhaustive_oracle(const Scorer& scorer, std::span<const std::string> tokens,
                               const TagSet& tag_set, const SentinelScheme& scheme,
                               bool constrain_sbio, std::uint64_t cap) {
  if (tokens.empty()) throw ContractError("exhaustive_oracle: empty sentence");
  const std::size_t width = tag_set.size();
  const std::size_t length = tokens.size();
  std::uint64_t total = 1;
  for (std::size_t i = 0; i < length; ++i) {
    if (total > cap / width) throw SizeError("exhaustive_oracle: |T̄|^L exceeds the cap");
    total *= width;
  }
  const std::string input = encode_input(tokens, scheme, FormatVariant::SenTPrime);

  // Under no pruning the beam ranks full hypotheses by
  // (score_L, t_L, score_{L-1}, t_{L-1}, ..., score_1, t_1), scores descending
  // and tags ascending; `key` holds that sequence from step 1 upward.
  struct Key {
    std::vector<double> scores;
    std::vector<std::size_t> tags;
  };
  auto better = [&](const Key& a, const Key& b) {
    for (std::size_t k = length; k-- > 0;) {
      if (a.scores[k] != b.scores[k]) return a.scores[k] > b.scores[k];
      if (a.tags[k] != b.tags[k]) return a.tags[k] < b.tags[k];
    }
    return false;
  };

  OracleResult best;
  std::optional<Key> best_key;
  Key key{std::vector<double>(length), std::vector<std::size_t>(length)};
  TagSequence prefix;
  std::vector<std::string> texts{scheme.sentinel(0)};

  auto visit = [&](auto&& self, std::size_t i) -> void {
    if (i == length) {
      ++best.enumerated;
      if (!best_key || better(key, *best_key)) {
        best_key = key;
        best.tags = prefix;
        best.score = key.scores[length - 1];
      }
      return;
    }
    for (std::size_t t = 0; t < width; ++t) {
      if (!permitted(prefix, tag_set, t, constrain_sbio)) continue;
      const std::string text =
          texts.back() + ' ' + tag_set.tag_string(t) + ' ' + scheme.sentinel(i + 1);
      key.scores[i] = sanitize(scorer.score(input, text));
      key.tags[i] = t;
      prefix.push_back(tag_set.tag_at(t));
      texts.push_back(text);
      self(self, i + 1);
      texts.pop_back();
      prefix.pop_back();
    }
  };
  visit(visit, 0);
  return best;
}

std::vector<double> step_distribution(std::span<const double> row, const std::vector<bool>& mask,
                                      double tau) {
  if (!(tau > 0.0)) throw ConfigError("temperature must be positive");
  if (!mask.empty() && mask.size() != row.size())
    throw ContractError("step_distribution: mask width differs from row width");
  std::vector<double> scaled(row.size(), kNegInf);
  bool any = false;
  for (std::size_t k = 0; k < row.size(); ++k) {
    if ((!mask.empty() && !mask[k]) || std::isnan(row[k]) || row[k] == kNegInf) continue;
    scaled[k] = row[k] / tau;
    any = true;
  }
  if (!any) throw ContractError("step_distribution: every continuation is masked");
  const double top = *std::max_element(scaled.begin(), scaled.end());
  if (std::isinf(top)) {
    std::vector<double> out(row.size(), 0.0);
    const auto n = static_cast<double>(std::count(scaled.begin(), scaled.end(), top));
    for (std::size_t k = 0; k < row.size(); ++k) out[k] = scaled[k] == top ? 1.0 / n : 0.0;
    return out;
  }
  return nn::softmax(scaled);
}

std::vector<bool> row_mask(std::span<const double> row) {
  std::vector<bool> mask(row.size());
  for (std::size_t k = 0; k < row.size(); ++k) mask[k] = !std::isnan(row[k]) && row[k] != kNegInf;
  return mask;
}

nlohmann::json to_json_line(const DecodedSentence& d) {
  nlohmann::json tags = nlohmann::json::array();
  for (const auto& t : d.tags) tags.push_back(t.str());
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : d.scores) {
    nlohmann::json r = nlohmann::json::array();
    for (double v : row) {
      if (std::isfinite(v))
        r.push_back(v);
      else
        r.push_back(nullptr);  // masked
    }
    rows.push_back(std::move(r));
  }
  return {{"id", d.id}, {"tokens", d.tokens}, {"tags", tags}, {"scores", rows},
          {"tag_order", d.tag_order}};
}

DecodedSentence decoded_from_json(const nlohmann::json& j, std::size_t line) {
  try {
    DecodedSentence d;
    d.id = j.at("id").get<std::string>();
    d.tokens = j.at("tokens").get<std::vector<std::string>>();
    d.tag_order = j.at("tag_order").get<std::vector<std::string>>();
    if (d.tag_order.size() < 2 || d.tag_order[d.tag_order.size() - 2] != "I" ||
        d.tag_order.back() != "O")
      throw FormatError("record '" + d.id + "': tag_order must end with I, O", line);
    const TagSet tag_set(std::vector<std::string>(d.tag_order.begin(), d.tag_order.end() - 2));
    for (const auto& t : j.at("tags")) {
      const auto tag = tag_set.parse_tag_string(t.get<std::string>());
      if (!tag) throw FormatError("record '" + d.id + "': unknown tag " + t.dump(), line);
      d.tags.push_back(tag_set.tag_at(*tag));
    }
    for (const auto& r : j.at("scores")) {
      std::vector<double> row;
      for (const auto& v : r) row.push_back(v.is_null() ? kNegInf : v.get<double>());
      if (row.size() != d.tag_order.size())
        throw FormatError("record '" + d.id + "': score row width differs from tag_order", line);
      d.scores.push_back(std::move(row));
    }
    if (d.tags.size() != d.tokens.size() || d.scores.size() != d.tokens.size())
      throw FormatError("record '" + d.id + "': tokens, tags and scores lengths differ", line);
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("decode record: ") + e.what(), line);
  } catch (const ValidationError& e) {
    throw FormatError(std::string("decode record: ") + e.what(), line);
  }
}

void write_decoded(std::ostream& out, std::span<const DecodedSentence> records) {
  for (const auto& r : records) out << to_json_line(r).dump() << '\n';
  if (!out) throw IoError("failed writing decode records");
}

std::vector<DecodedSentence> read_decoded(std::istream& in) {
  std::vector<DecodedSentence> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(std::string("invalid JSON: ") + e.what(), line);
    }
    out.push_back(decoded_from_json(j, line));
  }
  return out;
}

}  // namespace sentscore
