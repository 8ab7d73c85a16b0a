#include "sentscore/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <unordered_set>

#include "sentscore/error.hpp"
#include "sentscore/random.hpp"

namespace sentscore {

std::string_view to_string(SplitName name) {
  switch (name) {
    case SplitName::Train:
      return "train";
    case SplitName::Dev:
      return "dev";
    case SplitName::Test:
      break;
  }
  return "test";
}

SplitName parse_split_name(std::string_view text) {
  if (text == "train") return SplitName::Train;
  if (text == "dev") return SplitName::Dev;
  if (text == "test") return SplitName::Test;
  throw ConfigError("unknown split name '" + std::string(text) + "'");
}

const DatasetSplit& Dataset::split(SplitName name) const {
  switch (name) {
    case SplitName::Train:
      return train;
    case SplitName::Dev:
      return dev;
    case SplitName::Test:
      break;
  }
  return test;
}

DatasetSplit& Dataset::split(SplitName name) {
  return const_cast<DatasetSplit&>(std::as_const(*this).split(name));
}

void validate(const DatasetSplit& split) {
  std::unordered_set<std::string> ids;
  for (const auto& s : split.sentences) {
    if (!ids.insert(s.id).second)
      throw ValidationError("duplicate sentence id '" + s.id + "' in " +
                            std::string(to_string(split.name)));
    if (s.tokens.empty()) throw ValidationError("sentence '" + s.id + "' has no tokens");
    for (const auto& tok : s.tokens) {
      if (tok.empty() || split_whitespace(tok).size() != 1)
        throw ValidationError("sentence '" + s.id + "' has a malformed token");
    }
    if (s.gold_tags) {
      if (s.gold_tags->size() != s.tokens.size())
        throw ValidationError("sentence '" + s.id + "': tag count differs from token count");
      try {
        require_valid_sbio(*s.gold_tags);
      } catch (const ValidationError& e) {
        throw ValidationError("sentence '" + s.id + "': " + e.what());
      }
    }
  }
}

TagSet derive_tag_set(std::initializer_list<const DatasetSplit*> splits) {
  std::vector<std::string> labels;
  std::unordered_set<std::string> seen;
  for (const auto* split : splits) {
    for (const auto& s : split->sentences) {
      if (!s.gold_tags) continue;
      for (const auto& t : *s.gold_tags)
        if (t.kind == TagKind::Label && seen.insert(t.label).second) labels.push_back(t.label);
    }
  }
  return TagSet(std::move(labels));
}

Dataset make_dataset(DatasetSplit train, DatasetSplit dev, DatasetSplit test) {
  Dataset d;
  d.train = std::move(train);
  d.dev = std::move(dev);
  d.test = std::move(test);
  d.train.name = SplitName::Train;
  d.dev.name = SplitName::Dev;
  d.test.name = SplitName::Test;
  d.tag_set = derive_tag_set({&d.train, &d.dev, &d.test});
  return d;
}

namespace {

struct RawSentence {
  std::vector<std::string> tokens;
  std::vector<std::string> tags;
  std::size_t first_line = 0;
};

bool looks_like_bio(const std::string& tag) {
  return tag.size() > 2 && (tag.compare(0, 2, "B-") == 0 || tag.compare(0, 2, "I-") == 0);
}

TagSequence parse_sbio_strings(const std::vector<std::string>& tags) {
  TagSequence out;
  out.reserve(tags.size());
  for (const auto& t : tags) {
    if (t == "I")
      out.push_back(SbioTag::inside());
    else if (t == "O")
      out.push_back(SbioTag::outside());
    else
      out.push_back(SbioTag::of_label(t));
  }
  return out;
}

}  // namespace

DatasetSplit read_conll(std::istream& in, std::string_view source_name, SplitName name) {
  std::vector<RawSentence> raw;
  RawSentence current;
  std::string line;
  std::size_t line_no = 0;
  bool any_bio = false;
  auto flush = [&] {
    if (!current.tokens.empty()) raw.push_back(std::move(current));
    current = RawSentence{};
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto fields = split_whitespace(line);
    if (fields.empty()) {
      flush();
      continue;
    }
    if (fields.size() != 2)
      throw FormatError("expected `token<TAB>tag`, found " + std::to_string(fields.size()) +
                            " fields",
                        line_no);
    if (current.tokens.empty()) current.first_line = line_no;
    current.tokens.push_back(fields[0]);
    current.tags.push_back(fields[1]);
    any_bio = any_bio || looks_like_bio(fields[1]);
  }
  flush();

  DatasetSplit split{name, {}};
  split.sentences.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    Sentence s;
    s.id = std::string(source_name) + ":" + std::to_string(i);
    s.tokens = std::move(raw[i].tokens);
    try {
      s.gold_tags = any_bio ? bio_to_sbio(raw[i].tags) : parse_sbio_strings(raw[i].tags);
      require_valid_sbio(*s.gold_tags);
    } catch (const ValidationError& e) {
      throw ValidationError("sentence '" + s.id + "' (line " + std::to_string(raw[i].first_line) +
                            "): " + e.what());
    }
    split.sentences.push_back(std::move(s));
  }
  return split;
}

DatasetSplit load_conll(const std::filesystem::path& path, SplitName name) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_conll(in, path.filename().string(), name);
}

void write_conll(std::ostream& out, const DatasetSplit& split, TagEncoding encoding) {
  bool first = true;
  for (const auto& s : split.sentences) {
    if (!s.gold_tags) throw ContractError("write_conll: sentence '" + s.id + "' has no tags");
    if (!first) out << '\n';
    first = false;
    std::vector<std::string> tags;
    if (encoding == TagEncoding::Bio) {
      tags = sbio_to_bio(*s.gold_tags);
    } else {
      for (const auto& t : *s.gold_tags) tags.push_back(t.str());
    }
    for (std::size_t i = 0; i < s.tokens.size(); ++i) out << s.tokens[i] << '\t' << tags[i] << '\n';
  }
}

void save_conll(const std::filesystem::path& path, const DatasetSplit& split,
                TagEncoding encoding) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_conll(out, split, encoding);
}

Partition downsample(const DatasetSplit& split, std::size_t n, std::uint64_t seed) {
  if (n > split.size())
    throw SizeError("downsample: requested " + std::to_string(n) + " of " +
                    std::to_string(split.size()) + " sentences");
  std::vector<std::string> ids;
  ids.reserve(split.size());
  for (const auto& s : split.sentences) ids.push_back(s.id);
  std::sort(ids.begin(), ids.end());
  Rng rng(seed);
  rng.shuffle(ids);
  const std::unordered_set<std::string> chosen(ids.begin(), ids.begin() + static_cast<long>(n));

  Partition p{{split.name, {}}, {split.name, {}}};
  p.gold.sentences.reserve(n);
  p.remainder.sentences.reserve(split.size() - n);
  for (const auto& s : split.sentences)
    (chosen.count(s.id) ? p.gold : p.remainder).sentences.push_back(s);
  return p;
}

Dataset dedup(const Dataset& dataset, SplitPriority priority) {
  {
    auto sorted = priority;
    std::sort(sorted.begin(), sorted.end());
    if (sorted != SplitPriority{SplitName::Train, SplitName::Dev, SplitName::Test})
      throw ConfigError("dedup priority must be a permutation of test, dev, train");
  }
  using Key = std::pair<std::vector<std::string>, std::vector<std::string>>;
  auto key_of = [](const Sentence& s) {
    Key k{s.tokens, {}};
    if (s.gold_tags)
      for (const auto& t : *s.gold_tags) k.second.push_back(t.str());
    else
      k.second.emplace_back("\x01");  // unlabelled never equals labelled
    return k;
  };

  Dataset out;
  out.tag_set = dataset.tag_set;
  std::set<Key> claimed;
  for (SplitName name : priority) {
    const auto& src = dataset.split(name);
    auto& dst = out.split(name);
    dst.name = name;
    for (const auto& s : src.sentences)
      if (claimed.insert(key_of(s)).second) dst.sentences.push_back(s);
  }
  return out;
}

DatasetStats stats(const Dataset& dataset) {
  return {dataset.train.size(), dataset.dev.size(), dataset.test.size(),
          dataset.tag_set.label_count()};
}

// ---------------------------------------------------------------------------
// Synthetic corpus

namespace {

constexpr std::array<std::string_view, 12> kLabelNames{
    "TRACK", "ARTIST", "PLAYLIST", "CITY", "TIME", "GENRE",
    "SERVICE", "ALBUM", "COUNTRY", "CUISINE", "DATE", "PARTY"};
constexpr std::array<std::string_view, 12> kVerbs{
    "play", "add", "find", "show", "book", "set", "tell", "put", "get", "search", "rate", "open"};
constexpr std::array<std::string_view, 14> kConnectors{
    "by", "to", "in", "for", "from", "at", "on", "with", "about", "near", "after", "called",
    "into", "under"};
constexpr std::array<std::string_view, 5> kOpeners{"please", "can", "could", "hey", "now"};
constexpr std::array<std::string_view, 4> kDeterminers{"the", "a", "my", "some"};

std::string pseudo_word(Rng& rng) {
  static constexpr std::string_view consonants = "bdfgklmnprstvz";
  static constexpr std::string_view vowels = "aeiou";
  std::string w;
  const auto syllables = 2 + rng.index(2);
  for (std::uint64_t i = 0; i < syllables; ++i) {
    w += consonants[rng.index(consonants.size())];
    w += vowels[rng.index(vowels.size())];
  }
  if (rng.bernoulli(0.3)) w += consonants[rng.index(consonants.size())];
  return w;
}

struct Slot {
  std::size_t label;
  std::string connector;  // empty: determiner instead
  bool open = false;      // label drawn per sentence
};

struct Template {
  std::string verb;
  std::vector<Slot> slots;
};

}  // namespace

void SyntheticSpec::validate() const {
  if (tag_count == 0) throw ConfigError("synthetic corpus needs tag_count >= 1");
  if (lexicon_size == 0 || max_span_length == 0 || templates_per_label == 0)
    throw ConfigError("synthetic corpus: lexicon_size, max_span_length and "
                      "templates_per_label must be positive");
  if (!(open_slot_rate >= 0.0 && open_slot_rate <= 1.0) ||
      !(shared_word_rate >= 0.0 && shared_word_rate <= 1.0))
    throw ConfigError("synthetic corpus: rates must lie in [0, 1]");
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(derive_seed(spec.grammar_seed, "synthetic-grammar"));

  std::vector<std::string> labels;
  for (std::size_t i = 0; i < spec.tag_count; ++i)
    labels.push_back(i < kLabelNames.size() ? std::string(kLabelNames[i])
                                            : "SLOT" + std::to_string(i));

  // Private word pools, disjoint from each other and from the carrier words.
  std::unordered_set<std::string> taken;
  for (auto w : kVerbs) taken.emplace(w);
  for (auto w : kConnectors) taken.emplace(w);
  for (auto w : kOpeners) taken.emplace(w);
  for (auto w : kDeterminers) taken.emplace(w);
  const std::size_t pool_size = spec.lexicon_size * 2;
  std::vector<std::vector<std::string>> pools(spec.tag_count);
  for (auto& pool : pools) {
    while (pool.size() < pool_size) {
      auto w = pseudo_word(rng);
      if (taken.insert(w).second) pool.push_back(std::move(w));
    }
  }

  std::vector<std::vector<std::vector<std::string>>> lexicons(spec.tag_count);
  for (std::size_t label = 0; label < spec.tag_count; ++label) {
    auto& lex = lexicons[label];
    std::set<std::vector<std::string>> unique;
    while (lex.size() < spec.lexicon_size) {
      const double r = rng.uniform();
      std::size_t length = r < 0.5 ? 1 : (r < 0.8 ? 2 : 3);
      length = std::min(length, spec.max_span_length);
      std::vector<std::string> entry;
      for (std::size_t w = 0; w < length; ++w) {
        std::size_t from = label;
        if (spec.tag_count > 1 && rng.bernoulli(spec.shared_word_rate))
          from = (label + 1 + rng.index(spec.tag_count - 1)) % spec.tag_count;
        entry.push_back(pools[from][rng.index(pools[from].size())]);
      }
      if (unique.insert(entry).second) lex.push_back(std::move(entry));
    }
  }

  // Each label prefers two connectors; templates combine a verb with 1-3 slots.
  std::vector<std::array<std::string, 2>> label_connectors(spec.tag_count);
  for (std::size_t label = 0; label < spec.tag_count; ++label)
    for (std::size_t j = 0; j < 2; ++j)
      label_connectors[label][j] = std::string(kConnectors[(2 * label + j) % kConnectors.size()]);

  std::vector<Template> templates;
  const std::size_t template_count = spec.templates_per_label * spec.tag_count;
  for (std::size_t t = 0; t < template_count; ++t) {
    Template tpl;
    tpl.verb = std::string(kVerbs[rng.index(kVerbs.size())]);
    const std::size_t slot_count = 1 + rng.index(std::min<std::size_t>(3, spec.tag_count));
    std::vector<std::size_t> order(spec.tag_count);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    // Round-robin the first slot so every label is reachable.
    auto first = std::find(order.begin(), order.end(), t % spec.tag_count);
    std::iter_swap(order.begin(), first);
    for (std::size_t s = 0; s < slot_count; ++s) {
      Slot slot{order[s], {}};
      if (spec.open_slot_rate > 0.0 && rng.bernoulli(spec.open_slot_rate))
        slot.open = true;
      else if (s > 0 || rng.bernoulli(0.5))
        slot.connector = label_connectors[slot.label][rng.index(2)];
      tpl.slots.push_back(std::move(slot));
    }
    templates.push_back(std::move(tpl));
  }

  auto make_sentence = [&](Rng& r, std::string id) {
    const auto& tpl = templates[r.index(templates.size())];
    Sentence s;
    s.id = std::move(id);
    TagSequence tags;
    auto push = [&](std::string word, SbioTag tag) {
      s.tokens.push_back(std::move(word));
      tags.push_back(std::move(tag));
    };
    if (r.bernoulli(0.2)) push(std::string(kOpeners[r.index(kOpeners.size())]), SbioTag::outside());
    push(tpl.verb, SbioTag::outside());
    for (const auto& slot : tpl.slots) {
      if (!slot.connector.empty())
        push(slot.connector, SbioTag::outside());
      if (slot.connector.empty() || r.bernoulli(0.3))
        push(std::string(kDeterminers[r.index(kDeterminers.size())]), SbioTag::outside());
      const std::size_t label = slot.open ? r.index(spec.tag_count) : slot.label;
      const auto& entry = lexicons[label][r.index(lexicons[label].size())];
      for (std::size_t w = 0; w < entry.size(); ++w)
        push(entry[w], w == 0 ? SbioTag::of_label(labels[label]) : SbioTag::inside());
    }
    if (r.bernoulli(0.15)) push("please", SbioTag::outside());
    s.gold_tags = std::move(tags);
    return s;
  };

  auto make_split = [&](SplitName name, std::size_t n) {
    Rng r(derive_seed(spec.grammar_seed, std::string("synthetic-") + std::string(to_string(name))));
    DatasetSplit split{name, {}};
    split.sentences.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
      split.sentences.push_back(
          make_sentence(r, "synthetic-" + std::string(to_string(name)) + ":" + std::to_string(i)));
    return split;
  };

  Dataset d;
  d.train = make_split(SplitName::Train, spec.train);
  d.dev = make_split(SplitName::Dev, spec.dev);
  d.test = make_split(SplitName::Test, spec.test);
  // Canonical label order is the generator's, not first appearance.
  d.tag_set = TagSet(labels);
  return d;
}

}  // namespace sentscore
