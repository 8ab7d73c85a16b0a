#pragma once

// Sequence-labelling datasets: CoNLL I/O, gold/pool splitting, cross-split
// deduplication, and a synthetic command-utterance generator.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sentscore/tags.hpp"

namespace sentscore {

struct Sentence {
  std::string id;
  std::vector<std::string> tokens;
  std::optional<TagSequence> gold_tags;

  std::size_t size() const noexcept { return tokens.size(); }
  friend bool operator==(const Sentence&, const Sentence&) = default;
};

enum class SplitName { Train, Dev, Test };

std::string_view to_string(SplitName name);
SplitName parse_split_name(std::string_view text);

struct DatasetSplit {
  SplitName name = SplitName::Train;
  std::vector<Sentence> sentences;

  std::size_t size() const noexcept { return sentences.size(); }
  bool empty() const noexcept { return sentences.empty(); }
  friend bool operator==(const DatasetSplit&, const DatasetSplit&) = default;
};

struct Dataset {
  DatasetSplit train{SplitName::Train, {}};
  DatasetSplit dev{SplitName::Dev, {}};
  DatasetSplit test{SplitName::Test, {}};
  TagSet tag_set;

  const DatasetSplit& split(SplitName name) const;
  DatasetSplit& split(SplitName name);
};

// Checks sentence invariants and id uniqueness; throws ValidationError.
void validate(const DatasetSplit& split);

// Labels in order of first appearance across the given splits.
TagSet derive_tag_set(std::initializer_list<const DatasetSplit*> splits);
Dataset make_dataset(DatasetSplit train, DatasetSplit dev, DatasetSplit test);

// CoNLL: one `token<TAB>tag` per line, blank line between sentences. Tags are
// read as BIO when any tag in the file has a B-/I- prefix, otherwise as sBIO.
DatasetSplit read_conll(std::istream& in, std::string_view source_name,
                        SplitName name = SplitName::Train);
DatasetSplit load_conll(const std::filesystem::path& path, SplitName name = SplitName::Train);

enum class TagEncoding { Sbio, Bio };
void write_conll(std::ostream& out, const DatasetSplit& split,
                 TagEncoding encoding = TagEncoding::Sbio);
void save_conll(const std::filesystem::path& path, const DatasetSplit& split,
                TagEncoding encoding = TagEncoding::Sbio);

struct Partition {
  DatasetSplit gold;
  DatasetSplit remainder;
};

// Uniform sample of n sentences without replacement. Both halves keep the
// source order. Throws SizeError when n exceeds the split.
Partition downsample(const DatasetSplit& split, std::size_t n, std::uint64_t seed);

using SplitPriority = std::array<SplitName, 3>;
inline constexpr SplitPriority kDefaultDedupPriority{SplitName::Test, SplitName::Dev,
                                                     SplitName::Train};

// A sentence keyed by (tokens, gold tags) that occurs in several splits stays
// only in the first split of `priority`; repeats within a split collapse to
// the first occurrence.
Dataset dedup(const Dataset& dataset, SplitPriority priority = kDefaultDedupPriority);

struct DatasetStats {
  std::size_t train = 0;
  std::size_t dev = 0;
  std::size_t test = 0;
  std::size_t tags = 0;  // |T|, excluding I and O
  friend bool operator==(const DatasetStats&, const DatasetStats&) = default;
};

DatasetStats stats(const Dataset& dataset);

struct SyntheticSpec {
  std::uint64_t grammar_seed = 0;
  std::size_t train = 2000;
  std::size_t dev = 200;
  std::size_t test = 400;
  std::size_t tag_count = 4;
  std::size_t lexicon_size = 120;     // entries per label
  std::size_t max_span_length = 3;    // words per lexicon entry
  std::size_t templates_per_label = 3;
  double shared_word_rate = 0.1;      // fraction of entries reusing another label's word
  // Template slots with no connector whose label is drawn per sentence, so
  // only the entity words tell the label apart.
  double open_slot_rate = 0.0;

  void validate() const;
};

Dataset generate_synthetic(const SyntheticSpec& spec);

}  // namespace sentscore
