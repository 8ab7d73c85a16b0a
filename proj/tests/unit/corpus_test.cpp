#include "sentscore/corpus.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "sentscore/error.hpp"
#include "support/public_datasets.hpp"

namespace sentscore {
namespace {

Sentence make(std::string id, std::vector<std::string> tokens, TagSequence tags) {
  return Sentence{std::move(id), std::move(tokens), std::move(tags)};
}

std::set<std::string> ids_of(const DatasetSplit& s) {
  std::set<std::string> out;
  for (const auto& x : s.sentences) out.insert(x.id);
  return out;
}

TEST(Conll, ParsesTwoSentences) {
  std::istringstream in("play\tO\nwow\tTRACK\n\nhi  O\nthere O\n");
  const auto split = read_conll(in, "f.txt");
  ASSERT_EQ(split.size(), 2u);
  EXPECT_EQ(split.sentences[0].id, "f.txt:0");
  EXPECT_EQ(split.sentences[1].tokens, (std::vector<std::string>{"hi", "there"}));
  EXPECT_EQ((*split.sentences[0].gold_tags)[1], SbioTag::of_label("TRACK"));
}

TEST(Conll, BioIsDetectedAndConverted) {
  std::istringstream in("wow B-TRACK\ntheodore I-TRACK\nby O\n");
  const auto split = read_conll(in, "bio");
  const TagSequence expected{SbioTag::of_label("TRACK"), SbioTag::inside(), SbioTag::outside()};
  EXPECT_EQ(*split.sentences[0].gold_tags, expected);
}

TEST(Conll, Errors) {
  std::istringstream ragged("wow B-TRACK\ntheodore I-ARTIST\n");
  try {
    read_conll(ragged, "r");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("r:0"), std::string::npos) << e.what();
  }
  std::istringstream bad_fields("a O\nb O extra\n");
  try {
    read_conll(bad_fields, "b");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(load_conll("/nonexistent/file.conll"), IoError);
}

TEST(Conll, SaveLoadRoundTrip) {
  const auto d = generate_synthetic({.grammar_seed = 5, .train = 30, .dev = 0, .test = 0});
  DatasetSplit split = d.train;
  // Ids are positional in the loaded file, so rename to match.
  for (std::size_t i = 0; i < split.size(); ++i) split.sentences[i].id = "rt.conll:" + std::to_string(i);
  const auto dir = std::filesystem::temp_directory_path() / "sentscore_corpus_test";
  std::filesystem::create_directories(dir);
  for (auto enc : {TagEncoding::Sbio, TagEncoding::Bio}) {
    save_conll(dir / "rt.conll", split, enc);
    EXPECT_EQ(load_conll(dir / "rt.conll"), split);
  }
  std::filesystem::remove_all(dir);
}

TEST(Downsample, CountsAndEdgeCases) {
  const auto d = generate_synthetic({.grammar_seed = 1, .train = 4478, .dev = 0, .test = 0,
                                     .lexicon_size = 40});
  const auto p = downsample(d.train, 100, 3);
  EXPECT_EQ(p.gold.size(), 100u);
  EXPECT_EQ(p.remainder.size(), 4378u);
  const auto all = downsample(d.train, d.train.size(), 3);
  EXPECT_EQ(all.gold, d.train);
  EXPECT_TRUE(all.remainder.empty());
  EXPECT_THROW(downsample(d.train, 4479, 3), SizeError);
  EXPECT_EQ(ids_of(downsample(d.train, 100, 3).gold), ids_of(p.gold));
  EXPECT_NE(ids_of(downsample(d.train, 100, 4).gold), ids_of(p.gold));
}

TEST(Downsample, PartitionProperty) {
  const auto d = generate_synthetic({.grammar_seed = 2, .train = 120, .dev = 0, .test = 0});
  std::mt19937_64 gen(9);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = gen() % (d.train.size() + 1);
    const auto p = downsample(d.train, n, gen());
    ASSERT_EQ(p.gold.size(), n);
    ASSERT_EQ(p.gold.size() + p.remainder.size(), d.train.size());
    std::set<std::string> g = ids_of(p.gold), r = ids_of(p.remainder), u;
    u.insert(g.begin(), g.end());
    u.insert(r.begin(), r.end());
    EXPECT_EQ(u, ids_of(d.train));
    for (const auto& id : g) EXPECT_FALSE(r.count(id));
    // Both halves keep source order.
    for (const auto* half : {&p.gold, &p.remainder}) {
      long last = -1;
      for (const auto& s : half->sentences) {
        const long pos = std::stol(s.id.substr(s.id.find(':') + 1));
        EXPECT_GT(pos, last);
        last = pos;
      }
    }
  }
}

// Shuffling the input order of the split does not change which ids are drawn.
TEST(Downsample, IndependentOfSourceOrder) {
  const auto d = generate_synthetic({.grammar_seed = 2, .train = 60, .dev = 0, .test = 0});
  DatasetSplit reversed = d.train;
  std::reverse(reversed.sentences.begin(), reversed.sentences.end());
  EXPECT_EQ(ids_of(downsample(d.train, 20, 7).gold), ids_of(downsample(reversed, 20, 7).gold));
}

Dataset small_dataset() {
  const TagSequence t1{SbioTag::outside(), SbioTag::of_label("A")};
  const TagSequence t2{SbioTag::of_label("A"), SbioTag::inside()};
  DatasetSplit train{SplitName::Train,
                     {make("tr0", {"x", "y"}, t1), make("tr1", {"p", "q"}, t2),
                      make("tr2", {"x", "y"}, t1), make("tr3", {"p", "q"}, t1)}};
  DatasetSplit dev{SplitName::Dev, {make("dv0", {"p", "q"}, t2), make("dv1", {"m", "n"}, t1)}};
  DatasetSplit test{SplitName::Test, {make("te0", {"x", "y"}, t1), make("te1", {"x", "y"}, t1),
                                      make("te2", {"z", "w"}, t2)}};
  return make_dataset(train, dev, test);
}

TEST(Dedup, Rules) {
  const auto d = small_dataset();
  const auto out = dedup(d);
  // tr0/tr2 duplicate te0; tr1 duplicates dv0; tr3 has conflicting tags and stays.
  EXPECT_EQ(ids_of(out.train), (std::set<std::string>{"tr3"}));
  EXPECT_EQ(ids_of(out.dev), (std::set<std::string>{"dv0", "dv1"}));
  EXPECT_EQ(ids_of(out.test), (std::set<std::string>{"te0", "te2"}));

  const auto train_first = dedup(d, {SplitName::Train, SplitName::Dev, SplitName::Test});
  EXPECT_EQ(ids_of(train_first.train), (std::set<std::string>{"tr0", "tr1", "tr3"}));
  EXPECT_EQ(ids_of(train_first.test), (std::set<std::string>{"te2"}));
  EXPECT_THROW(dedup(d, {SplitName::Train, SplitName::Train, SplitName::Test}), ConfigError);

  const auto clean = generate_synthetic({.grammar_seed = 3, .train = 20, .dev = 5, .test = 5,
                                         .lexicon_size = 2000});
  const auto cleaned = dedup(clean);
  EXPECT_EQ(dedup(cleaned).train, cleaned.train);
}

TEST(Dedup, IdempotentAndPreservesTest) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    // A tiny lexicon forces many collisions.
    const auto d = generate_synthetic({.grammar_seed = seed, .train = 300, .dev = 60, .test = 60,
                                       .tag_count = 2, .lexicon_size = 2, .max_span_length = 1,
                                       .templates_per_label = 1});
    const auto once = dedup(d);
    const auto twice = dedup(once);
    EXPECT_EQ(once.train, twice.train);
    EXPECT_EQ(once.dev, twice.dev);
    EXPECT_EQ(once.test, twice.test);
    std::set<std::pair<std::vector<std::string>, std::string>> test_keys, kept_keys;
    auto key = [](const Sentence& s) {
      std::string tags;
      for (const auto& t : *s.gold_tags) tags += t.str() + " ";
      return std::make_pair(s.tokens, tags);
    };
    for (const auto& s : d.test.sentences) test_keys.insert(key(s));
    for (const auto& s : once.test.sentences) kept_keys.insert(key(s));
    EXPECT_EQ(kept_keys, test_keys);
    EXPECT_EQ(once.test.size(), test_keys.size());
    // No key survives in two splits.
    std::set<std::pair<std::vector<std::string>, std::string>> seen;
    for (const auto* split : {&once.train, &once.dev, &once.test})
      for (const auto& s : split->sentences) EXPECT_TRUE(seen.insert(key(s)).second);
  }
}

TEST(Stats, Counts) {
  EXPECT_EQ(stats(Dataset{}), DatasetStats{});
  const auto d = small_dataset();
  EXPECT_EQ(stats(d), (DatasetStats{4, 2, 3, 1}));
}

TEST(Synthetic, ShapeDeterminismValidity) {
  const SyntheticSpec spec{.grammar_seed = 11, .train = 200, .dev = 50, .test = 50, .tag_count = 3};
  const auto a = generate_synthetic(spec);
  EXPECT_EQ(a.tag_set.size(), 5u);
  EXPECT_EQ(stats(a), (DatasetStats{200, 50, 50, 3}));
  const auto b = generate_synthetic(spec);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  for (const auto* split : {&a.train, &a.dev, &a.test}) {
    EXPECT_NO_THROW(validate(*split));
    for (const auto& s : split->sentences) {
      EXPECT_TRUE(is_valid_sbio(*s.gold_tags));
      for (const auto& t : *s.gold_tags)
        if (t.kind == TagKind::Label) EXPECT_TRUE(a.tag_set.find_label(t.label).has_value());
    }
  }
  EXPECT_THROW(generate_synthetic({.tag_count = 0}), ConfigError);
  const auto big = generate_synthetic({.grammar_seed = 1, .train = 10, .dev = 1, .test = 1,
                                       .tag_count = 14});
  EXPECT_EQ(big.tag_set.label_count(), 14u);
}

// Published counts, checked only when a dataset directory is supplied.
TEST(Stats, PublicDatasetsWhenAvailable) {
  const char* root = std::getenv("SENTSCORE_DATA_DIR");
  if (!root) GTEST_SKIP() << "SENTSCORE_DATA_DIR not set";
  int checked = 0;
  for (const auto& e : testing::kPublicDatasets) {
    const auto dir = std::filesystem::path(root) / e.dir;
    if (!std::filesystem::exists(dir / "train.conll")) continue;
    const auto d = make_dataset(load_conll(dir / "train.conll", SplitName::Train),
                                load_conll(dir / "dev.conll", SplitName::Dev),
                                load_conll(dir / "test.conll", SplitName::Test));
    EXPECT_EQ(stats(d), e.counts) << e.dir;
    ++checked;
  }
  if (checked == 0) GTEST_SKIP() << "no known dataset under " << root;
}

}  // namespace
}  // namespace sentscore
