#include "sentscore/decoder.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "sentscore/error.hpp"
#include "support/oracles.hpp"

namespace sentscore {
namespace {

using testing::ScoreStyle;

const std::vector<std::string> kTokens{"play", "wow", "by", "jon", "theodore"};
constexpr double kInf = std::numeric_limits<double>::infinity();

TagSequence table1_tags() {
  return {SbioTag::outside(), SbioTag::of_label("TRACK"), SbioTag::outside(),
          SbioTag::of_label("ARTIST"), SbioTag::inside()};
}

TEST(Beam, RiggedTableRecoversTable1Labelling) {
  const TagSet tags({"TRACK", "ARTIST"});
  const SentinelScheme scheme;
  const auto input = encode_input(kTokens, scheme);
  TableScorer table(-100.0);
  const auto gold = table1_tags();
  for (std::size_t i = 1; i <= gold.size(); ++i) {
    const auto prefix = std::span<const SbioTag>(gold).first(i);
    table.set(input, hypothesis_string(prefix, scheme), -static_cast<double>(i));
  }
  for (std::size_t k : {1u, 3u, 12u}) {
    const auto r = sentscore_beam(table, kTokens, tags, {k, true, TieBreak::TagThenParent});
    EXPECT_EQ(r.sequences.front(), gold) << "K=" << k;
    EXPECT_DOUBLE_EQ(r.final_scores.front(), -5.0);
    EXPECT_EQ(hypothesis_string(r.sequences.front(), scheme), encode_target(gold, scheme));
  }
}

TEST(Beam, ConstantScorerFallsToTieBreakMinimum) {
  const TagSet tags({"TRACK", "ARTIST"});
  const TableScorer constant(0.0);
  const auto r = greedy(constant, kTokens, tags);
  // First position: TRACK has the lowest index; afterwards Inside never beats
  // TRACK on index, so TRACK repeats.
  EXPECT_EQ(r.tags, TagSequence(5, SbioTag::of_label("TRACK")));
  EXPECT_TRUE(is_valid_sbio(r.tags));
}

TEST(Beam, ScoresKTimesWidthHypothesesPerStep) {
  const TagSet tags({"A", "B"});
  const testing::HashScorer scorer(1, ScoreStyle::Continuous);
  const std::vector<std::string> tokens{"a", "b", "c", "d"};
  const auto r = sentscore_beam(scorer, tokens, tags, {3, false, TieBreak::TagThenParent});
  // Unconstrained: 4 + 12 + 12 + 12 hypotheses.
  EXPECT_EQ(r.hypotheses_scored, 40u);
  ASSERT_EQ(r.sequences.size(), 3u);
  EXPECT_GE(r.final_scores[0], r.final_scores[1]);
  EXPECT_GE(r.final_scores[1], r.final_scores[2]);
}

TEST(Beam, BatchScoringEqualsSequentialScoring) {
  // A scorer whose batch path differs from its pointwise path would change
  // the result; the default batch loops, so both must agree.
  const TagSet tags({"A", "B", "C"});
  const testing::HashScorer scorer(2, ScoreStyle::Continuous);
  const std::vector<std::string> tokens{"a", "b", "c"};
  const auto input = encode_input(tokens, SentinelScheme());
  const std::vector<std::string> cands{"<extra_id_0> A <extra_id_1>", "<extra_id_0> O <extra_id_1>"};
  const auto batch = scorer.score_batch(input, cands);
  EXPECT_EQ(batch[0], scorer.score(input, cands[0]));
  EXPECT_EQ(batch[1], scorer.score(input, cands[1]));
}

TEST(Beam, ScoreMatrixRowsBelongToTheParentPrefix) {
  const TagSet tags({"A", "B"});
  const testing::HashScorer scorer(3, ScoreStyle::Continuous);
  const std::vector<std::string> tokens{"a", "b", "c"};
  const SentinelScheme scheme;
  const auto input = encode_input(tokens, scheme);
  const auto r = sentscore_beam(scorer, tokens, tags, {2, true, TieBreak::TagThenParent});
  for (std::size_t b = 0; b < r.sequences.size(); ++b) {
    const auto& seq = r.sequences[b];
    const auto& m = r.score_matrices[b];
    ASSERT_EQ(m.size(), tokens.size());
    for (std::size_t i = 0; i < seq.size(); ++i) {
      const auto prefix = std::span<const SbioTag>(seq).first(i);
      const auto mask = valid_next_tags(prefix, tags);
      for (std::size_t t = 0; t < tags.size(); ++t) {
        if (!mask[t]) {
          EXPECT_EQ(m[i][t], -kInf);
          continue;
        }
        TagSequence ext(prefix.begin(), prefix.end());
        ext.push_back(tags.tag_at(t));
        EXPECT_EQ(m[i][t], scorer.score(input, hypothesis_string(ext, scheme)));
      }
      EXPECT_EQ(m[i][tags.index_of(seq[i])],
                scorer.score(input, hypothesis_string(std::span<const SbioTag>(seq).first(i + 1),
                                                      scheme)));
    }
    EXPECT_EQ(m.back()[tags.index_of(seq.back())], r.final_scores[b]);
  }
}

TEST(Beam, MatchesExhaustiveOracleWithoutPruning) {
  Rng rng(7);
  for (int trial = 0; trial < 60; ++trial) {
    const auto tags = testing::random_tag_set(rng, 3);
    const auto length = 1 + rng.index(tags.label_count() == 3 ? 3 : 4);
    const auto tokens = testing::random_tokens(rng, length);
    const auto style = trial % 3 == 0 ? ScoreStyle::Ties
                                      : (trial % 3 == 1 ? ScoreStyle::Continuous
                                                        : ScoreStyle::Adversarial);
    const auto table = testing::random_table_scorer(rng, tokens, tags, style);
    const auto valid = count_valid_sequences(length, tags.label_count());
    const auto r = sentscore_beam(table, tokens, tags, {valid, true, TieBreak::TagThenParent});
    const auto best = exhaustive_oracle(table, tokens, tags);
    EXPECT_EQ(best.enumerated, valid);
    EXPECT_EQ(r.sequences.size(), valid);
    ASSERT_EQ(r.sequences.front(), best.tags) << "trial " << trial;
    const double s = r.final_scores.front();
    EXPECT_TRUE(s == best.score || (std::isnan(s) && std::isnan(best.score)));
  }
}

// Beam search is not monotone in K for arbitrary scorers (a wider beam can
// prune the prefix a narrower one follows), so the checked form is dominance
// of the unpruned search over every smaller beam.
TEST(Beam, UnprunedTopScoreDominatesEveryBeamSize) {
  Rng rng(8);
  for (int trial = 0; trial < 40; ++trial) {
    const auto tags = testing::random_tag_set(rng, 3);
    const auto tokens = testing::random_tokens(rng, 1 + rng.index(4));
    const auto table = testing::random_table_scorer(rng, tokens, tags, ScoreStyle::Continuous);
    const auto valid = count_valid_sequences(tokens.size(), tags.label_count());
    const double best =
        sentscore_beam(table, tokens, tags, {valid, true, TieBreak::TagThenParent})
            .final_scores.front();
    for (std::size_t k = 1; k < valid; k *= 2) {
      const auto r = sentscore_beam(table, tokens, tags, {k, true, TieBreak::TagThenParent});
      EXPECT_LE(r.final_scores.front(), best) << "trial " << trial << " K=" << k;
    }
  }
}

TEST(Beam, WiderBeamCanLoseToGreedy) {
  const TagSet tags({"A"});
  const std::vector<std::string> tokens{"x", "y", "z"};
  const auto input = encode_input(tokens, SentinelScheme());
  TableScorer table(-100.0);
  auto set = [&](const std::string& tags_text, double s) {
    const auto t = split_whitespace(tags_text);
    std::string text = "<extra_id_0>";
    for (std::size_t i = 0; i < t.size(); ++i)
      text += " " + t[i] + " <extra_id_" + std::to_string(i + 1) + ">";
    table.set(input, text, s);
  };
  set("A", -1.0);
  set("O", -2.0);
  set("A O", -1.5);
  set("O A", -1.2);
  set("O O", -1.3);
  set("A O O", -1.6);
  for (const char* dead : {"O A A", "O A I", "O A O", "O O A", "O O O"}) set(dead, -10.0);
  EXPECT_EQ(greedy(table, tokens, tags).final_score, -1.6);
  const auto r = sentscore_beam(table, tokens, tags, {2, true, TieBreak::TagThenParent});
  EXPECT_EQ(r.final_scores.front(), -10.0);
}

TEST(Beam, OutputAlwaysParsesUnderAdversarialScorers) {
  Rng rng(9);
  const SentinelScheme scheme;
  for (int trial = 0; trial < 300; ++trial) {
    const auto tags = testing::random_tag_set(rng, 10);
    const auto tokens = testing::random_tokens(rng, 1 + rng.index(12));
    const auto table = testing::sampled_table_scorer(rng, tokens, tags, ScoreStyle::Adversarial, 50);
    for (std::size_t k : {1u, 4u}) {
      const auto r = sentscore_beam(table, tokens, tags, {k, true, TieBreak::TagThenParent});
      for (const auto& seq : r.sequences) {
        const auto parsed = parse_output(hypothesis_string(seq, scheme), tokens.size(), tags, scheme);
        ASSERT_TRUE(std::holds_alternative<TagSequence>(parsed)) << "trial " << trial;
        EXPECT_EQ(std::get<TagSequence>(parsed), seq);
      }
    }
  }
}

TEST(Beam, DeterministicAcrossRuns) {
  const TagSet tags({"A", "B", "C"});
  const testing::HashScorer scorer(4, ScoreStyle::Ties);
  const std::vector<std::string> tokens{"a", "b", "c", "d", "e"};
  const BeamConfig cfg{4, true, TieBreak::TagThenParent};
  const auto a = sentscore_beam(scorer, tokens, tags, cfg);
  const auto b = sentscore_beam(scorer, tokens, tags, cfg);
  EXPECT_EQ(a.sequences, b.sequences);
  EXPECT_EQ(a.score_matrices, b.score_matrices);
}

TEST(Beam, RejectsEmptySentenceAndZeroBeam) {
  const TagSet tags({"A"});
  const TableScorer t;
  EXPECT_THROW(sentscore_beam(t, std::vector<std::string>{}, tags, {}), ContractError);
  EXPECT_THROW(sentscore_beam(t, kTokens, tags, {0, true, TieBreak::TagThenParent}), ConfigError);
}

TEST(Greedy, SingleTokenRowHoldsEverySingleTagScore) {
  const TagSet tags({"A", "B"});
  const std::vector<std::string> tokens{"x"};
  const SentinelScheme scheme;
  const auto input = encode_input(tokens, scheme);
  TableScorer table(-9.0);
  table.set(input, "<extra_id_0> A <extra_id_1>", -3.0);
  table.set(input, "<extra_id_0> B <extra_id_1>", -1.0);
  table.set(input, "<extra_id_0> I <extra_id_1>", 5.0);  // masked
  table.set(input, "<extra_id_0> O <extra_id_1>", -2.0);
  const auto r = greedy(table, tokens, tags);
  ASSERT_EQ(r.scores.size(), 1u);
  EXPECT_EQ(r.scores[0], (std::vector<double>{-3.0, -1.0, -kInf, -2.0}));
  EXPECT_EQ(r.tags, TagSequence{SbioTag::of_label("B")});
  EXPECT_EQ(r.final_score, -1.0);
}

TEST(Greedy, EqualsBeamOfOne) {
  Rng rng(10);
  for (int trial = 0; trial < 30; ++trial) {
    const auto tags = testing::random_tag_set(rng, 4);
    const auto tokens = testing::random_tokens(rng, 1 + rng.index(8));
    const testing::HashScorer scorer(rng.next(), ScoreStyle::Adversarial);
    const auto g = greedy(scorer, tokens, tags);
    const auto b = sentscore_beam(scorer, tokens, tags, {});
    EXPECT_EQ(g.tags, b.sequences.front());
    EXPECT_EQ(g.scores, b.score_matrices.front());
  }
}

TEST(Oracle, SingleLabelSingleTokenChoosesBetterOfTwo) {
  const TagSet tags({"A"});
  const std::vector<std::string> tokens{"x"};
  const auto input = encode_input(tokens, SentinelScheme());
  TableScorer table(-50.0);
  table.set(input, "<extra_id_0> A <extra_id_1>", -4.0);
  table.set(input, "<extra_id_0> O <extra_id_1>", -2.0);
  table.set(input, "<extra_id_0> I <extra_id_1>", 0.0);
  const auto best = exhaustive_oracle(table, tokens, tags);
  EXPECT_EQ(best.enumerated, 2u);
  EXPECT_EQ(best.tags, TagSequence{SbioTag::outside()});
  EXPECT_EQ(best.score, -2.0);
}

TEST(Oracle, AgreesWithGreedyWhenStepwiseChoicesAreOptimal) {
  // Cumulative scores that only fall along the greedy path and fall faster
  // everywhere else make the greedy path globally best.
  Rng rng(11);
  const TagSet tags({"A", "B"});
  const SentinelScheme scheme;
  for (int trial = 0; trial < 20; ++trial) {
    const auto tokens = testing::random_tokens(rng, 1 + rng.index(4));
    const auto path = testing::random_sbio(rng, tokens.size(), tags);
    const auto input = encode_input(tokens, scheme);
    TableScorer table(-1000.0);
    for (std::size_t i = 1; i <= path.size(); ++i)
      table.set(input, hypothesis_string(std::span<const SbioTag>(path).first(i), scheme),
                -static_cast<double>(i) * rng.uniform(0.5, 1.0));
    const auto g = greedy(table, tokens, tags);
    const auto best = exhaustive_oracle(table, tokens, tags);
    EXPECT_EQ(g.tags, path);
    EXPECT_EQ(best.tags, path);
  }
}

TEST(Oracle, EnumerationCountMatchesRecurrenceAndCapApplies) {
  const TagSet tags({"A", "B"});
  const TableScorer constant(0.0);
  for (std::size_t length = 1; length <= 5; ++length) {
    const auto tokens = std::vector<std::string>(length, "w");
    EXPECT_EQ(exhaustive_oracle(constant, tokens, tags).enumerated,
              count_valid_sequences(length, 2));
    EXPECT_EQ(exhaustive_oracle(constant, tokens, tags, SentinelScheme(), false).enumerated,
              static_cast<std::uint64_t>(std::pow(4.0, static_cast<double>(length))));
  }
  EXPECT_THROW(exhaustive_oracle(constant, std::vector<std::string>(11, "w"), tags), SizeError);
  EXPECT_THROW(exhaustive_oracle(constant, std::vector<std::string>(3, "w"), tags,
                                 SentinelScheme(), true, 63),
               SizeError);
}

TEST(StepDistribution, Fixtures) {
  const std::vector<double> zeros{0.0, 0.0};
  EXPECT_EQ(step_distribution(zeros, {}, 1.0), (std::vector<double>{0.5, 0.5}));

  const std::vector<double> row{0.0, -23.0};
  const auto p = step_distribution(row, {}, 10.0);
  const double e = std::exp(-2.3);
  EXPECT_NEAR(p[0], 1.0 / (1.0 + e), 1e-15);
  EXPECT_NEAR(p[1], e / (1.0 + e), 1e-15);
  EXPECT_NEAR(p[0], 0.908877, 1e-6);

  const auto wide = step_distribution(row, {}, 1e9);
  EXPECT_NEAR(wide[0], 0.5, 1e-7);
}

TEST(StepDistribution, MaskAndShiftInvariance) {
  const std::vector<double> row{-1.0, -2.5, 3.0, -0.25};
  const std::vector<bool> mask{true, true, false, true};
  const auto p = step_distribution(row, mask, 2.0);
  EXPECT_EQ(p[2], 0.0);
  EXPECT_NEAR(p[0] + p[1] + p[3], 1.0, 1e-12);
  std::vector<double> shifted = row;
  for (double& x : shifted) x -= 123.456;
  const auto q = step_distribution(shifted, mask, 2.0);
  for (std::size_t k = 0; k < p.size(); ++k) EXPECT_NEAR(p[k], q[k], 1e-12);

  const std::vector<double> inf_row{-kInf, 1.0, -kInf};
  EXPECT_EQ(row_mask(inf_row), (std::vector<bool>{false, true, false}));
  EXPECT_EQ(step_distribution(inf_row, {}, 10.0), (std::vector<double>{0.0, 1.0, 0.0}));

  EXPECT_THROW(step_distribution(row, mask, 0.0), ConfigError);
  EXPECT_THROW(step_distribution(row, std::vector<bool>(4, false), 1.0), ContractError);
  EXPECT_THROW(step_distribution(row, std::vector<bool>(3, true), 1.0), ContractError);
}

TEST(DecodedRecords, JsonLinesRoundTrip) {
  const TagSet tags({"TRACK", "ARTIST"});
  DecodedSentence d{"x:1", kTokens, table1_tags(), {}, tags.tag_order()};
  for (std::size_t i = 0; i < 5; ++i)
    d.scores.push_back({-1.5 * static_cast<double>(i), -0.1, i == 0 ? -kInf : -3.0, -2.0});
  std::stringstream ss;
  write_decoded(ss, std::vector<DecodedSentence>{d, d});
  const auto back = read_decoded(ss);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].tags, d.tags);
  EXPECT_EQ(back[0].scores, d.scores);
  EXPECT_EQ(back[1].tokens, d.tokens);
  EXPECT_EQ(back[1].tag_order, d.tag_order);
}

TEST(DecodedRecords, MalformedLinesReportTheLine) {
  std::stringstream bad("{\"id\":\"a\"}\n");
  try {
    read_decoded(bad);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("1"), std::string::npos);
  }
  std::stringstream unknown_tag(
      R"({"id":"a","tokens":["x"],"tags":["Z"],"scores":[[0,0,0]],"tag_order":["A","I","O"]})"
      "\n");
  EXPECT_THROW(read_decoded(unknown_tag), FormatError);
  std::stringstream not_json("\n{oops\n");
  EXPECT_THROW(read_decoded(not_json), FormatError);
}

}  // namespace
}  // namespace sentscore
