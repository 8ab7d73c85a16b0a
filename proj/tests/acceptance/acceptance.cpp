// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
//
//   acceptance [--only 1,4,8] [--config <experiment json>] [--out <dir>]

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sentscore/corpus.hpp"
#include "sentscore/decoder.hpp"
#include "sentscore/distill.hpp"
#include "sentscore/harness.hpp"
#include "sentscore/metrics.hpp"
#include "sentscore/teacher.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"
#include "support/public_datasets.hpp"

namespace fs = std::filesystem;
using namespace sentscore;
using testing::ScoreStyle;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects the first few failures; keeps counting after that.
class Failures {
 public:
  void add(const std::string& what) {
    if (count_++ < 5) messages_ += (messages_.empty() ? "" : "; ") + what;
  }
  bool any() const { return count_ > 0; }
  std::string summary() const {
    return std::to_string(count_) + " failure(s): " + messages_;
  }

 private:
  std::size_t count_ = 0;
  std::string messages_;
};

std::string num(double x, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

std::string sci(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", x);
  return buf;
}

ScoreStyle style_for(std::size_t trial) {
  switch (trial % 3) {
    case 0: return ScoreStyle::Continuous;
    case 1: return ScoreStyle::Ties;
    default: return ScoreStyle::Adversarial;
  }
}

// ---------------------------------------------------------------------------

Outcome hallucination_freeness() {
  Rng rng(derive_seed(1, "acceptance"));
  const SentinelScheme scheme;
  Failures bad;
  std::size_t outputs = 0;
  const std::size_t trials = 1000;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const auto tags = testing::random_tag_set(rng, 10);
    const auto length = 1 + rng.index(12);
    const auto tokens = testing::random_tokens(rng, length);
    const double table_size = std::pow(static_cast<double>(tags.size()), static_cast<double>(length));
    const auto table = table_size <= 5000
                           ? testing::random_table_scorer(rng, tokens, tags, style_for(trial))
                           : testing::sampled_table_scorer(rng, tokens, tags, style_for(trial), 40);
    for (std::size_t k : {1u, 4u}) {
      const auto r = sentscore_beam(table, tokens, tags, {k, true, TieBreak::TagThenParent});
      if (r.sequences.empty()) bad.add("trial " + std::to_string(trial) + ": no output");
      for (const auto& seq : r.sequences) {
        ++outputs;
        const auto text = hypothesis_string(seq, scheme);
        const auto parsed = parse_output(text, length, tags, scheme);
        if (!std::holds_alternative<TagSequence>(parsed)) {
          bad.add("trial " + std::to_string(trial) + " K=" + std::to_string(k) + ": '" + text +
                  "' does not parse");
          continue;
        }
        const auto& back = std::get<TagSequence>(parsed);
        if (back.size() != length || !is_valid_sbio(back) || back != seq)
          bad.add("trial " + std::to_string(trial) + " K=" + std::to_string(k) +
                  ": invalid or wrong-length sequence");
      }
    }
  }
  if (bad.any()) return {false, bad.summary()};
  return {true, std::to_string(trials) + " trials, " + std::to_string(outputs) +
                    " outputs, all valid sBIO of length L"};
}

Outcome beam_exactness() {
  Rng rng(derive_seed(2, "acceptance"));
  Failures bad;
  for (std::size_t trial = 0; trial < 50; ++trial) {
    const auto tags = testing::random_tag_set(rng, 2);
    const auto length = 1 + rng.index(3);
    const auto tokens = testing::random_tokens(rng, length);
    const auto table = testing::random_table_scorer(rng, tokens, tags, style_for(trial));
    std::size_t k = 1;
    for (std::size_t i = 0; i < length; ++i) k *= tags.size();
    const auto beam = sentscore_beam(table, tokens, tags, {k, true, TieBreak::TagThenParent});
    const auto oracle = exhaustive_oracle(table, tokens, tags);
    const double s = beam.final_scores.front();
    const bool same_score = s == oracle.score || (std::isnan(s) && std::isnan(oracle.score));
    if (beam.sequences.front() != oracle.tags || !same_score)
      bad.add("trial " + std::to_string(trial) + " (|T|=" + std::to_string(tags.label_count()) +
              ", L=" + std::to_string(length) + ")");
  }
  if (bad.any()) return {false, bad.summary()};
  return {true, "50 tables, top-1 identical to exhaustive search"};
}

// Softmax over finite entries, computed here rather than by the decoder.
std::vector<double> reference_softmax(const std::vector<double>& row) {
  double top = -kInf;
  for (double x : row)
    if (std::isfinite(x)) top = std::max(top, x);
  std::vector<double> out(row.size(), 0.0);
  double total = 0.0;
  for (std::size_t t = 0; t < row.size(); ++t)
    if (std::isfinite(row[t])) total += out[t] = std::exp(row[t] - top);
  for (auto& x : out) x /= total;
  return out;
}

Outcome score_bookkeeping() {
  SyntheticSpec spec;
  spec.grammar_seed = 3;
  spec.train = 100;
  spec.dev = 0;
  spec.test = 0;
  const auto data = generate_synthetic(spec);
  const SentinelScheme scheme;
  TeacherConfig tc;
  tc.embedding_dim = 16;
  tc.encoder_hidden = 16;
  tc.decoder_hidden = 16;
  const auto pairs = format_pairs(data.train, scheme);
  ToyTeacher teacher(build_teacher_vocabulary(pairs, data.tag_set, scheme, tc.min_sentinels),
                     data.tag_set, tc, scheme);
  // Spread the initial weights so step distributions are far from uniform.
  Rng rng(derive_seed(3, "acceptance"));
  testing::randomize(teacher.params(), rng, 0.5);
  teacher.clear_cache();

  const auto& vocab = teacher.vocabulary();
  const TagSet& tags = data.tag_set;
  Failures bad;
  double worst = 0.0;
  std::size_t rows = 0;
  for (const auto& s : data.train.sentences) {
    const auto g = greedy(teacher, s.tokens, tags, scheme);
    const std::string input = encode_input(s.tokens, scheme);
    std::vector<std::string> prefix{scheme.sentinel(0)};
    TagSequence chosen;
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      const auto& row = g.scores[i];
      // Stepwise conditional: P(tag | prefix) · P(next sentinel | prefix, tag),
      // renormalised over the valid tags.
      const auto mask = valid_next_tags(chosen, tags);
      const auto tag_lp = teacher.next_token_log_probs(input, prefix);
      std::vector<double> joint(tags.size(), -kInf);
      for (std::size_t t = 0; t < tags.size(); ++t) {
        if (!mask[t]) continue;
        auto extended = prefix;
        extended.push_back(tags.tag_string(t));
        const auto sentinel_lp = teacher.next_token_log_probs(input, extended);
        joint[t] = tag_lp[vocab.id(tags.tag_string(t))] + sentinel_lp[vocab.id(scheme.sentinel(i + 1))];
      }
      const auto expected = reference_softmax(joint);
      const auto actual = reference_softmax(row);
      for (std::size_t t = 0; t < tags.size(); ++t) {
        if (std::isfinite(row[t]) != static_cast<bool>(mask[t]))
          bad.add(s.id + " row " + std::to_string(i) + ": mask differs at tag " + std::to_string(t));
        worst = std::max(worst, std::abs(expected[t] - actual[t]));
      }
      std::size_t argmax = 0;
      for (std::size_t t = 1; t < row.size(); ++t)
        if (row[t] > row[argmax]) argmax = t;
      if (tags.index_of(g.tags[i]) != argmax)
        bad.add(s.id + " row " + std::to_string(i) + ": y* is not the row argmax");
      chosen.push_back(g.tags[i]);
      prefix.push_back(g.tags[i].str());
      prefix.push_back(scheme.sentinel(i + 1));
      ++rows;
    }
  }
  if (worst > 1e-9) bad.add("max |softmax(row) - stepwise| = " + sci(worst));
  if (bad.any()) return {false, bad.summary()};
  return {true, "100 sentences, " + std::to_string(rows) + " rows, max deviation " + sci(worst)};
}

Outcome gradient_correctness() {
  Failures bad;
  std::string report;
  const SentinelScheme scheme;
  Rng rng(derive_seed(4, "acceptance"));

  {
    const TagSet tags({"TRACK", "ARTIST"});
    const DatasetSplit seed_split{
        SplitName::Train,
        {{"s0",
          {"play", "wow", "by", "jon", "theodore"},
          TagSequence{SbioTag::outside(), SbioTag::of_label("TRACK"), SbioTag::outside(),
                      SbioTag::of_label("ARTIST"), SbioTag::inside()}}}};
    TeacherConfig tc;
    tc.embedding_dim = 4;
    tc.encoder_hidden = 3;
    tc.decoder_hidden = 5;
    tc.min_sentinels = 6;
    ToyTeacher teacher(build_teacher_vocabulary(format_pairs(seed_split, scheme), tags, scheme,
                                                tc.min_sentinels),
                       tags, tc, scheme);
    double worst = 0.0;
    for (int input = 0; input < 3; ++input) {
      testing::randomize(teacher.params(), rng, 0.8);
      const auto length = 2 + rng.index(3);
      auto tokens = testing::random_tokens(rng, length);
      tokens[0] = seed_split.sentences[0].tokens[rng.index(5)];
      const auto target_tags = testing::random_sbio(rng, length, tags);
      const auto in = split_whitespace(encode_input(tokens, scheme));
      const auto out = split_whitespace(encode_target(target_tags, scheme));
      const auto r = testing::check_gradients(teacher.params().tensors(), teacher.params().names(),
                                              [&] { return teacher.sequence_nll(in, out); });
      worst = std::max(worst, r.max_relative_error);
      if (r.max_relative_error > 1e-4) bad.add("teacher input " + std::to_string(input) + ": " + r.worst);
      if (r.entries_checked != teacher.params().parameter_count()) bad.add("teacher: entries skipped");
    }
    report += "teacher " + std::to_string(teacher.params().names().size()) + " tensors, max rel " +
              sci(worst);
  }

  {
    const TagSet tags({"TRACK", "ARTIST"});
    const std::vector<std::string> vocab{"play", "wow", "by", "jon", "theodore", "set", "alarm"};
    StudentConfig sc;
    sc.word_emb_dim = 3;
    sc.char_emb_dim = 2;
    sc.char_hidden = 4;
    sc.word_hidden = 4;
    StudentTagger student(vocab, tags, sc);
    const DistillConfig dc;
    double worst = 0.0;
    for (int input = 0; input < 3; ++input) {
      testing::randomize(student.params(), rng, 0.8);
      const auto length = 2 + rng.index(3);
      auto tokens = testing::random_tokens(rng, length);
      tokens[0] = vocab[rng.index(vocab.size())];
      // A teacher-style row per position: finite on valid continuations.
      SilverExample ex;
      ex.tokens = tokens;
      ex.tag_order = tags.tag_order();
      for (std::size_t i = 0; i < length; ++i) {
        const auto mask = valid_next_tags(ex.tags, tags);
        std::vector<double> row(tags.size(), -kInf);
        std::size_t best = tags.size();
        for (std::size_t t = 0; t < row.size(); ++t) {
          if (!mask[t]) continue;
          row[t] = rng.uniform(-20.0, -1.0);
          if (best == tags.size() || row[t] > row[best]) best = t;
        }
        ex.scores.push_back(row);
        ex.tags.push_back(tags.tag_at(best));
      }
      const auto soft = soft_targets(ex, dc.tau);
      const auto r = testing::check_gradients(
          student.params().tensors(), student.params().names(), [&] {
            return distill_loss(student.forward_graph(tokens), tags, ex.tags, soft,
                                ExampleKind::Silver, dc);
          });
      worst = std::max(worst, r.max_relative_error);
      if (r.max_relative_error > 1e-4) bad.add("student input " + std::to_string(input) + ": " + r.worst);
      if (r.entries_checked != student.params().parameter_count()) bad.add("student: entries skipped");
    }
    report += "; student " + std::to_string(student.params().names().size()) +
              " tensors, max rel " + sci(worst);
  }
  if (bad.any()) return {false, bad.summary()};
  return {true, "3 inputs each; " + report};
}

Outcome loss_algebra() {
  Failures bad;
  const std::vector<std::size_t> y{0};
  const std::vector<std::vector<double>> p{{0.8, 0.2}}, q{{0.6, 0.4}};
  const double fixture = distill_loss_value(y, p, q, 1.0);
  if (std::abs(fixture - 0.6023) > 1e-4) bad.add("fixture " + num(fixture, 6));

  Rng rng(derive_seed(5, "acceptance"));
  const TagSet tags({"A", "B", "C"});
  double ce_gap = 0.0, kl_self = 0.0, shift_gap = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto length = 1 + rng.index(6);
    SilverExample ex;
    ex.tokens = testing::random_tokens(rng, length);
    ex.tag_order = tags.tag_order();
    for (std::size_t i = 0; i < length; ++i) {
      const auto mask = valid_next_tags(ex.tags, tags);
      std::vector<double> row(tags.size(), -kInf);
      std::size_t best = tags.size();
      for (std::size_t t = 0; t < row.size(); ++t) {
        if (!mask[t]) continue;
        row[t] = rng.uniform(-40.0, 0.0);
        if (best == tags.size() || row[t] > row[best]) best = t;
      }
      ex.scores.push_back(row);
      ex.tags.push_back(tags.tag_at(best));
    }
    std::vector<nn::Tensor> logits;
    double ce = 0.0;
    for (std::size_t i = 0; i < length; ++i) {
      std::vector<double> z(tags.size());
      for (auto& x : z) x = rng.uniform(-4.0, 4.0);
      double top = *std::max_element(z.begin(), z.end()), total = 0.0;
      for (double x : z) total += std::exp(x - top);
      ce -= z[tags.index_of(ex.tags[i])] - top - std::log(total);
      logits.push_back(nn::Tensor::column(z));
    }
    const auto soft = soft_targets(ex, 10.0);
    const DistillConfig zero{0.0, 10.0, false, false}, one{1.0, 10.0, false, false};
    const double l0 = distill_loss(logits, tags, ex.tags, soft, ExampleKind::Silver, zero).item();
    ce_gap = std::max(ce_gap, std::abs(l0 - ce));

    // KL(p || p) through the plain-vector form: q equal to p leaves CE only.
    std::vector<std::size_t> ids;
    for (const auto& t : ex.tags) ids.push_back(tags.index_of(t));
    double ce_p = 0.0;
    for (std::size_t i = 0; i < length; ++i) ce_p -= std::log(soft[i][ids[i]]);
    kl_self = std::max(kl_self, std::abs(distill_loss_value(ids, soft, soft, 1.0) - ce_p));

    auto shifted = ex;
    const double c = rng.uniform(-1e3, 1e3);
    for (auto& row : shifted.scores)
      for (auto& x : row) x += c;
    const double base = distill_loss(logits, tags, ex.tags, soft, ExampleKind::Silver, one).item();
    const double moved =
        distill_loss(logits, tags, ex.tags, soft_targets(shifted, 10.0), ExampleKind::Silver, one)
            .item();
    shift_gap = std::max(shift_gap, std::abs(base - moved));
  }
  if (ce_gap > 1e-12) bad.add("lambda=0 differs from CE by " + sci(ce_gap));
  if (kl_self > 1e-12) bad.add("KL(p||p) = " + sci(kl_self));
  if (shift_gap > 1e-9) bad.add("shift changes loss by " + sci(shift_gap));
  if (bad.any()) return {false, bad.summary()};
  return {true, "fixture " + num(fixture, 6) + "; |l0-CE| " + sci(ce_gap) + "; KL(p||p) " +
                    sci(kl_self) + "; shift " + sci(shift_gap)};
}

Outcome metric_oracle() {
  Failures bad;
  Rng rng(derive_seed(6, "acceptance"));
  for (int trial = 0; trial < 200; ++trial) {
    const auto tags = testing::random_tag_set(rng, 4);
    const double rate = rng.uniform(0.0, 0.4);
    std::vector<SentenceSpans> gold, pred;
    std::vector<TagSequence> gold_tags, pred_tags;
    std::size_t equal = 0;
    const auto n = 1 + rng.index(20);
    for (std::size_t i = 0; i < n; ++i) {
      auto g = testing::random_sbio(rng, 1 + rng.index(12), tags);
      auto p = testing::perturb_sbio(rng, g, tags, rate);
      const auto id = "s" + std::to_string(i);
      gold.push_back({id, sbio_to_spans(g)});
      pred.push_back({id, sbio_to_spans(p)});
      equal += g == p;
      gold_tags.push_back(std::move(g));
      pred_tags.push_back(std::move(p));
    }
    const auto r = micro_f1(gold, pred);
    if (!(r.counts() == testing::brute_force_counts(gold, pred)))
      bad.add("trial " + std::to_string(trial) + ": counts differ");
    const double expected_perfect = static_cast<double>(equal) / static_cast<double>(n);
    if (perfect(gold_tags, pred_tags) != expected_perfect)
      bad.add("trial " + std::to_string(trial) + ": perfect differs");
  }
  const TagSequence g{SbioTag::of_label("A"), SbioTag::outside(), SbioTag::of_label("B"),
                      SbioTag::outside()};
  const TagSequence p{SbioTag::of_label("A"), SbioTag::outside(), SbioTag::of_label("B"),
                      SbioTag::inside()};
  const std::vector<SentenceSpans> fg{{"x", sbio_to_spans(g)}}, fp{{"x", sbio_to_spans(p)}};
  const auto fixture = micro_f1(fg, fp);
  if (fixture.true_positives != 1 || fixture.false_positives != 1 ||
      fixture.false_negatives != 1 || fixture.f1 != 0.5)
    bad.add("fixture F1 " + num(fixture.f1));
  if (bad.any()) return {false, bad.summary()};
  return {true, "200 corpora match the reference; fixture TP=FP=FN=1, F1=0.5"};
}

Outcome format_fidelity() {
  const SentinelScheme scheme;
  const std::vector<std::string> tokens{"play", "wow", "by", "jon", "theodore"};
  const TagSequence tags{SbioTag::outside(), SbioTag::of_label("TRACK"), SbioTag::outside(),
                         SbioTag::of_label("ARTIST"), SbioTag::inside()};
  const std::string input =
      "<extra_id_0> play <extra_id_1> wow <extra_id_2> by <extra_id_3> jon <extra_id_4> "
      "theodore <extra_id_5>";
  const std::string target =
      "<extra_id_0> O <extra_id_1> TRACK <extra_id_2> O <extra_id_3> ARTIST <extra_id_4> I "
      "<extra_id_5>";
  Failures bad;
  if (encode_input(tokens, scheme) != input) bad.add("input: '" + encode_input(tokens, scheme) + "'");
  if (encode_target(tags, scheme) != target) bad.add("target: '" + encode_target(tags, scheme) + "'");
  const auto parsed = parse_output(target, tokens.size(), TagSet({"TRACK", "ARTIST"}), scheme);
  if (!std::holds_alternative<TagSequence>(parsed) || std::get<TagSequence>(parsed) != tags)
    bad.add("parse_output does not invert the target");
  if (bad.any()) return {false, bad.summary()};
  return {true, "input, target and parse round-trip byte-exactly"};
}

// Criteria 8 and 9 share the experiment.
struct Kd {
  ExperimentConfig config;
  fs::path out_dir;
  std::optional<ExperimentResult> first;
};

const RunRecord* find_run(const ExperimentResult& r, std::size_t silver, double lambda) {
  for (const auto& run : r.runs)
    if (run.silver_size == silver && run.lambda_kl == lambda) return &run;
  return nullptr;
}

Outcome kd_effect(Kd& kd) {
  kd.first = run_experiment(kd.config, kd.out_dir, [](const std::string& line) {
    std::cout << "    " << line << std::endl;
  });
  const auto& result = *kd.first;
  std::cout << format_tables(result.teachers, result.runs);
  const auto* gold_only = find_run(result, 0, 0.0);
  const auto* pseudo = find_run(result, 500, 0.0);
  const auto* distilled = find_run(result, 500, 1.0);
  if (!gold_only || !pseudo || !distilled)
    return {false, "config lacks the (0, 0), (500, 0) or (500, 1) cell"};
  const double gap = distilled->mean_f1 - pseudo->mean_f1;
  const double margin0 = pseudo->mean_f1 - gold_only->mean_f1;
  const double margin1 = distilled->mean_f1 - gold_only->mean_f1;
  std::string detail = "gold-only " + num(gold_only->mean_f1) + ", lambda=0 " +
                       num(pseudo->mean_f1) + ", lambda=1 " + num(distilled->mean_f1) +
                       "; signed gap (lambda=1 - lambda=0) " + (gap >= 0 ? "+" : "") + num(gap) +
                       "; margins over gold-only " + num(margin0) + ", " + num(margin1);
  const bool pass = gap >= -0.005 && margin0 >= 0.02 && margin1 >= 0.02 &&
                    gold_only->seeds.size() >= 5;
  return {pass, detail};
}

Outcome determinism(Kd& kd) {
  if (!kd.first) return {false, "criterion 8 did not run"};
  const auto again = run_experiment(kd.config);
  if (again.runs.size() != kd.first->runs.size()) return {false, "record count differs"};
  for (std::size_t i = 0; i < again.runs.size(); ++i) {
    const nlohmann::json a = again.runs[i], b = kd.first->runs[i];
    if (!(again.runs[i] == kd.first->runs[i]) || a.dump() != b.dump())
      return {false, "record " + again.runs[i].fingerprint + " differs"};
  }
  return {true, std::to_string(again.runs.size()) + " RunRecords identical, including every "
                                                    "per-seed report"};
}

Outcome dataset_properties() {
  Failures bad;
  Rng rng(derive_seed(10, "acceptance"));
  SyntheticSpec spec;
  spec.grammar_seed = 10;
  spec.train = 150;
  spec.dev = 0;
  spec.test = 0;
  const auto d = generate_synthetic(spec);
  auto ids = [](const DatasetSplit& s) {
    std::vector<std::string> out;
    for (const auto& x : s.sentences) out.push_back(x.id);
    return out;
  };
  const auto all = ids(d.train);
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = rng.index(d.train.size() + 1);
    const auto part = downsample(d.train, n, rng.next());
    auto g = ids(part.gold), r = ids(part.remainder);
    std::vector<std::string> both = g;
    both.insert(both.end(), r.begin(), r.end());
    std::sort(both.begin(), both.end());
    auto sorted_all = all;
    std::sort(sorted_all.begin(), sorted_all.end());
    if (g.size() != n || both != sorted_all)
      bad.add("downsample trial " + std::to_string(trial) + " is not a partition");
  }
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SyntheticSpec small;
    small.grammar_seed = seed;
    small.train = 300;
    small.dev = 60;
    small.test = 60;
    small.tag_count = 2;
    small.lexicon_size = 2;
    small.max_span_length = 1;
    small.templates_per_label = 1;
    const auto once = dedup(generate_synthetic(small));
    const auto twice = dedup(once);
    if (!(once.train == twice.train && once.dev == twice.dev && once.test == twice.test))
      bad.add("dedup not idempotent for seed " + std::to_string(seed));
  }
  std::string public_note = "no public dataset supplied (set SENTSCORE_DATA_DIR)";
  if (const char* root = std::getenv("SENTSCORE_DATA_DIR")) {
    std::vector<std::string> checked;
    for (const auto& e : testing::kPublicDatasets) {
      const auto dir = fs::path(root) / e.dir;
      if (!fs::exists(dir / "train.conll")) continue;
      const auto ds = make_dataset(load_conll(dir / "train.conll", SplitName::Train),
                                   load_conll(dir / "dev.conll", SplitName::Dev),
                                   load_conll(dir / "test.conll", SplitName::Test));
      if (!(stats(ds) == e.counts)) bad.add(std::string(e.dir) + " counts differ");
      checked.push_back(e.dir);
    }
    if (!checked.empty()) {
      public_note = "published counts checked for";
      for (const auto& c : checked) public_note += " " + c;
    }
  }
  if (bad.any()) return {false, bad.summary()};
  return {true, "100 partitions, dedup idempotent on 10 corpora; " + public_note};
}

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;  // 0 for no runtime bound
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> only;
  std::string config_path = SENTSCORE_ACCEPTANCE_CONFIG;
  std::string out_dir;
  app.add_option("--only", only, "Run only these criteria")->delimiter(',');
  app.add_option("--config", config_path, "Experiment configuration for criteria 8 and 9");
  app.add_option("--out", out_dir, "Keep the criterion 8 experiment files here");
  CLI11_PARSE(app, argc, argv);

  Kd kd;
  kd.out_dir = out_dir;
  try {
    kd.config = load_experiment_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "cannot load " << config_path << ": " << e.what() << '\n';
    return 2;
  }

  const std::vector<Criterion> criteria{
      {1, "hallucination-free decoding", 30, hallucination_freeness},
      {2, "beam matches exhaustive search", 10, beam_exactness},
      {3, "score-row bookkeeping", 30, score_bookkeeping},
      {4, "gradient checks", 120, gradient_correctness},
      {5, "distillation loss algebra", 0, loss_algebra},
      {6, "metric oracle", 0, metric_oracle},
      {7, "format fidelity", 0, format_fidelity},
      {8, "directional distillation effect", 900, [&] { return kd_effect(kd); }},
      {9, "experiment determinism", 0, [&] { return determinism(kd); }},
      {10, "dataset handling", 0, dataset_properties},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    if (c.id == 9 && !kd.first) {
      std::cout << "[FAIL] 9 " << c.name << ": needs criterion 8 in the same run" << std::endl;
      ++failed;
      continue;
    }
    std::cout << "--- criterion " << c.id << ": " << c.name << std::endl;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::string timing = num(secs, 1) + " s";
    if (c.limit_seconds > 0) {
      timing += " of " + num(c.limit_seconds, 0) + " s";
      if (secs > c.limit_seconds) {
        o.pass = false;
        timing += ", over the limit";
      }
    }
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << c.id << " " << c.name << ": " << o.detail
              << " (" << timing << ")" << std::endl;
    failed += !o.pass;
  }
  std::cout << (failed ? std::to_string(failed) + " criterion/criteria failed" : "all criteria passed")
            << std::endl;
  return failed ? 1 : 0;
}
