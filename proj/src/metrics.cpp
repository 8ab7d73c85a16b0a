#include "sentscore/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include <json.hpp>

#include "sentscore/error.hpp"

namespace sentscore {

PrfScores prf(const LabelCounts& c) {
  if (c.true_positives == 0 && c.false_positives == 0 && c.false_negatives == 0)
    return {1.0, 1.0, 1.0};
  PrfScores s;
  const auto tp = static_cast<double>(c.true_positives);
  if (c.true_positives + c.false_positives > 0)
    s.precision = tp / static_cast<double>(c.true_positives + c.false_positives);
  if (c.true_positives + c.false_negatives > 0)
    s.recall = tp / static_cast<double>(c.true_positives + c.false_negatives);
  if (s.precision + s.recall > 0.0)
    s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

namespace {

void finish(EvalReport& r) {
  const auto s = prf(r.counts());
  r.precision = s.precision;
  r.recall = s.recall;
  r.f1 = s.f1;
}

}  // namespace

EvalReport micro_f1(std::span<const SentenceSpans> gold, std::span<const SentenceSpans> pred) {
  if (gold.size() != pred.size())
    throw ContractError("micro_f1: " + std::to_string(gold.size()) + " gold sentences but " +
                        std::to_string(pred.size()) + " predicted");
  EvalReport r;
  r.sentences = gold.size();
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i].id != pred[i].id)
      throw ContractError("micro_f1: sentence " + std::to_string(i) + " is '" + gold[i].id +
                          "' in gold but '" + pred[i].id + "' in predictions");
    const std::set<Span> g(gold[i].spans.begin(), gold[i].spans.end());
    const std::set<Span> p(pred[i].spans.begin(), pred[i].spans.end());
    for (const auto& span : p) {
      auto& c = r.per_label[span.label];
      if (g.count(span)) {
        ++c.true_positives;
        ++r.true_positives;
      } else {
        ++c.false_positives;
        ++r.false_positives;
      }
    }
    for (const auto& span : g) {
      if (p.count(span)) continue;
      ++r.per_label[span.label].false_negatives;
      ++r.false_negatives;
    }
  }
  finish(r);
  return r;
}

double perfect(std::span<const TagSequence> gold, std::span<const TagSequence> pred) {
  if (gold.size() != pred.size()) throw ContractError("perfect: sentence counts differ");
  if (gold.empty()) return 1.0;
  std::size_t exact = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i].size() != pred[i].size())
      throw ContractError("perfect: sentence " + std::to_string(i) + " has " +
                          std::to_string(gold[i].size()) + " gold tags but " +
                          std::to_string(pred[i].size()) + " predicted");
    exact += gold[i] == pred[i] ? 1 : 0;
  }
  return static_cast<double>(exact) / static_cast<double>(gold.size());
}

EvalReport evaluate(const DatasetSplit& gold, std::span<const TagSequence> pred) {
  if (gold.size() != pred.size()) throw ContractError("evaluate: sentence counts differ");
  std::vector<SentenceSpans> g, p;
  std::vector<TagSequence> gold_tags;
  g.reserve(gold.size());
  p.reserve(gold.size());
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto& s = gold.sentences[i];
    if (!s.gold_tags) throw ContractError("evaluate: sentence '" + s.id + "' has no gold tags");
    g.push_back({s.id, sbio_to_spans(*s.gold_tags)});
    p.push_back({s.id, sbio_to_spans(pred[i])});
    gold_tags.push_back(*s.gold_tags);
  }
  auto r = micro_f1(g, p);
  r.perfect = perfect(gold_tags, pred);
  return r;
}

void to_json(nlohmann::json& out, const EvalReport& r) {
  nlohmann::json labels = nlohmann::json::object();
  for (const auto& [label, c] : r.per_label)
    labels[label] = {{"tp", c.true_positives}, {"fp", c.false_positives},
                     {"fn", c.false_negatives}, {"f1", prf(c).f1}};
  out = {{"tp", r.true_positives}, {"fp", r.false_positives}, {"fn", r.false_negatives},
         {"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1},
         {"perfect", r.perfect}, {"sentences", r.sentences}, {"per_label", labels}};
}

void from_json(const nlohmann::json& in, EvalReport& r) {
  r.true_positives = in.at("tp").get<std::size_t>();
  r.false_positives = in.at("fp").get<std::size_t>();
  r.false_negatives = in.at("fn").get<std::size_t>();
  r.precision = in.at("precision").get<double>();
  r.recall = in.at("recall").get<double>();
  r.f1 = in.at("f1").get<double>();
  r.perfect = in.at("perfect").get<double>();
  r.sentences = in.at("sentences").get<std::size_t>();
  r.per_label.clear();
  for (const auto& [label, c] : in.at("per_label").items())
    r.per_label[label] = {c.at("tp").get<std::size_t>(), c.at("fp").get<std::size_t>(),
                          c.at("fn").get<std::size_t>()};
}

std::string format_report(const EvalReport& r) {
  std::size_t width = 5;
  for (const auto& [label, c] : r.per_label) width = std::max(width, label.size());
  std::string out;
  char line[256];
  auto row = [&](const std::string& name, const LabelCounts& c, const PrfScores& s) {
    std::snprintf(line, sizeof line, "%-*s %6zu %6zu %6zu %7.2f %7.2f %7.2f\n",
                  static_cast<int>(width), name.c_str(), c.true_positives, c.false_positives,
                  c.false_negatives, 100 * s.precision, 100 * s.recall, 100 * s.f1);
    out += line;
  };
  std::snprintf(line, sizeof line, "%-*s %6s %6s %6s %7s %7s %7s\n", static_cast<int>(width),
                "label", "tp", "fp", "fn", "P", "R", "F1");
  out += line;
  for (const auto& [label, c] : r.per_label) row(label, c, prf(c));
  row("micro", r.counts(), {r.precision, r.recall, r.f1});
  std::snprintf(line, sizeof line, "perfect %.2f over %zu sentences\n", 100 * r.perfect,
                r.sentences);
  out += line;
  return out;
}

}  // namespace sentscore
