#include "sentscore/distill.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

#include "sentscore/error.hpp"
#include "sentscore/json_util.hpp"
#include "sentscore/metrics.hpp"
#include "sentscore/nn/adamw.hpp"
#include "sentscore/nn/losses.hpp"
#include "sentscore/nn/ops.hpp"

namespace sentscore {

using nn::Index;
using nn::Tensor;

// ---------------------------------------------------------------------------
// Configuration

void StudentConfig::validate() const {
  if (word_emb_dim == 0 || char_emb_dim == 0) throw ConfigError("student: dimensions must be positive");
  if (char_hidden < 2 || char_hidden % 2 != 0 || word_hidden < 2 || word_hidden % 2 != 0)
    throw ConfigError("student: char_hidden and word_hidden must be even (two directions)");
  if (epochs == 0 || batch_size == 0) throw ConfigError("student: epochs and batch_size must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("student: learning_rate must be positive");
  if (weight_decay < 0.0) throw ConfigError("student: weight_decay must be non-negative");
  if (!(grad_clip > 0.0)) throw ConfigError("student: grad_clip must be positive");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("student: dropout must be in [0, 1)");
  if (unk_replace_rate < 0.0 || unk_replace_rate >= 1.0)
    throw ConfigError("student: unk_replace_rate must be in [0, 1)");
}

void to_json(nlohmann::json& out, const StudentConfig& c) {
  out = {{"word_emb_dim", c.word_emb_dim},
         {"char_emb_dim", c.char_emb_dim},
         {"char_hidden", c.char_hidden},
         {"word_hidden", c.word_hidden},
         {"pretrained_embedding_path", c.pretrained_embedding_path},
         {"freeze_pretrained", c.freeze_pretrained},
         {"dropout", c.dropout},
         {"unk_replace_rate", c.unk_replace_rate},
         {"epochs", c.epochs},
         {"patience", c.patience},
         {"learning_rate", c.learning_rate},
         {"weight_decay", c.weight_decay},
         {"batch_size", c.batch_size},
         {"grad_clip", c.grad_clip},
         {"seed", c.seed}};
}

void from_json(const nlohmann::json& in, StudentConfig& c) {
  constexpr std::string_view ctx = "student";
  reject_unknown_keys(in,
                      {"word_emb_dim", "char_emb_dim", "char_hidden", "word_hidden",
                       "pretrained_embedding_path", "freeze_pretrained", "dropout",
                       "unk_replace_rate", "epochs", "patience", "learning_rate", "weight_decay",
                       "batch_size", "grad_clip", "seed"},
                      ctx);
  read_optional(in, "word_emb_dim", c.word_emb_dim, ctx);
  read_optional(in, "char_emb_dim", c.char_emb_dim, ctx);
  read_optional(in, "char_hidden", c.char_hidden, ctx);
  read_optional(in, "word_hidden", c.word_hidden, ctx);
  read_optional(in, "pretrained_embedding_path", c.pretrained_embedding_path, ctx);
  read_optional(in, "freeze_pretrained", c.freeze_pretrained, ctx);
  read_optional(in, "dropout", c.dropout, ctx);
  read_optional(in, "unk_replace_rate", c.unk_replace_rate, ctx);
  read_optional(in, "epochs", c.epochs, ctx);
  read_optional(in, "patience", c.patience, ctx);
  read_optional(in, "learning_rate", c.learning_rate, ctx);
  read_optional(in, "weight_decay", c.weight_decay, ctx);
  read_optional(in, "batch_size", c.batch_size, ctx);
  read_optional(in, "grad_clip", c.grad_clip, ctx);
  read_optional(in, "seed", c.seed, ctx);
  c.validate();
}

void DistillConfig::validate() const {
  if (!(lambda_kl >= 0.0) || !std::isfinite(lambda_kl))
    throw ConfigError("distill: lambda_kl must be a finite non-negative number");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("distill: tau must be positive");
}

void to_json(nlohmann::json& out, const DistillConfig& c) {
  out = {{"lambda_kl", c.lambda_kl},
         {"tau", c.tau},
         {"temper_student", c.temper_student},
         {"scale_tau_squared", c.scale_tau_squared}};
}

void from_json(const nlohmann::json& in, DistillConfig& c) {
  constexpr std::string_view ctx = "distill";
  reject_unknown_keys(in, {"lambda_kl", "tau", "temper_student", "scale_tau_squared"}, ctx);
  read_optional(in, "lambda_kl", c.lambda_kl, ctx);
  read_optional(in, "tau", c.tau, ctx);
  read_optional(in, "temper_student", c.temper_student, ctx);
  read_optional(in, "scale_tau_squared", c.scale_tau_squared, ctx);
  c.validate();
}

// ---------------------------------------------------------------------------
// Silver data

namespace {

SilverExample decode_one(const Scorer& teacher, const Sentence& s, const TagSet& tag_set,
                         const SentinelScheme& scheme) {
  try {
    auto r = greedy(teacher, s.tokens, tag_set, scheme);
    return {s.id, s.tokens, std::move(r.tags), std::move(r.scores), tag_set.tag_order()};
  } catch (const TransportError& e) {
    throw TransportError("sentence '" + s.id + "': " + e.what());
  } catch (const ProtocolError& e) {
    throw ProtocolError("sentence '" + s.id + "': " + e.what());
  } catch (const ContractError& e) {
    throw ContractError("sentence '" + s.id + "': " + e.what());
  }
}

}  // namespace

std::vector<SilverExample> generate_silver(const Scorer& teacher, const DatasetSplit& split,
                                           const TagSet& tag_set, std::size_t jobs,
                                           const SentinelScheme& scheme) {
  const std::size_t n = split.size();
  std::vector<SilverExample> out(n);
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i)
      out[i] = decode_one(teacher, split.sentences[i], tag_set, scheme);
    return out;
  }
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> workers;
  for (std::size_t j = 0; j < jobs; ++j)
    workers.emplace_back([&, j] {
      for (std::size_t i = j; i < n; i += jobs) {
        try {
          out[i] = decode_one(teacher, split.sentences[i], tag_set, scheme);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto& w : workers) w.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

std::vector<std::vector<double>> soft_targets(const SilverExample& example, double tau) {
  std::vector<std::vector<double>> rows;
  rows.reserve(example.scores.size());
  for (const auto& row : example.scores) rows.push_back(step_distribution(row, row_mask(row), tau));
  return rows;
}

// ---------------------------------------------------------------------------
// Student model

StudentTagger::StudentTagger(std::span<const std::string> training_words, TagSet tag_set,
                             StudentConfig config)
    : tag_set_(std::move(tag_set)), config_(std::move(config)) {
  config_.validate();
  words_.push_back("<unk>");
  for (const auto& w : training_words) {
    if (word_ids_.emplace(w, words_.size()).second) words_.push_back(w);
    for (unsigned char ch : w)
      if (char_ids_[ch] == 0) {
        chars_.push_back(ch);
        char_ids_[ch] = chars_.size();
      }
  }
  pretrained_rows_.assign(words_.size(), false);
  Rng rng(derive_seed(config_.seed, "student-init"));
  build(rng);
}

void StudentTagger::build(Rng& rng) {
  const auto d = static_cast<Index>(config_.word_emb_dim);
  const auto c = static_cast<Index>(config_.char_emb_dim);
  const auto hc = static_cast<Index>(config_.char_hidden / 2);
  const auto hw = static_cast<Index>(config_.word_hidden / 2);
  params_.add("word_embedding", nn::uniform_init(static_cast<Index>(words_.size()), d, 1, rng));
  params_.add("char_embedding",
              nn::uniform_init(static_cast<Index>(chars_.size() + 1), c, 1, rng));
  nn::make_lstm(params_, "char.fwd", c, hc, rng);
  nn::make_lstm(params_, "char.bwd", c, hc, rng);
  nn::make_lstm(params_, "word.fwd", d + 2 * hc, hw, rng);
  nn::make_lstm(params_, "word.bwd", d + 2 * hc, hw, rng);
  nn::make_linear(params_, "output", 2 * hw, static_cast<Index>(tag_set_.size()), rng);
  bind();
}

void StudentTagger::bind() {
  word_emb_ = params_.get("word_embedding");
  char_emb_ = params_.get("char_embedding");
  char_fwd_ = nn::bind_lstm(params_, "char.fwd");
  char_bwd_ = nn::bind_lstm(params_, "char.bwd");
  word_fwd_ = nn::bind_lstm(params_, "word.fwd");
  word_bwd_ = nn::bind_lstm(params_, "word.bwd");
  output_ = nn::bind_linear(params_, "output");
}

std::size_t StudentTagger::word_id(const std::string& word) const {
  auto it = word_ids_.find(word);
  return it == word_ids_.end() ? 0 : it->second;
}

Tensor StudentTagger::char_representation(const std::string& word) const {
  std::vector<Tensor> xs;
  xs.reserve(word.size());
  for (unsigned char ch : word) xs.push_back(nn::embedding_lookup(char_emb_, static_cast<Index>(char_ids_[ch])));
  if (xs.empty()) xs.push_back(nn::embedding_lookup(char_emb_, 0));
  const auto fwd = nn::lstm_sequence(xs, char_fwd_, false);
  const auto bwd = nn::lstm_sequence(xs, char_bwd_, true);
  return nn::concat({fwd.back(), bwd.front()});
}

std::vector<Tensor> StudentTagger::forward_graph(std::span<const std::string> tokens, bool train,
                                                 std::uint64_t dropout_seed,
                                                 const std::vector<bool>& unk_mask,
                                                 CharCache* cache) const {
  if (tokens.empty()) throw ContractError("student: empty sentence");
  CharCache local;
  CharCache& chars = cache ? *cache : local;
  const double rate = train ? config_.dropout : 0.0;
  std::vector<Tensor> xs;
  xs.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const bool unk = i < unk_mask.size() && unk_mask[i];
    const auto id = unk ? 0 : word_id(tokens[i]);
    auto it = chars.find(tokens[i]);
    if (it == chars.end()) it = chars.emplace(tokens[i], char_representation(tokens[i])).first;
    Tensor x = nn::concat({nn::embedding_lookup(word_emb_, static_cast<Index>(id)), it->second});
    xs.push_back(nn::dropout(x, rate, mix64(dropout_seed ^ (2 * i))));
  }
  const auto hs = nn::bilstm(xs, word_fwd_, word_bwd_);
  std::vector<Tensor> logits;
  logits.reserve(hs.size());
  for (std::size_t i = 0; i < hs.size(); ++i)
    logits.push_back(nn::apply(output_, nn::dropout(hs[i], rate, mix64(dropout_seed ^ (2 * i + 1)))));
  return logits;
}

StudentOutput StudentTagger::forward(std::span<const std::string> tokens) const {
  nn::NoGradGuard no_grad;
  const auto logits = forward_graph(tokens);
  const auto width = static_cast<Index>(tag_set_.size());
  StudentOutput out{nn::Matrix(static_cast<Index>(logits.size()), width),
                    nn::Matrix(static_cast<Index>(logits.size()), width)};
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const auto& v = logits[i].value();
    const std::vector<double> row(v.data(), v.data() + v.size());
    const auto q = nn::softmax(row);
    for (Index k = 0; k < width; ++k) {
      out.logits(static_cast<Index>(i), k) = row[static_cast<std::size_t>(k)];
      out.q(static_cast<Index>(i), k) = q[static_cast<std::size_t>(k)];
    }
  }
  return out;
}

TagSequence StudentTagger::predict(std::span<const std::string> tokens, PredictMode mode) const {
  const auto out = forward(tokens);
  TagSequence tags;
  std::optional<std::size_t> previous;
  for (Index i = 0; i < out.logits.rows(); ++i) {
    std::size_t best = tag_set_.size();
    for (std::size_t t = 0; t < tag_set_.size(); ++t) {
      if (mode == PredictMode::Masked && !continuation_permitted(tag_set_, previous, t)) continue;
      if (best == tag_set_.size() || out.logits(i, static_cast<Index>(t)) > out.logits(i, static_cast<Index>(best)))
        best = t;
    }
    tags.push_back(tag_set_.tag_at(best));
    previous = best;
  }
  return tags;
}

std::size_t StudentTagger::load_pretrained(std::istream& in) {
  auto& table = params_.get("word_embedding").mutable_value();
  const auto d = table.cols();
  std::size_t loaded = 0, line_no = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string word;
    if (!(fields >> word)) continue;
    std::vector<double> values;
    for (double v; fields >> v;) values.push_back(v);
    if (!fields.eof()) throw FormatError("embedding row for '" + word + "' has a non-number", line_no);
    if (static_cast<Index>(values.size()) != d)
      throw FormatError("embedding row for '" + word + "' has " + std::to_string(values.size()) +
                            " values, expected " + std::to_string(d),
                        line_no);
    auto it = word_ids_.find(word);
    if (it == word_ids_.end()) continue;
    for (Index k = 0; k < d; ++k) table(static_cast<Index>(it->second), k) = values[static_cast<std::size_t>(k)];
    if (!pretrained_rows_[it->second]) ++loaded;
    pretrained_rows_[it->second] = true;
  }
  return loaded;
}

namespace {
constexpr const char* kStudentMagic = "sentscore-student";
constexpr int kStudentVersion = 1;
}  // namespace

void StudentTagger::save(std::ostream& out) const {
  std::vector<int> chars(chars_.begin(), chars_.end());
  std::vector<std::size_t> pretrained;
  for (std::size_t i = 0; i < pretrained_rows_.size(); ++i)
    if (pretrained_rows_[i]) pretrained.push_back(i);
  nlohmann::json header = {{"config", config_},   {"labels", tag_set_.labels()},
                           {"words", words_},     {"chars", chars},
                           {"pretrained_rows", pretrained}};
  out << kStudentMagic << ' ' << kStudentVersion << '\n' << header.dump() << '\n';
  params_.save(out);
  if (!out) throw IoError("failed writing student");
}

StudentTagger StudentTagger::load(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != kStudentMagic)
    throw IoError("student file: bad header");
  if (version != kStudentVersion)
    throw IoError("student file: unsupported version " + std::to_string(version));
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  StudentTagger s;
  try {
    const auto header = nlohmann::json::parse(line);
    s.config_ = header.at("config").get<StudentConfig>();
    s.tag_set_ = TagSet(header.at("labels").get<std::vector<std::string>>());
    s.words_ = header.at("words").get<std::vector<std::string>>();
    for (int ch : header.at("chars").get<std::vector<int>>()) {
      if (ch < 0 || ch > 255) throw IoError("student file: bad character id");
      s.chars_.push_back(static_cast<unsigned char>(ch));
      s.char_ids_[static_cast<unsigned char>(ch)] = s.chars_.size();
    }
    s.pretrained_rows_.assign(s.words_.size(), false);
    for (auto i : header.at("pretrained_rows").get<std::vector<std::size_t>>())
      s.pretrained_rows_.at(i) = true;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("student file: bad metadata: ") + e.what());
  } catch (const std::out_of_range&) {
    throw IoError("student file: pretrained row out of range");
  }
  for (std::size_t i = 1; i < s.words_.size(); ++i) s.word_ids_.emplace(s.words_[i], i);
  Rng rng(0);
  s.build(rng);
  s.params_.load_values(nn::ParamStore::load(in));
  return s;
}

// ---------------------------------------------------------------------------
// Loss

Tensor distill_loss(std::span<const Tensor> logits, const TagSet& tag_set,
                    std::span<const SbioTag> targets, std::span<const std::vector<double>> soft,
                    ExampleKind kind, const DistillConfig& config) {
  if (logits.size() != targets.size())
    throw ContractError("distill_loss: " + std::to_string(targets.size()) + " targets for " +
                        std::to_string(logits.size()) + " positions");
  const bool use_kl = kind == ExampleKind::Silver && config.lambda_kl > 0.0;
  if (use_kl && soft.size() != logits.size())
    throw ContractError("distill_loss: silver example needs one soft row per position");
  std::vector<Tensor> terms;
  terms.reserve(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    Tensor term = nn::cross_entropy_with_logits(logits[i], static_cast<Index>(tag_set.index_of(targets[i])));
    if (use_kl) {
      const Tensor student = config.temper_student ? nn::scale(logits[i], 1.0 / config.tau) : logits[i];
      double weight = config.lambda_kl;
      if (config.scale_tau_squared) weight *= config.tau * config.tau;
      term = nn::add(term, nn::scale(nn::kl_with_logits(soft[i], student), weight));
    }
    terms.push_back(std::move(term));
  }
  return nn::sum(nn::concat(terms));
}

double distill_loss_value(std::span<const std::size_t> targets,
                          std::span<const std::vector<double>> p_star,
                          std::span<const std::vector<double>> q, double lambda_kl) {
  if (targets.size() != q.size() || (lambda_kl > 0.0 && p_star.size() != q.size()))
    throw ContractError("distill_loss_value: row counts differ");
  double total = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    std::vector<double> y(q[i].size(), 0.0);
    y.at(targets[i]) = 1.0;
    total += nn::cross_entropy(y, q[i]);
    if (lambda_kl > 0.0) total += lambda_kl * nn::kl_divergence(p_star[i], q[i]);
  }
  return total;
}

// ---------------------------------------------------------------------------
// Training

void to_json(nlohmann::json& out, const StudentTrainReport& r) {
  out = {{"epoch_loss", r.epoch_loss},       {"dev_f1", r.dev_f1},
         {"best_epoch", r.best_epoch},       {"best_dev_f1", r.best_dev_f1},
         {"gold_examples", r.gold_examples}, {"silver_examples", r.silver_examples}};
}

void from_json(const nlohmann::json& in, StudentTrainReport& r) {
  in.at("epoch_loss").get_to(r.epoch_loss);
  in.at("dev_f1").get_to(r.dev_f1);
  in.at("best_epoch").get_to(r.best_epoch);
  in.at("best_dev_f1").get_to(r.best_dev_f1);
  in.at("gold_examples").get_to(r.gold_examples);
  in.at("silver_examples").get_to(r.silver_examples);
}

std::vector<TagSequence> predict_split(const StudentTagger& student, const DatasetSplit& split,
                                       PredictMode mode) {
  std::vector<TagSequence> out;
  out.reserve(split.size());
  for (const auto& s : split.sentences) out.push_back(student.predict(s.tokens, mode));
  return out;
}

namespace {

struct TrainExample {
  const std::vector<std::string>* tokens;
  const TagSequence* targets;
  std::vector<std::vector<double>> soft;
  ExampleKind kind;
};

}  // namespace

StudentTagger train_student(const DatasetSplit& gold, std::span<const SilverExample> silver,
                            const DatasetSplit& dev, const TagSet& tag_set,
                            const StudentConfig& student, const DistillConfig& distill,
                            StudentTrainReport* report) {
  student.validate();
  distill.validate();
  if (gold.empty()) throw ConfigError("train_student: the gold split is empty");
  if (dev.empty()) throw ConfigError("train_student: the dev split is empty");

  std::vector<TrainExample> examples;
  std::vector<std::string> words;
  for (const auto& s : gold.sentences) {
    if (!s.gold_tags) throw ConfigError("train_student: gold sentence '" + s.id + "' is unlabelled");
    examples.push_back({&s.tokens, &*s.gold_tags, {}, ExampleKind::Gold});
    words.insert(words.end(), s.tokens.begin(), s.tokens.end());
  }
  for (const auto& s : silver) {
    if (s.tag_order != tag_set.tag_order())
      throw ContractError("train_student: silver '" + s.id + "' uses a different tag order");
    examples.push_back({&s.tokens, &s.tags,
                        distill.lambda_kl > 0.0 ? soft_targets(s, distill.tau)
                                                : std::vector<std::vector<double>>{},
                        ExampleKind::Silver});
    words.insert(words.end(), s.tokens.begin(), s.tokens.end());
  }

  StudentTagger model(words, tag_set, student);
  if (!student.pretrained_embedding_path.empty()) {
    std::ifstream in(student.pretrained_embedding_path);
    if (!in) throw IoError("cannot open embeddings '" + student.pretrained_embedding_path + "'");
    model.load_pretrained(in);
  }
  const auto& frozen_rows = model.pretrained_rows();
  const bool freeze = student.freeze_pretrained &&
                      std::find(frozen_rows.begin(), frozen_rows.end(), true) != frozen_rows.end();
  nn::Matrix frozen_values;
  if (freeze) frozen_values = model.params().get("word_embedding").value();

  StudentTrainReport local;
  StudentTrainReport& rep = report ? *report : local;
  rep = {};
  rep.gold_examples = gold.size();
  rep.silver_examples = silver.size();

  nn::AdamW optimizer(model.params(), {student.learning_rate, 0.9, 0.999, 1e-8,
                                       student.weight_decay});
  Rng order_rng(derive_seed(student.seed, "student-batches"));
  Rng unk_rng(derive_seed(student.seed, "student-unk"));
  const std::uint64_t dropout_base = derive_seed(student.seed, "student-dropout");
  std::uint64_t draw = 0;
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  auto dev_f1 = [&] { return evaluate(dev, predict_split(model, dev)).f1; };
  auto best = model.params().snapshot();
  std::size_t since_best = 0;
  bool have_best = false;
  for (std::size_t epoch = 1; epoch <= student.epochs; ++epoch) {
    order_rng.shuffle(order);
    double epoch_total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += student.batch_size) {
      const std::size_t end = std::min(order.size(), start + student.batch_size);
      model.params().zero_grad();
      StudentTagger::CharCache cache;
      std::vector<Tensor> losses;
      for (std::size_t b = start; b < end; ++b) {
        const auto& e = examples[order[b]];
        std::vector<bool> unk(e.tokens->size(), false);
        if (student.unk_replace_rate > 0.0)
          for (std::size_t i = 0; i < unk.size(); ++i) unk[i] = unk_rng.bernoulli(student.unk_replace_rate);
        const auto logits = model.forward_graph(*e.tokens, true, mix64(dropout_base ^ draw++), unk, &cache);
        losses.push_back(distill_loss(logits, tag_set, *e.targets, e.soft, e.kind, distill));
      }
      const Tensor batch = nn::scale(nn::sum(nn::concat(losses)), 1.0 / static_cast<double>(end - start));
      epoch_total += batch.item() * static_cast<double>(end - start);
      batch.backward();
      model.params().clip_grad_norm(student.grad_clip);
      optimizer.step();
      if (freeze) {
        auto& table = model.params().get("word_embedding").mutable_value();
        for (std::size_t r = 0; r < frozen_rows.size(); ++r)
          if (frozen_rows[r]) table.row(static_cast<Index>(r)) = frozen_values.row(static_cast<Index>(r));
      }
    }
    rep.epoch_loss.push_back(epoch_total / static_cast<double>(examples.size()));
    const double f1 = dev_f1();
    rep.dev_f1.push_back(f1);
    if (!have_best || f1 > rep.best_dev_f1) {
      have_best = true;
      rep.best_dev_f1 = f1;
      rep.best_epoch = epoch;
      best = model.params().snapshot();
      since_best = 0;
    } else if (student.patience > 0 && ++since_best >= student.patience) {
      break;
    }
  }
  model.params().restore(best);
  return model;
}

}  // namespace sentscore
