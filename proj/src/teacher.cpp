#include "sentscore/teacher.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "sentscore/decoder.hpp"
#include "sentscore/error.hpp"
#include "sentscore/json_util.hpp"
#include "sentscore/metrics.hpp"
#include "sentscore/nn/adamw.hpp"
#include "sentscore/nn/ops.hpp"
#include "sentscore/random.hpp"

namespace sentscore {

using nn::Index;
using nn::Tensor;

void TeacherConfig::validate() const {
  if (embedding_dim == 0 || encoder_hidden == 0 || decoder_hidden == 0)
    throw ConfigError("teacher: dimensions must be positive");
  if (epochs == 0 || batch_size == 0) throw ConfigError("teacher: epochs and batch_size must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("teacher: learning_rate must be positive");
  if (weight_decay < 0.0) throw ConfigError("teacher: weight_decay must be non-negative");
  if (!(grad_clip > 0.0)) throw ConfigError("teacher: grad_clip must be positive");
  if (unk_replace_rate < 0.0 || unk_replace_rate >= 1.0)
    throw ConfigError("teacher: unk_replace_rate must be in [0, 1)");
  if (!(noise_density > 0.0 && noise_density < 1.0))
    throw ConfigError("teacher: noise_density must be in (0, 1)");
  if (!(mean_noise_span >= 1.0)) throw ConfigError("teacher: mean_noise_span must be at least 1");
}

void to_json(nlohmann::json& out, const TeacherConfig& c) {
  out = {{"embedding_dim", c.embedding_dim},       {"encoder_hidden", c.encoder_hidden},
         {"decoder_hidden", c.decoder_hidden},     {"epochs", c.epochs},
         {"patience", c.patience},                 {"learning_rate", c.learning_rate},
         {"batch_size", c.batch_size},             {"weight_decay", c.weight_decay},
         {"grad_clip", c.grad_clip},               {"unk_replace_rate", c.unk_replace_rate},
         {"min_sentinels", c.min_sentinels},       {"pretrain_epochs", c.pretrain_epochs},
         {"noise_density", c.noise_density},       {"mean_noise_span", c.mean_noise_span},
         {"seed", c.seed}};
}

void from_json(const nlohmann::json& in, TeacherConfig& c) {
  constexpr std::string_view ctx = "teacher";
  reject_unknown_keys(in,
                      {"embedding_dim", "encoder_hidden", "decoder_hidden", "epochs", "patience",
                       "learning_rate", "batch_size", "weight_decay", "grad_clip",
                       "unk_replace_rate", "min_sentinels", "pretrain_epochs", "noise_density",
                       "mean_noise_span", "seed"},
                      ctx);
  read_optional(in, "embedding_dim", c.embedding_dim, ctx);
  read_optional(in, "encoder_hidden", c.encoder_hidden, ctx);
  read_optional(in, "decoder_hidden", c.decoder_hidden, ctx);
  read_optional(in, "epochs", c.epochs, ctx);
  read_optional(in, "patience", c.patience, ctx);
  read_optional(in, "learning_rate", c.learning_rate, ctx);
  read_optional(in, "batch_size", c.batch_size, ctx);
  read_optional(in, "weight_decay", c.weight_decay, ctx);
  read_optional(in, "grad_clip", c.grad_clip, ctx);
  read_optional(in, "unk_replace_rate", c.unk_replace_rate, ctx);
  read_optional(in, "min_sentinels", c.min_sentinels, ctx);
  read_optional(in, "pretrain_epochs", c.pretrain_epochs, ctx);
  read_optional(in, "noise_density", c.noise_density, ctx);
  read_optional(in, "mean_noise_span", c.mean_noise_span, ctx);
  read_optional(in, "seed", c.seed, ctx);
  c.validate();
}

Vocabulary::Vocabulary() {
  add(kStart);
  add(kUnknown);
}

std::size_t Vocabulary::add(const std::string& word) {
  auto [it, inserted] = ids_.emplace(word, words_.size());
  if (inserted) words_.push_back(word);
  return it->second;
}

std::size_t Vocabulary::id(std::string_view word) const {
  auto it = ids_.find(word);
  return it == ids_.end() ? unknown_id() : it->second;
}

bool Vocabulary::contains(std::string_view word) const { return ids_.find(word) != ids_.end(); }

std::vector<FormattedPair> format_pairs(const DatasetSplit& split, const SentinelScheme& scheme) {
  std::vector<FormattedPair> out;
  out.reserve(split.size());
  for (const auto& s : split.sentences) {
    if (!s.gold_tags) continue;
    out.push_back({encode_input(s.tokens, scheme, FormatVariant::SenTPrime),
                   encode_target(*s.gold_tags, scheme)});
  }
  return out;
}

Vocabulary build_teacher_vocabulary(std::span<const FormattedPair> pairs, const TagSet& tag_set,
                                    const SentinelScheme& scheme, std::size_t min_sentinels) {
  std::size_t longest = 0;
  std::vector<std::vector<std::string>> inputs;
  for (const auto& p : pairs) {
    inputs.push_back(split_whitespace(p.input));
    longest = std::max(longest, inputs.back().size() / 2);
  }
  Vocabulary v;
  for (std::size_t k = 0; k <= std::max(min_sentinels, longest + 1); ++k) v.add(scheme.sentinel(k));
  for (const auto& t : tag_set.tag_order()) v.add(t);
  for (const auto& words : inputs)
    for (const auto& w : words)
      if (!scheme.is_sentinel(w)) v.add(w);
  return v;
}

namespace {

// Splits `total` into `parts` pieces of at least `floor` each, uniformly.
std::vector<std::size_t> random_composition(std::size_t total, std::size_t parts,
                                            std::size_t floor, Rng& rng) {
  std::vector<std::size_t> cuts;
  const std::size_t free = total - parts * floor;
  for (std::size_t i = 0; i + 1 < parts; ++i) cuts.push_back(rng.index(free + 1));
  std::sort(cuts.begin(), cuts.end());
  std::vector<std::size_t> out;
  std::size_t last = 0;
  for (auto c : cuts) {
    out.push_back(c - last + floor);
    last = c;
  }
  out.push_back(free - last + floor);
  return out;
}

}  // namespace

CorruptedText span_corrupt(std::span<const std::string> tokens, double density, double mean_span,
                           Rng& rng, const SentinelScheme& scheme) {
  if (tokens.empty()) throw ContractError("span_corrupt: empty sentence");
  const std::size_t n = tokens.size();
  std::size_t noise = static_cast<std::size_t>(std::lround(density * static_cast<double>(n)));
  noise = std::clamp<std::size_t>(noise, 1, std::max<std::size_t>(1, n - 1));
  std::size_t spans = static_cast<std::size_t>(
      std::lround(static_cast<double>(noise) / mean_span));
  spans = std::clamp<std::size_t>(spans, 1, std::min(noise, n - noise + 1));
  const auto noise_lengths = random_composition(noise, spans, 1, rng);
  // spans + 1 gaps; the inner ones keep at least one word so spans stay apart.
  const std::size_t kept = n - noise;
  auto gaps = random_composition(kept - (spans - 1), spans + 1, 0, rng);
  for (std::size_t i = 1; i < spans; ++i) ++gaps[i];

  std::vector<bool> dropped;
  for (std::size_t k = 0; k <= spans; ++k) {
    dropped.insert(dropped.end(), gaps[k], false);
    if (k < spans) dropped.insert(dropped.end(), noise_lengths[k], true);
  }

  CorruptedText out;
  for (std::size_t i = 0; i < n; ++i) {
    out.input.push_back(scheme.sentinel(i));
    if (dropped[i]) {
      out.target.push_back(scheme.sentinel(i));
      out.target.push_back(tokens[i]);
    } else {
      out.input.push_back(tokens[i]);
    }
  }
  out.input.push_back(scheme.sentinel(n));
  out.target.push_back(scheme.sentinel(n));
  return out;
}

struct ToyTeacher::Encoded {
  Tensor keys;    // (2He + d) x n
  Tensor keys_t;
};

struct ToyTeacher::StepState {
  nn::LstmState lstm;
  Tensor feed;  // attention-combined output of the last step
};

class ToyTeacher::Cache {
 public:
  struct Entry {
    StepState state;
    std::vector<double> log_probs;
  };

  std::mutex mutex;
  std::string input;
  std::unique_ptr<Encoded> encoded;
  std::unordered_map<std::string, Entry> prefixes;

  void clear() {
    input.clear();
    encoded.reset();
    prefixes.clear();
  }
};

namespace {

constexpr std::size_t kCacheLimit = 200000;
constexpr double kCopyPrior = 40.0;  // divided by the embedding width

std::vector<double> to_vector(const nn::Matrix& m) {
  return std::vector<double>(m.data(), m.data() + m.size());
}

}  // namespace

ToyTeacher::ToyTeacher(Vocabulary vocabulary, TagSet tag_set, TeacherConfig config,
                       SentinelScheme scheme)
    : vocab_(std::move(vocabulary)),
      tag_set_(std::move(tag_set)),
      config_(config),
      scheme_(std::move(scheme)),
      cache_(std::make_unique<Cache>()) {
  config_.validate();
  Rng rng(derive_seed(config_.seed, "teacher-init"));
  const auto v = static_cast<Index>(vocab_.size());
  const auto d = static_cast<Index>(config_.embedding_dim);
  const auto he = static_cast<Index>(config_.encoder_hidden);
  const auto hd = static_cast<Index>(config_.decoder_hidden);
  params_.add("embedding", nn::uniform_init(v, d, 1, rng));
  nn::make_lstm(params_, "encoder.fwd", d, he, rng);
  nn::make_lstm(params_, "encoder.bwd", d, he, rng);
  nn::make_lstm(params_, "decoder", d + hd, hd, rng);
  // Keys and queries both carry the raw token embedding next to the recurrent
  // state; the embedding-to-embedding block starts as a scaled identity, so a
  // decoder step initially attends to the input sentinel it has just consumed.
  nn::Matrix attention = nn::uniform_init(2 * he + d, hd + d, hd + d, rng);
  attention.block(2 * he, hd, d, d).diagonal().array() += kCopyPrior / static_cast<double>(d);
  params_.add("attention", std::move(attention));
  nn::make_linear(params_, "combine", hd + 2 * he + d, hd, rng);
  // Output scores are dot products with the input embeddings (tied).
  nn::make_linear(params_, "output", hd, d, rng);
  params_.add("output_bias", nn::Matrix::Zero(v, 1));
  bind();
}

ToyTeacher::ToyTeacher(ToyTeacher&&) noexcept = default;
ToyTeacher& ToyTeacher::operator=(ToyTeacher&&) noexcept = default;
ToyTeacher::~ToyTeacher() = default;

void ToyTeacher::bind() {
  embedding_ = params_.get("embedding");
  enc_fwd_ = nn::bind_lstm(params_, "encoder.fwd");
  enc_bwd_ = nn::bind_lstm(params_, "encoder.bwd");
  dec_ = nn::bind_lstm(params_, "decoder");
  attn_ = params_.get("attention");
  combine_ = nn::bind_linear(params_, "combine");
  output_ = nn::bind_linear(params_, "output");
  output_bias_ = params_.get("output_bias");
}

std::vector<std::size_t> ToyTeacher::ids_of(std::span<const std::string> words) const {
  std::vector<std::size_t> ids;
  ids.reserve(words.size());
  for (const auto& w : words) ids.push_back(vocab_.id(w));
  return ids;
}

ToyTeacher::Encoded ToyTeacher::encode(std::span<const std::size_t> ids) const {
  if (ids.empty()) throw ContractError("teacher: empty input");
  std::vector<Tensor> xs;
  xs.reserve(ids.size());
  for (auto id : ids) xs.push_back(nn::embedding_lookup(embedding_, static_cast<Index>(id)));
  auto states = nn::bilstm(xs, enc_fwd_, enc_bwd_);
  for (std::size_t i = 0; i < states.size(); ++i) states[i] = nn::concat({states[i], xs[i]});
  Encoded e;
  e.keys = nn::concat(states, 1);
  e.keys_t = nn::transpose(e.keys);
  return e;
}

ToyTeacher::StepState ToyTeacher::advance(const Encoded& enc, const StepState& state,
                                          std::size_t token) const {
  const Tensor emb = nn::embedding_lookup(embedding_, static_cast<Index>(token));
  StepState next;
  next.lstm = nn::lstm_step(nn::concat({emb, state.feed}), state.lstm, dec_);
  const Tensor query = nn::matmul(attn_, nn::concat({next.lstm.h, emb}));
  const Tensor weights = nn::softmax(nn::matmul(enc.keys_t, query));
  const Tensor context = nn::matmul(enc.keys, weights);
  next.feed = nn::tanh(nn::apply(combine_, nn::concat({next.lstm.h, context})));
  return next;
}

ToyTeacher::StepState ToyTeacher::start_state(const Encoded& enc) const {
  const auto hd = static_cast<Index>(config_.decoder_hidden);
  StepState zero{nn::zero_state(hd), Tensor::zeros(hd, 1)};
  return advance(enc, zero, vocab_.start_id());
}

Tensor ToyTeacher::output_logits(const Encoded&, StepState& state) const {
  return nn::add(nn::matmul(embedding_, nn::apply(output_, state.feed)), output_bias_);
}

std::vector<double> ToyTeacher::score_batch(std::string_view input,
                                            std::span<const std::string> candidates) const {
  nn::NoGradGuard no_grad;
  std::lock_guard lock(cache_->mutex);
  auto& cache = *cache_;
  if (!cache.encoded || cache.input != input) {
    cache.clear();
    cache.input = std::string(input);
    const auto words = split_whitespace(input);
    cache.encoded = std::make_unique<Encoded>(encode(ids_of(words)));
  }
  if (cache.prefixes.size() > kCacheLimit) cache.prefixes.clear();
  const Encoded& enc = *cache.encoded;

  auto entry_for = [&](StepState state) {
    Cache::Entry e;
    e.log_probs = to_vector(nn::log_softmax(output_logits(enc, state)).value());
    e.state = std::move(state);
    return e;
  };

  std::vector<double> out;
  out.reserve(candidates.size());
  for (const auto& candidate : candidates) {
    const auto tokens = split_whitespace(candidate);
    std::string key;
    auto it = cache.prefixes.find(key);
    if (it == cache.prefixes.end()) it = cache.prefixes.emplace(key, entry_for(start_state(enc))).first;
    double total = 0.0;
    for (std::size_t j = 0; j < tokens.size(); ++j) {
      const std::size_t id = vocab_.id(tokens[j]);
      total += it->second.log_probs[id];
      if (j + 1 == tokens.size()) break;
      if (j) key += ' ';
      key += tokens[j];
      auto next = cache.prefixes.find(key);
      if (next == cache.prefixes.end())
        next = cache.prefixes.emplace(key, entry_for(advance(enc, it->second.state, id))).first;
      it = next;
    }
    out.push_back(total);
  }
  return out;
}

double ToyTeacher::score(std::string_view input, std::string_view candidate) const {
  const std::string c(candidate);
  return score_batch(input, std::span<const std::string>(&c, 1)).front();
}

std::vector<double> ToyTeacher::next_token_log_probs(std::string_view input,
                                                     std::span<const std::string> prefix) const {
  nn::NoGradGuard no_grad;
  const auto words = split_whitespace(input);
  const Encoded enc = encode(ids_of(words));
  StepState state = start_state(enc);
  for (auto id : ids_of(prefix)) state = advance(enc, state, id);
  return to_vector(nn::log_softmax(output_logits(enc, state)).value());
}

Tensor ToyTeacher::sequence_nll(std::span<const std::string> input,
                                std::span<const std::string> target,
                                const std::vector<bool>& unk_mask) const {
  if (target.empty()) throw ContractError("teacher: empty target");
  auto ids = ids_of(input);
  for (std::size_t i = 0; i < unk_mask.size() && i < ids.size(); ++i)
    if (unk_mask[i]) ids[i] = vocab_.unknown_id();
  const Encoded enc = encode(ids);
  StepState state = start_state(enc);
  std::vector<Tensor> terms;
  terms.reserve(target.size());
  const auto target_ids = ids_of(target);
  for (std::size_t j = 0; j < target_ids.size(); ++j) {
    terms.push_back(nn::cross_entropy_with_logits(output_logits(enc, state),
                                                  static_cast<Index>(target_ids[j])));
    if (j + 1 < target_ids.size()) state = advance(enc, state, target_ids[j]);
  }
  return nn::sum(nn::concat(terms));
}

void ToyTeacher::clear_cache() const {
  std::lock_guard lock(cache_->mutex);
  cache_->clear();
}

namespace {
constexpr const char* kTeacherMagic = "sentscore-teacher";
constexpr int kTeacherVersion = 1;
}  // namespace

void ToyTeacher::save(std::ostream& out) const {
  nlohmann::json header = {{"config", config_},
                           {"labels", tag_set_.labels()},
                           {"sentinel_pattern", scheme_.pattern()},
                           {"vocabulary", vocab_.words()}};
  out << kTeacherMagic << ' ' << kTeacherVersion << '\n' << header.dump() << '\n';
  params_.save(out);
  if (!out) throw IoError("failed writing teacher");
}

ToyTeacher ToyTeacher::load(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != kTeacherMagic)
    throw IoError("teacher file: bad header");
  if (version != kTeacherVersion)
    throw IoError("teacher file: unsupported version " + std::to_string(version));
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("teacher file: bad metadata: ") + e.what());
  }
  Vocabulary vocab;
  for (const auto& w : header.at("vocabulary")) vocab.add(w.get<std::string>());
  ToyTeacher t(std::move(vocab), TagSet(header.at("labels").get<std::vector<std::string>>()),
               header.at("config").get<TeacherConfig>(),
               SentinelScheme(header.at("sentinel_pattern").get<std::string>()));
  t.params_.load_values(nn::ParamStore::load(in));
  return t;
}

void to_json(nlohmann::json& out, const TeacherTrainReport& r) {
  out = {{"initial_loss", r.initial_loss}, {"epoch_loss", r.epoch_loss},
         {"dev_f1", r.dev_f1},             {"best_epoch", r.best_epoch},
         {"best_dev_f1", r.best_dev_f1}};
}

void from_json(const nlohmann::json& in, TeacherTrainReport& r) {
  in.at("initial_loss").get_to(r.initial_loss);
  in.at("epoch_loss").get_to(r.epoch_loss);
  in.at("dev_f1").get_to(r.dev_f1);
  in.at("best_epoch").get_to(r.best_epoch);
  in.at("best_dev_f1").get_to(r.best_dev_f1);
}

std::vector<TagSequence> greedy_tags(const Scorer& scorer, const DatasetSplit& split,
                                     const TagSet& tag_set, const SentinelScheme& scheme) {
  std::vector<TagSequence> out;
  out.reserve(split.size());
  for (const auto& s : split.sentences) out.push_back(greedy(scorer, s.tokens, tag_set, scheme).tags);
  return out;
}

ToyTeacher ToyTeacher::clone() const {
  ToyTeacher copy(vocab_, tag_set_, config_, scheme_);
  copy.params_.restore(params_.snapshot());
  return copy;
}

ToyTeacher pretrain_teacher(std::span<const Sentence> text, const TagSet& tag_set,
                            const TeacherConfig& config, std::vector<double>* epoch_loss,
                            const SentinelScheme& scheme) {
  config.validate();
  std::vector<const std::vector<std::string>*> texts;
  std::size_t longest = 0;
  for (const auto& s : text) {
    if (s.tokens.empty()) continue;
    texts.push_back(&s.tokens);
    longest = std::max(longest, s.tokens.size());
  }
  if (texts.empty()) throw ConfigError("pretrain_teacher: no non-empty sentences");

  Vocabulary vocab;
  for (std::size_t k = 0; k <= std::max(config.min_sentinels, longest + 1); ++k)
    vocab.add(scheme.sentinel(k));
  for (const auto& t : tag_set.tag_order()) vocab.add(t);
  for (const auto* words : texts)
    for (const auto& w : *words) vocab.add(w);
  ToyTeacher teacher(std::move(vocab), tag_set, config, scheme);

  std::vector<double> local;
  std::vector<double>& losses = epoch_loss ? *epoch_loss : local;
  losses.clear();
  nn::AdamW optimizer(teacher.params(), {config.learning_rate, 0.9, 0.999, 1e-8,
                                         config.weight_decay});
  Rng order_rng(derive_seed(config.seed, "teacher-pretrain-batches"));
  Rng noise_rng(derive_seed(config.seed, "teacher-pretrain-noise"));
  std::vector<std::size_t> order(texts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t epoch = 0; epoch < config.pretrain_epochs; ++epoch) {
    order_rng.shuffle(order);
    double nll = 0.0;
    std::size_t tokens = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::vector<CorruptedText> batch;
      std::size_t batch_tokens = 0;
      for (std::size_t b = start; b < end; ++b) {
        batch.push_back(span_corrupt(*texts[order[b]], config.noise_density,
                                     config.mean_noise_span, noise_rng, scheme));
        batch_tokens += batch.back().target.size();
      }
      teacher.params().zero_grad();
      for (const auto& c : batch) {
        Tensor loss = teacher.sequence_nll(c.input, c.target);
        nll += loss.item();
        nn::scale(loss, 1.0 / static_cast<double>(batch_tokens)).backward();
      }
      tokens += batch_tokens;
      teacher.params().clip_grad_norm(config.grad_clip);
      optimizer.step();
    }
    losses.push_back(nll / static_cast<double>(tokens));
  }
  teacher.clear_cache();
  return teacher;
}

namespace {

void fit_teacher(ToyTeacher& teacher, const DatasetSplit& train, const DatasetSplit& dev,
                 const TeacherConfig& config, TeacherTrainReport* report) {
  const auto& scheme = teacher.scheme();
  const auto& tag_set = teacher.tag_set();
  const auto pairs = format_pairs(train, scheme);
  if (pairs.empty()) throw ConfigError("train_teacher: no gold-labelled training sentences");

  struct Example {
    std::vector<std::string> input, target;
    std::vector<bool> is_word;
  };
  std::vector<Example> examples;
  std::size_t total_tokens = 0;
  for (const auto& p : pairs) {
    Example e{split_whitespace(p.input), split_whitespace(p.target), {}};
    for (const auto& w : e.input) e.is_word.push_back(!scheme.is_sentinel(w));
    total_tokens += e.target.size();
    examples.push_back(std::move(e));
  }

  TeacherTrainReport local;
  TeacherTrainReport& rep = report ? *report : local;
  rep = {};
  auto train_loss = [&] {
    nn::NoGradGuard no_grad;
    double nll = 0.0;
    for (const auto& e : examples) nll += teacher.sequence_nll(e.input, e.target).item();
    return nll / static_cast<double>(total_tokens);
  };
  rep.initial_loss = train_loss();

  auto dev_f1 = [&] {
    teacher.clear_cache();
    if (dev.empty()) return 0.0;
    return evaluate(dev, greedy_tags(teacher, dev, tag_set, scheme)).f1;
  };

  nn::AdamW optimizer(teacher.params(), {config.learning_rate, 0.9, 0.999, 1e-8,
                                         config.weight_decay});
  Rng order_rng(derive_seed(config.seed, "teacher-batches"));
  Rng unk_rng(derive_seed(config.seed, "teacher-unk"));
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  auto best = teacher.params().snapshot();
  rep.best_dev_f1 = dev_f1();
  rep.best_epoch = 0;
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    order_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::size_t batch_tokens = 0;
      for (std::size_t b = start; b < end; ++b) batch_tokens += examples[order[b]].target.size();
      teacher.params().zero_grad();
      for (std::size_t b = start; b < end; ++b) {
        const auto& e = examples[order[b]];
        std::vector<bool> mask(e.input.size(), false);
        for (std::size_t i = 0; i < mask.size(); ++i)
          mask[i] = e.is_word[i] && unk_rng.bernoulli(config.unk_replace_rate);
        nn::scale(teacher.sequence_nll(e.input, e.target, mask),
                  1.0 / static_cast<double>(batch_tokens))
            .backward();
      }
      teacher.params().clip_grad_norm(config.grad_clip);
      optimizer.step();
    }
    rep.epoch_loss.push_back(train_loss());
    const double f1 = dev_f1();
    rep.dev_f1.push_back(f1);
    if (f1 > rep.best_dev_f1 || dev.empty()) {
      rep.best_dev_f1 = f1;
      rep.best_epoch = epoch;
      best = teacher.params().snapshot();
      since_best = 0;
    } else if (++since_best >= config.patience && config.patience > 0) {
      break;
    }
  }
  teacher.params().restore(best);
  teacher.clear_cache();
}

}  // namespace

ToyTeacher train_teacher(const DatasetSplit& train, const DatasetSplit& dev,
                         const TagSet& tag_set, const TeacherConfig& config,
                         TeacherTrainReport* report, const SentinelScheme& scheme) {
  config.validate();
  const auto pairs = format_pairs(train, scheme);
  if (pairs.empty()) throw ConfigError("train_teacher: no gold-labelled training sentences");
  ToyTeacher teacher(build_teacher_vocabulary(pairs, tag_set, scheme, config.min_sentinels),
                     tag_set, config, scheme);
  fit_teacher(teacher, train, dev, config, report);
  return teacher;
}

ToyTeacher finetune_teacher(const ToyTeacher& pretrained, const DatasetSplit& train,
                            const DatasetSplit& dev, const TeacherConfig& config,
                            TeacherTrainReport* report) {
  config.validate();
  const auto& p = pretrained.config();
  if (p.embedding_dim != config.embedding_dim || p.encoder_hidden != config.encoder_hidden ||
      p.decoder_hidden != config.decoder_hidden)
    throw ConfigError("finetune_teacher: dimensions differ from the pretrained teacher");
  ToyTeacher teacher(pretrained.vocabulary(), pretrained.tag_set(), config, pretrained.scheme());
  teacher.params().restore(pretrained.params().snapshot());
  fit_teacher(teacher, train, dev, config, report);
  return teacher;
}

}  // namespace sentscore
