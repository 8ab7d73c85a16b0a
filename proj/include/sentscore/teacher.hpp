#pragma once

// Word-level encoder-decoder teacher: BiLSTM encoder, LSTM decoder with
// dot-product attention, trained on sentinel-interleaved (input, target)
// strings and used through the Scorer contract.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "sentscore/corpus.hpp"
#include "sentscore/nn/lstm.hpp"
#include "sentscore/nn/params.hpp"
#include "sentscore/random.hpp"
#include "sentscore/scorer.hpp"
#include "sentscore/tags.hpp"

namespace sentscore {

struct TeacherConfig {
  std::size_t embedding_dim = 32;
  std::size_t encoder_hidden = 64;  // per direction
  std::size_t decoder_hidden = 64;
  std::size_t epochs = 60;
  std::size_t patience = 15;
  double learning_rate = 3e-3;
  std::size_t batch_size = 4;
  double weight_decay = 0.01;
  double grad_clip = 5.0;
  // Input words replaced by the unknown symbol during training, so unseen
  // words at inference time have a trained embedding.
  double unk_replace_rate = 0.1;
  std::size_t min_sentinels = 64;
  // Span-corruption pretraining (pretrain_teacher only).
  std::size_t pretrain_epochs = 0;
  double noise_density = 0.15;
  double mean_noise_span = 3.0;
  std::uint64_t seed = 0;

  void validate() const;
};

void to_json(nlohmann::json& out, const TeacherConfig& c);
void from_json(const nlohmann::json& in, TeacherConfig& c);

class Vocabulary {
 public:
  static constexpr const char* kStart = "<s>";
  static constexpr const char* kUnknown = "<unk>";

  Vocabulary();
  std::size_t add(const std::string& word);
  // Unknown words map to the unknown symbol.
  std::size_t id(std::string_view word) const;
  bool contains(std::string_view word) const;
  const std::string& word(std::size_t id) const { return words_.at(id); }
  std::size_t size() const noexcept { return words_.size(); }
  std::size_t unknown_id() const noexcept { return 1; }
  std::size_t start_id() const noexcept { return 0; }
  const std::vector<std::string>& words() const noexcept { return words_; }

 private:
  std::vector<std::string> words_;
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept {
      return std::hash<std::string_view>{}(s);
    }
  };
  std::unordered_map<std::string, std::size_t, Hash, std::equal_to<>> ids_;
};

struct FormattedPair {
  std::string input;
  std::string target;
};

// SenT′ input/target strings of every gold-labelled sentence.
std::vector<FormattedPair> format_pairs(const DatasetSplit& split, const SentinelScheme& scheme);

// Start/unknown symbols, sentinels 0..max(min_sentinels, longest input + 1),
// the tag strings, then corpus words in order of first appearance.
Vocabulary build_teacher_vocabulary(std::span<const FormattedPair> pairs, const TagSet& tag_set,
                                    const SentinelScheme& scheme, std::size_t min_sentinels);

struct CorruptedText {
  std::vector<std::string> input;   // sentinel-interleaved, dropped words left out
  std::vector<std::string> target;  // sentinel and word of each dropped slot, then the last sentinel
};

// Span corruption in the sentinel-interleaved layout: round(density * n)
// words (at least one) are dropped in round(dropped / mean_span) runs at
// random positions; each slot keeps its sentinel. Throws ContractError on an
// empty sentence.
CorruptedText span_corrupt(std::span<const std::string> tokens, double density, double mean_span,
                           Rng& rng, const SentinelScheme& scheme = SentinelScheme());

class ToyTeacher final : public Scorer {
 public:
  ToyTeacher(Vocabulary vocabulary, TagSet tag_set, TeacherConfig config,
             SentinelScheme scheme = SentinelScheme());
  ToyTeacher(const ToyTeacher&) = delete;
  ToyTeacher& operator=(const ToyTeacher&) = delete;
  ToyTeacher(ToyTeacher&&) noexcept;
  ToyTeacher& operator=(ToyTeacher&&) noexcept;
  ~ToyTeacher() override;

  double score(std::string_view input, std::string_view candidate) const override;
  // Shares encoder work and decoder prefixes across candidates.
  std::vector<double> score_batch(std::string_view input,
                                  std::span<const std::string> candidates) const override;

  // Conditional log-probabilities of every vocabulary entry after `prefix`,
  // recomputed from scratch (no cache).
  std::vector<double> next_token_log_probs(std::string_view input,
                                           std::span<const std::string> prefix) const;

  // Teacher-forced negative log-likelihood of `target` given `input`, as a
  // differentiable scalar. `unk_mask` (optional, input-token aligned) forces
  // positions to the unknown symbol.
  nn::Tensor sequence_nll(std::span<const std::string> input,
                          std::span<const std::string> target,
                          const std::vector<bool>& unk_mask = {}) const;

  const Vocabulary& vocabulary() const noexcept { return vocab_; }
  const TagSet& tag_set() const noexcept { return tag_set_; }
  const TeacherConfig& config() const noexcept { return config_; }
  const SentinelScheme& scheme() const noexcept { return scheme_; }
  nn::ParamStore& params() noexcept { return params_; }
  const nn::ParamStore& params() const noexcept { return params_; }

  // Drops cached decoder states; required after parameters change.
  void clear_cache() const;
  ToyTeacher clone() const;

  void save(std::ostream& out) const;
  static ToyTeacher load(std::istream& in);

 private:
  struct Encoded;
  struct StepState;
  class Cache;

  void bind();
  Encoded encode(std::span<const std::size_t> ids) const;
  StepState start_state(const Encoded& enc) const;
  StepState advance(const Encoded& enc, const StepState& state, std::size_t token) const;
  nn::Tensor output_logits(const Encoded& enc, StepState& state) const;
  std::vector<std::size_t> ids_of(std::span<const std::string> words) const;

  Vocabulary vocab_;
  TagSet tag_set_;
  TeacherConfig config_;
  SentinelScheme scheme_;
  nn::ParamStore params_;
  nn::Tensor embedding_;
  nn::LstmParams enc_fwd_, enc_bwd_, dec_;
  nn::Tensor attn_, output_bias_;
  nn::Linear combine_, output_;
  std::unique_ptr<Cache> cache_;
};

struct TeacherTrainReport {
  double initial_loss = 0.0;           // mean per-token NLL before fine-tuning
  std::vector<double> epoch_loss;      // same, after each epoch
  std::vector<double> dev_f1;          // greedy decoding, after each epoch
  std::size_t best_epoch = 0;          // 1-based; 0 means the initial parameters
  double best_dev_f1 = 0.0;
};

void to_json(nlohmann::json& out, const TeacherTrainReport& r);
void from_json(const nlohmann::json& in, TeacherTrainReport& r);

// Trains a fresh teacher on the gold-labelled sentences of `train`; keeps the
// parameters with the best dev micro-F1 of greedy decoding. Throws
// ConfigError on an empty training split.
ToyTeacher train_teacher(const DatasetSplit& train, const DatasetSplit& dev,
                         const TagSet& tag_set, const TeacherConfig& config,
                         TeacherTrainReport* report = nullptr,
                         const SentinelScheme& scheme = SentinelScheme());

// Span-corruption training for config.pretrain_epochs epochs on raw
// sentences (labels unused). The vocabulary covers their words, the tag
// strings and the sentinels. Throws ConfigError when no sentence has words.
ToyTeacher pretrain_teacher(std::span<const Sentence> text, const TagSet& tag_set,
                            const TeacherConfig& config,
                            std::vector<double>* epoch_loss = nullptr,
                            const SentinelScheme& scheme = SentinelScheme());

// train_teacher starting from a copy of `pretrained`, with the training
// settings and seed of `config`; dimensions must match.
ToyTeacher finetune_teacher(const ToyTeacher& pretrained, const DatasetSplit& train,
                            const DatasetSplit& dev, const TeacherConfig& config,
                            TeacherTrainReport* report = nullptr);

// Greedy decode of every sentence; returns predicted tag sequences.
std::vector<TagSequence> greedy_tags(const Scorer& scorer, const DatasetSplit& split,
                                     const TagSet& tag_set,
                                     const SentinelScheme& scheme = SentinelScheme());

}  // namespace sentscore
