#pragma once

// BiLSTM student tagger, silver data from a scoring teacher, and the
// distillation objective CE(y*, q) + λ·KL(p* ‖ q).

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "sentscore/corpus.hpp"
#include "sentscore/decoder.hpp"
#include "sentscore/nn/lstm.hpp"
#include "sentscore/nn/params.hpp"
#include "sentscore/random.hpp"
#include "sentscore/scorer.hpp"
#include "sentscore/tags.hpp"

namespace sentscore {

struct StudentConfig {
  std::size_t word_emb_dim = 100;
  std::size_t char_emb_dim = 30;
  std::size_t char_hidden = 50;   // both directions together
  std::size_t word_hidden = 200;  // both directions together
  std::string pretrained_embedding_path;  // GloVe text format; empty for none
  bool freeze_pretrained = false;
  double dropout = 0.0;           // on the word BiLSTM input and output
  double unk_replace_rate = 0.0;  // training words dropped to the unknown row
  std::size_t epochs = 100;
  std::size_t patience = 25;      // epochs without dev improvement
  double learning_rate = 1e-3;
  double weight_decay = 0.01;
  std::size_t batch_size = 16;
  double grad_clip = 5.0;
  std::uint64_t seed = 0;

  void validate() const;
};

void to_json(nlohmann::json& out, const StudentConfig& c);
void from_json(const nlohmann::json& in, StudentConfig& c);

struct DistillConfig {
  double lambda_kl = 1.0;
  double tau = 10.0;
  // Standard-KD variants, off by default: divide the student logits by τ in
  // the KL term, and multiply that term by τ².
  bool temper_student = false;
  bool scale_tau_squared = false;

  void validate() const;
};

void to_json(nlohmann::json& out, const DistillConfig& c);
void from_json(const nlohmann::json& in, DistillConfig& c);

// A teacher-labelled sentence: y* = tags, u* = scores (cumulative
// log-likelihood rows, -inf where masked). Same record as the decode output.
using SilverExample = DecodedSentence;

// Greedy SenTScore over every sentence (gold tags, if any, are ignored).
// Scorer failures are rethrown with the sentence id in the message. `jobs`
// worker threads split the sentences; output order follows the input.
std::vector<SilverExample> generate_silver(const Scorer& teacher, const DatasetSplit& split,
                                           const TagSet& tag_set, std::size_t jobs = 1,
                                           const SentinelScheme& scheme = SentinelScheme());

// p* rows: softmax(u*_i / τ) over the unmasked entries.
std::vector<std::vector<double>> soft_targets(const SilverExample& example, double tau);

struct StudentOutput {
  nn::Matrix logits;  // L x |T̄|
  nn::Matrix q;       // row-wise softmax
};

enum class PredictMode {
  Masked,  // left-to-right argmax over valid continuations
  Raw,     // per-position argmax
};

class StudentTagger {
 public:
  // Character representations shared by the sentences of one batch.
  using CharCache = std::unordered_map<std::string, nn::Tensor>;

  // Vocabulary from `training_words`; the character set from their bytes.
  StudentTagger(std::span<const std::string> training_words, TagSet tag_set,
                StudentConfig config);

  // Logits per position (|T̄| x 1 columns), recorded for differentiation.
  // `train` enables dropout; `dropout_seed` makes it reproducible.
  std::vector<nn::Tensor> forward_graph(std::span<const std::string> tokens, bool train = false,
                                        std::uint64_t dropout_seed = 0,
                                        const std::vector<bool>& unk_mask = {},
                                        CharCache* cache = nullptr) const;
  // Throws ContractError on an empty sentence.
  StudentOutput forward(std::span<const std::string> tokens) const;
  TagSequence predict(std::span<const std::string> tokens,
                      PredictMode mode = PredictMode::Masked) const;

  // Loads `word v1 ... vd` lines for words in the vocabulary; returns how
  // many rows were replaced. Throws FormatError on a dimension mismatch.
  std::size_t load_pretrained(std::istream& in);

  const TagSet& tag_set() const noexcept { return tag_set_; }
  const StudentConfig& config() const noexcept { return config_; }
  nn::ParamStore& params() noexcept { return params_; }
  const nn::ParamStore& params() const noexcept { return params_; }
  std::size_t word_id(const std::string& word) const;
  std::size_t vocabulary_size() const noexcept { return words_.size(); }
  // Rows of the word table loaded from pretrained vectors.
  const std::vector<bool>& pretrained_rows() const noexcept { return pretrained_rows_; }

  void save(std::ostream& out) const;
  static StudentTagger load(std::istream& in);

 private:
  StudentTagger() = default;
  void build(Rng& rng);
  void bind();
  nn::Tensor char_representation(const std::string& word) const;

  TagSet tag_set_;
  StudentConfig config_;
  std::vector<std::string> words_;  // 0 is the unknown word
  std::unordered_map<std::string, std::size_t> word_ids_;
  std::vector<unsigned char> chars_;  // id - 1 -> byte; id 0 is the unknown byte
  std::array<std::size_t, 256> char_ids_{};
  std::vector<bool> pretrained_rows_;
  nn::ParamStore params_;
  nn::Tensor word_emb_, char_emb_;
  nn::LstmParams char_fwd_, char_bwd_, word_fwd_, word_bwd_;
  nn::Linear output_;
};

enum class ExampleKind { Gold, Silver };

// Sum over positions of CE(target, q_i), plus λ·KL(p*_i ‖ q_i) for silver.
// Throws ContractError when a silver example with λ > 0 lacks one soft row
// per position, or when targets and logits differ in length.
nn::Tensor distill_loss(std::span<const nn::Tensor> logits, const TagSet& tag_set,
                        std::span<const SbioTag> targets,
                        std::span<const std::vector<double>> soft, ExampleKind kind,
                        const DistillConfig& config);

// Same quantity on plain vectors, for fixtures: rows of q given directly.
double distill_loss_value(std::span<const std::size_t> targets,
                          std::span<const std::vector<double>> p_star,
                          std::span<const std::vector<double>> q, double lambda_kl);

struct StudentTrainReport {
  std::vector<double> epoch_loss;  // mean per-sentence training loss
  std::vector<double> dev_f1;
  std::size_t best_epoch = 0;      // 1-based
  double best_dev_f1 = 0.0;
  std::size_t gold_examples = 0;
  std::size_t silver_examples = 0;
  friend bool operator==(const StudentTrainReport&, const StudentTrainReport&) = default;
};

void to_json(nlohmann::json& out, const StudentTrainReport& r);
void from_json(const nlohmann::json& in, StudentTrainReport& r);

// Trains on the shuffled union of gold (CE) and silver (CE + λ·KL) examples
// and returns the parameters with the best dev micro-F1. Throws ConfigError
// when gold or dev is empty.
StudentTagger train_student(const DatasetSplit& gold, std::span<const SilverExample> silver,
                            const DatasetSplit& dev, const TagSet& tag_set,
                            const StudentConfig& student, const DistillConfig& distill,
                            StudentTrainReport* report = nullptr);

std::vector<TagSequence> predict_split(const StudentTagger& student, const DatasetSplit& split,
                                       PredictMode mode = PredictMode::Masked);

}  // namespace sentscore
