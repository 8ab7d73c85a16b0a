#pragma once

// Experiment grid: one teacher per gold split, silver decoded from the
// remainder, and one student per (silver size, λ_KL, seed) cell.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sentscore/corpus.hpp"
#include "sentscore/distill.hpp"
#include "sentscore/metrics.hpp"
#include "sentscore/teacher.hpp"

namespace sentscore {

void to_json(nlohmann::json& out, const SyntheticSpec& s);
void from_json(const nlohmann::json& in, SyntheticSpec& s);

struct DatasetSource {
  // Exactly one of: a synthetic spec, or CoNLL files for all three splits.
  std::optional<SyntheticSpec> synthetic;
  std::filesystem::path train, dev, test;
  bool dedup = true;

  Dataset load() const;
};

struct GoldSplit {
  std::size_t train = 100;
  std::size_t dev = 50;
  friend bool operator==(const GoldSplit&, const GoldSplit&) = default;
};

// Silver sizes are counts; kAllRemainder stands for the whole remainder
// ("all" in JSON).
inline constexpr std::size_t kAllRemainder = static_cast<std::size_t>(-1);

struct ExperimentConfig {
  DatasetSource dataset;
  std::vector<GoldSplit> gold_splits{{100, 50}};
  std::vector<std::size_t> silver_sizes{0, 250, 500};
  std::vector<double> lambdas{0.0, 1.0};
  DistillConfig distill;          // lambda_kl is taken from `lambdas`
  std::size_t beam_size = 1;      // K for the teacher's test evaluation; silver uses K = 1
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::uint64_t split_seed = 0;   // which sentences form each gold split
  TeacherConfig teacher;
  StudentConfig student;          // seed is derived per run
  // "exec:<command>" uses an external, already trained scorer instead of the
  // toy teacher.
  std::string teacher_endpoint;
  std::size_t jobs = 1;

  void validate() const;
};

void to_json(nlohmann::json& out, const ExperimentConfig& c);
void from_json(const nlohmann::json& in, ExperimentConfig& c);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct SeedResult {
  std::uint64_t seed = 0;
  EvalReport test;
  StudentTrainReport train;
  friend bool operator==(const SeedResult&, const SeedResult&) = default;
};

struct RunRecord {
  std::string fingerprint;  // hex digest of the experiment config and the cell
  GoldSplit gold;
  std::size_t silver_size = 0;  // actual count after resolving "all"
  double lambda_kl = 0.0;
  std::vector<SeedResult> seeds;
  // Sample standard deviation over seeds (0 for a single seed).
  double mean_f1 = 0.0, std_f1 = 0.0;
  double mean_perfect = 0.0, std_perfect = 0.0;
  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

void to_json(nlohmann::json& out, const SeedResult& r);
void from_json(const nlohmann::json& in, SeedResult& r);
void to_json(nlohmann::json& out, const RunRecord& r);
void from_json(const nlohmann::json& in, RunRecord& r);

// Recomputes the mean and standard deviation fields from the seeds.
void aggregate(RunRecord& record);

struct TeacherRecord {
  GoldSplit gold;
  std::vector<double> pretrain_loss;
  TeacherTrainReport train;
  EvalReport test;
  std::size_t remainder = 0;  // sentences available as silver
};

void to_json(nlohmann::json& out, const TeacherRecord& r);
void from_json(const nlohmann::json& in, TeacherRecord& r);

struct ExperimentResult {
  std::vector<TeacherRecord> teachers;
  std::vector<RunRecord> runs;  // gold split, then silver size, then λ_KL
};

// Progress lines (stage names and timings) go to `log` when set.
using ExperimentLog = std::function<void(const std::string&)>;

// Runs the grid. With a non-empty `out_dir`, writes config.json,
// teacher_<train>_<dev>.json, silver_<train>_<dev>.jsonl, one
// runs/<fingerprint>.json per record and records.json.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::filesystem::path& out_dir = {},
                                const ExperimentLog& log = {});

// Text tables: teacher results, then per gold split a silver-size by λ_KL
// grid of mean ± std F1 and Perfect.
std::string format_tables(std::span<const TeacherRecord> teachers,
                          std::span<const RunRecord> runs);
// gold_train,gold_dev,silver_size,lambda_kl,seeds,mean_f1,std_f1,mean_perfect,std_perfect
std::string format_csv(std::span<const RunRecord> runs);

std::vector<RunRecord> read_records(const std::filesystem::path& path);

}  // namespace sentscore
