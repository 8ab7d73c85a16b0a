#include "sentscore/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "sentscore/decoder.hpp"
#include "sentscore/error.hpp"
#include "sentscore/external_scorer.hpp"
#include "sentscore/json_util.hpp"
#include "sentscore/random.hpp"

namespace sentscore {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration

void to_json(json& out, const SyntheticSpec& s) {
  out = {{"grammar_seed", s.grammar_seed},
         {"train", s.train},
         {"dev", s.dev},
         {"test", s.test},
         {"tag_count", s.tag_count},
         {"lexicon_size", s.lexicon_size},
         {"max_span_length", s.max_span_length},
         {"templates_per_label", s.templates_per_label},
         {"shared_word_rate", s.shared_word_rate},
         {"open_slot_rate", s.open_slot_rate}};
}

void from_json(const json& in, SyntheticSpec& s) {
  constexpr std::string_view ctx = "dataset.synthetic";
  reject_unknown_keys(in,
                      {"grammar_seed", "train", "dev", "test", "tag_count", "lexicon_size",
                       "max_span_length", "templates_per_label", "shared_word_rate",
                       "open_slot_rate"},
                      ctx);
  read_optional(in, "grammar_seed", s.grammar_seed, ctx);
  read_optional(in, "train", s.train, ctx);
  read_optional(in, "dev", s.dev, ctx);
  read_optional(in, "test", s.test, ctx);
  read_optional(in, "tag_count", s.tag_count, ctx);
  read_optional(in, "lexicon_size", s.lexicon_size, ctx);
  read_optional(in, "max_span_length", s.max_span_length, ctx);
  read_optional(in, "templates_per_label", s.templates_per_label, ctx);
  read_optional(in, "shared_word_rate", s.shared_word_rate, ctx);
  read_optional(in, "open_slot_rate", s.open_slot_rate, ctx);
}

Dataset DatasetSource::load() const {
  if (synthetic) return generate_synthetic(*synthetic);
  if (train.empty() || dev.empty() || test.empty())
    throw ConfigError("dataset: give either 'synthetic' or all of 'train', 'dev', 'test'");
  Dataset d = make_dataset(load_conll(train, SplitName::Train), load_conll(dev, SplitName::Dev),
                           load_conll(test, SplitName::Test));
  return dedup ? sentscore::dedup(d) : d;
}

namespace {

json silver_sizes_to_json(const std::vector<std::size_t>& sizes) {
  json out = json::array();
  for (auto s : sizes) out.push_back(s == kAllRemainder ? json("all") : json(s));
  return out;
}

std::vector<std::size_t> silver_sizes_from_json(const json& j) {
  if (!j.is_array()) throw ConfigError("silver_sizes: expected an array");
  std::vector<std::size_t> out;
  for (const auto& v : j) {
    if (v.is_string() && v.get<std::string>() == "all")
      out.push_back(kAllRemainder);
    else if (v.is_number_unsigned())
      out.push_back(v.get<std::size_t>());
    else
      throw ConfigError("silver_sizes: entries must be non-negative integers or \"all\"");
  }
  return out;
}

std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (dataset.synthetic) dataset.synthetic->validate();
  if (gold_splits.empty()) throw ConfigError("experiment: gold_splits is empty");
  for (const auto& g : gold_splits)
    if (g.train == 0 || g.dev == 0) throw ConfigError("experiment: gold split sizes must be positive");
  if (silver_sizes.empty()) throw ConfigError("experiment: silver_sizes is empty");
  if (lambdas.empty()) throw ConfigError("experiment: lambdas is empty");
  for (double l : lambdas) {
    DistillConfig d = distill;
    d.lambda_kl = l;
    d.validate();
  }
  distill.validate();
  if (seeds.empty()) throw ConfigError("experiment: at least one seed is required");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
    throw ConfigError("experiment: seeds repeat");
  if (beam_size == 0) throw ConfigError("experiment: beam_size must be positive");
  if (jobs == 0) throw ConfigError("experiment: jobs must be positive");
  if (!teacher_endpoint.empty() && teacher_endpoint.rfind("exec:", 0) != 0)
    throw ConfigError("experiment: teacher_endpoint must start with 'exec:'");
  teacher.validate();
  student.validate();
}

void to_json(json& out, const ExperimentConfig& c) {
  json dataset;
  if (c.dataset.synthetic) {
    dataset["synthetic"] = *c.dataset.synthetic;
  } else {
    dataset = {{"train", c.dataset.train.string()},
               {"dev", c.dataset.dev.string()},
               {"test", c.dataset.test.string()}};
  }
  dataset["dedup"] = c.dataset.dedup;
  json gold = json::array();
  for (const auto& g : c.gold_splits) gold.push_back({g.train, g.dev});
  out = {{"dataset", dataset},
         {"gold_splits", gold},
         {"silver_sizes", silver_sizes_to_json(c.silver_sizes)},
         {"lambdas", c.lambdas},
         {"tau", c.distill.tau},
         {"temper_student", c.distill.temper_student},
         {"scale_tau_squared", c.distill.scale_tau_squared},
         {"beam_size", c.beam_size},
         {"seeds", c.seeds},
         {"split_seed", c.split_seed},
         {"teacher", c.teacher},
         {"student", c.student},
         {"teacher_endpoint", c.teacher_endpoint},
         {"jobs", c.jobs}};
}

void from_json(const json& in, ExperimentConfig& c) {
  constexpr std::string_view ctx = "experiment";
  reject_unknown_keys(in,
                      {"dataset", "gold_splits", "silver_sizes", "lambdas", "tau",
                       "temper_student", "scale_tau_squared", "beam_size", "seeds", "split_seed",
                       "teacher", "student", "teacher_endpoint", "jobs"},
                      ctx);
  if (auto it = in.find("dataset"); it != in.end()) {
    reject_unknown_keys(*it, {"synthetic", "train", "dev", "test", "dedup"}, "dataset");
    DatasetSource src;
    if (auto s = it->find("synthetic"); s != it->end()) {
      if (it->contains("train") || it->contains("dev") || it->contains("test"))
        throw ConfigError("dataset: 'synthetic' excludes CoNLL paths");
      src.synthetic = s->get<SyntheticSpec>();
    } else {
      std::string train, dev, test;
      read_optional(*it, "train", train, "dataset");
      read_optional(*it, "dev", dev, "dataset");
      read_optional(*it, "test", test, "dataset");
      src.train = train;
      src.dev = dev;
      src.test = test;
    }
    read_optional(*it, "dedup", src.dedup, "dataset");
    c.dataset = std::move(src);
  }
  if (auto it = in.find("gold_splits"); it != in.end()) {
    if (!it->is_array()) throw ConfigError("gold_splits: expected an array of [train, dev] pairs");
    c.gold_splits.clear();
    for (const auto& pair : *it) {
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_unsigned() ||
          !pair[1].is_number_unsigned())
        throw ConfigError("gold_splits: expected [train, dev] pairs of non-negative integers");
      c.gold_splits.push_back({pair[0].get<std::size_t>(), pair[1].get<std::size_t>()});
    }
  }
  if (auto it = in.find("silver_sizes"); it != in.end()) c.silver_sizes = silver_sizes_from_json(*it);
  read_optional(in, "lambdas", c.lambdas, ctx);
  read_optional(in, "tau", c.distill.tau, ctx);
  read_optional(in, "temper_student", c.distill.temper_student, ctx);
  read_optional(in, "scale_tau_squared", c.distill.scale_tau_squared, ctx);
  read_optional(in, "beam_size", c.beam_size, ctx);
  read_optional(in, "seeds", c.seeds, ctx);
  read_optional(in, "split_seed", c.split_seed, ctx);
  if (auto it = in.find("teacher"); it != in.end()) c.teacher = it->get<TeacherConfig>();
  if (auto it = in.find("student"); it != in.end()) c.student = it->get<StudentConfig>();
  read_optional(in, "teacher_endpoint", c.teacher_endpoint, ctx);
  read_optional(in, "jobs", c.jobs, ctx);
  c.validate();
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path.string() + "' is not JSON: " + e.what());
  }
  return j.get<ExperimentConfig>();
}

// ---------------------------------------------------------------------------
// Records

void to_json(json& out, const SeedResult& r) {
  out = {{"seed", r.seed}, {"test", r.test}, {"train", r.train}};
}

void from_json(const json& in, SeedResult& r) {
  r.seed = in.at("seed").get<std::uint64_t>();
  r.test = in.at("test").get<EvalReport>();
  r.train = in.at("train").get<StudentTrainReport>();
}

void to_json(json& out, const RunRecord& r) {
  out = {{"fingerprint", r.fingerprint},
         {"gold_train", r.gold.train},
         {"gold_dev", r.gold.dev},
         {"silver_size", r.silver_size},
         {"lambda_kl", r.lambda_kl},
         {"seeds", r.seeds},
         {"mean_f1", r.mean_f1},
         {"std_f1", r.std_f1},
         {"mean_perfect", r.mean_perfect},
         {"std_perfect", r.std_perfect}};
}

void from_json(const json& in, RunRecord& r) {
  r.fingerprint = in.at("fingerprint").get<std::string>();
  r.gold = {in.at("gold_train").get<std::size_t>(), in.at("gold_dev").get<std::size_t>()};
  r.silver_size = in.at("silver_size").get<std::size_t>();
  r.lambda_kl = in.at("lambda_kl").get<double>();
  r.seeds = in.at("seeds").get<std::vector<SeedResult>>();
  r.mean_f1 = in.at("mean_f1").get<double>();
  r.std_f1 = in.at("std_f1").get<double>();
  r.mean_perfect = in.at("mean_perfect").get<double>();
  r.std_perfect = in.at("std_perfect").get<double>();
}

void to_json(json& out, const TeacherRecord& r) {
  out = {{"gold_train", r.gold.train},   {"gold_dev", r.gold.dev},
         {"pretrain_loss", r.pretrain_loss}, {"train", r.train},
         {"test", r.test},               {"remainder", r.remainder}};
}

void from_json(const json& in, TeacherRecord& r) {
  r.gold = {in.at("gold_train").get<std::size_t>(), in.at("gold_dev").get<std::size_t>()};
  r.pretrain_loss = in.at("pretrain_loss").get<std::vector<double>>();
  r.train = in.at("train").get<TeacherTrainReport>();
  r.test = in.at("test").get<EvalReport>();
  r.remainder = in.at("remainder").get<std::size_t>();
}

namespace {

std::pair<double, double> mean_std(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

}  // namespace

void aggregate(RunRecord& record) {
  std::vector<double> f1, perfect;
  for (const auto& s : record.seeds) {
    f1.push_back(s.test.f1);
    perfect.push_back(s.test.perfect);
  }
  std::tie(record.mean_f1, record.std_f1) = mean_std(f1);
  std::tie(record.mean_perfect, record.std_perfect) = mean_std(perfect);
}

// ---------------------------------------------------------------------------
// Grid

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

std::vector<TagSequence> teacher_predictions(const Scorer& teacher, const DatasetSplit& split,
                                             const TagSet& tag_set, std::size_t beam_size) {
  if (beam_size == 1) return greedy_tags(teacher, split, tag_set);
  std::vector<TagSequence> out;
  out.reserve(split.size());
  for (const auto& s : split.sentences)
    out.push_back(sentscore_beam(teacher, s.tokens, tag_set, {beam_size, true, TieBreak::TagThenParent})
                      .sequences.front());
  return out;
}

// Remainder indices in the order a seed draws them; a size-n silver set is
// the first n, so smaller sets nest inside larger ones.
std::vector<std::size_t> silver_order(std::size_t pool, std::uint64_t seed) {
  std::vector<std::size_t> idx(pool);
  for (std::size_t i = 0; i < pool; ++i) idx[i] = i;
  Rng rng(derive_seed(seed, "silver-subset"));
  rng.shuffle(idx);
  return idx;
}

struct Task {
  std::size_t record;
  std::size_t seed_slot;
  std::uint64_t seed;
  std::size_t silver_size;
  double lambda;
};

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                                const ExperimentLog& log) {
  config.validate();
  auto say = [&](const std::string& line) {
    if (log) log(line);
  };
  auto fixed = [](double x, int digits) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << x;
    return s.str();
  };
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir / "runs");
    write_json(out_dir / "config.json", config);
  }

  auto t0 = Clock::now();
  const Dataset data = config.dataset.load();
  const TagSet& tag_set = data.tag_set;
  say("dataset: " + std::to_string(data.train.size()) + "/" + std::to_string(data.dev.size()) +
      "/" + std::to_string(data.test.size()) + " sentences, " +
      std::to_string(tag_set.label_count()) + " labels");

  // Fingerprints cover everything that determines results (not `jobs`).
  json identity = config;
  identity.erase("jobs");
  const std::string identity_text = identity.dump();

  std::unique_ptr<ExternalScorer> external;
  std::optional<ToyTeacher> pretrained;
  std::vector<double> pretrain_loss;
  if (!config.teacher_endpoint.empty()) {
    external = ExternalScorer::open(config.teacher_endpoint);
  } else if (config.teacher.pretrain_epochs > 0) {
    t0 = Clock::now();
    pretrained.emplace(pretrain_teacher(data.train.sentences, tag_set, config.teacher, &pretrain_loss));
    say("teacher pretraining: " + std::to_string(pretrain_loss.size()) + " epochs, loss " +
        fixed(pretrain_loss.back(), 4) + ", " + fixed(seconds_since(t0), 1) + " s");
  }

  ExperimentResult result;
  json teachers_json = json::array();
  for (const auto& g : config.gold_splits) {
    if (g.train > data.train.size() || g.dev > data.dev.size())
      throw SizeError("gold split " + std::to_string(g.train) + "/" + std::to_string(g.dev) +
                      " exceeds the dataset");
    const auto part = downsample(data.train, g.train, derive_seed(config.split_seed, "gold-train"));
    const auto dev = downsample(data.dev, g.dev, derive_seed(config.split_seed, "gold-dev")).gold;
    const std::string tag = std::to_string(g.train) + "_" + std::to_string(g.dev);

    TeacherRecord trec;
    trec.gold = g;
    trec.pretrain_loss = pretrain_loss;
    trec.remainder = part.remainder.size();
    std::optional<ToyTeacher> toy;
    t0 = Clock::now();
    if (!external) {
      toy.emplace(pretrained ? finetune_teacher(*pretrained, part.gold, dev, config.teacher, &trec.train)
                             : train_teacher(part.gold, dev, tag_set, config.teacher, &trec.train));
      say("teacher " + tag + ": " + std::to_string(trec.train.epoch_loss.size()) +
          " epochs, best dev F1 " + fixed(trec.train.best_dev_f1, 4) + ", " +
          fixed(seconds_since(t0), 1) + " s");
    }
    const Scorer& teacher = external ? static_cast<const Scorer&>(*external) : *toy;
    t0 = Clock::now();
    trec.test = evaluate(data.test, teacher_predictions(teacher, data.test, tag_set, config.beam_size));
    say("teacher " + tag + " test F1 " + fixed(trec.test.f1, 4) + " (K=" +
        std::to_string(config.beam_size) + ", " + fixed(seconds_since(t0), 1) + " s)");

    // Resolve silver sizes and decode the union of what the seeds draw.
    const std::size_t pool = part.remainder.size();
    std::vector<std::size_t> sizes;
    for (auto s : config.silver_sizes) {
      if (s != kAllRemainder && s > pool)
        throw SizeError("silver size " + std::to_string(s) + " exceeds the remainder of " +
                        std::to_string(pool));
      sizes.push_back(s == kAllRemainder ? pool : s);
    }
    const std::size_t largest = *std::max_element(sizes.begin(), sizes.end());
    std::map<std::uint64_t, std::vector<std::size_t>> draws;
    std::vector<bool> needed(pool, false);
    for (auto seed : config.seeds) {
      auto order = silver_order(pool, seed);
      order.resize(largest);
      for (auto i : order) needed[i] = true;
      draws[seed] = std::move(order);
    }
    DatasetSplit to_decode{SplitName::Train, {}};
    std::vector<std::size_t> slot_of(pool, 0);
    for (std::size_t i = 0; i < pool; ++i)
      if (needed[i]) {
        slot_of[i] = to_decode.sentences.size();
        to_decode.sentences.push_back(part.remainder.sentences[i]);
      }
    t0 = Clock::now();
    const auto silver = generate_silver(teacher, to_decode, tag_set, external ? 1 : config.jobs);
    say("silver " + tag + ": " + std::to_string(silver.size()) + " sentences, " +
        fixed(seconds_since(t0), 1) + " s");
    if (!out_dir.empty()) {
      std::ofstream out(out_dir / ("silver_" + tag + ".jsonl"));
      write_decoded(out, silver);
      write_json(out_dir / ("teacher_" + tag + ".json"), trec);
    }

    // One record per (silver size, λ); cells without silver do not depend on
    // λ and are trained once per seed.
    const std::size_t first = result.runs.size();
    std::vector<Task> tasks;
    for (std::size_t si = 0; si < sizes.size(); ++si) {
      for (double lambda : config.lambdas) {
        RunRecord rec;
        rec.gold = g;
        rec.silver_size = sizes[si];
        rec.lambda_kl = lambda;
        json cell = {{"config", identity_text},
                     {"gold", {g.train, g.dev}},
                     {"silver_size", config.silver_sizes[si] == kAllRemainder
                                         ? json("all")
                                         : json(config.silver_sizes[si])},
                     {"lambda_kl", lambda}};
        rec.fingerprint = hex64(fnv1a(cell.dump())) + hex64(derive_seed(1, cell.dump()));
        rec.seeds.resize(config.seeds.size());
        for (std::size_t k = 0; k < config.seeds.size(); ++k) {
          rec.seeds[k].seed = config.seeds[k];
          if (sizes[si] > 0 || lambda == config.lambdas.front())
            tasks.push_back({result.runs.size(), k, config.seeds[k], sizes[si], lambda});
        }
        result.runs.push_back(std::move(rec));
      }
    }

    auto run_task = [&](const Task& task) {
      std::vector<SilverExample> chosen;
      const auto& order = draws.at(task.seed);
      for (std::size_t i = 0; i < task.silver_size; ++i) chosen.push_back(silver[slot_of[order[i]]]);
      StudentConfig sc = config.student;
      sc.seed = derive_seed(task.seed, "student");
      DistillConfig dc = config.distill;
      dc.lambda_kl = task.lambda;
      SeedResult& out = result.runs[task.record].seeds[task.seed_slot];
      const auto student = train_student(part.gold, chosen, dev, tag_set, sc, dc, &out.train);
      out.test = evaluate(data.test, predict_split(student, data.test));
    };
    t0 = Clock::now();
    const std::size_t jobs = std::min(config.jobs, std::max<std::size_t>(1, tasks.size()));
    if (jobs == 1) {
      for (std::size_t i = 0; i < tasks.size(); ++i) {
        const auto t1 = Clock::now();
        run_task(tasks[i]);
        const auto& r = result.runs[tasks[i].record].seeds[tasks[i].seed_slot];
        say("student " + tag + " silver " + std::to_string(tasks[i].silver_size) + " lambda " +
            fixed(tasks[i].lambda, 2) + " seed " + std::to_string(tasks[i].seed) + ": test F1 " +
            fixed(r.test.f1, 4) + ", " + std::to_string(r.train.epoch_loss.size()) +
            " epochs, " + fixed(seconds_since(t1), 1) + " s");
      }
    } else {
      std::vector<std::exception_ptr> errors(tasks.size());
      std::vector<std::thread> workers;
      for (std::size_t j = 0; j < jobs; ++j)
        workers.emplace_back([&, j] {
          for (std::size_t i = j; i < tasks.size(); i += jobs) {
            try {
              run_task(tasks[i]);
            } catch (...) {
              errors[i] = std::current_exception();
            }
          }
        });
      for (auto& w : workers) w.join();
      for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    }
    say("students " + tag + ": " + std::to_string(tasks.size()) + " runs, " +
        fixed(seconds_since(t0), 1) + " s");

    // Copy the shared no-silver results into the other λ cells.
    for (std::size_t r = first; r < result.runs.size(); ++r) {
      auto& rec = result.runs[r];
      if (rec.silver_size == 0 && rec.lambda_kl != config.lambdas.front()) {
        const auto& src = result.runs[r - static_cast<std::size_t>(
                                              std::find(config.lambdas.begin(), config.lambdas.end(),
                                                        rec.lambda_kl) -
                                              config.lambdas.begin())];
        rec.seeds = src.seeds;
      }
      aggregate(rec);
      if (!out_dir.empty()) write_json(out_dir / "runs" / (rec.fingerprint + ".json"), rec);
    }
    teachers_json.push_back(trec);
    result.teachers.push_back(std::move(trec));
  }
  if (!out_dir.empty()) {
    write_json(out_dir / "records.json", result.runs);
    write_json(out_dir / "teachers.json", teachers_json);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Reports

namespace {

std::string pct(double x) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(2) << 100.0 * x;
  return s.str();
}

std::string lambda_text(double l) {
  std::ostringstream s;
  s << l;
  return s.str();
}

}  // namespace

std::string format_tables(std::span<const TeacherRecord> teachers, std::span<const RunRecord> runs) {
  std::ostringstream out;
  if (!teachers.empty()) {
    out << "Teacher (test set)\n";
    out << std::left << std::setw(12) << "gold" << std::right << std::setw(10) << "F1"
        << std::setw(10) << "Perfect" << std::setw(10) << "epochs" << '\n';
    for (const auto& t : teachers)
      out << std::left << std::setw(12)
          << (std::to_string(t.gold.train) + "/" + std::to_string(t.gold.dev)) << std::right
          << std::setw(10) << pct(t.test.f1) << std::setw(10) << pct(t.test.perfect)
          << std::setw(10) << t.train.epoch_loss.size() << '\n';
    out << '\n';
  }
  std::vector<GoldSplit> golds;
  for (const auto& r : runs)
    if (std::find(golds.begin(), golds.end(), r.gold) == golds.end()) golds.push_back(r.gold);
  for (const auto& g : golds) {
    std::vector<std::size_t> sizes;
    std::vector<double> lambdas;
    for (const auto& r : runs) {
      if (r.gold != g) continue;
      if (std::find(sizes.begin(), sizes.end(), r.silver_size) == sizes.end())
        sizes.push_back(r.silver_size);
      if (std::find(lambdas.begin(), lambdas.end(), r.lambda_kl) == lambdas.end())
        lambdas.push_back(r.lambda_kl);
    }
    for (const char* metric : {"F1", "Perfect"}) {
      const bool f1 = std::string_view(metric) == "F1";
      out << "Student " << metric << " (test set), gold " << g.train << "/" << g.dev
          << ", mean ± std over seeds\n";
      out << std::left << std::setw(10) << "|S|";
      for (double l : lambdas) out << std::setw(22) << ("lambda_KL=" + lambda_text(l));
      out << '\n';
      for (auto s : sizes) {
        out << std::left << std::setw(10) << s;
        for (double l : lambdas) {
          std::string cell = "-";
          for (const auto& r : runs)
            if (r.gold == g && r.silver_size == s && r.lambda_kl == l)
              cell = f1 ? pct(r.mean_f1) + " ± " + pct(r.std_f1)
                        : pct(r.mean_perfect) + " ± " + pct(r.std_perfect);
          // "±" is two bytes wide in UTF-8 but one column on screen.
          out << cell << std::string(cell.size() < 23 ? 23 - cell.size() : 1, ' ');
        }
        out << '\n';
      }
      out << '\n';
    }
  }
  return out.str();
}

std::string format_csv(std::span<const RunRecord> runs) {
  std::ostringstream out;
  out << "gold_train,gold_dev,silver_size,lambda_kl,seeds,mean_f1,std_f1,mean_perfect,std_perfect\n";
  out << std::setprecision(17);
  for (const auto& r : runs)
    out << r.gold.train << ',' << r.gold.dev << ',' << r.silver_size << ',' << r.lambda_kl << ','
        << r.seeds.size() << ',' << r.mean_f1 << ',' << r.std_f1 << ',' << r.mean_perfect << ','
        << r.std_perfect << '\n';
  return out.str();
}

std::vector<RunRecord> read_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open records '" + path.string() + "'");
  try {
    const auto j = json::parse(in);
    if (j.is_array()) return j.get<std::vector<RunRecord>>();
    return {j.get<RunRecord>()};
  } catch (const json::exception& e) {
    throw FormatError("records '" + path.string() + "': " + e.what(), 0);
  }
}

}  // namespace sentscore
