// sentscore: command-line front end. Every failure prints one JSON object
// {"error": <kind>, "message": <text>} on stderr and exits nonzero.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "sentscore/corpus.hpp"
#include "sentscore/decoder.hpp"
#include "sentscore/distill.hpp"
#include "sentscore/error.hpp"
#include "sentscore/external_scorer.hpp"
#include "sentscore/harness.hpp"
#include "sentscore/json_util.hpp"
#include "sentscore/metrics.hpp"
#include "sentscore/teacher.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sentscore;

namespace {

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("'" + path.string() + "' is not JSON: " + e.what());
  }
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  return out;
}

json stats_json(const Dataset& d) {
  const auto s = stats(d);
  return {{"train", s.train}, {"dev", s.dev}, {"test", s.test}, {"tags", s.tags},
          {"labels", d.tag_set.labels()}};
}

void write_dataset(const Dataset& d, const fs::path& dir) {
  fs::create_directories(dir);
  save_conll(dir / "train.conll", d.train);
  save_conll(dir / "dev.conll", d.dev);
  save_conll(dir / "test.conll", d.test);
  open_out(dir / "stats.json") << stats_json(d).dump(2) << '\n';
}

ToyTeacher load_teacher(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open teacher '" + path.string() + "'");
  return ToyTeacher::load(in);
}

// Either a saved toy teacher or an "exec:" endpoint.
struct TeacherSource {
  std::string path, endpoint;
  std::optional<ToyTeacher> toy;
  std::unique_ptr<ExternalScorer> external;

  const Scorer& open() {
    if (!endpoint.empty()) {
      external = ExternalScorer::open(endpoint);
      return *external;
    }
    if (path.empty()) throw ConfigError("give --teacher or --endpoint");
    toy.emplace(load_teacher(path));
    return *toy;
  }
};

TagSet tag_set_of(const TeacherSource& src, const std::vector<std::string>& labels) {
  if (src.toy) return src.toy->tag_set();
  if (labels.empty()) throw ConfigError("--labels is required with an external scorer");
  return TagSet(labels);
}

void emit_error(const char* kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sentinel-scoring sequence labelling: teacher, decoding, distillation, experiments"};
  app.require_subcommand(1);
  std::string config_path, out_path;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;

  auto add_common = [&](CLI::App* cmd, bool with_config, bool with_seed) {
    if (with_config) cmd->add_option("--config", config_path, "JSON configuration file");
    if (with_seed) cmd->add_option("--seed", seed, "Seed override");
    cmd->add_option("--out", out_path, "Output path")->required();
  };

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Validate, deduplicate and copy CoNLL splits");
  std::string train_path, dev_path, test_path;
  bool no_dedup = false;
  ingest->add_option("--train", train_path)->required()->check(CLI::ExistingFile);
  ingest->add_option("--dev", dev_path)->required()->check(CLI::ExistingFile);
  ingest->add_option("--test", test_path)->required()->check(CLI::ExistingFile);
  ingest->add_flag("--no-dedup", no_dedup, "Keep sentences repeated across splits");
  add_common(ingest, false, false);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate the synthetic corpus");
  add_common(synth, true, true);

  // train-teacher
  auto* train_teacher_cmd = app.add_subcommand("train-teacher", "Train the toy teacher on gold data");
  std::string pretrain_path;
  train_teacher_cmd->add_option("--train", train_path)->required()->check(CLI::ExistingFile);
  train_teacher_cmd->add_option("--dev", dev_path)->required()->check(CLI::ExistingFile);
  train_teacher_cmd->add_option("--pretrain-text", pretrain_path,
                                "CoNLL file whose words are used for span-corruption pretraining")
      ->check(CLI::ExistingFile);
  add_common(train_teacher_cmd, true, true);

  // decode / silver / serve
  TeacherSource teacher_src;
  std::string input_path;
  std::vector<std::string> labels;
  std::size_t beam = 1;
  auto add_teacher = [&](CLI::App* cmd) {
    cmd->add_option("--teacher", teacher_src.path, "Saved toy teacher")->check(CLI::ExistingFile);
    cmd->add_option("--endpoint", teacher_src.endpoint, "External scorer, exec:<command>");
    cmd->add_option("--labels", labels, "Labels T, in order, for an external scorer");
  };
  auto* decode = app.add_subcommand("decode", "Decode sentences with constrained beam search");
  add_teacher(decode);
  decode->add_option("--input", input_path)->required()->check(CLI::ExistingFile);
  decode->add_option("--beam", beam, "Beam size K")->check(CLI::PositiveNumber);
  add_common(decode, false, false);

  auto* silver_cmd = app.add_subcommand("silver", "Label sentences greedily and keep score rows");
  add_teacher(silver_cmd);
  silver_cmd->add_option("--input", input_path)->required()->check(CLI::ExistingFile);
  silver_cmd->add_option("--jobs", jobs)->check(CLI::PositiveNumber);
  add_common(silver_cmd, false, false);

  auto* serve = app.add_subcommand("serve", "Answer scoring requests on stdin/stdout");
  serve->add_option("--teacher", teacher_src.path)->required()->check(CLI::ExistingFile);

  // distill
  auto* distill_cmd = app.add_subcommand("distill", "Train the BiLSTM student");
  std::string silver_path;
  distill_cmd->add_option("--gold", train_path)->required()->check(CLI::ExistingFile);
  distill_cmd->add_option("--dev", dev_path)->required()->check(CLI::ExistingFile);
  distill_cmd->add_option("--silver", silver_path, "Silver JSONL from `silver`")
      ->check(CLI::ExistingFile);
  add_common(distill_cmd, true, true);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Micro-F1 and Perfect against a gold CoNLL file");
  std::string gold_path, pred_path, student_path;
  eval_cmd->add_option("--gold", gold_path)->required()->check(CLI::ExistingFile);
  auto* pred_opt = eval_cmd->add_option("--pred", pred_path, "Predictions, CoNLL or decode JSONL")
                       ->check(CLI::ExistingFile);
  eval_cmd->add_option("--student", student_path, "Saved student to predict with")
      ->check(CLI::ExistingFile)
      ->excludes(pred_opt);
  eval_cmd->add_option("--out", out_path, "Write the report JSON here");

  // experiment / report
  auto* experiment = app.add_subcommand("experiment", "Run the gold/silver/lambda grid");
  experiment->add_option("--jobs", jobs, "Worker threads for students and silver")
      ->check(CLI::PositiveNumber);
  add_common(experiment, true, true);
  experiment->get_option("--config")->required();

  auto* report = app.add_subcommand("report", "Tables and CSV from experiment records");
  std::string records_path;
  report->add_option("--records", records_path, "Experiment directory or records JSON")
      ->required()
      ->check(CLI::ExistingPath);
  report->add_option("--out", out_path, "CSV output (default: print tables only)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    emit_error("usage", e.what());
    return 2;
  }

  try {
    if (*ingest) {
      Dataset d = make_dataset(load_conll(train_path, SplitName::Train),
                               load_conll(dev_path, SplitName::Dev),
                               load_conll(test_path, SplitName::Test));
      if (!no_dedup) d = dedup(d);
      write_dataset(d, out_path);
      std::cout << stats_json(d).dump() << '\n';
    } else if (*synth) {
      SyntheticSpec spec;
      if (!config_path.empty()) spec = read_json(config_path).get<SyntheticSpec>();
      if (seed) spec.grammar_seed = *seed;
      const Dataset d = generate_synthetic(spec);
      write_dataset(d, out_path);
      std::cout << stats_json(d).dump() << '\n';
    } else if (*train_teacher_cmd) {
      TeacherConfig tc;
      if (!config_path.empty()) tc = read_json(config_path).get<TeacherConfig>();
      if (seed) tc.seed = *seed;
      const auto train = load_conll(train_path, SplitName::Train);
      const auto dev = load_conll(dev_path, SplitName::Dev);
      TeacherTrainReport rep;
      std::vector<double> pretrain_loss;
      const TagSet tag_set = derive_tag_set({&train, &dev});
      std::optional<ToyTeacher> teacher;
      if (!pretrain_path.empty()) {
        if (tc.pretrain_epochs == 0) throw ConfigError("--pretrain-text needs teacher.pretrain_epochs > 0");
        const auto text = load_conll(pretrain_path, SplitName::Train);
        const auto pre = pretrain_teacher(text.sentences, tag_set, tc, &pretrain_loss);
        teacher.emplace(finetune_teacher(pre, train, dev, tc, &rep));
      } else {
        teacher.emplace(sentscore::train_teacher(train, dev, tag_set, tc, &rep));
      }
      fs::create_directories(out_path);
      std::ofstream model(fs::path(out_path) / "teacher.bin", std::ios::binary);
      teacher->save(model);
      json summary = {{"train", rep}, {"pretrain_loss", pretrain_loss}, {"config", tc}};
      open_out(fs::path(out_path) / "teacher.json") << summary.dump(2) << '\n';
      std::cout << json{{"best_epoch", rep.best_epoch}, {"best_dev_f1", rep.best_dev_f1}}.dump()
                << '\n';
    } else if (*decode || *silver_cmd) {
      const Scorer& scorer = teacher_src.open();
      const TagSet tag_set = tag_set_of(teacher_src, labels);
      const auto split = load_conll(input_path, SplitName::Test);
      std::vector<DecodedSentence> records;
      if (*silver_cmd) {
        records = generate_silver(scorer, split, tag_set, scorer.in_process() ? jobs : 1);
      } else {
        for (const auto& s : split.sentences) {
          auto r = sentscore_beam(scorer, s.tokens, tag_set, {beam, true, TieBreak::TagThenParent});
          records.push_back({s.id, s.tokens, r.sequences.front(), r.score_matrices.front(),
                             tag_set.tag_order()});
        }
      }
      auto out = open_out(out_path);
      write_decoded(out, records);
    } else if (*serve) {
      const auto teacher = load_teacher(teacher_src.path);
      serve_scorer(teacher, std::cin, std::cout);
    } else if (*distill_cmd) {
      StudentConfig sc;
      DistillConfig dc;
      if (!config_path.empty()) {
        const json j = read_json(config_path);
        reject_unknown_keys(j, {"student", "distill"}, "distill config");
        if (j.contains("student")) sc = j["student"].get<StudentConfig>();
        if (j.contains("distill")) dc = j["distill"].get<DistillConfig>();
      }
      if (seed) sc.seed = *seed;
      const auto gold = load_conll(train_path, SplitName::Train);
      const auto dev = load_conll(dev_path, SplitName::Dev);
      std::vector<SilverExample> silver;
      if (!silver_path.empty()) {
        std::ifstream in(silver_path);
        silver = read_decoded(in);
      }
      // Silver rows are indexed by the teacher's tag order; keep it.
      TagSet tag_set = derive_tag_set({&gold, &dev});
      if (!silver.empty()) {
        const auto& order = silver.front().tag_order;
        tag_set = TagSet(std::vector<std::string>(order.begin(), order.end() - 2));
      }
      StudentTrainReport rep;
      const auto student = train_student(gold, silver, dev, tag_set, sc, dc, &rep);
      fs::create_directories(out_path);
      std::ofstream model(fs::path(out_path) / "student.bin", std::ios::binary);
      student.save(model);
      open_out(fs::path(out_path) / "student.json")
          << json{{"train", rep}, {"student", sc}, {"distill", dc}}.dump(2) << '\n';
      std::cout << json{{"best_epoch", rep.best_epoch}, {"best_dev_f1", rep.best_dev_f1}}.dump()
                << '\n';
    } else if (*eval_cmd) {
      const auto gold = load_conll(gold_path, SplitName::Test);
      std::vector<TagSequence> pred;
      if (!student_path.empty()) {
        std::ifstream in(student_path, std::ios::binary);
        if (!in) throw IoError("cannot open student '" + student_path + "'");
        pred = predict_split(StudentTagger::load(in), gold);
      } else if (!pred_path.empty()) {
        if (fs::path(pred_path).extension() == ".jsonl") {
          std::ifstream in(pred_path);
          for (auto& r : read_decoded(in)) pred.push_back(std::move(r.tags));
        } else {
          for (auto& s : load_conll(pred_path, SplitName::Test).sentences) {
            if (!s.gold_tags) throw ValidationError("prediction '" + s.id + "' has no tags");
            pred.push_back(std::move(*s.gold_tags));
          }
        }
      } else {
        throw ConfigError("give --pred or --student");
      }
      const auto rep = evaluate(gold, pred);
      std::cout << format_report(rep);
      if (!out_path.empty()) open_out(out_path) << json(rep).dump(2) << '\n';
    } else if (*experiment) {
      ExperimentConfig c = load_experiment_config(config_path);
      if (seed) c.seeds = {*seed};
      if (experiment->count("--jobs")) c.jobs = jobs;
      c.validate();
      const auto result = run_experiment(c, out_path, [](const std::string& line) {
        std::cerr << line << std::endl;
      });
      std::cout << format_tables(result.teachers, result.runs);
    } else if (*report) {
      fs::path p = records_path;
      std::vector<TeacherRecord> teachers;
      if (fs::is_directory(p)) {
        if (fs::exists(p / "teachers.json"))
          teachers = read_json(p / "teachers.json").get<std::vector<TeacherRecord>>();
        p /= "records.json";
      }
      const auto runs = read_records(p);
      std::cout << format_tables(teachers, runs);
      if (!out_path.empty()) open_out(out_path) << format_csv(runs);
    }
  } catch (const Error& e) {
    emit_error(e.kind(), e.what());
    return 1;
  } catch (const json::exception& e) {
    emit_error("parse", e.what());
    return 1;
  } catch (const std::exception& e) {
    emit_error("internal", e.what());
    return 1;
  }
  return 0;
}
