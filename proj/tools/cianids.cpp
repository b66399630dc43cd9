#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cianids/cianids.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kInternal = 3 };

struct CommonOptions {
  unsigned jobs = cianids::default_jobs();
  std::string out_dir;
  std::string knowledge;
};

struct ModelOptions {
  std::uint64_t seed = 7;
  double train_fraction = 0.7;
  std::size_t smote_k = 5;
  double threshold = 0.5;
  std::size_t trees = 100;
  std::size_t max_depth = 0;
  std::size_t min_samples_split = 2;
  std::size_t mtry = 0;
  double alpha = 1.0;
  std::uint64_t learner_seed = 7;
};

struct IngestOptions {
  std::vector<std::string> csv;
  std::size_t sample = 300000;
  std::uint64_t seed = 7;
  std::string out;
  std::string report;
  std::string benign = std::string(cianids::kDefaultBenignLabel);
};

struct EvaluateOptions {
  std::string data;
  std::vector<std::string> learners{"rf", "et", "nb"};
  std::vector<std::string> settings{"all", "selected", "domain", "constructed"};
  std::vector<std::string> attacks;
  bool verify = false;
};

struct TrainOptions {
  std::string data;
  std::string learner = "rf";
  std::string setting = "domain";
  std::string out;
};

struct ExplainOptions {
  std::string model;
  std::string data;
  std::size_t row = 0;
  std::string out;
};

std::string default_out_dir() {
  if (const char* env = std::getenv("CIANIDS_OUT"); env != nullptr && *env != '\0') return env;
  return ".";
}

fs::path out_path(const CommonOptions& common, const std::string& name) {
  const fs::path dir = common.out_dir.empty() ? fs::path(default_out_dir()) : fs::path(common.out_dir);
  fs::create_directories(dir);
  return dir / name;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) cianids::fail(cianids::Errc::io_failure, "cannot write " + path.string());
  out << text;
  if (!out) cianids::fail(cianids::Errc::io_failure, "write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) cianids::fail(cianids::Errc::missing_file, "missing file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

cianids::DomainKnowledge knowledge_for(const CommonOptions& common) {
  if (common.knowledge.empty()) return cianids::default_knowledge();
  return cianids::load_knowledge(common.knowledge);
}

cianids::EvalConfig eval_config(const ModelOptions& m, const CommonOptions& common) {
  cianids::EvalConfig cfg;
  cfg.seed = m.seed;
  cfg.train_fraction = m.train_fraction;
  cfg.smote_k = m.smote_k;
  cfg.threshold = m.threshold;
  cfg.learner.n_trees = m.trees;
  cfg.learner.max_depth = m.max_depth;
  cfg.learner.min_samples_split = m.min_samples_split;
  cfg.learner.feature_subset_size = m.mtry;
  cfg.learner.alpha = m.alpha;
  cfg.learner.seed = m.learner_seed;
  cfg.learner.jobs = std::max(1u, common.jobs);
  cfg.learner.validate();
  return cfg;
}

std::vector<cianids::LearnerKind> parse_learners(const std::vector<std::string>& names) {
  std::vector<cianids::LearnerKind> out;
  for (const auto& n : names) out.push_back(*cianids::parse_learner(n));
  return out;
}

std::vector<cianids::FeatureSetting> parse_settings(const std::vector<std::string>& names) {
  std::vector<cianids::FeatureSetting> out;
  for (const auto& n : names) out.push_back(*cianids::parse_setting(n));
  return out;
}

void add_knowledge_hash(ordered_json& config, const cianids::DomainKnowledge& k) {
  config["knowledge_hash"] = cianids::hash_hex(cianids::serialize_knowledge(k));
}

/// Writes the outputs, or with --verify compares them against files already
/// on disk and checks each embedded config hash.
int emit(const std::vector<std::pair<fs::path, std::string>>& outputs, bool verify) {
  if (!verify) {
    for (const auto& [path, text] : outputs) {
      write_text(path, text);
      std::cout << "wrote " << path.string() << '\n';
    }
    return kOk;
  }
  int status = kOk;
  for (const auto& [path, text] : outputs) {
    const std::string existing = read_text(path);
    if (path.extension() == ".json") {
      const auto j = nlohmann::ordered_json::parse(existing, nullptr, false);
      if (j.is_discarded() || !j.contains("config_hash")) {
        std::cerr << "verify: " << path.string() << " is not a report\n";
        status = kData;
        continue;
      }
      if (j.contains("config") && cianids::config_hash(j.at("config")) != j.at("config_hash").get<std::string>()) {
        std::cerr << "verify: " << path.string() << " embedded config hash does not match its config\n";
        status = kData;
      }
    }
    if (existing == text) {
      std::cout << "verified " << path.string() << '\n';
    } else {
      std::cerr << "verify: " << path.string() << " differs from a fresh run\n";
      status = kData;
    }
  }
  return status;
}

int cmd_ingest(const IngestOptions& opt, const CommonOptions& common) {
  std::vector<fs::path> paths(opt.csv.begin(), opt.csv.end());
  cianids::CsvOptions csv_opt;
  csv_opt.benign_label = opt.benign;
  const auto loaded = cianids::load_csv(paths, csv_opt);
  const auto clean = cianids::sanitize(loaded.dataset);
  std::size_t target = opt.sample;
  if (target > clean.dataset.rows()) {
    std::cerr << "note: --sample " << target << " exceeds " << clean.dataset.rows() << " clean rows; keeping all\n";
    target = clean.dataset.rows();
  }
  const auto sample = cianids::stratified_sample(clean.dataset, target, opt.seed);

  ordered_json dropped = ordered_json::object();
  for (const auto& [name, n] : clean.report.dropped_by_column) {
    if (n > 0) dropped[name] = n;
  }
  const auto counts = sample.class_counts();
  ordered_json report{{"format", "cianids-sanitize"},
                      {"version", 1},
                      {"sources", opt.csv},
                      {"unparseable_lines", loaded.dropped_lines},
                      {"renamed_headers", loaded.renamed_duplicate_headers},
                      {"rows_in", clean.report.rows_in},
                      {"rows_dropped", clean.report.rows_dropped},
                      {"dropped_by_column", dropped},
                      {"sample_rows", sample.rows()},
                      {"sample_seed", opt.seed},
                      {"benign_rows", counts[0]},
                      {"malicious_rows", counts[1]},
                      {"dataset_hash", cianids::hex64(cianids::dataset_hash(sample))}};

  const fs::path out = opt.out.empty() ? out_path(common, "dataset.bin") : fs::path(opt.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  cianids::save_cache(sample, out, report.dump());
  const fs::path report_path =
      opt.report.empty() ? (out.has_parent_path() ? out.parent_path() : fs::path(".")) / "sanitize_report.json"
                         : fs::path(opt.report);
  write_text(report_path, report.dump(2) + "\n");
  std::cout << "wrote " << out.string() << " (" << sample.rows() << " rows, " << counts[1] << " malicious)\n";
  std::cout << "wrote " << report_path.string() << '\n';
  return kOk;
}

int cmd_evaluate(const EvaluateOptions& opt, const ModelOptions& m, const CommonOptions& common) {
  const auto knowledge = knowledge_for(common);
  const auto cfg = eval_config(m, common);
  const auto data = cianids::load_cache(opt.data).dataset;
  const auto learners = parse_learners(opt.learners);
  const auto settings = parse_settings(opt.settings);
  auto report = cianids::run_explainability_test(data, learners, settings, cfg, knowledge);
  add_knowledge_hash(report.config, knowledge);
  std::vector<std::pair<fs::path, std::string>> outputs{
      {out_path(common, "comparison.json"), cianids::comparison_to_json(report).dump(2) + "\n"},
      {out_path(common, "comparison.csv"), cianids::comparison_to_csv(report)},
  };
  const int status = emit(outputs, opt.verify);
  if (!opt.verify) {
    write_text(out_path(common, "runtime.json"), cianids::runtime_to_json(report).dump(2) + "\n");
    std::cout << "wrote " << out_path(common, "runtime.json").string() << '\n';
  }
  return status;
}

int cmd_loo(const EvaluateOptions& opt, const ModelOptions& m, const CommonOptions& common) {
  const auto knowledge = knowledge_for(common);
  const auto cfg = eval_config(m, common);
  const auto data = cianids::load_cache(opt.data).dataset;
  for (const auto& a : opt.attacks) {
    if (!cianids::canonical_attack(a)) cianids::fail(cianids::Errc::unknown_attack, "unknown attack '" + a + "'");
  }
  const auto learners = parse_learners(opt.learners);
  const auto settings = parse_settings(opt.settings);
  auto report = cianids::run_generalizability_test(data, learners, settings, cfg, opt.attacks, knowledge);
  add_knowledge_hash(report.config, knowledge);
  std::vector<std::pair<fs::path, std::string>> outputs{
      {out_path(common, "loo.json"), cianids::loo_to_json(report).dump(2) + "\n"},
      {out_path(common, "loo.csv"), cianids::loo_to_csv(report)},
  };
  return emit(outputs, opt.verify);
}

int cmd_train(const TrainOptions& opt, const ModelOptions& m, const CommonOptions& common) {
  const auto knowledge = knowledge_for(common);
  const auto cfg = eval_config(m, common);
  const auto data = cianids::load_cache(opt.data).dataset;
  const auto split = cianids::train_test_split(data, cfg.train_fraction, cfg.seed);
  const auto train = data.subset(split.train);

  cianids::TrainedPipeline pipeline;
  pipeline.learner = *cianids::parse_learner(opt.learner);
  const auto prepared = cianids::detail::prepare_setting(*cianids::parse_setting(opt.setting), train, cfg, knowledge);
  pipeline.transform = prepared.transform;
  pipeline.model = cianids::train_learner(pipeline.learner, prepared.train, cfg.learner);

  const fs::path out =
      opt.out.empty() ? out_path(common, opt.learner + "_" + opt.setting + ".json") : fs::path(opt.out);
  write_text(out, cianids::pipeline_to_json(pipeline).dump() + "\n");
  std::cout << "wrote " << out.string() << '\n';
  return kOk;
}

int cmd_explain(const ExplainOptions& opt, const CommonOptions& common) {
  const auto knowledge = knowledge_for(common);
  const auto pipeline = cianids::pipeline_from_json(nlohmann::json::parse(read_text(opt.model), nullptr, false));
  const auto data = cianids::load_cache(opt.data).dataset;
  if (opt.row >= data.rows()) {
    cianids::fail(cianids::Errc::out_of_range,
                  "row " + std::to_string(opt.row) + " out of range (dataset has " + std::to_string(data.rows()) +
                      " rows)");
  }
  const auto* forest = std::get_if<cianids::ForestModel>(&pipeline.model);
  if (forest == nullptr) cianids::fail(cianids::Errc::invalid_argument, "explain needs a forest model (rf or et)");
  const auto x = pipeline.transform.apply(data.subset(std::vector<std::size_t>{opt.row}));
  const auto cv = cianids::decompose_forest_prediction(*forest, x.row(0));
  const auto names = pipeline.transform.output_names();
  const auto breakdown = cianids::aggregate_to_cia(cv, names, knowledge);

  auto doc = cianids::breakdown_to_json(breakdown);
  doc["row"] = opt.row;
  doc["label"] = data.attack_labels()[opt.row];
  const fs::path out = opt.out.empty() ? out_path(common, "breakdown.json") : fs::path(opt.out);
  write_text(out, doc.dump(2) + "\n");
  std::cout << "score " << breakdown.score << " = bias " << breakdown.bias << " + C " << breakdown.c << " + I "
            << breakdown.i << " + A " << breakdown.a << '\n';
  std::cout << "wrote " << out.string() << '\n';
  return kOk;
}

int exit_code_for(cianids::Errc code) {
  switch (code) {
    case cianids::Errc::invalid_argument:
    case cianids::Errc::unknown_attack:
      return kUsage;
    case cianids::Errc::internal:
      return kInternal;
    default:
      return kData;
  }
}

void add_model_options(CLI::App* cmd, ModelOptions& m) {
  cmd->add_option("--seed", m.seed, "Split and SMOTE seed")->capture_default_str();
  cmd->add_option("--train-fraction", m.train_fraction, "Training share of the holdout split")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  cmd->add_option("--smote-k", m.smote_k, "SMOTE neighbours")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--threshold", m.threshold, "Malicious score threshold")->capture_default_str();
  cmd->add_option("--trees", m.trees, "Trees per forest")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--max-depth", m.max_depth, "Tree depth cap, 0 for none")->capture_default_str();
  cmd->add_option("--min-samples-split", m.min_samples_split, "Smallest node that may split")->capture_default_str();
  cmd->add_option("--mtry", m.mtry, "Candidate features per split, 0 for sqrt(d)")->capture_default_str();
  cmd->add_option("--alpha", m.alpha, "Naive Bayes smoothing")->capture_default_str();
  cmd->add_option("--learner-seed", m.learner_seed, "Forest seed")->capture_default_str();
}

CLI::Validator list_member(const std::vector<std::string>& valid, const std::string& what) {
  std::string joined;
  for (const auto& v : valid) joined += (joined.empty() ? "" : ", ") + v;
  return CLI::Validator(
      [valid, what, joined](std::string& value) -> std::string {
        for (const auto& v : valid) {
          if (cianids::iequals(value, v)) {
            value = v;
            return {};
          }
        }
        return "unknown " + what + " '" + value + "' (valid: " + joined + ")";
      },
      what, what);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CIA domain-knowledge intrusion detection pipeline"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from a TOML/INI file");

  CommonOptions common;
  app.add_option("--jobs", common.jobs, "Worker threads (results do not depend on it)")
      ->check(CLI::PositiveNumber);
  app.add_option("--out-dir", common.out_dir, "Output directory (default: $CIANIDS_OUT or .)");
  app.add_option("--knowledge", common.knowledge, "Domain-knowledge JSON file replacing the built-in tables");

  const std::vector<std::string> learner_names{"rf", "et", "nb"};
  const std::vector<std::string> setting_names{"all", "selected", "domain", "constructed"};

  IngestOptions ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Load CSVs, drop non-finite rows, sample, write a dataset cache");
  ingest_cmd->add_option("--csv", ingest.csv, "Input CSV files (same header)")->required();
  ingest_cmd->add_option("--sample", ingest.sample, "Rows to keep by stratified sampling")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  ingest_cmd->add_option("--seed", ingest.seed, "Sampling seed")->capture_default_str();
  ingest_cmd->add_option("--out", ingest.out, "Cache file (default: <out-dir>/dataset.bin)");
  ingest_cmd->add_option("--report", ingest.report, "Sanitize report (default: next to the cache)");
  ingest_cmd->add_option("--benign", ingest.benign, "Label of benign rows")->capture_default_str();

  EvaluateOptions evaluate;
  ModelOptions eval_model;
  auto* eval_cmd = app.add_subcommand("evaluate", "Compare learners across feature settings on one holdout split");
  eval_cmd->add_option("--data", evaluate.data, "Dataset cache")->required();
  eval_cmd->add_option("--learners", evaluate.learners, "Comma-separated learners")
      ->delimiter(',')
      ->transform(list_member(learner_names, "learner"));
  eval_cmd->add_option("--settings", evaluate.settings, "Comma-separated feature settings")
      ->delimiter(',')
      ->transform(list_member(setting_names, "setting"));
  eval_cmd->add_flag("--verify", evaluate.verify, "Re-run and compare against existing reports");
  add_model_options(eval_cmd, eval_model);

  EvaluateOptions loo;
  loo.learners = {"rf", "nb"};
  loo.settings = {"all", "domain", "constructed"};
  ModelOptions loo_model;
  auto* loo_cmd = app.add_subcommand("loo", "Leave one attack out of training and measure its detection rate");
  loo_cmd->add_option("--data", loo.data, "Dataset cache")->required();
  loo_cmd->add_option("--learners", loo.learners, "Comma-separated learners")
      ->delimiter(',')
      ->transform(list_member(learner_names, "learner"));
  loo_cmd->add_option("--settings", loo.settings, "Comma-separated feature settings")
      ->delimiter(',')
      ->transform(list_member(setting_names, "setting"));
  loo_cmd->add_option("--attack", loo.attacks, "Held-out attack(s); default all 14")->delimiter(',');
  loo_cmd->add_flag("--verify", loo.verify, "Re-run and compare against existing reports");
  add_model_options(loo_cmd, loo_model);

  TrainOptions train;
  ModelOptions train_model;
  auto* train_cmd = app.add_subcommand("train", "Fit one learner on the training partition and save it");
  train_cmd->add_option("--data", train.data, "Dataset cache")->required();
  train_cmd->add_option("--learner", train.learner, "rf, et or nb")
      ->transform(list_member(learner_names, "learner"))
      ->capture_default_str();
  train_cmd->add_option("--setting", train.setting, "all, selected, domain or constructed")
      ->transform(list_member(setting_names, "setting"))
      ->capture_default_str();
  train_cmd->add_option("--out", train.out, "Model file (default: <out-dir>/<learner>_<setting>.json)");
  add_model_options(train_cmd, train_model);

  ExplainOptions explain;
  auto* explain_cmd = app.add_subcommand("explain", "Break one prediction down into C, I and A contributions");
  explain_cmd->add_option("--model", explain.model, "Model file from train")->required();
  explain_cmd->add_option("--data", explain.data, "Dataset cache")->required();
  explain_cmd->add_option("--row", explain.row, "Row index in the cache")->required();
  explain_cmd->add_option("--out", explain.out, "Breakdown file (default: <out-dir>/breakdown.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (ingest_cmd->parsed()) return cmd_ingest(ingest, common);
    if (eval_cmd->parsed()) return cmd_evaluate(evaluate, eval_model, common);
    if (loo_cmd->parsed()) return cmd_loo(loo, loo_model, common);
    if (train_cmd->parsed()) return cmd_train(train, train_model, common);
    if (explain_cmd->parsed()) return cmd_explain(explain, common);
  } catch (const cianids::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternal;
  }
  return kUsage;
}
