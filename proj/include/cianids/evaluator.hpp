#pragma once

// Experiment harness: feature settings, the four-setting comparison and the
// leave-one-attack-out protocol, plus their JSON/CSV reports.

#include <algorithm>
#include <chrono>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cianids/attacks.hpp"
#include "cianids/domain_knowledge.hpp"
#include "cianids/error.hpp"
#include "cianids/flow_store.hpp"
#include "cianids/learners.hpp"
#include "cianids/metrics.hpp"
#include "cianids/resampler.hpp"

namespace cianids {

enum class FeatureSetting { all, selected, domain, constructed };
enum class LearnerKind { rf, et, nb };

inline constexpr std::array<FeatureSetting, 4> kAllSettings = {FeatureSetting::all, FeatureSetting::selected,
                                                               FeatureSetting::domain, FeatureSetting::constructed};
inline constexpr std::array<LearnerKind, 3> kAllLearners = {LearnerKind::rf, LearnerKind::et, LearnerKind::nb};

inline std::string_view setting_name(FeatureSetting s) {
  switch (s) {
    case FeatureSetting::all: return "all";
    case FeatureSetting::selected: return "selected";
    case FeatureSetting::domain: return "domain";
    case FeatureSetting::constructed: return "constructed";
  }
  return "?";
}

inline std::string_view learner_name(LearnerKind k) {
  switch (k) {
    case LearnerKind::rf: return "rf";
    case LearnerKind::et: return "et";
    case LearnerKind::nb: return "nb";
  }
  return "?";
}

inline std::optional<FeatureSetting> parse_setting(std::string_view s) {
  for (auto x : kAllSettings) {
    if (iequals(s, setting_name(x))) return x;
  }
  return std::nullopt;
}

inline std::optional<LearnerKind> parse_learner(std::string_view s) {
  for (auto x : kAllLearners) {
    if (iequals(s, learner_name(x))) return x;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Feature settings

/// Rows kept by importance > 0 on a forest trained on `train`, ordered by
/// importance descending (ties by column index).
inline std::vector<std::size_t> select_features_by_importance(const FlowDataset& train, const LearnerConfig& cfg) {
  const ForestModel forest = train_forest(train, ForestMode::random_forest, cfg);
  const auto importance = feature_importance(forest);
  std::vector<std::size_t> kept;
  for (std::size_t j = 0; j < importance.size(); ++j) {
    if (importance[j] > 0.0) kept.push_back(j);
  }
  std::stable_sort(kept.begin(), kept.end(), [&](std::size_t a, std::size_t b) { return importance[a] > importance[b]; });
  return kept;
}

/// A fitted, setting-specific mapping from raw flow features to model inputs.
class FeatureTransform {
 public:
  FeatureTransform() = default;

  static FeatureTransform fit(FeatureSetting setting, const FlowDataset& train, const LearnerConfig& cfg,
                              const DomainKnowledge& k = default_knowledge()) {
    FeatureTransform t;
    t.setting_ = setting;
    switch (setting) {
      case FeatureSetting::all:
        t.columns_ = train.schema().feature_names;
        break;
      case FeatureSetting::selected:
        for (auto j : select_features_by_importance(train, cfg)) t.columns_.push_back(train.schema().feature_names[j]);
        if (t.columns_.empty()) fail(Errc::empty_dataset, "importance filter kept no features");
        break;
      case FeatureSetting::domain:
        for (const auto& f : k.features()) t.columns_.push_back(f.feature);
        t.renamed_ = k.renamed_features();
        break;
      case FeatureSetting::constructed:
        for (const auto& f : k.features()) t.columns_.push_back(f.feature);
        t.renamed_ = k.renamed_features();
        t.ctor_ = fit_constructor(t.select(train), k);
        break;
    }
    return t;
  }

  FeatureSetting setting() const { return setting_; }
  /// Raw input columns consumed, in model order.
  const std::vector<std::string>& columns() const { return columns_; }
  const std::optional<CiaConstructor>& constructor() const { return ctor_; }

  std::vector<std::string> output_names() const {
    if (ctor_) return {"C", "I", "A"};
    return renamed_.empty() ? columns_ : renamed_;
  }

  FlowDataset apply(const FlowDataset& ds) const {
    const FlowDataset picked = select(ds);
    return ctor_ ? construct_cia(*ctor_, picked) : picked;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j{{"setting", setting_name(setting_)}, {"columns", columns_}, {"renamed", renamed_}};
    j["constructor"] = ctor_ ? constructor_to_json(*ctor_) : nlohmann::ordered_json(nullptr);
    return j;
  }

  static FeatureTransform from_json(const nlohmann::json& j) {
    FeatureTransform t;
    const auto s = parse_setting(j.at("setting").get<std::string>());
    if (!s) fail(Errc::malformed_model, "unknown feature setting in model file");
    t.setting_ = *s;
    t.columns_ = j.at("columns").get<std::vector<std::string>>();
    t.renamed_ = j.at("renamed").get<std::vector<std::string>>();
    if (!t.renamed_.empty() && t.renamed_.size() != t.columns_.size()) {
      fail(Errc::malformed_model, "renamed list does not match column list");
    }
    if (!j.at("constructor").is_null()) t.ctor_ = constructor_from_json(j.at("constructor"));
    return t;
  }

 private:
  FlowDataset select(const FlowDataset& ds) const {
    std::vector<std::size_t> idx;
    idx.reserve(columns_.size());
    for (std::size_t k = 0; k < columns_.size(); ++k) {
      auto j = ds.schema().find(columns_[k]);
      if (!j && !renamed_.empty()) j = ds.schema().find(renamed_[k]);
      if (!j) fail(Errc::missing_feature, "input lacks feature '" + columns_[k] + "'");
      idx.push_back(*j);
    }
    return ds.select_columns(idx, renamed_);
  }

  FeatureSetting setting_ = FeatureSetting::all;
  std::vector<std::string> columns_;
  std::vector<std::string> renamed_;
  std::optional<CiaConstructor> ctor_;
};

inline Model train_learner(LearnerKind kind, const FlowDataset& train, const LearnerConfig& cfg) {
  switch (kind) {
    case LearnerKind::rf: return train_forest(train, ForestMode::random_forest, cfg);
    case LearnerKind::et: return train_forest(train, ForestMode::extra_trees, cfg);
    case LearnerKind::nb: return train_bernoulli_nb(train, cfg);
  }
  fail(Errc::internal, "unknown learner");
}

/// Feature transform plus learner: what the CLI saves and explains.
struct TrainedPipeline {
  LearnerKind learner = LearnerKind::rf;
  FeatureTransform transform;
  Model model;

  double score_row(const FlowDataset& ds, std::size_t row) const {
    const FlowDataset one = transform.apply(ds.subset(std::vector<std::size_t>{row}));
    return predict_score(model, one.row(0));
  }
};

inline nlohmann::ordered_json pipeline_to_json(const TrainedPipeline& p) {
  return {{"format", kModelFormat},
          {"version", kModelVersion},
          {"learner", learner_name(p.learner)},
          {"transform", p.transform.to_json()},
          {"model", model_to_json(p.model)}};
}

inline TrainedPipeline pipeline_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kModelFormat) fail(Errc::malformed_model, "not a model file");
    if (j.at("version").get<int>() != kModelVersion) fail(Errc::malformed_model, "unsupported model version");
    TrainedPipeline p;
    const auto learner = parse_learner(j.at("learner").get<std::string>());
    if (!learner) fail(Errc::malformed_model, "unknown learner in model file");
    p.learner = *learner;
    p.transform = FeatureTransform::from_json(j.at("transform"));
    p.model = model_from_json(j.at("model"));
    if (model_width(p.model) != p.transform.output_names().size()) {
      fail(Errc::malformed_model, "model width does not match its feature transform");
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::malformed_model, std::string("model file: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Experiment configuration

struct EvalConfig {
  LearnerConfig learner;
  std::uint64_t seed = 7;  // split and SMOTE seed; learners use learner.seed
  double train_fraction = 0.7;
  std::size_t smote_k = 5;
  double threshold = 0.5;

  nlohmann::ordered_json to_json() const {
    return {{"seed", seed},
            {"train_fraction", train_fraction},
            {"smote_k", smote_k},
            {"threshold", threshold},
            {"learner",
             {{"n_trees", learner.n_trees},
              {"max_depth", learner.max_depth},
              {"min_samples_split", learner.min_samples_split},
              {"feature_subset_size", learner.feature_subset_size},
              {"alpha", learner.alpha},
              {"seed", learner.seed}}}};
  }
};

/// Notes embedded in every report describing choices the method leaves open.
inline std::vector<std::string> method_notes() {
  return {
      "non-finite rows are dropped before sampling",
      "min-max scaling and correlation signs are fitted on training rows only",
      "features with zero or undefined correlation get sign 0",
      "multi-tag features split their value equally across their tags",
      "Naive Bayes binarizes each feature at its training median",
      "SMOTE is applied to training rows only, k nearest minority neighbours, to exact parity",
      "rows scoring at or above the configured threshold are malicious; AUC counts ties as one half",
      "the embedded feature table has 21 rows",
      "the second slowloris row of the attack tables is read as DoS Slowhttptest",
  };
}

struct ComparisonEntry {
  LearnerKind learner;
  FeatureSetting setting;
  std::size_t n_features = 0;
  MetricsReport metrics;
  double train_seconds = 0.0;
  double predict_seconds = 0.0;
};

struct LeakageCheck {
  std::string stage;
  std::uint64_t test_hash = 0;
};

struct ComparisonReport {
  nlohmann::ordered_json config;
  std::uint64_t dataset_hash = 0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::vector<ComparisonEntry> entries;
  std::vector<LeakageCheck> leakage_checks;
  std::map<std::string, std::size_t> synthetic_rows;  // per setting

  const ComparisonEntry* find(LearnerKind l, FeatureSetting s) const {
    for (const auto& e : entries) {
      if (e.learner == l && e.setting == s) return &e;
    }
    return nullptr;
  }
};

struct MetricDifference {
  LearnerKind learner;
  FeatureSetting first;
  FeatureSetting second;
  double accuracy = 0.0, precision = 0.0, recall = 0.0, f_score = 0.0;
  std::optional<double> auc;
};

/// first - second for the pairs (all, selected), (domain, constructed) and
/// (all, domain), whenever both settings were run.
inline std::vector<MetricDifference> metric_differences(const ComparisonReport& report) {
  static constexpr std::array<std::pair<FeatureSetting, FeatureSetting>, 3> pairs = {{
      {FeatureSetting::all, FeatureSetting::selected},
      {FeatureSetting::domain, FeatureSetting::constructed},
      {FeatureSetting::all, FeatureSetting::domain},
  }};
  std::vector<MetricDifference> out;
  for (const auto& [first, second] : pairs) {
    for (auto learner : kAllLearners) {
      const auto* a = report.find(learner, first);
      const auto* b = report.find(learner, second);
      if (a == nullptr || b == nullptr) continue;
      MetricDifference d{learner, first, second};
      d.accuracy = a->metrics.accuracy - b->metrics.accuracy;
      d.precision = a->metrics.precision - b->metrics.precision;
      d.recall = a->metrics.recall - b->metrics.recall;
      d.f_score = a->metrics.f_score - b->metrics.f_score;
      if (a->metrics.auc && b->metrics.auc) d.auc = *a->metrics.auc - *b->metrics.auc;
      out.push_back(d);
    }
  }
  return out;
}

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct PreparedSetting {
  FeatureTransform transform;
  FlowDataset train;  // transformed and resampled
  std::size_t synthetic = 0;
};

inline PreparedSetting prepare_setting(FeatureSetting setting, const FlowDataset& raw_train, const EvalConfig& cfg,
                                       const DomainKnowledge& k) {
  PreparedSetting p;
  p.transform = FeatureTransform::fit(setting, raw_train, cfg.learner, k);
  const FlowDataset transformed = p.transform.apply(raw_train);
  SmoteResult smote = smote_oversample(transformed, {cfg.smote_k, cfg.seed, cfg.learner.jobs});
  p.synthetic = smote.trace.size();
  p.train = std::move(smote.dataset);
  return p;
}

inline std::string context(LearnerKind l, FeatureSetting s) {
  return "[" + std::string(learner_name(l)) + "/" + std::string(setting_name(s)) + "] ";
}

template <class F>
auto with_context(const std::string& ctx, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), ctx + e.what());
  }
}

}  // namespace detail

/// Holdout comparison of learners across feature settings. Every setting
/// shares the same split and SMOTE seed; only the feature treatment differs.
inline ComparisonReport run_explainability_test(const FlowDataset& sample, std::span<const LearnerKind> learners,
                                                std::span<const FeatureSetting> settings, const EvalConfig& cfg,
                                                const DomainKnowledge& k = default_knowledge()) {
  ComparisonReport report;
  report.config = cfg.to_json();
  report.dataset_hash = dataset_hash(sample);
  const SplitIndices split = train_test_split(sample, cfg.train_fraction, cfg.seed);
  report.n_train = split.train.size();
  report.n_test = split.test.size();
  const FlowDataset train = sample.subset(split.train);
  const FlowDataset test = sample.subset(split.test);
  report.leakage_checks.push_back({"split", partition_hash(sample, split.test)});

  for (auto setting : settings) {
    const std::string sctx = "[" + std::string(setting_name(setting)) + "] ";
    const auto prepared = detail::with_context(sctx, [&] { return detail::prepare_setting(setting, train, cfg, k); });
    report.synthetic_rows[std::string(setting_name(setting))] = prepared.synthetic;
    report.leakage_checks.push_back({"after SMOTE (" + std::string(setting_name(setting)) + ")",
                                     partition_hash(sample, split.test)});
    const FlowDataset test_x = detail::with_context(sctx, [&] { return prepared.transform.apply(test); });

    for (auto learner : learners) {
      detail::with_context(detail::context(learner, setting), [&] {
        ComparisonEntry e{learner, setting, test_x.cols()};
        auto start = detail::Clock::now();
        const Model model = train_learner(learner, prepared.train, cfg.learner);
        e.train_seconds = detail::seconds_since(start);
        start = detail::Clock::now();
        const auto scores = predict_scores(model, test_x, cfg.learner.jobs);
        std::vector<std::uint8_t> predicted(scores.size());
        for (std::size_t i = 0; i < scores.size(); ++i) predicted[i] = scores[i] >= cfg.threshold ? 1 : 0;
        e.predict_seconds = detail::seconds_since(start);
        e.metrics = compute_metrics(test_x.classes(), predicted, scores);
        report.entries.push_back(e);
      });
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Leave-one-attack-out

struct LooCell {
  LearnerKind learner;
  FeatureSetting setting;
  std::optional<double> rate;  // empty when the attack has no test rows
};

struct LooRow {
  std::string attack;
  std::size_t test_count = 0;
  std::size_t train_rows_removed = 0;
  std::vector<LooCell> cells;

  std::optional<double> rate(LearnerKind l, FeatureSetting s) const {
    for (const auto& c : cells) {
      if (c.learner == l && c.setting == s) return c.rate;
    }
    return std::nullopt;
  }
};

struct LooReport {
  nlohmann::ordered_json config;
  std::uint64_t dataset_hash = 0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::vector<LearnerKind> learners;
  std::vector<FeatureSetting> settings;
  std::vector<LooRow> rows;
  std::vector<LeakageCheck> leakage_checks;
};

/// For each attack: drop its rows from the training partition only, refit
/// transform, SMOTE and learner, and report the fraction of its test rows
/// classified malicious. The test partition is identical for every attack.
inline LooReport run_generalizability_test(const FlowDataset& sample, std::span<const LearnerKind> learners,
                                           std::span<const FeatureSetting> settings, const EvalConfig& cfg,
                                           std::span<const std::string> attacks = {},
                                           const DomainKnowledge& k = default_knowledge()) {
  LooReport report;
  report.config = cfg.to_json();
  report.dataset_hash = dataset_hash(sample);
  report.learners.assign(learners.begin(), learners.end());
  report.settings.assign(settings.begin(), settings.end());
  const SplitIndices split = train_test_split(sample, cfg.train_fraction, cfg.seed);
  report.n_train = split.train.size();
  report.n_test = split.test.size();
  const FlowDataset test = sample.subset(split.test);
  report.leakage_checks.push_back({"split", partition_hash(sample, split.test)});

  std::vector<std::string> targets;
  if (attacks.empty()) {
    for (auto a : kCanonicalAttacks) targets.emplace_back(a);
  } else {
    for (const auto& a : attacks) targets.push_back(canonical_attack(a).value_or(std::string(trim(a))));
  }

  for (const auto& attack : targets) {
    LooRow row;
    row.attack = attack;
    std::vector<std::size_t> attack_test_rows;
    for (std::size_t i = 0; i < test.rows(); ++i) {
      if (test.attack_labels()[i] == attack) attack_test_rows.push_back(i);
    }
    row.test_count = attack_test_rows.size();

    std::vector<std::size_t> kept;
    for (auto i : split.train) {
      if (sample.attack_labels()[i] == attack) ++row.train_rows_removed;
      else kept.push_back(i);
    }
    if (attack_test_rows.empty()) {
      for (auto s : settings) {
        for (auto l : learners) row.cells.push_back({l, s, std::nullopt});
      }
      report.rows.push_back(std::move(row));
      continue;
    }
    const FlowDataset train = sample.subset(kept);
    const FlowDataset attack_test = test.subset(attack_test_rows);
    report.leakage_checks.push_back({"after removing " + attack, partition_hash(sample, split.test)});

    for (auto setting : settings) {
      const std::string sctx = "[" + attack + "/" + std::string(setting_name(setting)) + "] ";
      const auto prepared = detail::with_context(sctx, [&] { return detail::prepare_setting(setting, train, cfg, k); });
      const FlowDataset x = detail::with_context(sctx, [&] { return prepared.transform.apply(attack_test); });
      for (auto learner : learners) {
        detail::with_context(sctx + detail::context(learner, setting), [&] {
          const Model model = train_learner(learner, prepared.train, cfg.learner);
          const auto scores = predict_scores(model, x, cfg.learner.jobs);
          std::size_t detected = 0;
          for (double s : scores) detected += s >= cfg.threshold ? 1 : 0;
          row.cells.push_back({learner, setting, static_cast<double>(detected) / static_cast<double>(scores.size())});
        });
      }
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Runtime

struct RuntimeRow {
  LearnerKind learner;
  FeatureSetting setting;
  double seconds = 0.0;               // train + predict
  std::optional<double> ratio_to_nb;  // empty when NB was not run for the setting
};

inline std::vector<RuntimeRow> measure_runtime(const ComparisonReport& report) {
  std::vector<RuntimeRow> out;
  for (const auto& e : report.entries) {
    RuntimeRow r{e.learner, e.setting, e.train_seconds + e.predict_seconds, std::nullopt};
    if (const auto* nb = report.find(LearnerKind::nb, e.setting)) {
      const double base = nb->train_seconds + nb->predict_seconds;
      if (base > 0.0) r.ratio_to_nb = r.seconds / base;
    }
    out.push_back(r);
  }
  return out;
}

/// Mean over settings of each learner's total time.
inline std::map<LearnerKind, double> mean_runtime_by_learner(const ComparisonReport& report) {
  std::map<LearnerKind, double> sum;
  std::map<LearnerKind, int> n;
  for (const auto& e : report.entries) {
    sum[e.learner] += e.train_seconds + e.predict_seconds;
    ++n[e.learner];
  }
  for (auto& [k, v] : sum) v /= n[k];
  return sum;
}

// ---------------------------------------------------------------------------
// Report serialization. Timings are kept out of the comparison report so that
// reruns produce identical bytes; they go to the runtime report instead.

inline constexpr int kReportVersion = 1;

inline nlohmann::ordered_json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

inline nlohmann::ordered_json metrics_to_json(const MetricsReport& m) {
  return {{"accuracy", m.accuracy}, {"precision", m.precision}, {"recall", m.recall}, {"f_score", m.f_score},
          {"auc", optional_json(m.auc)}, {"tp", m.tp}, {"fp", m.fp}, {"tn", m.tn}, {"fn", m.fn}};
}

inline std::string config_hash(const nlohmann::ordered_json& config) { return hash_hex(config.dump()); }

inline nlohmann::ordered_json report_header(std::string_view kind, const nlohmann::ordered_json& config,
                                            std::uint64_t data_hash, std::size_t n_train, std::size_t n_test) {
  return {{"format", "cianids-" + std::string(kind)},
          {"version", kReportVersion},
          {"config", config},
          {"config_hash", config_hash(config)},
          {"dataset_hash", hex64(data_hash)},
          {"n_train", n_train},
          {"n_test", n_test},
          {"notes", method_notes()}};
}

inline nlohmann::ordered_json leakage_to_json(const std::vector<LeakageCheck>& checks) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const auto& c : checks) out.push_back({{"stage", c.stage}, {"test_hash", hex64(c.test_hash)}});
  return out;
}

inline nlohmann::ordered_json comparison_to_json(const ComparisonReport& r) {
  auto j = report_header("comparison", r.config, r.dataset_hash, r.n_train, r.n_test);
  nlohmann::ordered_json synth = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.synthetic_rows) synth[k] = v;
  j["synthetic_rows"] = synth;
  auto& results = j["results"] = nlohmann::ordered_json::array();
  for (const auto& e : r.entries) {
    results.push_back({{"learner", learner_name(e.learner)},
                       {"setting", setting_name(e.setting)},
                       {"n_features", e.n_features},
                       {"metrics", metrics_to_json(e.metrics)}});
  }
  auto& diffs = j["differences"] = nlohmann::ordered_json::array();
  for (const auto& d : metric_differences(r)) {
    diffs.push_back({{"learner", learner_name(d.learner)},
                     {"first", setting_name(d.first)},
                     {"second", setting_name(d.second)},
                     {"accuracy", d.accuracy},
                     {"precision", d.precision},
                     {"recall", d.recall},
                     {"f_score", d.f_score},
                     {"auc", optional_json(d.auc)}});
  }
  j["leakage_checks"] = leakage_to_json(r.leakage_checks);
  return j;
}

namespace detail {

inline std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

inline std::string fixed4(const std::optional<double>& v) { return v ? fixed4(*v) : std::string("NA"); }

inline std::string setting_suffix(FeatureSetting s) {
  switch (s) {
    case FeatureSetting::all: return "A";
    case FeatureSetting::selected: return "S";
    case FeatureSetting::domain: return "D1";
    case FeatureSetting::constructed: return "D2";
  }
  return "?";
}

inline std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace detail

/// Rows "RF-A", ... with Acc/Prec/Rec/F-score/AUC, followed by difference rows.
inline std::string comparison_to_csv(const ComparisonReport& r) {
  std::ostringstream out;
  out << "# config_hash=" << config_hash(r.config) << " dataset_hash=" << hex64(r.dataset_hash) << '\n';
  out << "row,learner,setting,accuracy,precision,recall,f_score,auc,tp,fp,tn,fn\n";
  for (const auto& e : r.entries) {
    const auto& m = e.metrics;
    out << detail::upper(learner_name(e.learner)) << '-' << detail::setting_suffix(e.setting) << ','
        << learner_name(e.learner) << ',' << setting_name(e.setting) << ',' << detail::fixed4(m.accuracy) << ','
        << detail::fixed4(m.precision) << ',' << detail::fixed4(m.recall) << ',' << detail::fixed4(m.f_score) << ','
        << detail::fixed4(m.auc) << ',' << m.tp << ',' << m.fp << ',' << m.tn << ',' << m.fn << '\n';
  }
  for (const auto& d : metric_differences(r)) {
    out << "Difference," << learner_name(d.learner) << ',' << setting_name(d.first) << "-" << setting_name(d.second)
        << ',' << detail::fixed4(d.accuracy) << ',' << detail::fixed4(d.precision) << ',' << detail::fixed4(d.recall)
        << ',' << detail::fixed4(d.f_score) << ',' << detail::fixed4(d.auc) << ",,,,\n";
  }
  return out.str();
}

inline nlohmann::ordered_json runtime_to_json(const ComparisonReport& r) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : measure_runtime(r)) {
    rows.push_back({{"learner", learner_name(row.learner)},
                    {"setting", setting_name(row.setting)},
                    {"seconds", row.seconds},
                    {"ratio_to_nb", optional_json(row.ratio_to_nb)}});
  }
  nlohmann::ordered_json means = nlohmann::ordered_json::object();
  for (const auto& [k, v] : mean_runtime_by_learner(r)) means[std::string(learner_name(k))] = v;
  return {{"format", "cianids-runtime"},
          {"version", kReportVersion},
          {"config_hash", config_hash(r.config)},
          {"rows", rows},
          {"mean_seconds", means}};
}

inline nlohmann::ordered_json loo_to_json(const LooReport& r) {
  auto j = report_header("loo", r.config, r.dataset_hash, r.n_train, r.n_test);
  auto& rows = j["attacks"] = nlohmann::ordered_json::array();
  for (const auto& row : r.rows) {
    nlohmann::ordered_json cells = nlohmann::ordered_json::array();
    for (const auto& c : row.cells) {
      cells.push_back(
          {{"learner", learner_name(c.learner)}, {"setting", setting_name(c.setting)}, {"rate", optional_json(c.rate)}});
    }
    rows.push_back({{"attack", row.attack},
                    {"test_count", row.test_count},
                    {"train_rows_removed", row.train_rows_removed},
                    {"detection", cells}});
  }
  j["leakage_checks"] = leakage_to_json(r.leakage_checks);
  return j;
}

/// One block per learner: Attack, Count, then one percentage column per
/// setting.
inline std::string loo_to_csv(const LooReport& r) {
  std::ostringstream out;
  out << "# config_hash=" << config_hash(r.config) << " dataset_hash=" << hex64(r.dataset_hash) << '\n';
  out << "learner,attack,count";
  for (auto s : r.settings) out << ',' << setting_name(s) << "_pct";
  out << '\n';
  for (auto l : r.learners) {
    for (const auto& row : r.rows) {
      out << learner_name(l) << ',' << csv::quote_field(row.attack) << ',' << row.test_count;
      for (auto s : r.settings) {
        const auto rate = row.rate(l, s);
        if (rate) {
          char buf[32];
          std::snprintf(buf, sizeof buf, "%.2f", *rate * 100.0);
          out << ',' << buf;
        } else {
          out << ",NA";
        }
      }
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace cianids
