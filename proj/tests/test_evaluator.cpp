#include <cmath>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "cianids/evaluator.hpp"
#include "support/synthetic.hpp"

namespace cianids {
namespace {

double brute_force_auc(const std::vector<std::uint8_t>& truth, const std::vector<double>& scores) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    for (std::size_t j = 0; j < truth.size(); ++j) {
      if (truth[i] != 1 || truth[j] != 0) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

TEST(Metrics, PerfectPredictions) {
  const std::vector<std::uint8_t> truth{1, 0, 1, 0};
  const std::vector<double> scores{0.9, 0.1, 0.8, 0.2};
  const auto m = compute_metrics(truth, truth, scores);
  EXPECT_EQ(m.accuracy, 1.0);
  EXPECT_EQ(m.precision, 1.0);
  EXPECT_EQ(m.recall, 1.0);
  EXPECT_EQ(m.f_score, 1.0);
  EXPECT_EQ(m.auc, 1.0);
}

TEST(Metrics, HandConfusionMatrix) {
  const std::vector<std::uint8_t> truth{1, 1, 0, 0, 0, 0, 0, 0, 0, 0};
  const std::vector<std::uint8_t> pred{1, 1, 1, 0, 0, 0, 0, 0, 0, 0};
  const std::vector<double> scores{0.9, 0.8, 0.7, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1};
  const auto m = compute_metrics(truth, pred, scores);
  EXPECT_EQ(m.tp, 2u);
  EXPECT_EQ(m.fp, 1u);
  EXPECT_EQ(m.fn, 0u);
  EXPECT_EQ(m.precision, 2.0 / 3.0);
  EXPECT_EQ(m.recall, 1.0);
  EXPECT_EQ(m.accuracy, 0.9);
  EXPECT_DOUBLE_EQ(m.f_score, 0.8);
}

TEST(Metrics, ZeroDivisionGivesZero) {
  const auto m = MetricsReport::from_counts(0, 0, 5, 0);
  EXPECT_EQ(m.precision, 0.0);
  EXPECT_EQ(m.recall, 0.0);
  EXPECT_EQ(m.f_score, 0.0);
  EXPECT_EQ(m.accuracy, 1.0);
}

TEST(Auc, HandExample) {
  const std::vector<std::uint8_t> truth{1, 0, 1, 0};
  const std::vector<double> scores{0.9, 0.8, 0.3, 0.1};
  EXPECT_EQ(roc_auc(truth, scores), 0.75);
}

TEST(Auc, TiesCountHalf) {
  const std::vector<std::uint8_t> truth{1, 0};
  const std::vector<double> scores{0.5, 0.5};
  EXPECT_EQ(roc_auc(truth, scores), 0.5);
}

TEST(Auc, SingleClassIsUndefined) {
  const std::vector<std::uint8_t> truth{1, 1};
  const std::vector<double> scores{0.2, 0.4};
  try {
    roc_auc(truth, scores);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::auc_undefined);
  }
  EXPECT_FALSE(compute_metrics(truth, truth, scores).auc.has_value());
}

TEST(Auc, MatchesBruteForcePairCounting) {
  Rng gen(404);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + gen.index(49);
    std::vector<std::uint8_t> truth(n);
    std::vector<double> scores(n);
    for (std::size_t i = 0; i < n; ++i) {
      truth[i] = static_cast<std::uint8_t>(gen.index(2));
      scores[i] = static_cast<double>(gen.index(8)) / 8.0;
    }
    truth[0] = 1;
    truth[1] = 0;
    ASSERT_EQ(roc_auc(truth, scores), brute_force_auc(truth, scores)) << "trial " << trial;
  }
}

TEST(Names, ParseAndPrint) {
  for (auto s : kAllSettings) EXPECT_EQ(parse_setting(setting_name(s)), s);
  for (auto l : kAllLearners) EXPECT_EQ(parse_learner(learner_name(l)), l);
  EXPECT_EQ(parse_learner("RF"), LearnerKind::rf);
  EXPECT_FALSE(parse_learner("svm").has_value());
}

TEST(SelectFeatures, ConstantColumnIsExcluded) {
  auto base = testing::make_blobs(80, 3, 1.0, 30);
  std::vector<double> values;
  for (std::size_t i = 0; i < base.rows(); ++i) {
    const auto r = base.row(i);
    values.insert(values.end(), r.begin(), r.end());
    values.push_back(1.0);
  }
  auto schema = base.schema();
  schema.feature_names.push_back("flat");
  const FlowDataset ds(schema, std::move(values), base.attack_labels());
  LearnerConfig cfg;
  cfg.n_trees = 20;
  const auto kept = select_features_by_importance(ds, cfg);
  EXPECT_EQ(std::set<std::size_t>(kept.begin(), kept.end()), (std::set<std::size_t>{0, 1, 2}));
}

EvalConfig small_config() {
  EvalConfig cfg;
  cfg.learner.n_trees = 15;
  cfg.seed = 3;
  cfg.learner.seed = 4;
  return cfg;
}

TEST(FeatureTransform, SettingsProduceExpectedWidths) {
  const auto ds = testing::make_flow_dataset({.rows = 600}, 31);
  const auto cfg = small_config();
  EXPECT_EQ(FeatureTransform::fit(FeatureSetting::all, ds, cfg.learner).apply(ds).cols(), 78u);
  EXPECT_EQ(FeatureTransform::fit(FeatureSetting::domain, ds, cfg.learner).apply(ds).cols(), 21u);
  const auto constructed = FeatureTransform::fit(FeatureSetting::constructed, ds, cfg.learner);
  EXPECT_EQ(constructed.apply(ds).schema().feature_names, (std::vector<std::string>{"C", "I", "A"}));
  const auto selected = FeatureTransform::fit(FeatureSetting::selected, ds, cfg.learner);
  EXPECT_LE(selected.apply(ds).cols(), 70u);  // constant columns never enter
  const auto back = FeatureTransform::from_json(nlohmann::json::parse(constructed.to_json().dump()));
  EXPECT_TRUE(back.apply(ds) == constructed.apply(ds));
}

TEST(Pipeline, JsonRoundTripPreservesScores) {
  const auto ds = testing::make_flow_dataset({.rows = 400}, 32);
  const auto cfg = small_config();
  TrainedPipeline p;
  p.learner = LearnerKind::et;
  p.transform = FeatureTransform::fit(FeatureSetting::domain, ds, cfg.learner);
  p.model = train_learner(p.learner, p.transform.apply(ds), cfg.learner);
  const auto back = pipeline_from_json(nlohmann::json::parse(pipeline_to_json(p).dump()));
  for (std::size_t i = 0; i < 20; ++i) EXPECT_EQ(back.score_row(ds, i), p.score_row(ds, i));
  auto bad = nlohmann::json::parse(pipeline_to_json(p).dump());
  bad["transform"]["columns"].erase(0);
  bad["transform"]["renamed"].erase(0);
  EXPECT_THROW(pipeline_from_json(bad), Error);
}

class SmallExperiment : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    sample_ = new FlowDataset(testing::make_flow_dataset({.rows = 1500}, 33));
    report_ = new ComparisonReport(
        run_explainability_test(*sample_, kAllLearners, kAllSettings, small_config()));
  }
  static void TearDownTestSuite() {
    delete report_;
    delete sample_;
  }
  static FlowDataset* sample_;
  static ComparisonReport* report_;
};

FlowDataset* SmallExperiment::sample_ = nullptr;
ComparisonReport* SmallExperiment::report_ = nullptr;

TEST_F(SmallExperiment, HasOneEntryPerLearnerAndSetting) {
  EXPECT_EQ(report_->entries.size(), 12u);
  EXPECT_EQ(report_->n_train + report_->n_test, sample_->rows());
  EXPECT_EQ(report_->find(LearnerKind::nb, FeatureSetting::constructed)->n_features, 3u);
  EXPECT_EQ(report_->find(LearnerKind::rf, FeatureSetting::domain)->n_features, 21u);
  EXPECT_GT(report_->find(LearnerKind::rf, FeatureSetting::all)->metrics.accuracy, 0.9);
}

TEST_F(SmallExperiment, TestPartitionHashNeverChanges) {
  ASSERT_EQ(report_->leakage_checks.size(), 1u + kAllSettings.size());
  for (const auto& c : report_->leakage_checks) EXPECT_EQ(c.test_hash, report_->leakage_checks.front().test_hash);
  const auto split = train_test_split(*sample_, 0.7, small_config().seed);
  EXPECT_EQ(report_->leakage_checks.front().test_hash, partition_hash(*sample_, split.test));
}

TEST_F(SmallExperiment, DifferencesAreFirstMinusSecond) {
  const auto diffs = metric_differences(*report_);
  EXPECT_EQ(diffs.size(), 9u);
  for (const auto& d : diffs) {
    const auto* a = report_->find(d.learner, d.first);
    const auto* b = report_->find(d.learner, d.second);
    EXPECT_EQ(d.accuracy, a->metrics.accuracy - b->metrics.accuracy);
  }
}

TEST_F(SmallExperiment, RerunIsByteIdentical) {
  const auto again = run_explainability_test(*sample_, kAllLearners, kAllSettings, small_config());
  EXPECT_EQ(comparison_to_json(again).dump(2), comparison_to_json(*report_).dump(2));
  EXPECT_EQ(comparison_to_csv(again), comparison_to_csv(*report_));
}

TEST_F(SmallExperiment, ReportsCarryHashesAndNotes) {
  const auto j = comparison_to_json(*report_);
  EXPECT_EQ(j["config_hash"], config_hash(report_->config));
  EXPECT_EQ(j["dataset_hash"], hex64(dataset_hash(*sample_)));
  EXPECT_FALSE(j["notes"].empty());
  const auto csv = comparison_to_csv(*report_);
  EXPECT_NE(csv.find("RF-A,"), std::string::npos);
  EXPECT_NE(csv.find("NB-D2,"), std::string::npos);
  EXPECT_NE(csv.find("Difference,rf,all-selected"), std::string::npos);
}

TEST_F(SmallExperiment, RuntimeRatioOfNbToItselfIsOne) {
  for (const auto& row : measure_runtime(*report_)) {
    if (row.learner == LearnerKind::nb && row.ratio_to_nb) EXPECT_DOUBLE_EQ(*row.ratio_to_nb, 1.0);
  }
  EXPECT_EQ(mean_runtime_by_learner(*report_).size(), 3u);
}

TEST(Runtime, MoreTreesTakeLonger) {
  const auto ds = testing::make_flow_dataset({.rows = 1200}, 34);
  const std::array<LearnerKind, 1> rf{LearnerKind::rf};
  const std::array<FeatureSetting, 1> all{FeatureSetting::all};
  auto cfg = small_config();
  cfg.learner.n_trees = 1;
  const auto one = run_explainability_test(ds, rf, all, cfg);
  cfg.learner.n_trees = 100;
  const auto hundred = run_explainability_test(ds, rf, all, cfg);
  EXPECT_GT(measure_runtime(hundred)[0].seconds, measure_runtime(one)[0].seconds);
}

TEST(Loo, HeldOutAttackIsRemovedFromTrainingOnly) {
  const auto ds = testing::make_flow_dataset({.rows = 1500}, 35);
  const std::array<LearnerKind, 2> learners{LearnerKind::rf, LearnerKind::nb};
  const std::array<FeatureSetting, 2> settings{FeatureSetting::domain, FeatureSetting::constructed};
  const std::vector<std::string> attacks{"DDoS", "portscan"};
  const auto r = run_generalizability_test(ds, learners, settings, small_config(), attacks);
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_EQ(r.rows[1].attack, "PortScan");
  const auto split = train_test_split(ds, 0.7, small_config().seed);
  for (const auto& row : r.rows) {
    std::size_t in_train = 0, in_test = 0;
    for (auto i : split.train) in_train += ds.attack_labels()[i] == row.attack;
    for (auto i : split.test) in_test += ds.attack_labels()[i] == row.attack;
    EXPECT_EQ(row.train_rows_removed, in_train);
    EXPECT_EQ(row.test_count, in_test);
    EXPECT_EQ(row.cells.size(), 4u);
    for (const auto& c : row.cells) {
      ASSERT_TRUE(c.rate.has_value());
      EXPECT_GE(*c.rate, 0.0);
      EXPECT_LE(*c.rate, 1.0);
    }
  }
  for (const auto& c : r.leakage_checks) EXPECT_EQ(c.test_hash, partition_hash(ds, split.test));
  const auto again = run_generalizability_test(ds, learners, settings, small_config(), attacks);
  EXPECT_EQ(loo_to_json(again).dump(), loo_to_json(r).dump());
  EXPECT_EQ(loo_to_csv(again), loo_to_csv(r));
}

TEST(Loo, NeverFlaggingLearnerDetectsNothing) {
  const auto ds = testing::make_flow_dataset({.rows = 1000}, 36);
  const std::array<LearnerKind, 1> nb{LearnerKind::nb};
  const std::array<FeatureSetting, 1> domain{FeatureSetting::domain};
  auto cfg = small_config();
  cfg.threshold = 1.5;
  const auto r = run_generalizability_test(ds, nb, domain, cfg);
  EXPECT_EQ(r.rows.size(), kCanonicalAttacks.size());
  for (const auto& row : r.rows) {
    if (row.test_count > 0) EXPECT_EQ(row.rate(LearnerKind::nb, FeatureSetting::domain), 0.0) << row.attack;
  }
}

TEST(Loo, AttackAbsentFromTestGetsNa) {
  auto ds = testing::make_flow_dataset({.rows = 800}, 37);
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    if (ds.attack_labels()[i] != "Heartbleed") keep.push_back(i);
  }
  ds = ds.subset(keep);
  const std::array<LearnerKind, 1> nb{LearnerKind::nb};
  const std::array<FeatureSetting, 1> all{FeatureSetting::all};
  const std::vector<std::string> attacks{"Heartbleed"};
  const auto r = run_generalizability_test(ds, nb, all, small_config(), attacks);
  EXPECT_FALSE(r.rows[0].rate(LearnerKind::nb, FeatureSetting::all).has_value());
  EXPECT_NE(loo_to_csv(r).find("Heartbleed,0,NA"), std::string::npos);
}

}  // namespace
}  // namespace cianids
