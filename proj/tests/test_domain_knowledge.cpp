#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "cianids/domain_knowledge.hpp"
#include "support/synthetic.hpp"
#include "support/temp_dir.hpp"

namespace cianids {
namespace {

std::string read_fixture(const std::string& name) {
  std::ifstream in(std::string(CIANIDS_DATA_DIR) + "/" + name, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(CiaTag, ParsesPrintedForms) {
  EXPECT_EQ(CiaTag::parse("AC").letters(), "CA");
  EXPECT_EQ(CiaTag::parse("C, I, A").size(), 3u);
  EXPECT_DOUBLE_EQ(CiaTag::parse("CIA").share(Cia::I), 1.0 / 3.0);
  EXPECT_EQ(CiaTag::parse("A").share(Cia::C), 0.0);
  EXPECT_THROW(CiaTag::parse(""), Error);
  EXPECT_THROW(CiaTag::parse("CC"), Error);
  EXPECT_THROW(CiaTag::parse("X"), Error);
}

TEST(AttackTable, KnownMappings) {
  const auto& k = default_knowledge();
  EXPECT_EQ(k.map_attack_to_cia("DDoS").letters(), "A");
  EXPECT_EQ(k.map_attack_to_cia("Bot").letters(), "CIA");
  EXPECT_EQ(k.map_attack_to_cia("Heartbleed").letters(), "C");
  EXPECT_EQ(k.map_attack_to_cia("Web Attack - Sql Injection").letters(), "CIA");
  EXPECT_EQ(k.map_attack_to_cia("DoS Slowhttptest").letters(), "A");
  EXPECT_EQ(k.map_attack_to_cia("Infiltration").letters(), "C");
  try {
    k.map_attack_to_cia("Teardrop");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::unknown_attack);
  }
}

TEST(AttackTable, EveryCanonicalAttackIsCovered) {
  for (auto a : kCanonicalAttacks) EXPECT_NE(default_knowledge().find_attack(a), nullptr) << a;
}

TEST(FeatureTable, KnownMappings) {
  const auto& k = default_knowledge();
  EXPECT_EQ(k.map_feature_to_attacks("Average Packet Size"), (std::vector<std::string>{"DDoS"}));
  EXPECT_EQ(k.map_feature_to_attacks("Flow Duration"),
            (std::vector<std::string>{"DDoS", "DoS slowloris", "DoS Hulk", "DoS Slowhttp", "Infiltration",
                                      "Heartbleed"}));
  EXPECT_EQ(k.map_feature_to_attacks("SYN Flag Count"), (std::vector<std::string>{"FTP-Patator"}));
  EXPECT_EQ(k.feature_entry("Avg Packet Size - A").feature, "Average Packet Size");
  EXPECT_THROW(k.map_feature_to_attacks("Destination Port"), Error);
  EXPECT_EQ(k.features().size(), 21u);
  EXPECT_EQ(k.attacks().size(), 12u);
}

TEST(FeatureTable, RenamedSuffixMatchesTags) {
  for (const auto& f : default_knowledge().features()) {
    EXPECT_TRUE(f.renamed.ends_with(" - " + f.tags)) << f.renamed;
  }
}

TEST(KnowledgeFile, EmbeddedTablesMatchGoldenFixtureByteForByte) {
  const std::string golden = read_fixture("cia_tables.json");
  ASSERT_FALSE(golden.empty());
  EXPECT_EQ(serialize_knowledge(default_knowledge()), golden);
}

TEST(KnowledgeFile, RoundTrip) {
  testing::TempDir dir;
  const auto path = dir.path() / "k.json";
  {
    std::ofstream out(path);
    out << serialize_knowledge(default_knowledge());
  }
  const auto back = load_knowledge(path);
  EXPECT_EQ(serialize_knowledge(back), serialize_knowledge(default_knowledge()));
}

TEST(KnowledgeFile, RejectsInconsistentTables) {
  auto j = nlohmann::json::parse(serialize_knowledge(default_knowledge()));
  j["features"][0]["renamed"] = "ACK Flag Count - A";
  EXPECT_THROW(knowledge_from_json(j), Error);
  auto k = nlohmann::json::parse(serialize_knowledge(default_knowledge()));
  k["features"][0]["attacks"].push_back("Teardrop");
  EXPECT_THROW(knowledge_from_json(k), Error);
  auto v = nlohmann::json::parse(serialize_knowledge(default_knowledge()));
  v["version"] = 99;
  EXPECT_THROW(knowledge_from_json(v), Error);
}

TEST(SelectDomainFeatures, CicidsSchemaGivesRenamedTableColumns) {
  const auto ds = testing::make_flow_dataset({.rows = 100}, 1);
  const auto domain = select_domain_features(ds);
  EXPECT_EQ(domain.schema().feature_names, default_knowledge().renamed_features());
  const auto j = *ds.schema().find("Flow Duration");
  const auto k = *domain.schema().find("Flow Duration - AC");
  for (std::size_t i = 0; i < ds.rows(); ++i) EXPECT_EQ(domain.at(i, k), ds.at(i, j));
}

TEST(SelectDomainFeatures, AlreadyRestrictedInputIsIdentityOnValues) {
  const auto ds = testing::make_flow_dataset({.rows = 50}, 2);
  const auto once = select_domain_features(ds);
  const auto twice = select_domain_features(once);
  EXPECT_TRUE(once == twice);
}

TEST(SelectDomainFeatures, MissingFeatureIsAnError) {
  auto names = testing::cicids_feature_names();
  std::erase(names, "Active Min");
  const auto ds = testing::make_dataset({std::vector<double>(names.size(), 1.0)}, {1}, names);
  try {
    select_domain_features(ds);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::missing_feature);
    EXPECT_NE(std::string(e.what()).find("Active Min"), std::string::npos);
  }
}

FlowDataset three_feature_train(const std::vector<std::vector<double>>& rows, const std::vector<int>& classes) {
  return testing::make_dataset(rows, classes,
                               {"SYN Flag Count - C", "Avg Packet Size - A", "Bwd Packets/s - CIA"});
}

TEST(FitConstructor, SignsFollowCorrelationWithClass) {
  // f0 equals class, f1 equals 1 - class, f2 constant.
  const auto train = three_feature_train({{0, 1, 5}, {1, 0, 5}, {1, 0, 5}, {0, 1, 5}}, {0, 1, 1, 0});
  const auto ctor = fit_constructor(train);
  EXPECT_EQ(ctor.signs(), (SignVector{1, -1, 0}));
  EXPECT_EQ(ctor.scaler().min, (std::vector<double>{0, 0, 5}));
  EXPECT_EQ(ctor.scaler().max, (std::vector<double>{1, 1, 5}));
}

TEST(FitConstructor, SingleClassIsAnError) {
  const auto train = three_feature_train({{0, 1, 5}, {1, 0, 4}}, {1, 1});
  try {
    fit_constructor(train);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::single_class);
  }
}

TEST(ConstructCia, HandEvaluatedExample) {
  // Scaled values 0.4 (C, +1), 0.6 (A, +1), 0.9 (CIA, -1):
  // C = 0.4 - 0.3, I = -0.3, A = 0.6 - 0.3.
  const CiaConstructor ctor({"SYN Flag Count - C", "Avg Packet Size - A", "Bwd Packets/s - CIA"},
                            {CiaTag::parse("C"), CiaTag::parse("A"), CiaTag::parse("CIA")},
                            MinMaxScaler{{0, 0, 0}, {1, 1, 1}}, {1, 1, -1});
  const std::vector<double> row{0.4, 0.6, 0.9};
  const auto cia = ctor.construct_row(row);
  EXPECT_NEAR(cia[0], 0.1, 1e-15);
  EXPECT_NEAR(cia[1], -0.3, 1e-15);
  EXPECT_NEAR(cia[2], 0.3, 1e-15);
}

TEST(ConstructCia, AllZeroInputGivesZero) {
  const CiaConstructor ctor({"a - C", "b - IA"}, {CiaTag::parse("C"), CiaTag::parse("IA")},
                            MinMaxScaler{{0, 0}, {2, 3}}, {1, -1});
  const std::vector<double> row{0.0, 0.0};
  const auto cia = ctor.construct_row(row);
  EXPECT_EQ(cia[0], 0.0);
  EXPECT_EQ(cia[1], 0.0);
  EXPECT_EQ(cia[2], 0.0);
}

TEST(ConstructCia, TestValuesOutsideTrainingRangeAreNotClamped) {
  const auto train = three_feature_train({{0, 0, 0}, {10, 10, 10}}, {0, 1});
  const auto ctor = fit_constructor(train);
  const std::vector<double> row{20, 0, 0};
  EXPECT_NEAR(ctor.construct_row(row)[0], 2.0, 1e-15);
}

TEST(ConstructCia, OutputDatasetCarriesLabels) {
  const auto ds = testing::make_flow_dataset({.rows = 300}, 4);
  const auto domain = select_domain_features(ds);
  const auto ctor = fit_constructor(domain);
  const auto cia = construct_cia(ctor, domain);
  EXPECT_EQ(cia.schema().feature_names, (std::vector<std::string>{"C", "I", "A"}));
  EXPECT_EQ(cia.attack_labels(), ds.attack_labels());
  EXPECT_THROW(construct_cia(ctor, ds), Error);
}

TEST(ConstructCia, PropertyConservationAndLinearity) {
  // Independent oracle: C + I + A must equal the plain sum of sign * scaled
  // value, and doubling one feature's scaled value must move each component
  // by exactly that feature's share.
  Rng gen(77);
  const std::array<std::string_view, 7> tag_pool = {"C", "I", "A", "CI", "CA", "IA", "CIA"};
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t d = 1 + gen.index(12);
    std::vector<std::string> names;
    std::vector<CiaTag> tags;
    MinMaxScaler scaler;
    SignVector signs;
    for (std::size_t j = 0; j < d; ++j) {
      const auto t = tag_pool[gen.index(tag_pool.size())];
      names.push_back("f" + std::to_string(j) + " - " + std::string(t));
      tags.push_back(CiaTag::parse(t));
      const double lo = gen.uniform() * 10.0 - 5.0;
      scaler.min.push_back(lo);
      scaler.max.push_back(lo + gen.uniform() * 5.0 + 0.1);
      signs.push_back(static_cast<int>(gen.index(3)) - 1);
    }
    const CiaConstructor ctor(names, tags, scaler, signs);
    std::vector<double> row(d);
    for (std::size_t j = 0; j < d; ++j) row[j] = scaler.min[j] + gen.uniform() * (scaler.max[j] - scaler.min[j]);
    const auto cia = ctor.construct_row(row);
    double expected = 0.0;
    for (std::size_t j = 0; j < d; ++j) expected += scaler.scale(j, row[j]) * signs[j];
    ASSERT_NEAR(cia[0] + cia[1] + cia[2], expected, 1e-12) << "trial " << trial;

    const std::size_t j = gen.index(d);
    auto moved = row;
    moved[j] = scaler.min[j] + 2.0 * (row[j] - scaler.min[j]);
    const auto cia2 = ctor.construct_row(moved);
    const double delta = scaler.scale(j, row[j]) * signs[j];
    for (auto c : kCiaComponents) {
      const int k = static_cast<int>(c);
      ASSERT_NEAR(cia2[k] - cia[k], delta * tags[j].share(c), 1e-12) << "trial " << trial;
    }
  }
}

TEST(ConstructorJson, RoundTrip) {
  const auto ds = select_domain_features(testing::make_flow_dataset({.rows = 200}, 5));
  const auto ctor = fit_constructor(ds);
  const auto back = constructor_from_json(nlohmann::json::parse(constructor_to_json(ctor).dump()));
  EXPECT_EQ(construct_cia(back, ds), construct_cia(ctor, ds));
}

}  // namespace
}  // namespace cianids
