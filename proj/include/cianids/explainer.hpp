#pragma once

// Additive decomposition of a prediction: score = bias + sum of per-feature
// contributions, and its grouping into C, I and A.
//
// For a tree the bias is the root's class-1 fraction; each internal node on
// the decision path credits (child value - node value) to its split feature.
// A forest averages its trees' decompositions, which is exact because the
// forest score is the mean of the tree scores.

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cianids/domain_knowledge.hpp"
#include "cianids/error.hpp"
#include "cianids/learners.hpp"

namespace cianids {

struct ContributionVector {
  double bias = 0.0;
  std::vector<double> contributions;
  double score = 0.0;

  double total() const {
    double s = bias;
    for (double c : contributions) s += c;
    return s;
  }
};

inline ContributionVector decompose_tree_prediction(const DecisionTree& tree, std::span<const double> row) {
  const auto path = tree.path(row);
  const auto& nodes = tree.nodes();
  ContributionVector cv;
  cv.contributions.assign(tree.n_features(), 0.0);
  cv.bias = nodes[path.front()].value;
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    const auto& node = nodes[path[k]];
    const auto& child = nodes[path[k + 1]];
    cv.contributions[static_cast<std::size_t>(node.feature)] += child.value - node.value;
  }
  cv.score = nodes[path.back()].value;
  return cv;
}

inline ContributionVector decompose_forest_prediction(const ForestModel& model, std::span<const double> row) {
  ContributionVector cv;
  cv.contributions.assign(model.n_features(), 0.0);
  for (const auto& tree : model.trees()) {
    const auto t = decompose_tree_prediction(tree, row);
    cv.bias += t.bias;
    cv.score += t.score;
    for (std::size_t j = 0; j < t.contributions.size(); ++j) cv.contributions[j] += t.contributions[j];
  }
  const double n = static_cast<double>(model.trees().size());
  cv.bias /= n;
  cv.score /= n;
  for (double& c : cv.contributions) c /= n;
  return cv;
}

struct FeatureContribution {
  std::string name;
  std::string tags;  // letters in C, I, A order
  double contribution = 0.0;

  friend bool operator==(const FeatureContribution&, const FeatureContribution&) = default;
};

struct CiaBreakdown {
  double bias = 0.0;
  double c = 0.0;
  double i = 0.0;
  double a = 0.0;
  double score = 0.0;
  std::vector<FeatureContribution> features;

  double group(Cia comp) const { return comp == Cia::C ? c : (comp == Cia::I ? i : a); }

  friend bool operator==(const CiaBreakdown&, const CiaBreakdown&) = default;
};

/// Splits each feature's contribution equally over its tag letters. Features
/// named exactly "C", "I" or "A" (the constructed setting) map to themselves.
inline CiaBreakdown aggregate_to_cia(const ContributionVector& cv, std::span<const std::string> names,
                                     const DomainKnowledge& k = default_knowledge()) {
  if (names.size() != cv.contributions.size()) {
    fail(Errc::dimension_mismatch, "feature names do not match contribution vector");
  }
  CiaBreakdown bd;
  bd.bias = cv.bias;
  bd.score = cv.score;
  for (std::size_t j = 0; j < names.size(); ++j) {
    CiaTag tag;
    if (names[j] == "C" || names[j] == "I" || names[j] == "A") {
      tag = CiaTag::parse(names[j]);
    } else {
      const auto* entry = k.find_feature(names[j]);
      if (entry == nullptr) fail(Errc::unknown_feature, "feature '" + names[j] + "' has no CIA mapping");
      tag = CiaTag::parse(entry->tags);
    }
    const double v = cv.contributions[j];
    bd.c += v * tag.share(Cia::C);
    bd.i += v * tag.share(Cia::I);
    bd.a += v * tag.share(Cia::A);
    bd.features.push_back({names[j], tag.letters(), v});
  }
  return bd;
}

// ---------------------------------------------------------------------------
// Plot-data document
//
// { "format": "cianids-breakdown", "version": 1, "bias", "score",
//   "groups": {"C", "I", "A"}, "features": [{"name", "tags", "contribution"}] }
// A waterfall starts at bias, adds the three group bars and ends at score.

inline constexpr std::string_view kBreakdownFormat = "cianids-breakdown";
inline constexpr int kBreakdownVersion = 1;

inline nlohmann::ordered_json breakdown_to_json(const CiaBreakdown& bd) {
  nlohmann::ordered_json features = nlohmann::ordered_json::array();
  for (const auto& f : bd.features) {
    features.push_back({{"name", f.name}, {"tags", f.tags}, {"contribution", f.contribution}});
  }
  return {{"format", kBreakdownFormat},
          {"version", kBreakdownVersion},
          {"bias", bd.bias},
          {"score", bd.score},
          {"groups", {{"C", bd.c}, {"I", bd.i}, {"A", bd.a}}},
          {"features", features}};
}

inline CiaBreakdown breakdown_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kBreakdownFormat) fail(Errc::malformed_file, "not a breakdown document");
    if (j.at("version").get<int>() != kBreakdownVersion) fail(Errc::malformed_file, "unsupported breakdown version");
    CiaBreakdown bd;
    bd.bias = j.at("bias").get<double>();
    bd.score = j.at("score").get<double>();
    const auto& g = j.at("groups");
    bd.c = g.at("C").get<double>();
    bd.i = g.at("I").get<double>();
    bd.a = g.at("A").get<double>();
    for (const auto& f : j.at("features")) {
      bd.features.push_back(
          {f.at("name").get<std::string>(), f.at("tags").get<std::string>(), f.at("contribution").get<double>()});
    }
    return bd;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::malformed_file, std::string("breakdown document: ") + e.what());
  }
}

inline void export_breakdown(const CiaBreakdown& bd, const std::filesystem::path& destination) {
  std::ofstream out(destination, std::ios::binary);
  if (!out) fail(Errc::io_failure, "cannot write " + destination.string());
  out << breakdown_to_json(bd).dump(2) << '\n';
  if (!out) fail(Errc::io_failure, "write failed: " + destination.string());
}

inline CiaBreakdown import_breakdown(const std::filesystem::path& source) {
  std::ifstream in(source);
  if (!in) fail(Errc::missing_file, "missing file: " + source.string());
  try {
    return breakdown_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    fail(Errc::malformed_file, source.string() + ": " + e.what());
  }
}

}  // namespace cianids
