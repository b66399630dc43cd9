#pragma once

// CIA (confidentiality / integrity / availability) domain knowledge: which
// attacks compromise which component, which flow features matter for which
// attacks, and the constructor that folds the tagged features into three
// aggregate features C, I and A.

#include <array>
#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cianids/attacks.hpp"
#include "cianids/error.hpp"
#include "cianids/flow_store.hpp"
#include "cianids/util.hpp"

namespace cianids {

enum class Cia : std::uint8_t { C = 0, I = 1, A = 2 };

inline constexpr std::array<Cia, 3> kCiaComponents = {Cia::C, Cia::I, Cia::A};
inline constexpr std::array<std::string_view, 3> kCiaNames = {"C", "I", "A"};

/// Nonempty subset of {C, I, A}.
class CiaTag {
 public:
  CiaTag() = default;

  /// Parses letters such as "A", "AC" or "C, I, A". Rejects empty or repeated
  /// components.
  static CiaTag parse(std::string_view text) {
    CiaTag tag;
    for (char ch : text) {
      int bit;
      switch (ch) {
        case 'C': case 'c': bit = 0; break;
        case 'I': case 'i': bit = 1; break;
        case 'A': case 'a': bit = 2; break;
        case ' ': case ',': continue;
        default: fail(Errc::invalid_argument, "invalid CIA tag letter in '" + std::string(text) + "'");
      }
      if (tag.bits_ & (1u << bit)) fail(Errc::invalid_argument, "repeated CIA letter in '" + std::string(text) + "'");
      tag.bits_ |= static_cast<std::uint8_t>(1u << bit);
    }
    if (tag.bits_ == 0) fail(Errc::invalid_argument, "empty CIA tag");
    return tag;
  }

  bool contains(Cia c) const { return (bits_ >> static_cast<int>(c)) & 1u; }
  std::size_t size() const { return std::popcount(static_cast<unsigned>(bits_)); }

  /// Equal share of one unit across the members.
  double share(Cia c) const { return contains(c) ? 1.0 / static_cast<double>(size()) : 0.0; }

  /// Letters in C, I, A order.
  std::string letters() const {
    std::string s;
    for (auto c : kCiaComponents) {
      if (contains(c)) s += kCiaNames[static_cast<int>(c)];
    }
    return s;
  }

  friend bool operator==(CiaTag, CiaTag) = default;

 private:
  std::uint8_t bits_ = 0;
};

struct AttackCiaEntry {
  std::string attack;                // as listed in the attack table
  std::string tags;                  // printed letters, e.g. "CIA"
  std::vector<std::string> members;  // canonical dataset labels covered by this row
};

struct FeatureCiaEntry {
  std::string feature;               // original flow feature name
  std::string renamed;               // "<name> - <letters>"
  std::string tags;                  // printed letters, e.g. "AC"
  std::vector<std::string> attacks;  // attacks for which the feature ranks top three
};

inline constexpr std::string_view kKnowledgeFormat = "cianids-domain-knowledge";
inline constexpr int kKnowledgeVersion = 1;

class DomainKnowledge {
 public:
  DomainKnowledge() = default;
  DomainKnowledge(std::vector<AttackCiaEntry> attacks, std::vector<FeatureCiaEntry> features)
      : attacks_(std::move(attacks)), features_(std::move(features)) {
    validate();
  }

  const std::vector<AttackCiaEntry>& attacks() const { return attacks_; }
  const std::vector<FeatureCiaEntry>& features() const { return features_; }

  /// CIA tag of an attack, by table name or by canonical dataset label.
  CiaTag map_attack_to_cia(std::string_view attack) const {
    if (const auto* e = find_attack(attack)) return CiaTag::parse(e->tags);
    fail(Errc::unknown_attack, "unknown attack: " + std::string(attack));
  }

  /// Attacks for which the feature is among the top three.
  const std::vector<std::string>& map_feature_to_attacks(std::string_view feature) const {
    return feature_entry(feature).attacks;
  }

  /// Entry by original or renamed feature name.
  const FeatureCiaEntry& feature_entry(std::string_view name) const {
    if (const auto* e = find_feature(name)) return *e;
    fail(Errc::unknown_feature, "feature not in domain map: " + std::string(name));
  }

  const FeatureCiaEntry* find_feature(std::string_view name) const {
    const std::string_view key = trim(name);
    for (const auto& f : features_) {
      if (iequals(f.feature, key) || iequals(f.renamed, key)) return &f;
    }
    return nullptr;
  }

  const AttackCiaEntry* find_attack(std::string_view attack) const {
    const std::string key = fold_name(attack);
    for (const auto& a : attacks_) {
      if (fold_name(a.attack) == key) return &a;
    }
    const auto canonical = canonical_attack(attack);
    for (const auto& a : attacks_) {
      for (const auto& m : a.members) {
        if (fold_name(m) == key || (canonical && *canonical == m)) return &a;
      }
    }
    return nullptr;
  }

  std::vector<std::string> renamed_features() const {
    std::vector<std::string> out;
    for (const auto& f : features_) out.push_back(f.renamed);
    return out;
  }

 private:
  void validate() const {
    if (attacks_.empty() || features_.empty()) fail(Errc::malformed_file, "domain knowledge tables are empty");
    for (const auto& a : attacks_) {
      CiaTag::parse(a.tags);
      if (a.members.empty()) fail(Errc::malformed_file, "attack '" + a.attack + "' covers no dataset labels");
    }
    for (const auto& f : features_) {
      CiaTag::parse(f.tags);
      const std::string suffix = " - " + f.tags;
      if (f.renamed.size() <= suffix.size() ||
          f.renamed.compare(f.renamed.size() - suffix.size(), suffix.size(), suffix) != 0) {
        fail(Errc::malformed_file, "renamed feature '" + f.renamed + "' does not end with '" + suffix + "'");
      }
      for (const auto& attack : f.attacks) {
        if (fold_name(attack) == "benign") continue;
        if (find_attack(attack) == nullptr) {
          fail(Errc::malformed_file, "feature '" + f.feature + "' lists unknown attack '" + attack + "'");
        }
      }
    }
  }

  std::vector<AttackCiaEntry> attacks_;
  std::vector<FeatureCiaEntry> features_;
};

/// The attack and feature tables for CICIDS2017, rows in published order.
/// The feature table has 21 rows.
inline const DomainKnowledge& default_knowledge() {
  static const DomainKnowledge k(
      {
          {"DoS GoldenEye", "A", {"DoS GoldenEye"}},
          {"Heartbleed", "C", {"Heartbleed"}},
          {"DoS Hulk", "A", {"DoS Hulk"}},
          {"DoS Slowhttp", "A", {"DoS Slowhttptest"}},
          {"DoS slowloris", "A", {"DoS slowloris"}},
          {"SSH-Patator", "C", {"SSH-Patator"}},
          {"FTP-Patator", "C", {"FTP-Patator"}},
          {"Web Attack", "CIA", {"Web Attack - Brute Force", "Web Attack - XSS", "Web Attack - Sql Injection"}},
          {"Infiltration", "C", {"Infiltration"}},
          {"Bot", "CIA", {"Bot"}},
          {"PortScan", "C", {"PortScan"}},
          {"DDoS", "A", {"DDoS"}},
      },
      {
          {"ACK Flag Count", "ACK Flag Count - C", "C", {"SSH-Patator"}},
          {"Active Mean", "Active Mean - AC", "AC", {"DoS Slowhttp", "Infiltration"}},
          {"Active Min", "Active Min - A", "A", {"DoS Slowhttp"}},
          {"Average Packet Size", "Avg Packet Size - A", "A", {"DDoS"}},
          {"Bwd IAT Mean", "Bwd IAT Mean - A", "A", {"DoS slowloris"}},
          {"Bwd Packet Length Std", "Bwd Packet Length Std - AC", "AC",
           {"DoS Hulk", "DoS GoldenEye", "DDoS", "Heartbleed", "DoS Hulk"}},
          {"Bwd Packets/s", "Bwd Packets/s - CIA", "CIA", {"Bot", "PortScan"}},
          {"Fwd IAT Mean", "Fwd IAT Mean - A", "A", {"DoS slowloris"}},
          {"Fwd IAT Min", "Fwd IAT Min - A", "A", {"DoS slowloris", "DoS GoldenEye"}},
          {"Fwd Packet Length Mean", "Fwd Packet Length Mean - CIA", "CIA", {"Benign", "Bot"}},
          {"Fwd Packets/s", "Fwd Packets/s - C", "C", {"FTP-Patator"}},
          {"Fwd PSH Flags", "Fwd PSH Flags - C", "C", {"FTP-Patator"}},
          {"Flow Duration", "Flow Duration - AC", "AC",
           {"DDoS", "DoS slowloris", "DoS Hulk", "DoS Slowhttp", "Infiltration", "Heartbleed"}},
          {"Flow IAT Mean", "Flow IAT Mean - A", "A", {"DoS GoldenEye"}},
          {"Flow IAT Min", "Flow IAT Min - A", "A", {"DoS GoldenEye"}},
          {"Flow IAT Std", "Flow IAT Std - A", "A", {"DDoS", "DoS Slowhttp", "DoS Hulk"}},
          {"Init_Win_bytes_forward", "Init Win Bytes Fwd - CIA", "CIA", {"Web Attack"}},
          {"PSH Flag Count", "PSH Flag Count - C", "C", {"PortScan"}},
          {"Subflow Fwd Bytes", "Subflow Fwd Bytes - CIA", "CIA",
           {"Benign", "SSH-Patator", "Web Attack", "Bot", "Heartbleed", "Infiltration"}},
          {"SYN Flag Count", "SYN Flag Count - C", "C", {"FTP-Patator"}},
          {"Total Length of Fwd Packets", "Total Length of Fwd Packets - CIA", "CIA",
           {"Benign", "SSH-Patator", "Web Attack", "Bot", "Heartbleed", "Infiltration"}},
      });
  return k;
}

// ---------------------------------------------------------------------------
// Knowledge file (JSON)

inline nlohmann::ordered_json knowledge_to_json(const DomainKnowledge& k) {
  nlohmann::ordered_json j;
  j["format"] = kKnowledgeFormat;
  j["version"] = kKnowledgeVersion;
  auto& attacks = j["attacks"] = nlohmann::ordered_json::array();
  for (const auto& a : k.attacks()) {
    attacks.push_back({{"attack", a.attack}, {"tags", a.tags}, {"members", a.members}});
  }
  auto& features = j["features"] = nlohmann::ordered_json::array();
  for (const auto& f : k.features()) {
    features.push_back({{"feature", f.feature}, {"renamed", f.renamed}, {"tags", f.tags}, {"attacks", f.attacks}});
  }
  return j;
}

inline std::string serialize_knowledge(const DomainKnowledge& k) { return knowledge_to_json(k).dump(2) + "\n"; }

inline DomainKnowledge knowledge_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kKnowledgeFormat) {
      fail(Errc::malformed_file, "not a domain knowledge file");
    }
    if (j.at("version").get<int>() != kKnowledgeVersion) {
      fail(Errc::malformed_file, "unsupported domain knowledge version");
    }
    std::vector<AttackCiaEntry> attacks;
    for (const auto& a : j.at("attacks")) {
      attacks.push_back({a.at("attack").get<std::string>(), a.at("tags").get<std::string>(),
                         a.at("members").get<std::vector<std::string>>()});
    }
    std::vector<FeatureCiaEntry> features;
    for (const auto& f : j.at("features")) {
      features.push_back({f.at("feature").get<std::string>(), f.at("renamed").get<std::string>(),
                          f.at("tags").get<std::string>(), f.at("attacks").get<std::vector<std::string>>()});
    }
    return DomainKnowledge(std::move(attacks), std::move(features));
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::malformed_file, std::string("domain knowledge file: ") + e.what());
  } catch (const Error& e) {
    fail(Errc::malformed_file, e.what());
  }
}

inline DomainKnowledge load_knowledge(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::missing_file, "missing file: " + path.string());
  try {
    return knowledge_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    fail(Errc::malformed_file, path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Feature mapping

/// Keeps the mapped features in table order and renames them.
inline FlowDataset select_domain_features(const FlowDataset& ds, const DomainKnowledge& k = default_knowledge()) {
  std::vector<std::size_t> columns;
  std::vector<std::string> names;
  for (const auto& f : k.features()) {
    auto j = ds.schema().find(f.feature);
    if (!j) j = ds.schema().find(f.renamed);
    if (!j) fail(Errc::missing_feature, "input lacks domain feature '" + f.feature + "'");
    columns.push_back(*j);
    names.push_back(f.renamed);
  }
  return ds.select_columns(columns, std::move(names));
}

// ---------------------------------------------------------------------------
// Feature construction

struct MinMaxScaler {
  std::vector<double> min;
  std::vector<double> max;

  /// Affine map fitted on training rows; values outside the training range
  /// are not clamped. A constant feature scales to 0.
  double scale(std::size_t j, double v) const {
    const double range = max[j] - min[j];
    return range > 0.0 ? (v - min[j]) / range : 0.0;
  }
};

/// Pearson correlation; nullopt when either side has zero variance.
inline std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) return std::nullopt;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

/// -1, 0 or +1 per domain feature.
using SignVector = std::vector<int>;

class CiaConstructor {
 public:
  CiaConstructor() = default;
  CiaConstructor(std::vector<std::string> names, std::vector<CiaTag> tags, MinMaxScaler scaler, SignVector signs)
      : names_(std::move(names)), tags_(std::move(tags)), scaler_(std::move(scaler)), signs_(std::move(signs)) {
    const std::size_t n = names_.size();
    if (tags_.size() != n || scaler_.min.size() != n || scaler_.max.size() != n || signs_.size() != n) {
      fail(Errc::malformed_model, "constructor parts have inconsistent sizes");
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (!(scaler_.min[j] <= scaler_.max[j])) fail(Errc::malformed_model, "scaler min exceeds max");
      if (signs_[j] < -1 || signs_[j] > 1) fail(Errc::malformed_model, "sign weight outside {-1,0,1}");
    }
  }

  const std::vector<std::string>& feature_names() const { return names_; }
  const std::vector<CiaTag>& tags() const { return tags_; }
  const MinMaxScaler& scaler() const { return scaler_; }
  const SignVector& signs() const { return signs_; }
  std::size_t size() const { return names_.size(); }

  double split_weight(std::size_t j, Cia c) const { return tags_[j].share(c); }

  /// C, I, A for one row of domain features (in the fitted order). Sums run
  /// in table order.
  std::array<double, 3> construct_row(std::span<const double> row) const {
    if (row.size() != size()) fail(Errc::dimension_mismatch, "row width does not match constructor");
    std::array<double, 3> out{0.0, 0.0, 0.0};
    for (std::size_t j = 0; j < size(); ++j) {
      if (signs_[j] == 0) continue;
      const double signed_value = scaler_.scale(j, row[j]) * static_cast<double>(signs_[j]);
      for (auto c : kCiaComponents) {
        if (tags_[j].contains(c)) out[static_cast<int>(c)] += signed_value * tags_[j].share(c);
      }
    }
    return out;
  }

 private:
  std::vector<std::string> names_;
  std::vector<CiaTag> tags_;
  MinMaxScaler scaler_;
  SignVector signs_;
};

/// Fits scaler and correlation signs on training rows of a domain-feature
/// dataset (as produced by select_domain_features).
inline CiaConstructor fit_constructor(const FlowDataset& train, const DomainKnowledge& k = default_knowledge()) {
  if (train.rows() < 2) fail(Errc::empty_dataset, "constructor needs at least two training rows");
  const auto counts = train.class_counts();
  if (counts[0] == 0 || counts[1] == 0) {
    fail(Errc::single_class, "constructor needs both classes in the training rows");
  }
  const std::size_t d = train.cols();
  std::vector<CiaTag> tags;
  for (const auto& name : train.schema().feature_names) tags.push_back(CiaTag::parse(k.feature_entry(name).tags));

  MinMaxScaler scaler;
  scaler.min.assign(d, 0.0);
  scaler.max.assign(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    double lo = train.at(0, j), hi = lo;
    for (std::size_t i = 1; i < train.rows(); ++i) {
      lo = std::min(lo, train.at(i, j));
      hi = std::max(hi, train.at(i, j));
    }
    scaler.min[j] = lo;
    scaler.max[j] = hi;
  }

  std::vector<double> y(train.rows());
  for (std::size_t i = 0; i < train.rows(); ++i) y[i] = train.classes()[i];
  SignVector signs(d, 0);
  std::vector<double> column(train.rows());
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < train.rows(); ++i) column[i] = scaler.scale(j, train.at(i, j));
    if (const auto r = pearson(column, y)) signs[j] = *r > 0.0 ? 1 : (*r < 0.0 ? -1 : 0);
  }
  return CiaConstructor(train.schema().feature_names, std::move(tags), std::move(scaler), std::move(signs));
}

/// Three-feature dataset (C, I, A); labels carried through.
inline FlowDataset construct_cia(const CiaConstructor& ctor, const FlowDataset& ds) {
  const auto& names = ds.schema().feature_names;
  const bool match = names.size() == ctor.size() &&
                     std::equal(names.begin(), names.end(), ctor.feature_names().begin(),
                                [](const std::string& a, const std::string& b) { return iequals(a, b); });
  if (!match) fail(Errc::schema_mismatch, "dataset features do not match the fitted domain features");
  std::vector<double> values;
  values.reserve(ds.rows() * 3);
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    const auto cia = ctor.construct_row(ds.row(i));
    values.insert(values.end(), cia.begin(), cia.end());
  }
  FlowSchema schema;
  schema.label_column = ds.schema().label_column;
  schema.feature_names = {"C", "I", "A"};
  return FlowDataset(std::move(schema), std::move(values), ds.attack_labels(), ds.benign_label());
}

inline nlohmann::ordered_json constructor_to_json(const CiaConstructor& ctor) {
  nlohmann::ordered_json features = nlohmann::ordered_json::array();
  for (std::size_t j = 0; j < ctor.size(); ++j) {
    features.push_back({{"name", ctor.feature_names()[j]},
                        {"tags", ctor.tags()[j].letters()},
                        {"min", ctor.scaler().min[j]},
                        {"max", ctor.scaler().max[j]},
                        {"sign", ctor.signs()[j]}});
  }
  return {{"features", features}};
}

inline CiaConstructor constructor_from_json(const nlohmann::json& j) {
  std::vector<std::string> names;
  std::vector<CiaTag> tags;
  MinMaxScaler scaler;
  SignVector signs;
  for (const auto& f : j.at("features")) {
    names.push_back(f.at("name").get<std::string>());
    tags.push_back(CiaTag::parse(f.at("tags").get<std::string>()));
    scaler.min.push_back(f.at("min").get<double>());
    scaler.max.push_back(f.at("max").get<double>());
    signs.push_back(f.at("sign").get<int>());
  }
  return CiaConstructor(std::move(names), std::move(tags), std::move(scaler), std::move(signs));
}

}  // namespace cianids
