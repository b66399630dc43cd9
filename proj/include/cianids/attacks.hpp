#pragma once

// Canonical names of the attack families labelled in CICIDS2017, plus the
// alternate spellings seen in the released CSVs and in published tables.

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "cianids/util.hpp"

namespace cianids {

inline constexpr std::array<std::string_view, 14> kCanonicalAttacks = {
    "DDoS",
    "PortScan",
    "Bot",
    "Infiltration",
    "Web Attack - Brute Force",
    "Web Attack - XSS",
    "Web Attack - Sql Injection",
    "FTP-Patator",
    "SSH-Patator",
    "DoS slowloris",
    "DoS Slowhttptest",
    "DoS Hulk",
    "DoS GoldenEye",
    "Heartbleed",
};

namespace detail {

struct AttackAlias {
  std::string_view folded;
  std::string_view canonical;
};

// Keys are fold_name() forms, so dash encodings and case do not matter.
inline constexpr std::array<AttackAlias, 19> kAttackAliases = {{
    {"ddos", "DDoS"},
    {"portscan", "PortScan"},
    {"port scan", "PortScan"},
    {"bot", "Bot"},
    {"infiltration", "Infiltration"},
    {"inflitration", "Infiltration"},
    {"web attack brute force", "Web Attack - Brute Force"},
    {"web attack bf", "Web Attack - Brute Force"},
    {"web attack xss", "Web Attack - XSS"},
    {"web attack sql injection", "Web Attack - Sql Injection"},
    {"web attack sql", "Web Attack - Sql Injection"},
    {"ftp patator", "FTP-Patator"},
    {"ssh patator", "SSH-Patator"},
    {"dos slowloris", "DoS slowloris"},
    {"dos slowhttptest", "DoS Slowhttptest"},
    {"dos slowhttp", "DoS Slowhttptest"},
    {"dos hulk", "DoS Hulk"},
    {"dos goldeneye", "DoS GoldenEye"},
    {"heartbleed", "Heartbleed"},
}};

}  // namespace detail

/// Canonical attack name for a raw label, or nullopt if the label is not a
/// known CICIDS2017 attack.
inline std::optional<std::string> canonical_attack(std::string_view label) {
  const std::string key = fold_name(label);
  for (const auto& alias : detail::kAttackAliases) {
    if (alias.folded == key) return std::string(alias.canonical);
  }
  return std::nullopt;
}

/// Canonical spelling if known, otherwise the trimmed raw label.
inline std::string normalize_label(std::string_view raw, std::string_view benign_label) {
  const std::string_view t = trim(raw);
  if (fold_name(t) == fold_name(benign_label)) return std::string(benign_label);
  if (auto c = canonical_attack(t)) return *c;
  return std::string(t);
}

}  // namespace cianids
