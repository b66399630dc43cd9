#pragma once

// SMOTE: synthetic minority oversampling on training rows.

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cianids/error.hpp"
#include "cianids/flow_store.hpp"
#include "cianids/rng.hpp"
#include "cianids/util.hpp"

namespace cianids {

struct SmoteConfig {
  std::size_t k_neighbors = 5;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
};

/// One synthetic row: parent + t * (neighbor - parent). Indices refer to rows
/// of the input dataset.
struct SmoteTraceEntry {
  std::size_t parent = 0;
  std::size_t neighbor = 0;
  double t = 0.0;

  friend bool operator==(const SmoteTraceEntry&, const SmoteTraceEntry&) = default;
};

struct SmoteResult {
  FlowDataset dataset;  // input rows first, synthetic rows appended
  std::vector<SmoteTraceEntry> trace;
};

/// Exact k nearest neighbours of `query` among `pool` (Euclidean), excluding
/// the query itself. Ties go to the lower row index.
inline std::vector<std::size_t> nearest_neighbors(const FlowDataset& ds, std::size_t query,
                                                  std::span<const std::size_t> pool, std::size_t k) {
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(pool.size());
  const auto q = ds.row(query);
  for (auto idx : pool) {
    if (idx == query) continue;
    const auto r = ds.row(idx);
    double d2 = 0.0;
    for (std::size_t j = 0; j < q.size(); ++j) {
      const double diff = r[j] - q[j];
      d2 += diff * diff;
    }
    dist.emplace_back(d2, idx);
  }
  k = std::min(k, dist.size());
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  std::vector<std::size_t> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(dist[i].second);
  return out;
}

/// Oversamples the minority class until both classes have equal counts.
/// Parents are visited round-robin over a seeded permutation of the minority
/// rows; synthetic row j draws its neighbour and t from its own stream.
inline SmoteResult smote_oversample(const FlowDataset& train, const SmoteConfig& cfg) {
  if (cfg.k_neighbors < 1) fail(Errc::invalid_argument, "SMOTE needs k_neighbors >= 1");
  const auto counts = train.class_counts();
  if (counts[0] == 0 || counts[1] == 0) fail(Errc::single_class, "SMOTE needs both classes present");
  SmoteResult result;
  if (counts[0] == counts[1]) {
    result.dataset = train;
    return result;
  }
  const std::uint8_t minority = counts[1] < counts[0] ? 1 : 0;
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < train.rows(); ++i) {
    if (train.classes()[i] == minority) pool.push_back(i);
  }
  if (pool.size() <= cfg.k_neighbors) {
    fail(Errc::invalid_argument, "minority class has " + std::to_string(pool.size()) +
                                     " rows; SMOTE needs more than k=" + std::to_string(cfg.k_neighbors));
  }
  const std::size_t needed = counts[1 - minority] - counts[minority];

  std::vector<std::size_t> parents = pool;
  Rng order(derive_seed(cfg.seed, 0));
  order.shuffle(std::span(parents));

  const std::size_t distinct = std::min(needed, parents.size());
  std::vector<std::vector<std::size_t>> neighbors(distinct);
  parallel_for(distinct, cfg.jobs, [&](std::size_t p) {
    neighbors[p] = nearest_neighbors(train, parents[p], pool, cfg.k_neighbors);
  });

  const std::size_t d = train.cols();
  std::vector<double> values(needed * d);
  std::vector<std::string> labels(needed);
  result.trace.resize(needed);
  parallel_for(needed, cfg.jobs, [&](std::size_t s) {
    const std::size_t p = s % parents.size();
    Rng rng(derive_seed(cfg.seed, s + 1));
    const auto& nn = neighbors[p];
    const std::size_t neighbor = nn[rng.index(nn.size())];
    const double t = rng.uniform();
    const auto a = train.row(parents[p]);
    const auto b = train.row(neighbor);
    for (std::size_t j = 0; j < d; ++j) values[s * d + j] = a[j] + t * (b[j] - a[j]);
    labels[s] = train.attack_labels()[parents[p]];
    result.trace[s] = {parents[p], neighbor, t};
  });

  FlowDataset synthetic(train.schema(), std::move(values), std::move(labels), train.benign_label());
  result.dataset = train.append(synthetic);
  return result;
}

/// JSON lines, one {"parent","neighbor","t"} object per synthetic row.
inline std::string trace_to_jsonl(const std::vector<SmoteTraceEntry>& trace) {
  std::string out;
  for (const auto& e : trace) {
    nlohmann::ordered_json j{{"parent", e.parent}, {"neighbor", e.neighbor}, {"t", e.t}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

inline std::vector<SmoteTraceEntry> trace_from_jsonl(std::string_view text) {
  std::vector<SmoteTraceEntry> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    const std::string_view line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out.push_back({j.at("parent").get<std::size_t>(), j.at("neighbor").get<std::size_t>(), j.at("t").get<double>()});
    } catch (const nlohmann::json::exception& e) {
      fail(Errc::malformed_file, std::string("SMOTE trace: ") + e.what());
    }
  }
  return out;
}

}  // namespace cianids
