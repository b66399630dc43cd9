#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "cianids/error.hpp"

namespace cianids {

/// Binary classification metrics; the positive class is malicious (1).
struct MetricsReport {
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
  double accuracy = 0.0;
  double precision = 0.0;  // 0 when nothing was predicted positive
  double recall = 0.0;     // 0 when there are no positives
  double f_score = 0.0;    // 2tp / (2tp + fp + fn), the harmonic mean of precision and recall
  std::optional<double> auc;  // empty when truth has a single class

  std::uint64_t total() const { return tp + fp + tn + fn; }

  /// Derived metrics from confusion counts; auc is left empty.
  static MetricsReport from_counts(std::uint64_t tp, std::uint64_t fp, std::uint64_t tn, std::uint64_t fn) {
    MetricsReport m;
    m.tp = tp;
    m.fp = fp;
    m.tn = tn;
    m.fn = fn;
    const auto ratio = [](std::uint64_t num, std::uint64_t den) {
      return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
    };
    m.accuracy = ratio(tp + tn, tp + fp + tn + fn);
    m.precision = ratio(tp, tp + fp);
    m.recall = ratio(tp, tp + fn);
    m.f_score = ratio(2 * tp, 2 * tp + fp + fn);
    return m;
  }
};

/// Area under the ROC curve as the probability that a random positive scores
/// above a random negative, ties counting one half. Computed from sorted
/// scores with integer pair counts, so it equals exhaustive pair counting
/// exactly.
inline double roc_auc(std::span<const std::uint8_t> truth, std::span<const double> scores) {
  if (truth.size() != scores.size()) fail(Errc::dimension_mismatch, "truth and scores differ in length");
  std::vector<std::size_t> order(truth.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  std::uint64_t negatives_below = 0;
  std::uint64_t twice_wins = 0;  // 2 * (pairs ranked correctly) + tied pairs
  std::uint64_t pos_total = 0, neg_total = 0;
  for (std::size_t k = 0; k < order.size();) {
    std::size_t end = k;
    std::uint64_t pos = 0, neg = 0;
    while (end < order.size() && scores[order[end]] == scores[order[k]]) {
      if (truth[order[end]] != 0) ++pos;
      else ++neg;
      ++end;
    }
    twice_wins += 2 * pos * negatives_below + pos * neg;
    negatives_below += neg;
    pos_total += pos;
    neg_total += neg;
    k = end;
  }
  if (pos_total == 0 || neg_total == 0) fail(Errc::auc_undefined, "AUC is undefined when truth has a single class");
  return static_cast<double>(twice_wins) / (2.0 * static_cast<double>(pos_total) * static_cast<double>(neg_total));
}

inline MetricsReport compute_metrics(std::span<const std::uint8_t> truth, std::span<const std::uint8_t> predictions,
                                     std::span<const double> scores) {
  if (truth.size() != predictions.size() || truth.size() != scores.size()) {
    fail(Errc::dimension_mismatch, "truth, predictions and scores must have equal length");
  }
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool t = truth[i] != 0, p = predictions[i] != 0;
    if (t && p) ++tp;
    else if (!t && p) ++fp;
    else if (!t) ++tn;
    else ++fn;
  }
  MetricsReport m = MetricsReport::from_counts(tp, fp, tn, fn);
  if (tp + fn > 0 && tn + fp > 0) m.auc = roc_auc(truth, scores);
  return m;
}

}  // namespace cianids
