#pragma once

// CART trees, Random Forest / Extra Trees ensembles and Bernoulli Naive
// Bayes. Trees keep the class-1 fraction and row count of every node (not
// only leaves) because the explainer attributes predictions along paths.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include <json.hpp>

#include "cianids/error.hpp"
#include "cianids/flow_store.hpp"
#include "cianids/rng.hpp"
#include "cianids/util.hpp"

namespace cianids {

enum class ForestMode { random_forest, extra_trees };

inline std::string_view forest_mode_name(ForestMode m) { return m == ForestMode::random_forest ? "RF" : "ET"; }

struct LearnerConfig {
  std::size_t n_trees = 100;
  std::size_t max_depth = 0;            // 0 = unlimited
  std::size_t min_samples_split = 2;
  std::size_t feature_subset_size = 0;  // 0 = floor(sqrt(n_features))
  double alpha = 1.0;                   // Laplace smoothing for Naive Bayes
  std::uint64_t seed = 0;
  unsigned jobs = 1;                    // worker threads; never affects results

  std::size_t subset_size(std::size_t n_features) const {
    if (feature_subset_size != 0) return std::min(feature_subset_size, n_features);
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n_features)))));
  }

  void validate() const {
    if (n_trees == 0) fail(Errc::invalid_argument, "n_trees must be positive");
    if (min_samples_split < 2) fail(Errc::invalid_argument, "min_samples_split must be at least 2");
    if (!(alpha > 0.0)) fail(Errc::invalid_argument, "alpha must be positive");
  }
};

/// Gini impurity of a binary node whose class-1 fraction is p.
inline double gini(double p) { return 2.0 * p * (1.0 - p); }

// ---------------------------------------------------------------------------
// Decision tree

struct TreeNode {
  std::int32_t feature = -1;  // -1 for leaves
  double threshold = 0.0;     // rows with x[feature] <= threshold go left
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;         // mean class label of training rows reaching the node
  std::uint64_t count = 0;

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

class DecisionTree {
 public:
  DecisionTree() = default;
  DecisionTree(std::vector<TreeNode> nodes, std::size_t n_features) : nodes_(std::move(nodes)), n_features_(n_features) {
    validate();
  }

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const TreeNode& root() const { return nodes_.front(); }
  std::size_t n_features() const { return n_features_; }

  /// Node indices from the root to the reached leaf.
  std::vector<std::size_t> path(std::span<const double> row) const {
    check_row(row);
    std::vector<std::size_t> out{0};
    std::size_t at = 0;
    while (!nodes_[at].is_leaf()) {
      const auto& n = nodes_[at];
      at = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
      out.push_back(at);
    }
    return out;
  }

  double predict(std::span<const double> row) const {
    check_row(row);
    std::size_t at = 0;
    while (!nodes_[at].is_leaf()) {
      const auto& n = nodes_[at];
      at = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return nodes_[at].value;
  }

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

 private:
  void check_row(std::span<const double> row) const {
    if (row.size() != n_features_) {
      fail(Errc::dimension_mismatch, "row has " + std::to_string(row.size()) + " features, model expects " +
                                         std::to_string(n_features_));
    }
  }

  void validate() const {
    if (nodes_.empty()) fail(Errc::malformed_model, "tree has no nodes");
    const auto n = static_cast<std::int32_t>(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const auto& node = nodes_[i];
      if (!(node.value >= 0.0 && node.value <= 1.0)) fail(Errc::malformed_model, "node value outside [0,1]");
      if (node.is_leaf()) continue;
      if (node.feature >= static_cast<std::int32_t>(n_features_)) fail(Errc::malformed_model, "split feature out of range");
      if (node.left <= static_cast<std::int32_t>(i) || node.right <= static_cast<std::int32_t>(i) || node.left >= n ||
          node.right >= n) {
        fail(Errc::malformed_model, "tree child index invalid");
      }
      if (nodes_[static_cast<std::size_t>(node.left)].count + nodes_[static_cast<std::size_t>(node.right)].count !=
          node.count) {
        fail(Errc::malformed_model, "child counts do not add up to parent count");
      }
    }
  }

  std::vector<TreeNode> nodes_;
  std::size_t n_features_ = 0;
};

namespace detail {

/// Row-major feature matrix plus labels, borrowed from a dataset.
struct TrainingView {
  std::span<const double> x;
  std::size_t d = 0;
  std::span<const std::uint8_t> y;

  explicit TrainingView(const FlowDataset& ds) : x(ds.values()), d(ds.cols()), y(ds.classes()) {}
  double at(std::size_t i, std::size_t j) const { return x[i * d + j]; }
};

struct SplitChoice {
  double score = std::numeric_limits<double>::infinity();  // weighted child impurity (scaled)
  std::size_t feature = 0;
  double threshold = 0.0;
  bool found = false;

  bool better_than(const SplitChoice& o) const {
    if (!o.found) return true;
    return std::tie(score, feature, threshold) < std::tie(o.score, o.feature, o.threshold);
  }
};

/// Proportional to the count-weighted Gini of the two children.
inline double child_impurity(double pos_l, double n_l, double pos_r, double n_r) {
  return pos_l * (n_l - pos_l) / n_l + pos_r * (n_r - pos_r) / n_r;
}

class TreeBuilder {
 public:
  TreeBuilder(const TrainingView& data, ForestMode mode, const LearnerConfig& cfg, Rng& rng)
      : data_(data), mode_(mode), cfg_(cfg), rng_(rng), mtry_(cfg.subset_size(data.d)) {}

  DecisionTree build(std::vector<std::size_t> rows) {
    if (rows.empty()) fail(Errc::empty_dataset, "cannot train a tree on zero rows");
    rows_ = std::move(rows);
    features_.resize(data_.d);
    struct Pending {
      std::size_t begin, end, depth, node;
    };
    nodes_.clear();
    nodes_.push_back(make_node(0, rows_.size()));
    std::vector<Pending> stack{{0, rows_.size(), 0, 0}};
    while (!stack.empty()) {
      const Pending p = stack.back();
      stack.pop_back();
      const std::size_t n = p.end - p.begin;
      const double value = nodes_[p.node].value;
      const bool pure = value == 0.0 || value == 1.0;
      const bool depth_cap = cfg_.max_depth != 0 && p.depth >= cfg_.max_depth;
      if (pure || depth_cap || n < cfg_.min_samples_split) continue;

      const SplitChoice split = choose_split(p.begin, p.end);
      if (!split.found) continue;
      const auto mid_it = std::stable_partition(
          rows_.begin() + static_cast<std::ptrdiff_t>(p.begin), rows_.begin() + static_cast<std::ptrdiff_t>(p.end),
          [&](std::size_t r) { return data_.at(r, split.feature) <= split.threshold; });
      const auto mid = static_cast<std::size_t>(mid_it - rows_.begin());
      if (mid == p.begin || mid == p.end) continue;

      const auto left = nodes_.size();
      nodes_.push_back(make_node(p.begin, mid));
      const auto right = nodes_.size();
      nodes_.push_back(make_node(mid, p.end));
      auto& node = nodes_[p.node];
      node.feature = static_cast<std::int32_t>(split.feature);
      node.threshold = split.threshold;
      node.left = static_cast<std::int32_t>(left);
      node.right = static_cast<std::int32_t>(right);
      stack.push_back({mid, p.end, p.depth + 1, right});
      stack.push_back({p.begin, mid, p.depth + 1, left});
    }
    return DecisionTree(std::move(nodes_), data_.d);
  }

 private:
  TreeNode make_node(std::size_t begin, std::size_t end) const {
    std::uint64_t pos = 0;
    for (std::size_t i = begin; i < end; ++i) pos += data_.y[rows_[i]];
    TreeNode node;
    node.count = end - begin;
    node.value = static_cast<double>(pos) / static_cast<double>(node.count);
    return node;
  }

  /// Visits features in random order until `mtry_` non-constant ones have
  /// been scored (or all are exhausted), keeping the best split.
  SplitChoice choose_split(std::size_t begin, std::size_t end) {
    for (std::size_t j = 0; j < data_.d; ++j) features_[j] = j;
    SplitChoice best;
    std::size_t scored = 0;
    for (std::size_t k = 0; k < data_.d && scored < mtry_; ++k) {
      std::swap(features_[k], features_[k + rng_.index(data_.d - k)]);
      const std::size_t f = features_[k];
      double lo = data_.at(rows_[begin], f), hi = lo;
      for (std::size_t i = begin + 1; i < end; ++i) {
        const double v = data_.at(rows_[i], f);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (!(lo < hi)) continue;
      ++scored;
      const SplitChoice c = mode_ == ForestMode::random_forest ? best_threshold(f, begin, end)
                                                                : random_threshold(f, lo, hi, begin, end);
      if (c.found && c.better_than(best)) best = c;
    }
    return best;
  }

  SplitChoice best_threshold(std::size_t f, std::size_t begin, std::size_t end) {
    sorted_.clear();
    std::uint64_t total_pos = 0;
    for (std::size_t i = begin; i < end; ++i) {
      sorted_.emplace_back(data_.at(rows_[i], f), data_.y[rows_[i]]);
      total_pos += data_.y[rows_[i]];
    }
    std::sort(sorted_.begin(), sorted_.end());
    const double n = static_cast<double>(sorted_.size());
    SplitChoice best;
    std::uint64_t pos_l = 0;
    for (std::size_t i = 0; i + 1 < sorted_.size(); ++i) {
      pos_l += sorted_[i].second;
      if (!(sorted_[i].first < sorted_[i + 1].first)) continue;
      const double n_l = static_cast<double>(i + 1);
      const double score = child_impurity(static_cast<double>(pos_l), n_l, static_cast<double>(total_pos - pos_l), n - n_l);
      double threshold = sorted_[i].first + (sorted_[i + 1].first - sorted_[i].first) / 2.0;
      if (!(threshold < sorted_[i + 1].first)) threshold = sorted_[i].first;
      const SplitChoice c{score, f, threshold, true};
      if (c.better_than(best)) best = c;
    }
    return best;
  }

  SplitChoice random_threshold(std::size_t f, double lo, double hi, std::size_t begin, std::size_t end) {
    double threshold = lo + rng_.uniform() * (hi - lo);
    if (!(threshold < hi)) threshold = lo;
    std::uint64_t pos_l = 0, n_l = 0, pos_r = 0, n_r = 0;
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t r = rows_[i];
      if (data_.at(r, f) <= threshold) {
        ++n_l;
        pos_l += data_.y[r];
      } else {
        ++n_r;
        pos_r += data_.y[r];
      }
    }
    const double score = child_impurity(static_cast<double>(pos_l), static_cast<double>(n_l),
                                        static_cast<double>(pos_r), static_cast<double>(n_r));
    return {score, f, threshold, true};
  }

  const TrainingView& data_;
  ForestMode mode_;
  const LearnerConfig& cfg_;
  Rng& rng_;
  std::size_t mtry_;
  std::vector<std::size_t> rows_;
  std::vector<std::size_t> features_;
  std::vector<std::pair<double, std::uint8_t>> sorted_;
  std::vector<TreeNode> nodes_;
};

}  // namespace detail

/// Greedy Gini CART over the given rows (duplicates allowed, e.g. a
/// bootstrap sample). RF mode scores every midpoint threshold of each
/// candidate feature; ET mode draws one uniform threshold per candidate.
inline DecisionTree train_tree(const FlowDataset& train, std::span<const std::size_t> rows, ForestMode mode,
                               const LearnerConfig& cfg, Rng& rng) {
  cfg.validate();
  detail::TrainingView view(train);
  detail::TreeBuilder builder(view, mode, cfg, rng);
  return builder.build(std::vector<std::size_t>(rows.begin(), rows.end()));
}

inline DecisionTree train_tree(const FlowDataset& train, ForestMode mode, const LearnerConfig& cfg, Rng& rng) {
  std::vector<std::size_t> rows(train.rows());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return train_tree(train, rows, mode, cfg, rng);
}

// ---------------------------------------------------------------------------
// Forest

class ForestModel {
 public:
  ForestModel() = default;
  ForestModel(std::vector<DecisionTree> trees, ForestMode mode, std::size_t feature_subset_size, std::uint64_t seed,
              std::size_t n_features)
      : trees_(std::move(trees)), mode_(mode), subset_(feature_subset_size), seed_(seed), n_features_(n_features) {
    if (trees_.empty()) fail(Errc::malformed_model, "forest has no trees");
    if (subset_ == 0 || subset_ > n_features_) fail(Errc::malformed_model, "feature subset size out of range");
    for (const auto& t : trees_) {
      if (t.n_features() != n_features_) fail(Errc::malformed_model, "tree width differs from forest width");
    }
  }

  const std::vector<DecisionTree>& trees() const { return trees_; }
  ForestMode mode() const { return mode_; }
  bool bootstrap() const { return mode_ == ForestMode::random_forest; }
  std::size_t feature_subset_size() const { return subset_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t n_features() const { return n_features_; }

  /// Mean over trees of the reached leaf's class-1 fraction.
  double predict_score(std::span<const double> row) const {
    double sum = 0.0;
    for (const auto& t : trees_) sum += t.predict(row);
    return sum / static_cast<double>(trees_.size());
  }

  friend bool operator==(const ForestModel&, const ForestModel&) = default;

 private:
  std::vector<DecisionTree> trees_;
  ForestMode mode_ = ForestMode::random_forest;
  std::size_t subset_ = 1;
  std::uint64_t seed_ = 0;
  std::size_t n_features_ = 0;
};

/// Each tree t draws from its own stream derive_seed(seed, t), so the forest
/// is the same for any number of worker threads.
inline ForestModel train_forest(const FlowDataset& train, ForestMode mode, const LearnerConfig& cfg) {
  cfg.validate();
  if (train.empty()) fail(Errc::empty_dataset, "cannot train a forest on zero rows");
  const std::size_t n = train.rows();
  std::vector<DecisionTree> trees(cfg.n_trees);
  detail::TrainingView view(train);
  parallel_for(cfg.n_trees, cfg.jobs, [&](std::size_t t) {
    Rng rng(derive_seed(cfg.seed, t));
    std::vector<std::size_t> rows(n);
    if (mode == ForestMode::random_forest) {
      for (auto& r : rows) r = rng.index(n);
    } else {
      for (std::size_t i = 0; i < n; ++i) rows[i] = i;
    }
    detail::TreeBuilder builder(view, mode, cfg, rng);
    trees[t] = builder.build(std::move(rows));
  });
  return ForestModel(std::move(trees), mode, cfg.subset_size(train.cols()), cfg.seed, train.cols());
}

/// Mean decrease in Gini impurity, count-weighted, normalized per tree and
/// then over the forest. All zeros if no tree ever split.
inline std::vector<double> feature_importance(const ForestModel& model) {
  std::vector<double> total(model.n_features(), 0.0);
  std::vector<double> per_tree(model.n_features());
  for (const auto& tree : model.trees()) {
    std::fill(per_tree.begin(), per_tree.end(), 0.0);
    const auto& nodes = tree.nodes();
    for (const auto& node : nodes) {
      if (node.is_leaf()) continue;
      const auto& l = nodes[static_cast<std::size_t>(node.left)];
      const auto& r = nodes[static_cast<std::size_t>(node.right)];
      const double decrease = static_cast<double>(node.count) * gini(node.value) -
                              static_cast<double>(l.count) * gini(l.value) -
                              static_cast<double>(r.count) * gini(r.value);
      per_tree[static_cast<std::size_t>(node.feature)] += std::max(0.0, decrease);
    }
    double sum = 0.0;
    for (double v : per_tree) sum += v;
    if (sum > 0.0) {
      for (std::size_t j = 0; j < per_tree.size(); ++j) total[j] += per_tree[j] / sum;
    }
  }
  double sum = 0.0;
  for (double v : total) sum += v;
  if (sum > 0.0) {
    for (double& v : total) v /= sum;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Bernoulli Naive Bayes

class BernoulliNbModel {
 public:
  BernoulliNbModel() = default;

  /// bit_counts[j][c]: rows of class c whose feature j binarizes to 1.
  BernoulliNbModel(std::vector<double> thresholds, std::array<std::uint64_t, 2> class_counts,
                   std::vector<std::array<std::uint64_t, 2>> bit_counts, double alpha)
      : thresholds_(std::move(thresholds)),
        class_counts_(class_counts),
        bit_counts_(std::move(bit_counts)),
        alpha_(alpha) {
    if (bit_counts_.size() != thresholds_.size()) fail(Errc::malformed_model, "NB parameter sizes differ");
    if (class_counts_[0] == 0 || class_counts_[1] == 0) fail(Errc::malformed_model, "NB needs both classes");
    if (!(alpha_ > 0.0)) fail(Errc::malformed_model, "NB alpha must be positive");
    const double n = static_cast<double>(class_counts_[0] + class_counts_[1]);
    for (int c = 0; c < 2; ++c) log_prior_[c] = std::log(static_cast<double>(class_counts_[c]) / n);
    log_p1_.resize(thresholds_.size());
    log_p0_.resize(thresholds_.size());
    for (std::size_t j = 0; j < thresholds_.size(); ++j) {
      for (int c = 0; c < 2; ++c) {
        if (bit_counts_[j][c] > class_counts_[c]) fail(Errc::malformed_model, "NB bit count exceeds class count");
        const double p = (static_cast<double>(bit_counts_[j][c]) + alpha_) /
                         (static_cast<double>(class_counts_[c]) + 2.0 * alpha_);
        log_p1_[j][c] = std::log(p);
        log_p0_[j][c] = std::log1p(-p);
      }
    }
  }

  std::size_t n_features() const { return thresholds_.size(); }
  const std::vector<double>& thresholds() const { return thresholds_; }
  const std::array<std::uint64_t, 2>& class_counts() const { return class_counts_; }
  const std::vector<std::array<std::uint64_t, 2>>& bit_counts() const { return bit_counts_; }
  double alpha() const { return alpha_; }
  const std::array<double, 2>& log_prior() const { return log_prior_; }
  /// log P(bit_j = 1 | class c).
  double log_prob_bit(std::size_t j, int c) const { return log_p1_[j][c]; }

  /// Posterior probability of class 1.
  double predict_score(std::span<const double> row) const {
    if (row.size() != n_features()) {
      fail(Errc::dimension_mismatch, "row has " + std::to_string(row.size()) + " features, model expects " +
                                         std::to_string(n_features()));
    }
    std::array<double, 2> joint = log_prior_;
    for (std::size_t j = 0; j < row.size(); ++j) {
      const bool bit = row[j] > thresholds_[j];
      for (int c = 0; c < 2; ++c) joint[c] += bit ? log_p1_[j][c] : log_p0_[j][c];
    }
    // Logistic of the log-odds; stable at both extremes.
    const double log_odds = joint[1] - joint[0];
    if (log_odds >= 0.0) return 1.0 / (1.0 + std::exp(-log_odds));
    const double e = std::exp(log_odds);
    return e / (1.0 + e);
  }

  friend bool operator==(const BernoulliNbModel& a, const BernoulliNbModel& b) {
    return a.thresholds_ == b.thresholds_ && a.class_counts_ == b.class_counts_ && a.bit_counts_ == b.bit_counts_ &&
           a.alpha_ == b.alpha_;
  }

 private:
  std::vector<double> thresholds_;
  std::array<std::uint64_t, 2> class_counts_{0, 0};
  std::vector<std::array<std::uint64_t, 2>> bit_counts_;
  double alpha_ = 1.0;
  std::array<double, 2> log_prior_{0.0, 0.0};
  std::vector<std::array<double, 2>> log_p1_;
  std::vector<std::array<double, 2>> log_p0_;
};

inline double median(std::vector<double> v) {
  if (v.empty()) fail(Errc::empty_dataset, "median of empty column");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return lower + (upper - lower) / 2.0;
}

/// Binarizes each feature at its training median (bit = value > median) and
/// fits Laplace-smoothed per-class bit probabilities.
inline BernoulliNbModel train_bernoulli_nb(const FlowDataset& train, const LearnerConfig& cfg) {
  cfg.validate();
  const auto counts = train.class_counts();
  if (counts[0] == 0 || counts[1] == 0) fail(Errc::single_class, "Naive Bayes needs both classes present");
  const std::size_t d = train.cols();
  std::vector<double> thresholds(d);
  std::vector<double> column(train.rows());
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < train.rows(); ++i) column[i] = train.at(i, j);
    thresholds[j] = median(column);
  }
  std::vector<std::array<std::uint64_t, 2>> bits(d, {0, 0});
  for (std::size_t i = 0; i < train.rows(); ++i) {
    const int c = train.classes()[i];
    for (std::size_t j = 0; j < d; ++j) {
      if (train.at(i, j) > thresholds[j]) ++bits[j][c];
    }
  }
  return BernoulliNbModel(std::move(thresholds), {counts[0], counts[1]}, std::move(bits), cfg.alpha);
}

// ---------------------------------------------------------------------------
// Uniform interface

using Model = std::variant<ForestModel, BernoulliNbModel>;

inline double predict_score(const ForestModel& m, std::span<const double> row) { return m.predict_score(row); }
inline double predict_score(const BernoulliNbModel& m, std::span<const double> row) { return m.predict_score(row); }
inline double predict_score(const Model& m, std::span<const double> row) {
  return std::visit([&](const auto& x) { return x.predict_score(row); }, m);
}

/// 1 iff score >= threshold.
template <class M>
int predict_class(const M& model, std::span<const double> row, double threshold = 0.5) {
  return predict_score(model, row) >= threshold ? 1 : 0;
}

inline std::size_t model_width(const Model& m) {
  return std::visit([](const auto& x) { return x.n_features(); }, m);
}

template <class M>
std::vector<double> predict_scores(const M& model, const FlowDataset& ds, unsigned jobs = 1) {
  std::vector<double> out(ds.rows());
  parallel_for(ds.rows(), jobs, [&](std::size_t i) { out[i] = predict_score(model, ds.row(i)); });
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

inline constexpr std::string_view kModelFormat = "cianids-model";
inline constexpr int kModelVersion = 1;

inline nlohmann::ordered_json tree_to_json(const DecisionTree& tree) {
  nlohmann::ordered_json feature = nlohmann::ordered_json::array(), threshold = nlohmann::ordered_json::array(),
                         left = nlohmann::ordered_json::array(), right = nlohmann::ordered_json::array(),
                         value = nlohmann::ordered_json::array(), count = nlohmann::ordered_json::array();
  for (const auto& n : tree.nodes()) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    value.push_back(n.value);
    count.push_back(n.count);
  }
  return {{"feature", feature}, {"threshold", threshold}, {"left", left},
          {"right", right},     {"value", value},         {"count", count}};
}

inline DecisionTree tree_from_json(const nlohmann::json& j, std::size_t n_features) {
  const auto& f = j.at("feature");
  const std::size_t n = f.size();
  for (const char* key : {"threshold", "left", "right", "value", "count"}) {
    if (j.at(key).size() != n) fail(Errc::malformed_model, "tree arrays have different lengths");
  }
  std::vector<TreeNode> nodes(n);
  for (std::size_t i = 0; i < n; ++i) {
    nodes[i].feature = f[i].get<std::int32_t>();
    nodes[i].threshold = j["threshold"][i].get<double>();
    nodes[i].left = j["left"][i].get<std::int32_t>();
    nodes[i].right = j["right"][i].get<std::int32_t>();
    nodes[i].value = j["value"][i].get<double>();
    nodes[i].count = j["count"][i].get<std::uint64_t>();
  }
  return DecisionTree(std::move(nodes), n_features);
}

inline nlohmann::ordered_json model_to_json(const ForestModel& m) {
  nlohmann::ordered_json trees = nlohmann::ordered_json::array();
  for (const auto& t : m.trees()) trees.push_back(tree_to_json(t));
  return {{"kind", "forest"},
          {"mode", forest_mode_name(m.mode())},
          {"n_features", m.n_features()},
          {"feature_subset_size", m.feature_subset_size()},
          {"bootstrap", m.bootstrap()},
          {"seed", m.seed()},
          {"trees", trees}};
}

inline nlohmann::ordered_json model_to_json(const BernoulliNbModel& m) {
  nlohmann::ordered_json bits = nlohmann::ordered_json::array();
  nlohmann::ordered_json log_p1 = nlohmann::ordered_json::array();
  for (std::size_t j = 0; j < m.n_features(); ++j) {
    bits.push_back({m.bit_counts()[j][0], m.bit_counts()[j][1]});
    log_p1.push_back({m.log_prob_bit(j, 0), m.log_prob_bit(j, 1)});
  }
  return {{"kind", "bernoulli_nb"},
          {"n_features", m.n_features()},
          {"alpha", m.alpha()},
          {"thresholds", m.thresholds()},
          {"class_counts", {m.class_counts()[0], m.class_counts()[1]}},
          {"bit_counts", bits},
          {"log_prior", {m.log_prior()[0], m.log_prior()[1]}},
          {"log_prob_bit1", log_p1}};
}

inline nlohmann::ordered_json model_to_json(const Model& m) {
  return std::visit([](const auto& x) { return model_to_json(x); }, m);
}

inline Model model_from_json(const nlohmann::json& j) {
  try {
    const auto kind = j.at("kind").get<std::string>();
    const auto width = j.at("n_features").get<std::size_t>();
    if (kind == "forest") {
      const auto mode_name = j.at("mode").get<std::string>();
      if (mode_name != "RF" && mode_name != "ET") fail(Errc::malformed_model, "unknown forest mode " + mode_name);
      const ForestMode mode = mode_name == "RF" ? ForestMode::random_forest : ForestMode::extra_trees;
      std::vector<DecisionTree> trees;
      for (const auto& t : j.at("trees")) trees.push_back(tree_from_json(t, width));
      return ForestModel(std::move(trees), mode, j.at("feature_subset_size").get<std::size_t>(),
                         j.at("seed").get<std::uint64_t>(), width);
    }
    if (kind == "bernoulli_nb") {
      std::vector<std::array<std::uint64_t, 2>> bits;
      for (const auto& b : j.at("bit_counts")) bits.push_back({b.at(0).get<std::uint64_t>(), b.at(1).get<std::uint64_t>()});
      const auto& cc = j.at("class_counts");
      return BernoulliNbModel(j.at("thresholds").get<std::vector<double>>(),
                              {cc.at(0).get<std::uint64_t>(), cc.at(1).get<std::uint64_t>()}, std::move(bits),
                              j.at("alpha").get<double>());
    }
    fail(Errc::malformed_model, "unknown model kind " + kind);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::malformed_model, std::string("model file: ") + e.what());
  }
}

}  // namespace cianids
