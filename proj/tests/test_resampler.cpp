#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "cianids/resampler.hpp"
#include "support/synthetic.hpp"

namespace cianids {
namespace {

using testing::make_dataset;

/// Independent check: row equals parent + t * (neighbor - parent), with
/// t in [0, 1] and neighbor among the parent's k nearest minority rows.
void expect_convex(const FlowDataset& input, const SmoteResult& out, std::size_t k, double tol = 1e-12) {
  const std::size_t n = input.rows();
  ASSERT_EQ(out.dataset.rows(), n + out.trace.size());
  const int minority = input.class_counts()[1] < input.class_counts()[0] ? 1 : 0;
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < n; ++i) {
    if (input.classes()[i] == minority) pool.push_back(i);
  }
  for (std::size_t s = 0; s < out.trace.size(); ++s) {
    const auto& e = out.trace[s];
    ASSERT_EQ(input.classes()[e.parent], minority);
    ASSERT_EQ(input.classes()[e.neighbor], minority);
    ASSERT_NE(e.parent, e.neighbor);
    ASSERT_GE(e.t, 0.0);
    ASSERT_LE(e.t, 1.0);
    ASSERT_EQ(out.dataset.classes()[n + s], minority);

    // Brute-force k-th nearest distance from the parent.
    std::vector<double> d2;
    for (auto q : pool) {
      if (q == e.parent) continue;
      double acc = 0.0;
      for (std::size_t j = 0; j < input.cols(); ++j) {
        const double diff = input.at(q, j) - input.at(e.parent, j);
        acc += diff * diff;
      }
      d2.push_back(acc);
    }
    std::sort(d2.begin(), d2.end());
    double to_neighbor = 0.0;
    for (std::size_t j = 0; j < input.cols(); ++j) {
      const double diff = input.at(e.neighbor, j) - input.at(e.parent, j);
      to_neighbor += diff * diff;
    }
    ASSERT_LE(to_neighbor, d2[std::min(k, d2.size()) - 1]);

    for (std::size_t j = 0; j < input.cols(); ++j) {
      const double a = input.at(e.parent, j), b = input.at(e.neighbor, j);
      ASSERT_NEAR(out.dataset.at(n + s, j), a + e.t * (b - a), tol * (1.0 + std::abs(a) + std::abs(b)));
    }
  }
}

TEST(NearestNeighbors, ExactWithLowerIndexTies) {
  const auto ds = make_dataset({{0, 0}, {1, 0}, {0, 1}, {-1, 0}, {5, 5}}, {1, 1, 1, 1, 1});
  const std::vector<std::size_t> pool{0, 1, 2, 3, 4};
  EXPECT_EQ(nearest_neighbors(ds, 0, pool, 2), (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(nearest_neighbors(ds, 0, pool, 10), (std::vector<std::size_t>{1, 2, 3, 4}));
}

TEST(Smote, TwoMinorityPointsGiveAPointOnTheDiagonal) {
  const auto ds = make_dataset({{0, 0}, {1, 1}, {5, 5}, {6, 6}, {7, 7}}, {1, 1, 0, 0, 0});
  const auto out = smote_oversample(ds, {1, 3, 1});
  ASSERT_EQ(out.trace.size(), 1u);
  const double x = out.dataset.at(5, 0), y = out.dataset.at(5, 1);
  EXPECT_EQ(x, y);
  EXPECT_GE(x, 0.0);
  EXPECT_LE(x, 1.0);
}

TEST(Smote, BalancedInputIsReturnedUnchanged) {
  const auto ds = make_dataset({{0}, {1}, {2}, {3}}, {0, 1, 0, 1});
  const auto out = smote_oversample(ds, {1, 3, 1});
  EXPECT_TRUE(out.dataset == ds);
  EXPECT_TRUE(out.trace.empty());
}

TEST(Smote, TriangleReplaysAgainstTrace) {
  // Minority {(0,0),(2,0),(1,3)}, k = 2: each point's two neighbours are the
  // other two points, so every (parent, neighbor) pair is admissible and each
  // synthetic row must sit on the segment the trace names.
  const auto ds = make_dataset({{0, 0}, {2, 0}, {1, 3}, {10, 10}, {11, 10}, {10, 11}, {12, 12}, {13, 13}, {14, 14}},
                               {1, 1, 1, 0, 0, 0, 0, 0, 0});
  const auto out = smote_oversample(ds, {2, 42, 1});
  ASSERT_EQ(out.trace.size(), 3u);
  std::set<std::size_t> parents;
  for (std::size_t s = 0; s < out.trace.size(); ++s) {
    const auto& e = out.trace[s];
    parents.insert(e.parent);
    const double ax = ds.at(e.parent, 0), ay = ds.at(e.parent, 1);
    const double bx = ds.at(e.neighbor, 0), by = ds.at(e.neighbor, 1);
    EXPECT_DOUBLE_EQ(out.dataset.at(9 + s, 0), ax + e.t * (bx - ax));
    EXPECT_DOUBLE_EQ(out.dataset.at(9 + s, 1), ay + e.t * (by - ay));
  }
  EXPECT_EQ(parents.size(), 3u);
  expect_convex(ds, out, 2);
}

TEST(Smote, OriginalRowsAreUnmodifiedAndLabelsComeFromParent) {
  const auto ds = testing::make_flow_dataset({.rows = 400}, 8);
  const auto out = smote_oversample(ds, {5, 1, 1});
  EXPECT_TRUE(out.dataset.subset([&] {
    std::vector<std::size_t> idx(ds.rows());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return idx;
  }()) == ds);
  for (std::size_t s = 0; s < out.trace.size(); ++s) {
    EXPECT_EQ(out.dataset.attack_labels()[ds.rows() + s], ds.attack_labels()[out.trace[s].parent]);
  }
  const auto c = out.dataset.class_counts();
  EXPECT_EQ(c[0], c[1]);
}

TEST(Smote, DeterministicAndIndependentOfJobs) {
  const auto ds = testing::make_blobs(120, 4, 2.0, 3).subset([] {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < 120; ++i) idx.push_back(i);
    for (std::size_t i = 120; i < 150; ++i) idx.push_back(i);
    return idx;
  }());
  const auto a = smote_oversample(ds, {5, 9, 1});
  const auto b = smote_oversample(ds, {5, 9, 4});
  EXPECT_TRUE(a.dataset == b.dataset);
  EXPECT_EQ(a.trace, b.trace);
  const auto c = smote_oversample(ds, {5, 10, 1});
  EXPECT_NE(a.trace, c.trace);
}

TEST(Smote, PropertyConvexityAndBalance) {
  Rng gen(31337);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t d = 1 + gen.index(5);
    const std::size_t n_min = 3 + gen.index(20);
    const std::size_t n_maj = n_min + 1 + gen.index(80);
    std::vector<std::vector<double>> rows;
    std::vector<int> classes;
    const int minority = static_cast<int>(gen.index(2));
    for (std::size_t i = 0; i < n_min + n_maj; ++i) {
      std::vector<double> r(d);
      for (auto& v : r) v = testing::normal(gen) * 3.0;
      rows.push_back(r);
      classes.push_back(i < n_min ? minority : 1 - minority);
    }
    const auto ds = make_dataset(rows, classes);
    const std::size_t k = 1 + gen.index(std::min<std::size_t>(n_min - 1, 6));
    const auto out = smote_oversample(ds, {k, static_cast<std::uint64_t>(trial), 1});
    const auto c = out.dataset.class_counts();
    ASSERT_LE(c[0] > c[1] ? c[0] - c[1] : c[1] - c[0], 1u);
    expect_convex(ds, out, k);
  }
}

TEST(Smote, TooFewMinorityRowsIsAnError) {
  const auto ds = make_dataset({{0}, {1}, {2}, {3}}, {1, 0, 0, 0});
  EXPECT_THROW(smote_oversample(ds, {5, 1, 1}), Error);
  const auto single = make_dataset({{0}, {1}}, {0, 0});
  EXPECT_THROW(smote_oversample(single, {1, 1, 1}), Error);
}

TEST(SmoteTrace, JsonLinesRoundTrip) {
  const std::vector<SmoteTraceEntry> trace{{0, 2, 0.25}, {1, 0, 0.1 + 0.2}, {2, 1, 1.0}};
  EXPECT_EQ(trace_from_jsonl(trace_to_jsonl(trace)), trace);
  EXPECT_THROW(trace_from_jsonl("{\"parent\":1}\n"), Error);
}

}  // namespace
}  // namespace cianids
