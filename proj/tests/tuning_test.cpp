#include <gtest/gtest.h>

#include <algorithm>

#include "spikelda/rng.hpp"
#include "spikelda/simbench.hpp"
#include "spikelda/tuning.hpp"

using namespace spikelda;

namespace {

std::vector<std::string> make_labels(std::initializer_list<std::pair<const char*, int>> spec) {
  std::vector<std::string> labels;
  for (const auto& [name, count] : spec)
    for (int i = 0; i < count; ++i) labels.emplace_back(name);
  return labels;
}

}  // namespace

TEST(KFold, BalancedTenTen) {
  auto labels = make_labels({{"a", 10}, {"b", 10}});
  CVPlan plan = kfold_stratified(labels, 5, 123);
  for (int f = 0; f < 5; ++f) {
    int ca = 0, cb = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (plan.fold_of[i] != f) continue;
      (labels[i] == "a" ? ca : cb)++;
    }
    EXPECT_EQ(ca, 2);
    EXPECT_EQ(cb, 2);
  }
}

TEST(KFold, DeterministicForFixedSeed) {
  auto labels = make_labels({{"a", 9}, {"b", 14}});
  CVPlan p1 = kfold_stratified(labels, 4, 7);
  CVPlan p2 = kfold_stratified(labels, 4, 7);
  EXPECT_EQ(p1.fold_of, p2.fold_of);
  CVPlan p3 = kfold_stratified(labels, 4, 8);
  EXPECT_NE(p1.fold_of, p3.fold_of);
}

TEST(KFold, PigeonholeWithinOne) {
  auto labels = make_labels({{"a", 7}, {"b", 13}});
  CVPlan plan = kfold_stratified(labels, 5, 99);
  for (const char* cls : {"a", "b"}) {
    std::vector<int> counts(5, 0);
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == cls) counts[static_cast<std::size_t>(plan.fold_of[i])]++;
    const auto [mn, mx] = std::minmax_element(counts.begin(), counts.end());
    EXPECT_LE(*mx - *mn, 1) << cls;
  }
  for (int f : plan.fold_of) EXPECT_GE(f, 0);
}

TEST(KFold, ClassSmallerThanFoldCount) {
  auto labels = make_labels({{"a", 3}, {"b", 10}});
  EXPECT_THROW(kfold_stratified(labels, 5, 1), InsufficientDataError);
  EXPECT_THROW(kfold_stratified(labels, 1, 1), RangeError);
}

TEST(CvSelectS, SingletonCandidate) {
  SimModel model = gen_model1(30, 0.4);
  Rng rng(11);
  LabeledDataset train = sample_dataset(model, 25, 25, rng);
  auto res = cv_select_s(train, 1, {4}, 5, 42);
  EXPECT_EQ(res.s_star, 4);
  ASSERT_EQ(res.cv_errors.size(), 1u);
  EXPECT_GE(res.cv_errors[0].second, 0.0);
  EXPECT_LE(res.cv_errors[0].second, 1.0);
}

TEST(CvSelectS, SeparableDataPicksOne) {
  // one informative coordinate with zero validation error already at s = 1
  Rng rng(12);
  const int p = 8, n = 40;
  Matrix x(2 * n, p);
  std::vector<std::string> labels;
  for (int i = 0; i < 2 * n; ++i) {
    for (int j = 0; j < p; ++j) x(i, j) = 0.05 * rng.normal();
    x(i, 0) += (i < n) ? 0.0 : 10.0;
    labels.push_back(i < n ? "a" : "b");
  }
  LabeledDataset train = LabeledDataset::create(x, labels);
  auto res = cv_select_s(train, 1, {1, 2, 3, 4, 5}, 5, 77);
  EXPECT_EQ(res.s_star, 1);
}

TEST(CvSelectS, ParsimonyTieRule) {
  // duplicated informative feature: s = 1 and s = 2 classify identically, so
  // their CV errors tie exactly and the smaller s wins
  Rng rng(13);
  const int p = 6, n = 30;
  Matrix x(2 * n, p);
  std::vector<std::string> labels;
  for (int i = 0; i < 2 * n; ++i) {
    const double signal = (i < n) ? 0.0 : 4.0;
    const double noise = rng.normal();
    x(i, 0) = signal + noise;
    x(i, 1) = x(i, 0);  // exact duplicate
    for (int j = 2; j < p; ++j) x(i, j) = rng.normal();
    labels.push_back(i < n ? "a" : "b");
  }
  LabeledDataset train = LabeledDataset::create(x, labels);
  auto res = cv_select_s(train, 1, {1, 2}, 5, 5);
  ASSERT_EQ(res.cv_errors.size(), 2u);
  EXPECT_EQ(res.cv_errors[0].second, res.cv_errors[1].second);
  EXPECT_EQ(res.s_star, 1);
}

TEST(CvSelectS, ErrorsAreFoldMeansInRange) {
  SimModel model = gen_model2(40, 0.5);
  Rng rng(14);
  LabeledDataset train = sample_dataset(model, 30, 30, rng);
  auto res = cv_select_s(train, 2, {1, 5, 10, 20}, 5, 2024);
  double best = 2.0;
  for (const auto& [s, e] : res.cv_errors) {
    EXPECT_GE(e, 0.0);
    EXPECT_LE(e, 1.0);
    best = std::min(best, e);
  }
  const auto it = std::find_if(res.cv_errors.begin(), res.cv_errors.end(),
                               [&](const auto& pr) { return pr.first == res.s_star; });
  ASSERT_NE(it, res.cv_errors.end());
  EXPECT_EQ(it->second, best);
}

TEST(CvSelectS, FullyDeterministic) {
  SimModel model = gen_model1(50, 0.6);
  Rng rng(15);
  LabeledDataset train = sample_dataset(model, 40, 40, rng);
  std::vector<int> cands;
  for (int s = 1; s <= 15; ++s) cands.push_back(s);
  auto r1 = cv_select_s(train, 3, cands, 5, 31337);
  auto r2 = cv_select_s(train, 3, cands, 5, 31337);
  EXPECT_EQ(r1.s_star, r2.s_star);
  ASSERT_EQ(r1.cv_errors.size(), r2.cv_errors.size());
  for (std::size_t i = 0; i < r1.cv_errors.size(); ++i)
    EXPECT_EQ(r1.cv_errors[i].second, r2.cv_errors[i].second);
}

TEST(CvSelectS, BadCandidates) {
  SimModel model = gen_model1(20, 0.4);
  Rng rng(16);
  LabeledDataset train = sample_dataset(model, 20, 20, rng);
  EXPECT_THROW(cv_select_s(train, 1, {}, 5, 1), RangeError);
  EXPECT_THROW(cv_select_s(train, 1, {25}, 5, 1), RangeError);
}

TEST(CvSelectNscDelta, SelectsInsideGrid) {
  SimModel model = gen_model1(30, 0.2);
  Rng rng(17);
  LabeledDataset train = sample_dataset(model, 40, 40, rng);
  const double dmax = nsc_max_dstat(train);
  std::vector<double> grid;
  for (int i = 0; i < 10; ++i) grid.push_back(dmax * i / 9.0);
  auto res = cv_select_nsc_delta(train, grid, 5, 9);
  EXPECT_GE(res.delta_star, 0.0);
  EXPECT_LE(res.delta_star, dmax);
  auto res2 = cv_select_nsc_delta(train, grid, 5, 9);
  EXPECT_EQ(res.delta_star, res2.delta_star);
}
