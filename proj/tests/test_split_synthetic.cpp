#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "embnoise/error.hpp"
#include "embnoise/split.hpp"
#include "embnoise/synthetic.hpp"

using namespace embnoise;

namespace {

EmbeddingDataset balanced(std::size_t n, std::size_t k) {
  EmbeddingDataset ds;
  ds.name = "bal";
  ds.n_samples = n;
  ds.dim = 1;
  ds.n_classes = k;
  for (std::size_t i = 0; i < n; ++i) {
    ds.vectors.push_back(static_cast<float>(i));
    ds.labels.push_back(static_cast<Label>(i % k));
  }
  return ds;
}

std::size_t count_class(const EmbeddingDataset& ds, const std::vector<std::size_t>& idx, Label c) {
  return static_cast<std::size_t>(
      std::count_if(idx.begin(), idx.end(), [&](std::size_t i) { return ds.labels[i] == c; }));
}

double squared_distance(std::span<const float> a, std::span<const float> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (double(a[i]) - b[i]) * (double(a[i]) - b[i]);
  return s;
}

}  // namespace

TEST(Split, BalancedExample) {
  const auto ds = balanced(100, 2);
  const auto sp = make_split(ds, {0.8, 0.1, 0.1}, 7);
  EXPECT_EQ(sp.train_idx.size(), 80u);
  EXPECT_EQ(sp.val_idx.size(), 10u);
  EXPECT_EQ(sp.test_idx.size(), 10u);
  for (Label c = 0; c < 2; ++c) {
    EXPECT_EQ(count_class(ds, sp.train_idx, c), 40u);
    EXPECT_EQ(count_class(ds, sp.val_idx, c), 5u);
    EXPECT_EQ(count_class(ds, sp.test_idx, c), 5u);
  }
  EXPECT_NO_THROW(validate_split(sp, ds.n_samples));
}

TEST(Split, DeterministicAndSeedSensitive) {
  const auto ds = balanced(300, 3);
  EXPECT_EQ(make_split(ds, {}, 11), make_split(ds, {}, 11));
  EXPECT_NE(make_split(ds, {}, 11).train_idx, make_split(ds, {}, 12).train_idx);
}

TEST(Split, DisjointCoveringAndStratified) {
  EmbeddingDataset ds = balanced(1, 1);
  ds.labels.clear();
  ds.vectors.clear();
  // Uneven class sizes: 7, 13, 50, 101.
  const std::vector<std::size_t> sizes = {7, 13, 50, 101};
  for (std::size_t c = 0; c < sizes.size(); ++c)
    for (std::size_t i = 0; i < sizes[c]; ++i) {
      ds.labels.push_back(static_cast<Label>(c));
      ds.vectors.push_back(0.0f);
    }
  ds.n_samples = ds.labels.size();
  ds.n_classes = sizes.size();
  const SplitFractions fr{0.64, 0.16, 0.20};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto sp = make_split(ds, fr, seed);
    std::vector<std::size_t> all;
    for (const auto* part : {&sp.train_idx, &sp.val_idx, &sp.test_idx}) {
      EXPECT_TRUE(std::is_sorted(part->begin(), part->end()));
      all.insert(all.end(), part->begin(), part->end());
    }
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> expected(ds.n_samples);
    std::iota(expected.begin(), expected.end(), 0);
    EXPECT_EQ(all, expected);
    const auto f = fr.as_array();
    const std::array<const std::vector<std::size_t>*, 3> parts = {&sp.train_idx, &sp.val_idx, &sp.test_idx};
    for (std::size_t c = 0; c < sizes.size(); ++c)
      for (std::size_t s = 0; s < 3; ++s) {
        const double exact = f[s] * static_cast<double>(sizes[c]);
        EXPECT_LT(std::abs(double(count_class(ds, *parts[s], static_cast<Label>(c))) - exact), 1.0);
      }
  }
}

TEST(Split, ImpossibleStratification) {
  const auto ds = balanced(3, 3);
  EXPECT_THROW(make_split(ds, {0.5, 0.25, 0.25}, 0), StratificationError);
}

TEST(Split, ZeroFractionSplitMayBeEmpty) {
  const auto ds = balanced(6, 3);
  const auto sp = make_split(ds, {0.5, 0.0, 0.5}, 0);
  EXPECT_TRUE(sp.val_idx.empty());
  EXPECT_EQ(sp.train_idx.size(), 3u);
}

TEST(Split, RejectsBadFractions) {
  const auto ds = balanced(100, 2);
  EXPECT_THROW(make_split(ds, {0.8, 0.1, 0.2}, 0), ValidationError);
  EXPECT_THROW(make_split(ds, {1.1, -0.1, 0.0}, 0), ValidationError);
}

TEST(Apportion, LargestRemainder) {
  const std::array<double, 3> f = {0.64, 0.16, 0.20};
  EXPECT_EQ(apportion(1000, f), (std::vector<std::size_t>{640, 160, 200}));
  EXPECT_EQ(apportion(7, f), (std::vector<std::size_t>{5, 1, 1}));  // 4.48, 1.12, 1.40
  const std::array<double, 2> half = {0.5, 0.5};
  EXPECT_EQ(apportion(3, half), (std::vector<std::size_t>{2, 1}));
}

TEST(Subsample, KeepsRoundedShareOfEachClass) {
  const auto ds = balanced(400, 4);
  std::vector<std::size_t> idx(400);
  std::iota(idx.begin(), idx.end(), 0);
  const auto sub = stratified_subsample(ds, idx, 0.1, 3);
  EXPECT_EQ(sub.size(), 40u);
  for (Label c = 0; c < 4; ++c) EXPECT_EQ(count_class(ds, sub, c), 10u);
  EXPECT_EQ(sub, stratified_subsample(ds, idx, 0.1, 3));
  const auto tiny = stratified_subsample(ds, idx, 0.001, 3);
  EXPECT_EQ(tiny.size(), 4u);
}

TEST(ValidateSplit, DetectsOverlapAndRange) {
  SplitSpec sp;
  sp.train_idx = {0, 1};
  sp.val_idx = {1};
  EXPECT_THROW(validate_split(sp, 5), ValidationError);
  sp.val_idx = {9};
  EXPECT_THROW(validate_split(sp, 5), ValidationError);
}

TEST(Synthetic, ZeroSpreadSamplesEqualTheirMeanAndOneNnIsExact) {
  SyntheticSpec spec;
  spec.cluster_spread = 0.0;
  spec.samples_per_class = 25;
  const auto ds = gen_synthetic(spec);
  ASSERT_EQ(ds.n_samples, 100u);
  for (std::size_t i = 0; i < ds.n_samples; ++i) {
    const std::size_t first = ds.labels[i] * spec.samples_per_class;
    EXPECT_EQ(squared_distance(ds.row(i), ds.row(first)), 0.0);
  }
  // Leave-one-out 1-NN over distinct points: each query's nearest other class
  // representative is farther than its own mean.
  std::size_t correct = 0;
  for (std::size_t q = 0; q < ds.n_samples; ++q) {
    double best = INFINITY;
    Label pred = 0;
    for (std::size_t j = 0; j < ds.n_samples; ++j) {
      if (j == q) continue;
      const double d = squared_distance(ds.row(q), ds.row(j));
      if (d < best) {
        best = d;
        pred = ds.labels[j];
      }
    }
    correct += pred == ds.labels[q];
  }
  EXPECT_EQ(correct, ds.n_samples);
}

TEST(Synthetic, MeansAreEquidistant) {
  for (std::size_t k : {2u, 4u, 9u}) {
    SyntheticSpec spec;
    spec.n_classes = k;
    spec.dim = 16;
    spec.cluster_spread = 0.0;
    spec.samples_per_class = 1;
    spec.center_separation = 3.5;
    spec.seed = k;
    const auto ds = gen_synthetic(spec);
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = a + 1; b < k; ++b)
        EXPECT_NEAR(std::sqrt(squared_distance(ds.row(a), ds.row(b))), 3.5, 1e-5);
  }
}

TEST(Synthetic, SpreadMatchesWithinClassDeviation) {
  SyntheticSpec spec;
  spec.cluster_spread = 2.0;
  spec.samples_per_class = 500;
  const auto ds = gen_synthetic(spec);
  // Mean squared distance to the class centroid estimates d * spread^2.
  double total = 0;
  for (std::size_t c = 0; c < 4; ++c) {
    std::vector<double> centroid(spec.dim, 0.0);
    for (std::size_t i = c * 500; i < (c + 1) * 500; ++i)
      for (std::size_t j = 0; j < spec.dim; ++j) centroid[j] += ds.row(i)[j] / 500.0;
    for (std::size_t i = c * 500; i < (c + 1) * 500; ++i)
      for (std::size_t j = 0; j < spec.dim; ++j) total += std::pow(ds.row(i)[j] - centroid[j], 2);
  }
  EXPECT_NEAR(total / 2000.0 / spec.dim, 4.0, 0.15);
}

TEST(Synthetic, DeterministicPerSeed) {
  SyntheticSpec spec;
  spec.samples_per_class = 50;
  EXPECT_EQ(gen_synthetic(spec), gen_synthetic(spec));
  auto other = spec;
  other.seed = 1;
  EXPECT_NE(gen_synthetic(spec).vectors, gen_synthetic(other).vectors);
}

TEST(Synthetic, Validation) {
  SyntheticSpec spec;
  spec.cluster_spread = -1.0;
  EXPECT_THROW(gen_synthetic(spec), ValidationError);
  spec = {};
  spec.n_classes = 1;
  EXPECT_THROW(gen_synthetic(spec), ValidationError);
  spec = {};
  spec.dim = 2;  // four classes need three dimensions
  EXPECT_THROW(gen_synthetic(spec), ValidationError);
  spec = {};
  spec.samples_per_class = 0;
  EXPECT_THROW(gen_synthetic(spec), ValidationError);
}
