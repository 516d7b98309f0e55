#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/QR>

#include "embnoise/error.hpp"
#include "embnoise/random.hpp"
#include "embnoise/spectral.hpp"
#include "embnoise/synthetic.hpp"
#include "oracles.hpp"

using namespace embnoise;

namespace {

Eigen::MatrixXd to_matrix(const EmbeddingDataset& ds) {
  Eigen::MatrixXd m(ds.n_samples, ds.dim);
  for (std::size_t i = 0; i < ds.n_samples; ++i)
    for (std::size_t j = 0; j < ds.dim; ++j) m(i, j) = ds.row(i)[j];
  return m;
}

std::vector<std::vector<double>> to_rows(const Eigen::MatrixXd& m) {
  std::vector<std::vector<double>> rows(m.rows(), std::vector<double>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) rows[i][j] = m(i, j);
  return rows;
}

Eigen::MatrixXd random_orthogonal(std::size_t d, std::uint64_t seed) {
  CounterRng rng(seed);
  Eigen::MatrixXd g(d, d);
  for (Eigen::Index i = 0; i < g.rows(); ++i)
    for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = rng.normal();
  return Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
}

EmbeddingDataset isotropic_random_labels(std::size_t n, std::size_t d, std::size_t k, std::uint64_t seed) {
  CounterRng rng(seed);
  EmbeddingDataset ds;
  ds.name = "iso";
  ds.n_samples = n;
  ds.dim = d;
  ds.n_classes = k;
  for (std::size_t i = 0; i < n * d; ++i) ds.vectors.push_back(static_cast<float>(rng.normal()));
  for (std::size_t i = 0; i < n; ++i) ds.labels.push_back(static_cast<Label>(i < k ? i : rng.below(k)));
  return ds;
}

}  // namespace

TEST(Spectral, MatchesGramOracle) {
  SyntheticSpec spec;
  spec.dim = 12;
  spec.samples_per_class = 60;
  spec.cluster_spread = 2.0;
  spec.center_separation = 6.0;
  const auto ds = gen_synthetic(spec);
  const auto report = spectral_report(ds, 4);
  const auto oracle =
      oracle::spectrum_oracle(to_rows(to_matrix(ds)), std::vector<int>(ds.labels.begin(), ds.labels.end()), 4, 4);
  ASSERT_EQ(report.singular_values.size(), oracle.singular_values.size());
  for (std::size_t i = 0; i < oracle.singular_values.size(); ++i)
    EXPECT_NEAR(report.singular_values[i], oracle.singular_values[i], 1e-8 * oracle.singular_values[0]);
  EXPECT_NEAR(report.gap_ratio, oracle.singular_values[3] / oracle.singular_values[4], 1e-8);
  EXPECT_NEAR(report.alignment, oracle.alignment, 1e-8);
  EXPECT_FALSE(report.rank_deficient);
  EXPECT_EQ(report.rank, 12u);
  EXPECT_TRUE(std::is_sorted(report.singular_values.rbegin(), report.singular_values.rend()));
}

TEST(Spectral, PointMassClustersAreFullyAligned) {
  SyntheticSpec spec;
  spec.cluster_spread = 0.0;
  spec.samples_per_class = 50;
  const auto r = spectral_report(gen_synthetic(spec), 4);
  EXPECT_GE(r.alignment, 0.99);
  EXPECT_TRUE(r.rank_deficient);
  EXPECT_EQ(r.rank, 3u);
  EXPECT_EQ(r.gap_ratio, std::numeric_limits<double>::infinity());
}

TEST(Spectral, RandomLabelsGiveChanceAlignment) {
  const std::size_t d = 32, k = 4;
  double sum = 0, gap = 0;
  const int trials = 8;
  for (int t = 0; t < trials; ++t) {
    const auto r = spectral_report(isotropic_random_labels(20000, d, k, 100 + t), k);
    sum += r.alignment;
    gap += r.gap_ratio;
  }
  EXPECT_NEAR(sum / trials, double(k) / double(d), 0.05);
  EXPECT_NEAR(gap / trials, 1.0, 0.1);
}

TEST(Spectral, RowDuplicationInvariance) {
  SyntheticSpec spec;
  spec.samples_per_class = 40;
  spec.cluster_spread = 3.0;
  const auto ds = gen_synthetic(spec);
  std::vector<std::size_t> twice(2 * ds.n_samples);
  for (std::size_t i = 0; i < twice.size(); ++i) twice[i] = i % ds.n_samples;
  std::vector<std::size_t> once(ds.n_samples);
  std::iota(once.begin(), once.end(), 0);
  const auto a = spectral_report(ds, once, 4), b = spectral_report(ds, twice, 4);
  EXPECT_NEAR(a.gap_ratio, b.gap_ratio, 1e-6);
  EXPECT_NEAR(a.alignment, b.alignment, 1e-6);
}

TEST(Spectral, RotationInvariance) {
  SyntheticSpec spec;
  spec.samples_per_class = 100;
  spec.cluster_spread = 2.5;
  const auto ds = gen_synthetic(spec);
  const Eigen::MatrixXd x = to_matrix(ds);
  const auto base = spectral_report(x, ds.labels, 4, 4);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto rot = spectral_report(x * random_orthogonal(ds.dim, seed), ds.labels, 4, 4);
    for (std::size_t i = 0; i < base.singular_values.size(); ++i)
      EXPECT_NEAR(rot.singular_values[i], base.singular_values[i], 1e-8 * base.singular_values[0]);
    EXPECT_NEAR(rot.gap_ratio, base.gap_ratio, 1e-8);
    EXPECT_NEAR(rot.alignment, base.alignment, 1e-8);
  }
}

TEST(Spectral, LabelPermutationInvariance) {
  SyntheticSpec spec;
  spec.samples_per_class = 80;
  spec.cluster_spread = 4.0;
  auto ds = gen_synthetic(spec);
  const auto base = spectral_report(ds, 4);
  const std::array<Label, 4> perm = {2, 0, 3, 1};
  for (auto& y : ds.labels) y = perm[y];
  EXPECT_NEAR(spectral_report(ds, 4).alignment, base.alignment, 1e-12);
}

TEST(Spectral, AlignmentFallsWithSpread) {
  const std::vector<double> spreads = {0.5, 1.5, 3.0, 6.0, 12.0};
  double previous = 2.0;
  for (double spread : spreads) {
    double sum = 0;
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      SyntheticSpec spec;
      spec.samples_per_class = 250;
      spec.cluster_spread = spread;
      spec.seed = seed;
      sum += spectral_report(gen_synthetic(spec), 4).alignment;
    }
    EXPECT_LE(sum / 4, previous) << "spread " << spread;
    previous = sum / 4;
  }
}

TEST(Spectral, GramRouteAgreesWithSvd) {
  SyntheticSpec spec;
  spec.samples_per_class = 500;
  spec.cluster_spread = 2.0;
  const auto ds = gen_synthetic(spec);
  const Eigen::MatrixXd x = to_matrix(ds);
  const auto svd = spectral_report(x, ds.labels, 4, 4, SpectralSolver::Svd);
  const auto gram = spectral_report(x, ds.labels, 4, 4, SpectralSolver::Gram);
  for (std::size_t i = 0; i < svd.singular_values.size(); ++i)
    EXPECT_NEAR(gram.singular_values[i], svd.singular_values[i], 1e-9 * svd.singular_values[0]);
  EXPECT_NEAR(gram.gap_ratio, svd.gap_ratio, 1e-9);
  EXPECT_NEAR(gram.alignment, svd.alignment, 1e-9);
  EXPECT_EQ(gram.rank, svd.rank);

  spec.cluster_spread = 0.0;
  const auto point = gen_synthetic(spec);
  const auto g0 = spectral_report(to_matrix(point), point.labels, 4, 4, SpectralSolver::Gram);
  EXPECT_TRUE(g0.rank_deficient);
  EXPECT_GE(g0.alignment, 0.99);
}

TEST(Spectral, Errors) {
  SyntheticSpec spec;
  spec.samples_per_class = 1;
  const auto ds = gen_synthetic(spec);
  EXPECT_THROW(spectral_report(ds, 4), ValidationError);  // |indices| must exceed K
  spec.samples_per_class = 10;
  spec.dim = 3;
  EXPECT_THROW(spectral_report(gen_synthetic(spec), 4), ValidationError);  // dim < K
}
