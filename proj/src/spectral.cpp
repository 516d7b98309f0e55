#include "embnoise/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "embnoise/error.hpp"

namespace embnoise {

namespace {

// Above this many matrix entries the thin SVD of the data matrix is replaced
// by an eigendecomposition of the d x d Gram matrix.
constexpr double kDenseLimit = 1e8;

struct LeftSpectrum {
  Eigen::VectorXd values;  // descending
  Eigen::MatrixXd u;       // n x min(n, d)
};

LeftSpectrum dense_svd(const Eigen::MatrixXd& x) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU);
  return {svd.singularValues(), svd.matrixU()};
}

LeftSpectrum gram_svd(const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd gram = x.transpose() * x;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  const Eigen::Index d = gram.rows();
  LeftSpectrum out;
  out.values.resize(d);
  out.u.resize(x.rows(), d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const Eigen::Index src = d - 1 - i;  // ascending -> descending
    const double s = std::sqrt(std::max(0.0, eig.eigenvalues()(src)));
    out.values(i) = s;
    out.u.col(i) = s > 0.0 ? Eigen::VectorXd(x * eig.eigenvectors().col(src) / s) : Eigen::VectorXd::Zero(x.rows());
  }
  return out;
}

}  // namespace

SpectralReport spectral_report(Eigen::MatrixXd x, std::span<const Label> labels, std::size_t n_classes,
                               std::size_t k, SpectralSolver solver) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (k < 1) throw ValidationError("spectral: K must be >= 1");
  if (static_cast<std::size_t>(n) <= k) throw ValidationError("spectral: need more rows than K");
  if (static_cast<std::size_t>(d) < k) throw ValidationError("spectral: need dim >= K");
  if (labels.size() != static_cast<std::size_t>(n)) throw ValidationError("spectral: one label per row required");
  for (Label c : labels) {
    if (c >= n_classes) throw ValidationError("spectral: label out of range");
  }
  x.rowwise() -= x.colwise().mean();

  const bool dense = solver == SpectralSolver::Svd ||
                     (solver == SpectralSolver::Auto && static_cast<double>(n) * static_cast<double>(d) <= kDenseLimit);
  const LeftSpectrum spectrum = dense ? dense_svd(x) : gram_svd(x);

  SpectralReport report;
  report.n_rows = static_cast<std::size_t>(n);
  report.k = k;
  report.singular_values.assign(spectrum.values.data(), spectrum.values.data() + spectrum.values.size());

  const double top = report.singular_values.empty() ? 0.0 : report.singular_values.front();
  // Squaring in the Gram route leaves singular values accurate only to about
  // sqrt(eps) relative to the largest, so its rank cutoff is looser.
  const double scaled_eps = static_cast<double>(std::max(n, d)) * std::numeric_limits<double>::epsilon();
  const double tol = top * (dense ? scaled_eps : 10.0 * std::sqrt(scaled_eps));
  report.rank = static_cast<std::size_t>(
      std::count_if(report.singular_values.begin(), report.singular_values.end(), [&](double s) { return s > tol; }));

  if (report.rank < k + 1) {
    report.rank_deficient = true;
    report.gap_ratio = std::numeric_limits<double>::infinity();
  } else {
    report.gap_ratio = report.singular_values[k - 1] / report.singular_values[k];
  }

  // Unit-norm class indicator columns; absent classes contribute nothing.
  std::vector<double> counts(n_classes, 0.0);
  for (Label c : labels) counts[c] += 1.0;
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(n_classes));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto c = labels[static_cast<std::size_t>(i)];
    y(i, c) = 1.0 / std::sqrt(counts[c]);
  }

  const auto r = static_cast<Eigen::Index>(report.rank);
  if (r == 0) {
    report.alignment = 0.0;
    return report;
  }
  const Eigen::MatrixXd projected = spectrum.u.leftCols(r).transpose() * y;  // r x K
  const double in_span = projected.squaredNorm();
  const auto top_k = std::min<Eigen::Index>(static_cast<Eigen::Index>(k), r);
  const double captured = projected.topRows(top_k).squaredNorm();
  report.alignment = in_span > 0.0 ? std::clamp(captured / in_span, 0.0, 1.0) : 0.0;
  return report;
}

SpectralReport spectral_report(const EmbeddingDataset& dataset, std::span<const std::size_t> indices, std::size_t k) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(indices.size()), static_cast<Eigen::Index>(dataset.dim));
  std::vector<Label> labels;
  labels.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= dataset.n_samples) throw ValidationError("spectral: index out of range");
    const auto r = dataset.row(indices[i]);
    for (std::size_t j = 0; j < r.size(); ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r[j];
    labels.push_back(dataset.labels[indices[i]]);
  }
  return spectral_report(std::move(x), labels, dataset.n_classes, k);
}

SpectralReport spectral_report(const EmbeddingDataset& dataset, std::size_t k) {
  std::vector<std::size_t> all(dataset.n_samples);
  std::iota(all.begin(), all.end(), 0);
  return spectral_report(dataset, all, k);
}

}  // namespace embnoise
