#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "embnoise/dataset.hpp"

namespace embnoise {

struct SpectralReport {
  std::size_t n_rows = 0;
  std::size_t k = 0;
  std::vector<double> singular_values;  // descending
  std::size_t rank = 0;                 // numerical rank of the centered matrix
  double gap_ratio = 0.0;               // sigma_K / sigma_{K+1}; +inf when rank_deficient
  bool rank_deficient = false;          // rank < K + 1
  double alignment = 0.0;               // in [0, 1]
};

/// Mean-centers the selected rows, then reports the singular spectrum, the
/// gap between the K-th and (K+1)-th singular values, and the alignment of
/// the top-K left singular subspace with the class structure:
///
///   alignment = ||U_K^T Y||_F^2 / ||U_r^T Y||_F^2
///
/// where Y is the one-hot label matrix with unit-norm columns, U_r spans the
/// column space of the centered matrix (nonzero singular values) and U_K
/// its leading min(K, r) directions. Normalizing by the energy inside the
/// column space makes the score 1 for pure class-mean geometry and ~K/d for
/// labels independent of isotropic embeddings.
SpectralReport spectral_report(const EmbeddingDataset& dataset, std::span<const std::size_t> indices, std::size_t k);

/// Auto picks the thin SVD up to 1e8 matrix entries and the d x d Gram
/// eigendecomposition beyond.
enum class SpectralSolver { Auto, Svd, Gram };

/// Same computation on an n x d double matrix with one label per row.
SpectralReport spectral_report(Eigen::MatrixXd rows, std::span<const Label> labels, std::size_t n_classes,
                               std::size_t k, SpectralSolver solver = SpectralSolver::Auto);

/// Uses every row.
SpectralReport spectral_report(const EmbeddingDataset& dataset, std::size_t k);

}  // namespace embnoise
