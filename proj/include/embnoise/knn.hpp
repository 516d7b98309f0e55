#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "embnoise/dataset.hpp"
#include "embnoise/noise.hpp"
#include "embnoise/split.hpp"

namespace embnoise {

enum class KnnMetric { Euclidean, Cosine };

struct KnnConfig {
  std::size_t k = 5;
  double subsample_fraction = 0.10;
  KnnMetric metric = KnnMetric::Euclidean;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Exact k-NN by full scan. Neighbors are ordered by (distance, training
/// index); the vote goes to the most frequent class, ties to the tied class
/// whose member ranks nearest, then to the lower class index.
std::vector<Label> knn_predict(MatrixView train, std::span<const Label> train_labels, MatrixView queries,
                               std::size_t k, KnnMetric metric = KnnMetric::Euclidean);

/// Stratified subsample of the train split, labels corrupted by `noise`,
/// accuracy on the test split against clean labels.
double knn_experiment(const EmbeddingDataset& dataset, const SplitSpec& split, const NoiseSpec& noise,
                      const KnnConfig& cfg);

}  // namespace embnoise
