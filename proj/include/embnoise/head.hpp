#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "embnoise/dataset.hpp"
#include "embnoise/losses.hpp"

namespace embnoise {

/// Feed-forward classifier head: affine layers with ReLU between them.
/// Batches are column-major, one sample per column.
struct HeadModel {
  std::vector<std::size_t> layer_dims;  // [d, h1, ..., K]
  std::vector<Eigen::MatrixXf> weights; // weights[l] is layer_dims[l+1] x layer_dims[l]
  std::vector<Eigen::VectorXf> biases;

  std::size_t input_dim() const { return layer_dims.front(); }
  std::size_t n_classes() const { return layer_dims.back(); }
  std::size_t n_layers() const { return weights.size(); }
  std::size_t parameter_count() const;
  bool all_finite() const;

  /// Scores (K x B) for a d x B batch.
  Eigen::MatrixXf forward(const Eigen::MatrixXf& batch) const;

  bool operator==(const HeadModel& other) const;
};

/// Weights uniform in +-1/sqrt(fan_in), biases zero. `hidden` may be empty
/// (a single linear layer d -> K).
HeadModel init_head(std::size_t dim, std::size_t n_classes, std::span<const std::size_t> hidden, std::uint64_t seed);

/// Gathers dataset rows into a d x B column batch.
Eigen::MatrixXf gather_batch(const EmbeddingDataset& dataset, std::span<const std::size_t> indices);

/// One plain SGD update on a batch. Returns the batch's mean loss evaluated
/// before the update. Throws DivergenceError on non-finite scores, loss, or
/// parameters.
double sgd_step(HeadModel& head, const Eigen::MatrixXf& batch, std::span<const Label> targets, const LossSpec& loss,
                double lr);

/// argmax over scores, ties to the lower class index.
std::vector<Label> predict(const HeadModel& head, const EmbeddingDataset& dataset,
                           std::span<const std::size_t> indices);

/// Fraction of `indices` whose prediction equals labels[index]; `labels` is
/// indexed by dataset row.
double evaluate(const HeadModel& head, const EmbeddingDataset& dataset, std::span<const std::size_t> indices,
                std::span<const Label> labels);

}  // namespace embnoise
