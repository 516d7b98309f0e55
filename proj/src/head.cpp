#include "embnoise/head.hpp"

#include <cmath>
#include <string>

#include "embnoise/error.hpp"
#include "embnoise/random.hpp"

namespace embnoise {

std::size_t HeadModel::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) n += static_cast<std::size_t>(weights[l].size() + biases[l].size());
  return n;
}

bool HeadModel::all_finite() const {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (!weights[l].allFinite() || !biases[l].allFinite()) return false;
  }
  return true;
}

Eigen::MatrixXf HeadModel::forward(const Eigen::MatrixXf& batch) const {
  if (static_cast<std::size_t>(batch.rows()) != input_dim()) throw ValidationError("head input dimension mismatch");
  Eigen::MatrixXf a = batch;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    Eigen::MatrixXf z = weights[l] * a;
    z.colwise() += biases[l];
    if (l + 1 < weights.size()) z = z.cwiseMax(0.0f);
    a = std::move(z);
  }
  return a;
}

bool HeadModel::operator==(const HeadModel& other) const {
  if (layer_dims != other.layer_dims) return false;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l] != other.weights[l] || biases[l] != other.biases[l]) return false;
  }
  return true;
}

HeadModel init_head(std::size_t dim, std::size_t n_classes, std::span<const std::size_t> hidden, std::uint64_t seed) {
  if (dim < 1 || n_classes < 2) throw ValidationError("init_head: need dim >= 1 and K >= 2");
  HeadModel head;
  head.layer_dims.push_back(dim);
  for (std::size_t h : hidden) {
    if (h < 1) throw ValidationError("init_head: hidden widths must be >= 1");
    head.layer_dims.push_back(h);
  }
  head.layer_dims.push_back(n_classes);

  for (std::size_t l = 0; l + 1 < head.layer_dims.size(); ++l) {
    const auto fan_in = static_cast<Eigen::Index>(head.layer_dims[l]);
    const auto fan_out = static_cast<Eigen::Index>(head.layer_dims[l + 1]);
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    CounterRng rng(derive_seed(seed, "head.init", l));
    Eigen::MatrixXf w(fan_out, fan_in);
    // Row-major fill order so the draw sequence is layout-independent.
    for (Eigen::Index i = 0; i < fan_out; ++i) {
      for (Eigen::Index j = 0; j < fan_in; ++j) w(i, j) = static_cast<float>(rng.uniform(-bound, bound));
    }
    head.weights.push_back(std::move(w));
    head.biases.push_back(Eigen::VectorXf::Zero(fan_out));
  }
  return head;
}

Eigen::MatrixXf gather_batch(const EmbeddingDataset& dataset, std::span<const std::size_t> indices) {
  Eigen::MatrixXf batch(static_cast<Eigen::Index>(dataset.dim), static_cast<Eigen::Index>(indices.size()));
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const auto r = dataset.row(indices[b]);
    batch.col(static_cast<Eigen::Index>(b)) = Eigen::Map<const Eigen::VectorXf>(r.data(), static_cast<Eigen::Index>(r.size()));
  }
  return batch;
}

double sgd_step(HeadModel& head, const Eigen::MatrixXf& batch, std::span<const Label> targets, const LossSpec& loss,
                double lr) {
  const std::size_t n_layers = head.n_layers();
  const auto batch_size = static_cast<std::size_t>(batch.cols());
  const std::size_t k = head.n_classes();

  // Forward, keeping every layer's input for the backward pass.
  std::vector<Eigen::MatrixXf> inputs;
  inputs.reserve(n_layers);
  Eigen::MatrixXf a = batch;
  for (std::size_t l = 0; l < n_layers; ++l) {
    inputs.push_back(a);
    Eigen::MatrixXf z = head.weights[l] * a;
    z.colwise() += head.biases[l];
    if (l + 1 < n_layers) z = z.cwiseMax(0.0f);
    a = std::move(z);
  }
  if (!a.allFinite()) throw DivergenceError(0, 0, "non-finite scores");

  // Column-major K x B is exactly the row-major B x K layout loss_and_grad expects.
  const Eigen::MatrixXd scores = a.cast<double>();
  const auto result = loss_and_grad(loss, {scores.data(), static_cast<std::size_t>(scores.size())}, batch_size, k,
                                    targets);
  if (!std::isfinite(result.value)) throw DivergenceError(0, 0, "non-finite loss");

  Eigen::MatrixXf grad = Eigen::Map<const Eigen::MatrixXd>(result.grad_scores.data(), static_cast<Eigen::Index>(k),
                                                           static_cast<Eigen::Index>(batch_size))
                             .cast<float>();
  const auto step = static_cast<float>(lr);
  for (std::size_t l = n_layers; l-- > 0;) {
    Eigen::MatrixXf grad_w = grad * inputs[l].transpose();
    Eigen::VectorXf grad_b = grad.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXf upstream = head.weights[l].transpose() * grad;
      // ReLU derivative: the stored input of layer l is the activation of layer l-1.
      grad = (inputs[l].array() > 0.0f).select(upstream, 0.0f);
    }
    head.weights[l] -= step * grad_w;
    head.biases[l] -= step * grad_b;
  }
  if (!head.all_finite()) throw DivergenceError(0, 0, "non-finite parameters after update");
  return result.value;
}

std::vector<Label> predict(const HeadModel& head, const EmbeddingDataset& dataset,
                           std::span<const std::size_t> indices) {
  if (dataset.dim != head.input_dim()) throw ValidationError("head input dimension does not match dataset");
  std::vector<Label> out;
  out.reserve(indices.size());
  constexpr std::size_t kChunk = 1024;
  for (std::size_t start = 0; start < indices.size(); start += kChunk) {
    const auto chunk = indices.subspan(start, std::min(kChunk, indices.size() - start));
    const Eigen::MatrixXf scores = head.forward(gather_batch(dataset, chunk));
    for (Eigen::Index b = 0; b < scores.cols(); ++b) {
      Eigen::Index best = 0;
      for (Eigen::Index c = 1; c < scores.rows(); ++c) {
        if (scores(c, b) > scores(best, b)) best = c;
      }
      out.push_back(static_cast<Label>(best));
    }
  }
  return out;
}

double evaluate(const HeadModel& head, const EmbeddingDataset& dataset, std::span<const std::size_t> indices,
                std::span<const Label> labels) {
  if (labels.size() != dataset.n_samples) throw ValidationError("evaluate: labels must be indexed by dataset row");
  if (indices.empty()) return 0.0;
  const auto predictions = predict(head, dataset, indices);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < indices.size(); ++i) correct += predictions[i] == labels[indices[i]];
  return static_cast<double>(correct) / static_cast<double>(indices.size());
}

}  // namespace embnoise
