#include "embnoise/knn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "embnoise/error.hpp"
#include "embnoise/random.hpp"

namespace embnoise {

void KnnConfig::validate() const {
  if (k < 1) throw ValidationError("knn: k must be >= 1");
  if (!(subsample_fraction > 0.0 && subsample_fraction <= 1.0)) {
    throw ValidationError("knn: subsample_fraction must be in (0, 1]");
  }
}

namespace {

double squared_euclidean(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    s += diff * diff;
  }
  return s;
}

double norm(std::span<const float> a) {
  double s = 0.0;
  for (float v : a) s += static_cast<double>(v) * v;
  return std::sqrt(s);
}

}  // namespace

std::vector<Label> knn_predict(MatrixView train, std::span<const Label> train_labels, MatrixView queries,
                               std::size_t k, KnnMetric metric) {
  if (train.rows == 0) throw ValidationError("knn: empty training set");
  if (train_labels.size() != train.rows) throw ValidationError("knn: label count must equal training rows");
  if (k < 1 || k > train.rows) throw ValidationError("knn: need 1 <= k <= |train|");
  if (queries.rows > 0 && queries.cols != train.cols) throw ValidationError("knn: dimension mismatch");

  const std::size_t n_classes = static_cast<std::size_t>(*std::max_element(train_labels.begin(), train_labels.end())) + 1;
  std::vector<double> train_norms;
  if (metric == KnnMetric::Cosine) {
    train_norms.resize(train.rows);
    for (std::size_t i = 0; i < train.rows; ++i) train_norms[i] = norm(train.row(i));
  }

  std::vector<Label> out(queries.rows);
  std::vector<std::pair<double, std::size_t>> candidates(train.rows);
  std::vector<std::size_t> votes(n_classes);
  std::vector<std::size_t> first_rank(n_classes);
  for (std::size_t q = 0; q < queries.rows; ++q) {
    const auto query = queries.row(q);
    const double query_norm = metric == KnnMetric::Cosine ? norm(query) : 0.0;
    for (std::size_t i = 0; i < train.rows; ++i) {
      double dist;
      if (metric == KnnMetric::Euclidean) {
        dist = squared_euclidean(query, train.row(i));
      } else {
        double dot = 0.0;
        const auto r = train.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) dot += static_cast<double>(query[j]) * r[j];
        const double denom = query_norm * train_norms[i];
        dist = denom > 0.0 ? 1.0 - dot / denom : 1.0;
      }
      candidates[i] = {dist, i};
    }
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k), candidates.end());

    std::fill(votes.begin(), votes.end(), 0);
    std::fill(first_rank.begin(), first_rank.end(), k);
    for (std::size_t r = 0; r < k; ++r) {
      const Label y = train_labels[candidates[r].second];
      ++votes[y];
      first_rank[y] = std::min(first_rank[y], r);
    }
    std::size_t best = 0;
    for (std::size_t c = 1; c < n_classes; ++c) {
      if (votes[c] > votes[best] || (votes[c] == votes[best] && first_rank[c] < first_rank[best])) best = c;
    }
    out[q] = static_cast<Label>(best);
  }
  return out;
}

double knn_experiment(const EmbeddingDataset& dataset, const SplitSpec& split, const NoiseSpec& noise,
                      const KnnConfig& cfg) {
  cfg.validate();
  validate_split(split, dataset.n_samples);
  if (split.test_idx.empty()) throw ValidationError("knn: empty test split");

  const auto support = stratified_subsample(dataset, split.train_idx, cfg.subsample_fraction,
                                            derive_seed(cfg.seed, "knn.subsample"));
  if (cfg.k > support.size()) {
    throw ValidationError("knn: k=" + std::to_string(cfg.k) + " exceeds subsample size " +
                          std::to_string(support.size()));
  }
  const EmbeddingDataset support_set = select_rows(dataset, support);
  const auto noisy = inject(support_set.labels, dataset.n_classes, noise);

  const EmbeddingDataset test_set = select_rows(dataset, split.test_idx);
  const auto predictions = knn_predict(support_set.view(), noisy, test_set.view(), cfg.k, cfg.metric);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) correct += predictions[i] == test_set.labels[i];
  return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

}  // namespace embnoise
