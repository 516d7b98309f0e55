#include "embnoise/synthetic.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "embnoise/error.hpp"
#include "embnoise/random.hpp"

namespace embnoise {

void SyntheticSpec::validate() const {
  if (n_classes < 2) throw ValidationError("synthetic: n_classes must be >= 2");
  if (n_classes > 65535) throw ValidationError("synthetic: too many classes");
  if (dim < 1 || samples_per_class < 1) throw ValidationError("synthetic: counts must be >= 1");
  if (dim + 1 < n_classes) throw ValidationError("synthetic: dim must be >= n_classes - 1 for equidistant means");
  if (!(cluster_spread >= 0.0) || !std::isfinite(cluster_spread)) {
    throw ValidationError("synthetic: cluster_spread must be finite and >= 0");
  }
  if (!(center_separation >= 0.0) || !std::isfinite(center_separation)) {
    throw ValidationError("synthetic: center_separation must be finite and >= 0");
  }
}

namespace {

// Rows are the K vertices of a regular simplex with unit edge length,
// expressed in an orthonormal (Helmert) basis of the sum-zero subspace of R^K.
std::vector<std::vector<double>> simplex_vertices(std::size_t k) {
  std::vector<std::vector<double>> basis;  // K-1 vectors in R^K
  for (std::size_t j = 1; j < k; ++j) {
    std::vector<double> h(k, 0.0);
    const double norm = std::sqrt(static_cast<double>(j * (j + 1)));
    for (std::size_t i = 0; i < j; ++i) h[i] = 1.0 / norm;
    h[j] = -static_cast<double>(j) / norm;
    basis.push_back(std::move(h));
  }
  // e_i - (1/K) 1 has pairwise distances sqrt(2); its coordinates in the
  // Helmert basis are just basis[j][i] since the basis is orthogonal to 1.
  const double scale = 1.0 / std::sqrt(2.0);
  std::vector<std::vector<double>> vertices(k, std::vector<double>(k - 1, 0.0));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j + 1 < k; ++j) vertices[i][j] = basis[j][i] * scale;
  }
  return vertices;
}

// `cols` orthonormal vectors in R^dim from Gram-Schmidt on Gaussian draws.
std::vector<std::vector<double>> random_orthonormal(std::size_t dim, std::size_t cols, CounterRng& rng) {
  std::vector<std::vector<double>> q;
  while (q.size() < cols) {
    std::vector<double> v(dim);
    for (auto& x : v) x = rng.normal();
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& u : q) {
        double dot = 0.0;
        for (std::size_t i = 0; i < dim; ++i) dot += u[i] * v[i];
        for (std::size_t i = 0; i < dim; ++i) v[i] -= dot * u[i];
      }
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-8) continue;
    for (auto& x : v) x /= norm;
    q.push_back(std::move(v));
  }
  return q;
}

}  // namespace

EmbeddingDataset gen_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t k = spec.n_classes;
  const std::size_t d = spec.dim;

  CounterRng geometry_rng(derive_seed(spec.seed, "synthetic.geometry"));
  const auto vertices = simplex_vertices(k);
  const auto frame = random_orthonormal(d, k - 1, geometry_rng);

  std::vector<std::vector<double>> means(k, std::vector<double>(d, 0.0));
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t j = 0; j + 1 < k; ++j) {
      const double coord = vertices[c][j] * spec.center_separation;
      for (std::size_t i = 0; i < d; ++i) means[c][i] += coord * frame[j][i];
    }
  }

  EmbeddingDataset out;
  out.name = spec.name;
  out.n_classes = k;
  out.dim = d;
  out.n_samples = k * spec.samples_per_class;
  out.vectors.reserve(out.n_samples * d);
  out.labels.reserve(out.n_samples);
  for (std::size_t c = 0; c < k; ++c) {
    CounterRng rng(derive_seed(spec.seed, "synthetic.samples", c));
    for (std::size_t s = 0; s < spec.samples_per_class; ++s) {
      for (std::size_t i = 0; i < d; ++i) {
        const double noise = spec.cluster_spread > 0.0 ? spec.cluster_spread * rng.normal() : 0.0;
        out.vectors.push_back(static_cast<float>(means[c][i] + noise));
      }
      out.labels.push_back(static_cast<Label>(c));
    }
  }
  return out;
}

}  // namespace embnoise
