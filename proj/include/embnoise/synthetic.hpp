#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "embnoise/dataset.hpp"

namespace embnoise {

/// Gaussian clusters around equidistant class means.
struct SyntheticSpec {
  std::size_t n_classes = 4;
  std::size_t dim = 32;
  std::size_t samples_per_class = 1000;
  double cluster_spread = 1.0;      // within-class standard deviation
  double center_separation = 10.0;  // pairwise distance between class means
  std::uint64_t seed = 0;
  std::string name = "synthetic";

  void validate() const;
};

/// Class means sit on the vertices of a regular simplex (pairwise distance
/// exactly `center_separation`) embedded by a seeded random isometry into
/// R^dim; samples are mean + N(0, spread^2 I). Samples are class-major.
/// Requires dim >= n_classes - 1.
EmbeddingDataset gen_synthetic(const SyntheticSpec& spec);

}  // namespace embnoise
