#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "embnoise/dataset.hpp"

namespace embnoise {

struct SplitFractions {
  double train = 0.64;
  double val = 0.16;
  double test = 0.20;

  std::array<double, 3> as_array() const { return {train, val, test}; }

  bool operator==(const SplitFractions&) const = default;
};

/// Disjoint, stratified train/val/test index lists (each sorted ascending).
struct SplitSpec {
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> val_idx;
  std::vector<std::size_t> test_idx;
  std::uint64_t seed = 0;
  SplitFractions fractions;

  bool operator==(const SplitSpec&) const = default;
};

/// Per-class seeded shuffle followed by largest-remainder slicing, so each
/// split holds within one sample of its exact per-class share. Classes too
/// small to reach every nonzero split raise StratificationError.
SplitSpec make_split(const EmbeddingDataset& dataset, const SplitFractions& fractions,
                     std::uint64_t seed);

/// Largest-remainder apportionment of `count` items over `fractions`.
/// Ties in the remainder go to the lower index.
std::vector<std::size_t> apportion(std::size_t count, std::span<const double> fractions);

/// Stratified subsample of `indices` keeping round(fraction * n_c) (at least
/// one) per class present. Output sorted ascending.
std::vector<std::size_t> stratified_subsample(const EmbeddingDataset& dataset,
                                              std::span<const std::size_t> indices,
                                              double fraction, std::uint64_t seed);

/// Throws ValidationError if the split is not disjoint or indexes past N.
void validate_split(const SplitSpec& split, std::size_t n_samples);

}  // namespace embnoise
