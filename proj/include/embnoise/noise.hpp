#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "embnoise/dataset.hpp"

namespace embnoise {

/// Row-stochastic K x K matrix; entry (i, j) is P(noisy = j | clean = i).
struct TransitionMatrix {
  std::size_t k = 0;
  std::vector<double> rows;  // k x k, row-major
  std::optional<std::string> preset_name;
  std::vector<std::string> class_names;  // empty for custom matrices

  double at(std::size_t i, std::size_t j) const { return rows[i * k + j]; }
  std::span<const double> row(std::size_t i) const { return std::span<const double>(rows).subspan(i * k, k); }

  static TransitionMatrix identity(std::size_t k);
  static TransitionMatrix from_rows(const std::vector<std::vector<double>>& rows);

  /// Square, nonnegative, finite, rows summing to 1 within 1e-9.
  void validate() const;
};

struct UniformNoise {
  double eta = 0.0;
};

struct AsymmetricNoise {
  TransitionMatrix matrix;
  double eta = 0.0;  // every diagonal entry must equal 1 - eta
};

struct NoiseSpec {
  std::variant<UniformNoise, AsymmetricNoise> variant;
  std::uint64_t seed = 0;

  double eta() const;
  /// "uniform" or "asym:<preset>" / "asym:custom".
  std::string descriptor() const;
};

/// Largest admissible uniform rate, (K-1)/K.
double max_uniform_eta(std::size_t k);

/// Keeps each label with probability 1 - eta, otherwise replaces it by one of
/// the K-1 other classes uniformly (eta/(K-1) each). Every sample draws from
/// its own counter stream, so the output does not depend on evaluation order.
std::vector<Label> inject_uniform(std::span<const Label> labels, std::size_t k, double eta, std::uint64_t seed);

/// Draws each noisy label from row `clean` of `matrix` by inverse CDF.
std::vector<Label> inject_asymmetric(std::span<const Label> labels, const TransitionMatrix& matrix,
                                     std::uint64_t seed);

/// Dispatches on the variant after checking it against K.
std::vector<Label> inject(std::span<const Label> labels, std::size_t k, const NoiseSpec& spec);

/// Checks the spec against a dataset's class count (eta bound, matrix size,
/// diagonal = 1 - eta).
void validate_noise(const NoiseSpec& spec, std::size_t k);

/// Preset confusion structures for NCT-CRC-HE-100k ("nct-crc"), BACH
/// ("bach") and LC25000 ("lc25000") with eta substituted.
TransitionMatrix preset_matrix(std::string_view name, double eta);
std::vector<std::string> preset_names();

std::vector<bool> flip_mask(std::span<const Label> clean, std::span<const Label> noisy);

/// CSV with columns index,clean,noisy,flipped.
std::string format_noise_csv(std::span<const Label> clean, std::span<const Label> noisy);

}  // namespace embnoise
