#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace embnoise {

using Label = std::uint16_t;

/// Read-only row-major view over a block of float vectors.
struct MatrixView {
  std::span<const float> data;
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::span<const float> row(std::size_t i) const { return data.subspan(i * cols, cols); }
};

/// N embedding vectors of dimension d with their clean labels in {0..K-1}.
/// Datasets are treated as immutable once built; trials share them by const
/// reference.
struct EmbeddingDataset {
  std::string name;
  std::size_t n_samples = 0;
  std::size_t dim = 0;
  std::size_t n_classes = 0;
  std::vector<float> vectors;  // n_samples x dim, row-major
  std::vector<Label> labels;

  std::span<const float> row(std::size_t i) const {
    return std::span<const float>(vectors).subspan(i * dim, dim);
  }
  MatrixView view() const { return {vectors, n_samples, dim}; }

  /// Per-class sample counts.
  std::vector<std::size_t> class_counts() const;

  /// Throws ValidationError unless: N >= 1, d >= 1, K >= 2, sizes agree,
  /// every label < K, every class present, every value finite.
  void validate() const;

  bool operator==(const EmbeddingDataset&) const = default;
};

/// Copies the selected rows (and labels) into a new dataset. The result
/// keeps the parent's K and is not validated (a subset may miss classes).
EmbeddingDataset select_rows(const EmbeddingDataset& dataset, std::span<const std::size_t> indices);

// EMB1 binary format, little-endian:
//   "EMB1" | u32 version=1 | u64 n_samples | u32 dim | u32 n_classes |
//   u32 name_len | name bytes | f32[n_samples*dim] | u16[n_samples]
inline constexpr std::uint32_t kEmb1Version = 1;

std::vector<std::uint8_t> encode_emb1(const EmbeddingDataset& dataset);
EmbeddingDataset decode_emb1(std::span<const std::uint8_t> bytes);

EmbeddingDataset load_emb1(const std::filesystem::path& path);
void save_emb1(const EmbeddingDataset& dataset, const std::filesystem::path& path);

/// CSV with header `label,f0,...,f{d-1}`. Values are written with 9
/// significant digits (round-trips binary32 exactly). On load, K is
/// max(label)+1 and the name is the file stem.
EmbeddingDataset load_csv(const std::filesystem::path& path);
void save_csv(const EmbeddingDataset& dataset, const std::filesystem::path& path);

EmbeddingDataset parse_csv(std::string_view text, std::string name);
std::string format_csv(const EmbeddingDataset& dataset);

/// Loads by extension: `.csv` as CSV, anything else as EMB1.
EmbeddingDataset load_dataset(const std::filesystem::path& path);

}  // namespace embnoise
