#include <cmath>
#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "embnoise/dataset.hpp"
#include "embnoise/error.hpp"
#include "embnoise/random.hpp"
#include "embnoise/synthetic.hpp"

using namespace embnoise;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name) {
  auto dir = fs::temp_directory_path() / "embnoise_io_tests";
  fs::create_directories(dir);
  return dir / name;
}

EmbeddingDataset random_dataset(std::uint64_t seed, std::size_t n, std::size_t d, std::size_t k) {
  CounterRng rng(seed);
  EmbeddingDataset ds;
  ds.name = "rand-" + std::to_string(seed);
  ds.n_samples = n;
  ds.dim = d;
  ds.n_classes = k;
  for (std::size_t i = 0; i < n * d; ++i) {
    // Raw bit patterns exercise subnormals and extreme exponents too.
    float v;
    do {
      const auto bits = static_cast<std::uint32_t>(rng.next_u64());
      v = std::bit_cast<float>(bits);
    } while (!std::isfinite(v));
    ds.vectors.push_back(v);
  }
  for (std::size_t i = 0; i < n; ++i) ds.labels.push_back(static_cast<Label>(i < k ? i : rng.below(k)));
  return ds;
}

std::vector<std::uint8_t> read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST(Emb1, RoundTripIsBitExact) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto ds = random_dataset(seed, 3 + seed * 7, 1 + seed % 5, 2 + seed % 4);
    const auto path = temp_path("rt.emb1");
    save_emb1(ds, path);
    const auto loaded = load_emb1(path);
    ASSERT_EQ(loaded.n_samples, ds.n_samples);
    ASSERT_EQ(loaded.labels, ds.labels);
    ASSERT_EQ(loaded.name, ds.name);
    ASSERT_EQ(0, std::memcmp(loaded.vectors.data(), ds.vectors.data(), ds.vectors.size() * sizeof(float)));
    // Re-encoding gives the identical byte stream.
    EXPECT_EQ(encode_emb1(loaded), read_bytes(path));
  }
}

TEST(Emb1, LayoutMatchesFormat) {
  EmbeddingDataset ds;
  ds.name = "ab";
  ds.n_samples = 2;
  ds.dim = 1;
  ds.n_classes = 2;
  ds.vectors = {1.0f, -2.0f};
  ds.labels = {1, 0};
  const auto bytes = encode_emb1(ds);
  const std::vector<std::uint8_t> expected = {
      'E', 'M', 'B', '1',                // magic
      1, 0, 0, 0,                        // version
      2, 0, 0, 0, 0, 0, 0, 0,            // n_samples
      1, 0, 0, 0,                        // dim
      2, 0, 0, 0,                        // n_classes
      2, 0, 0, 0,                        // name_len
      'a', 'b',                          // name
      0x00, 0x00, 0x80, 0x3f,            // 1.0f
      0x00, 0x00, 0x00, 0xc0,            // -2.0f
      1, 0, 0, 0,                        // labels
  };
  EXPECT_EQ(bytes, expected);
}

TEST(Emb1, EmptyFileIsFormatError) {
  const auto path = temp_path("empty.emb1");
  write_bytes(path, {});
  EXPECT_THROW(load_emb1(path), FormatError);
}

TEST(Emb1, BadMagicAndVersion) {
  auto bytes = encode_emb1(random_dataset(1, 5, 2, 2));
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_emb1(bad_magic), FormatError);
  auto bad_version = bytes;
  bad_version[4] = 2;
  EXPECT_THROW(decode_emb1(bad_version), FormatError);
}

TEST(Emb1, TruncatedPayloadIsFormatError) {
  const auto bytes = encode_emb1(random_dataset(2, 6, 3, 3));
  for (std::size_t cut : {bytes.size() - 1, bytes.size() - 12, std::size_t{20}, std::size_t{3}}) {
    std::vector<std::uint8_t> truncated(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut));
    EXPECT_THROW(decode_emb1(truncated), FormatError) << "cut at " << cut;
  }
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROW(decode_emb1(trailing), FormatError);
}

TEST(Emb1, LabelBeyondKIsValidationError) {
  auto ds = random_dataset(3, 6, 2, 3);
  auto bytes = encode_emb1(ds);
  // Last label sits in the final two bytes; K = 3, write 5.
  bytes[bytes.size() - 2] = 5;
  bytes[bytes.size() - 1] = 0;
  EXPECT_THROW(decode_emb1(bytes), ValidationError);
}

TEST(Emb1, UnwritablePathIsIoError) {
  EXPECT_THROW(save_emb1(random_dataset(4, 4, 2, 2), "/nonexistent-dir/x.emb1"), IoError);
}

TEST(Dataset, ValidateRejectsBadInvariants) {
  auto ds = random_dataset(5, 10, 2, 3);
  ds.vectors[3] = std::numeric_limits<float>::quiet_NaN();
  EXPECT_THROW(ds.validate(), ValidationError);

  auto missing = random_dataset(5, 10, 2, 3);
  for (auto& y : missing.labels) y = y == 2 ? 1 : y;
  EXPECT_THROW(missing.validate(), ValidationError);

  auto one_class = random_dataset(5, 10, 2, 2);
  one_class.n_classes = 1;
  for (auto& y : one_class.labels) y = 0;
  EXPECT_THROW(one_class.validate(), ValidationError);
}

TEST(Csv, RoundTripPreservesFloats) {
  SyntheticSpec spec;
  spec.n_classes = 3;
  spec.dim = 5;
  spec.samples_per_class = 20;
  const auto ds = gen_synthetic(spec);
  const auto path = temp_path("rt.csv");
  save_csv(ds, path);
  const auto loaded = load_csv(path);
  EXPECT_EQ(loaded.labels, ds.labels);
  EXPECT_EQ(loaded.vectors, ds.vectors);  // 9 significant digits round-trip binary32
  EXPECT_EQ(loaded.name, "rt");
  EXPECT_EQ(loaded.n_classes, 3u);
}

TEST(Csv, HeaderAndFormatting) {
  EmbeddingDataset ds;
  ds.name = "x";
  ds.n_samples = 2;
  ds.dim = 2;
  ds.n_classes = 2;
  ds.vectors = {0.1f, -3.0f, 1e-20f, 123456.789f};
  ds.labels = {0, 1};
  EXPECT_EQ(format_csv(ds), "label,f0,f1\n0,0.100000001,-3\n1,9.99999968e-21,123456.789\n");
}

TEST(Csv, RaggedRowsAndBadCells) {
  EXPECT_THROW(parse_csv("label,f0,f1\n0,1,2\n1,3\n", "x"), FormatError);
  EXPECT_THROW(parse_csv("label,f0\n0,1.5\n1,abc\n", "x"), FormatError);
  EXPECT_THROW(parse_csv("label,f0\n0,1.5\n1,1,5\n", "x"), FormatError);
  EXPECT_THROW(parse_csv("lbl,f0\n0,1\n1,2\n", "x"), FormatError);
  EXPECT_THROW(parse_csv("", "x"), FormatError);
  // Locale-independent: a decimal comma is just a ragged row.
  EXPECT_THROW(parse_csv("label,f0\n0,1,5\n", "x"), FormatError);
}

TEST(Csv, AcceptsCrLfAndExponents) {
  const auto ds = parse_csv("label,f0\r\n0,1e3\r\n1,-2.5E-1\r\n", "x");
  EXPECT_EQ(ds.vectors, (std::vector<float>{1000.0f, -0.25f}));
}

TEST(SelectRows, CopiesRowsAndLabels) {
  const auto ds = random_dataset(6, 8, 3, 2);
  const std::vector<std::size_t> idx = {7, 0, 3};
  const auto sub = select_rows(ds, idx);
  ASSERT_EQ(sub.n_samples, 3u);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    EXPECT_EQ(sub.labels[i], ds.labels[idx[i]]);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(sub.row(i)[j], ds.row(idx[i])[j]);
  }
}
