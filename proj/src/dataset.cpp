#include "embnoise/dataset.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "embnoise/error.hpp"

namespace embnoise {

namespace {

constexpr std::array<char, 4> kMagic = {'E', 'M', 'B', '1'};

class ByteWriter {
 public:
  explicit ByteWriter(std::vector<std::uint8_t>& out) : out_(out) {}

  template <typename T>
  void put(T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    std::array<std::uint8_t, sizeof(T)> raw{};
    std::memcpy(raw.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw.begin(), raw.end());
    out_.insert(out_.end(), raw.begin(), raw.end());
  }

  void put_bytes(std::span<const std::uint8_t> bytes) { out_.insert(out_.end(), bytes.begin(), bytes.end()); }

 private:
  std::vector<std::uint8_t>& out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

  template <typename T>
  T get(const char* what) {
    require(sizeof(T), what);
    std::array<std::uint8_t, sizeof(T)> raw{};
    std::memcpy(raw.data(), in_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw.begin(), raw.end());
    pos_ += sizeof(T);
    T value;
    std::memcpy(&value, raw.data(), sizeof(T));
    return value;
  }

  std::span<const std::uint8_t> get_bytes(std::size_t n, const char* what) {
    require(n, what);
    auto out = in_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  void require(std::size_t n, const char* what) const {
    if (in_.size() - pos_ < n) {
      throw FormatError(std::string("EMB1: truncated while reading ") + what);
    }
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return content;
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

std::vector<std::size_t> EmbeddingDataset::class_counts() const {
  std::vector<std::size_t> counts(n_classes, 0);
  for (Label y : labels) {
    if (y < n_classes) ++counts[y];
  }
  return counts;
}

void EmbeddingDataset::validate() const {
  if (n_samples < 1) throw ValidationError("dataset has no samples");
  if (dim < 1) throw ValidationError("dataset dimension must be >= 1");
  if (n_classes < 2) throw ValidationError("dataset needs at least 2 classes");
  if (n_classes > 65535) throw ValidationError("at most 65535 classes are supported");
  if (vectors.size() != n_samples * dim) throw ValidationError("vector buffer size does not match N x d");
  if (labels.size() != n_samples) throw ValidationError("label count does not match N");
  for (std::size_t i = 0; i < n_samples; ++i) {
    if (labels[i] >= n_classes) {
      throw ValidationError("label " + std::to_string(labels[i]) + " at row " + std::to_string(i) +
                            " is not < K=" + std::to_string(n_classes));
    }
  }
  const auto counts = class_counts();
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0) throw ValidationError("class " + std::to_string(c) + " has no samples");
  }
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (!std::isfinite(vectors[i])) {
      throw ValidationError("non-finite value at row " + std::to_string(i / dim));
    }
  }
}

EmbeddingDataset select_rows(const EmbeddingDataset& dataset, std::span<const std::size_t> indices) {
  EmbeddingDataset out;
  out.name = dataset.name;
  out.dim = dataset.dim;
  out.n_classes = dataset.n_classes;
  out.n_samples = indices.size();
  out.vectors.reserve(indices.size() * dataset.dim);
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= dataset.n_samples) throw ValidationError("row index out of range");
    auto r = dataset.row(i);
    out.vectors.insert(out.vectors.end(), r.begin(), r.end());
    out.labels.push_back(dataset.labels[i]);
  }
  return out;
}

std::vector<std::uint8_t> encode_emb1(const EmbeddingDataset& dataset) {
  dataset.validate();
  if (dataset.dim > UINT32_MAX) throw ValidationError("dimension does not fit in u32");
  if (dataset.name.size() > UINT32_MAX) throw ValidationError("name too long");

  std::vector<std::uint8_t> out;
  out.reserve(32 + dataset.name.size() + dataset.vectors.size() * 4 + dataset.labels.size() * 2);
  ByteWriter w(out);
  for (char c : kMagic) w.put(static_cast<std::uint8_t>(c));
  w.put<std::uint32_t>(kEmb1Version);
  w.put<std::uint64_t>(dataset.n_samples);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(dataset.dim));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(dataset.n_classes));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(dataset.name.size()));
  w.put_bytes({reinterpret_cast<const std::uint8_t*>(dataset.name.data()), dataset.name.size()});
  for (float v : dataset.vectors) w.put(v);
  for (Label y : dataset.labels) w.put(y);
  return out;
}

EmbeddingDataset decode_emb1(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  auto magic = r.get_bytes(4, "magic");
  if (!std::equal(magic.begin(), magic.end(), kMagic.begin(),
                  [](std::uint8_t a, char b) { return a == static_cast<std::uint8_t>(b); })) {
    throw FormatError("EMB1: bad magic");
  }
  const auto version = r.get<std::uint32_t>("version");
  if (version != kEmb1Version) throw FormatError("EMB1: unsupported version " + std::to_string(version));

  EmbeddingDataset d;
  d.n_samples = r.get<std::uint64_t>("n_samples");
  d.dim = r.get<std::uint32_t>("dim");
  d.n_classes = r.get<std::uint32_t>("n_classes");
  const auto name_len = r.get<std::uint32_t>("name_len");
  auto name = r.get_bytes(name_len, "name");
  d.name.assign(name.begin(), name.end());

  // Size check before allocating so a corrupt header cannot request huge buffers.
  const std::size_t n_values = d.n_samples * d.dim;
  if (d.dim != 0 && n_values / d.dim != d.n_samples) throw FormatError("EMB1: header overflow");
  if (r.remaining() / 4 < n_values) throw FormatError("EMB1: truncated vector payload");
  d.vectors.resize(n_values);
  for (auto& v : d.vectors) v = r.get<float>("vectors");
  if (r.remaining() / 2 < d.n_samples) throw FormatError("EMB1: truncated label payload");
  d.labels.resize(d.n_samples);
  for (auto& y : d.labels) y = r.get<Label>("labels");
  if (r.remaining() != 0) throw FormatError("EMB1: trailing bytes after label payload");

  d.validate();
  return d;
}

EmbeddingDataset load_emb1(const std::filesystem::path& path) {
  const std::string raw = read_file(path);
  return decode_emb1({reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()});
}

void save_emb1(const EmbeddingDataset& dataset, const std::filesystem::path& path) {
  const auto bytes = encode_emb1(dataset);
  write_file(path, {reinterpret_cast<const char*>(bytes.data()), bytes.size()});
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_number(std::string_view cell, std::size_t line_no) {
  cell = trim(cell);
  T value{};
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (cell.empty() || ec != std::errc() || ptr != last) {
    throw FormatError("CSV line " + std::to_string(line_no) + ": non-numeric cell '" + std::string(cell) + "'");
  }
  return value;
}

}  // namespace

EmbeddingDataset parse_csv(std::string_view text, std::string name) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = trim(text.substr(start, nl - start));
    if (!line.empty()) lines.push_back(line);
    start = nl + 1;
  }
  if (lines.empty()) throw FormatError("CSV: empty file");

  const auto header = split_fields(lines.front());
  if (header.size() < 2 || trim(header[0]) != "label") {
    throw FormatError("CSV: header must be label,f0,f1,...");
  }
  for (std::size_t j = 1; j < header.size(); ++j) {
    if (trim(header[j]) != "f" + std::to_string(j - 1)) {
      throw FormatError("CSV: header column " + std::to_string(j) + " must be f" + std::to_string(j - 1));
    }
  }

  EmbeddingDataset d;
  d.name = std::move(name);
  d.dim = header.size() - 1;
  d.n_samples = lines.size() - 1;
  d.vectors.reserve(d.n_samples * d.dim);
  d.labels.reserve(d.n_samples);
  unsigned long max_label = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = split_fields(lines[i]);
    if (fields.size() != header.size()) {
      throw FormatError("CSV line " + std::to_string(i + 1) + ": expected " + std::to_string(header.size()) +
                        " cells, found " + std::to_string(fields.size()));
    }
    const auto label = parse_number<unsigned long>(fields[0], i + 1);
    if (label > 65534) throw ValidationError("CSV line " + std::to_string(i + 1) + ": label out of range");
    max_label = std::max(max_label, label);
    d.labels.push_back(static_cast<Label>(label));
    for (std::size_t j = 1; j < fields.size(); ++j) d.vectors.push_back(parse_number<float>(fields[j], i + 1));
  }
  d.n_classes = d.n_samples == 0 ? 0 : max_label + 1;
  d.validate();
  return d;
}

std::string format_csv(const EmbeddingDataset& dataset) {
  dataset.validate();
  std::string out = "label";
  for (std::size_t j = 0; j < dataset.dim; ++j) out += ",f" + std::to_string(j);
  out += '\n';
  std::array<char, 64> buf{};
  for (std::size_t i = 0; i < dataset.n_samples; ++i) {
    out += std::to_string(dataset.labels[i]);
    for (float v : dataset.row(i)) {
      auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 9);
      out += ',';
      out.append(buf.data(), ptr);
    }
    out += '\n';
  }
  return out;
}

EmbeddingDataset load_csv(const std::filesystem::path& path) {
  return parse_csv(read_file(path), path.stem().string());
}

void save_csv(const EmbeddingDataset& dataset, const std::filesystem::path& path) {
  write_file(path, format_csv(dataset));
}

EmbeddingDataset load_dataset(const std::filesystem::path& path) {
  if (path.extension() == ".csv") return load_csv(path);
  return load_emb1(path);
}

}  // namespace embnoise
