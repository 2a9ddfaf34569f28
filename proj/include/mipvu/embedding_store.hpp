#pragma once

// Per-headword basic-meaning vectors with zero-vector OOV fallback.
//
// embeddings.bin layout (all integers little-endian):
//   bytes  0..3   magic "MBME"
//   bytes  4..7   uint32 format version (1)
//   bytes  8..11  uint32 rows
//   bytes 12..15  uint32 dim
//   then rows*dim float32 values, row-major, little-endian
//
// embeddings.index: one `headword<TAB>row` per line, sorted by headword.

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mipvu/dict_pipeline.hpp"
#include "mipvu/error.hpp"
#include "mipvu/io.hpp"

namespace mipvu::store {

inline constexpr std::size_t kEmbeddingDim = 1024;
inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr char kMagic[4] = {'M', 'B', 'M', 'E'};
inline constexpr std::size_t kHeaderSize = 16;

using Index = std::map<std::string, std::uint32_t, std::less<>>;

struct WorkItem {
  std::uint32_t row;
  std::string headword;
  std::string text;
};

struct IndexBuild {
  Index index;
  std::vector<WorkItem> worklist;  // ordered by row id
};

/// Rows are assigned in byte order of the UTF-8 headword, which equals code
/// point order, so builds do not depend on dump order.
inline IndexBuild build_index(const dict::ResolvedTable& resolved) {
  IndexBuild out;
  std::uint32_t row = 0;
  for (const auto& [headword, entry] : resolved) {  // std::map: sorted
    out.index.emplace(headword, row);
    out.worklist.push_back({row, headword, entry.basic_meaning});
    ++row;
  }
  return out;
}

struct Lookup {
  std::span<const float> vector;
  bool oov = false;
};

class EmbeddingStore {
 public:
  EmbeddingStore() = default;

  /// Validates shape and content; throws validation_error on any violation.
  EmbeddingStore(Index index, std::vector<float> matrix, std::size_t dim)
      : index_(std::move(index)), matrix_(std::move(matrix)), dim_(dim),
        zeros_(dim, 0.0f) {
    if (dim_ == 0) throw validation_error("embedding dimension is zero");
    if (matrix_.size() % dim_ != 0) {
      throw validation_error("matrix size is not a multiple of dim");
    }
    const std::size_t rows = matrix_.size() / dim_;
    if (index_.size() != rows) {
      throw validation_error("row/index count mismatch: matrix has " +
                             std::to_string(rows) + " rows, index has " +
                             std::to_string(index_.size()) + " entries");
    }
    std::vector<bool> seen(rows, false);
    for (const auto& [headword, row] : index_) {
      if (row >= rows || seen[row]) {
        throw validation_error("index rows are not a permutation of 0.." +
                               std::to_string(rows == 0 ? 0 : rows - 1) +
                               " (headword '" + headword + "')");
      }
      seen[row] = true;
    }
    for (std::size_t i = 0; i < matrix_.size(); ++i) {
      if (!std::isfinite(matrix_[i])) {
        throw validation_error("non-finite value at row " +
                               std::to_string(i / dim_) + ", column " +
                               std::to_string(i % dim_));
      }
    }
  }

  std::size_t dim() const noexcept { return dim_; }
  std::size_t rows() const noexcept { return index_.size(); }
  const Index& index() const noexcept { return index_; }
  std::span<const float> matrix() const noexcept { return matrix_; }

  std::span<const float> row(std::uint32_t r) const {
    return std::span<const float>(matrix_).subspan(std::size_t{r} * dim_, dim_);
  }

  /// In-vocabulary tokens get their row; anything else the zero vector.
  Lookup lookup(std::string_view token) const {
    if (auto it = index_.find(token); it != index_.end()) {
      return {row(it->second), false};
    }
    return {zeros_, true};
  }

  std::optional<std::uint32_t> row_of(std::string_view token) const {
    if (auto it = index_.find(token); it != index_.end()) return it->second;
    return std::nullopt;
  }

 private:
  Index index_;
  std::vector<float> matrix_;
  std::size_t dim_ = kEmbeddingDim;
  std::vector<float> zeros_ = std::vector<float>(kEmbeddingDim, 0.0f);
};

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::uint32_t get_u32(const char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= std::uint32_t{static_cast<unsigned char>(p[i])} << (8 * i);
  }
  return v;
}

}  // namespace detail

inline std::string encode_matrix(std::span<const float> matrix,
                                 std::size_t rows, std::size_t dim) {
  std::string out;
  out.reserve(kHeaderSize + matrix.size() * 4);
  out.append(kMagic, 4);
  detail::put_u32(out, kFormatVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(rows));
  detail::put_u32(out, static_cast<std::uint32_t>(dim));
  for (float f : matrix) detail::put_u32(out, std::bit_cast<std::uint32_t>(f));
  return out;
}

struct DecodedMatrix {
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::vector<float> values;
};

inline DecodedMatrix decode_matrix(std::string_view bytes) {
  if (bytes.size() < kHeaderSize) {
    throw schema_error("embedding matrix shorter than its 16-byte header");
  }
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw schema_error("embedding matrix has a bad magic number");
  }
  const auto version = detail::get_u32(bytes.data() + 4);
  if (version != kFormatVersion) {
    throw schema_error("unsupported embedding matrix version " +
                       std::to_string(version));
  }
  DecodedMatrix m;
  m.rows = detail::get_u32(bytes.data() + 8);
  m.dim = detail::get_u32(bytes.data() + 12);
  const std::size_t expected = kHeaderSize + m.rows * m.dim * 4;
  if (bytes.size() != expected) {
    throw schema_error("embedding matrix payload is " +
                       std::to_string(bytes.size() - kHeaderSize) +
                       " bytes, header implies " +
                       std::to_string(expected - kHeaderSize));
  }
  m.values.resize(m.rows * m.dim);
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    m.values[i] =
        std::bit_cast<float>(detail::get_u32(bytes.data() + kHeaderSize + 4 * i));
  }
  return m;
}

inline std::string encode_index(const Index& index) {
  std::vector<std::pair<std::uint32_t, std::string_view>> by_row;
  for (const auto& [headword, row] : index) {
    if (headword.find_first_of("\t\n\r") != std::string::npos) {
      throw validation_error("headword '" + headword +
                             "' contains a tab or newline");
    }
    by_row.emplace_back(row, headword);
  }
  std::sort(by_row.begin(), by_row.end());
  std::string out;
  for (const auto& [row, headword] : by_row) {
    out.append(headword);
    out.push_back('\t');
    out.append(std::to_string(row));
    out.push_back('\n');
  }
  return out;
}

inline Index decode_index(std::istream& in) {
  Index index;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos || tab == 0) {
      throw schema_error("index line " + std::to_string(line_no) +
                         ": expected headword<TAB>row");
    }
    const std::string row_text = line.substr(tab + 1);
    std::uint32_t row = 0;
    auto [p, ec] = std::from_chars(row_text.data(),
                                   row_text.data() + row_text.size(), row);
    if (ec != std::errc() || p != row_text.data() + row_text.size()) {
      throw schema_error("index line " + std::to_string(line_no) +
                         ": row is not a non-negative integer");
    }
    if (!index.emplace(line.substr(0, tab), row).second) {
      throw schema_error("index line " + std::to_string(line_no) +
                         ": duplicate headword");
    }
  }
  return index;
}

inline void write_store(const std::filesystem::path& matrix_path,
                        const std::filesystem::path& index_path,
                        const EmbeddingStore& store) {
  io::write_atomic(matrix_path,
                   encode_matrix(store.matrix(), store.rows(), store.dim()));
  io::write_atomic(index_path, encode_index(store.index()));
}

/// Loads and validates a store. `expected_dim` is checked against the header.
inline EmbeddingStore load_store(const std::filesystem::path& matrix_path,
                                 const std::filesystem::path& index_path,
                                 std::size_t expected_dim = kEmbeddingDim) {
  auto decoded = decode_matrix(io::read_file(matrix_path));
  if (decoded.dim != expected_dim) {
    throw validation_error("dimension mismatch: matrix dim is " +
                           std::to_string(decoded.dim) + ", expected " +
                           std::to_string(expected_dim));
  }
  auto in = io::open_input(index_path);
  auto index = decode_index(in);
  return EmbeddingStore(std::move(index), std::move(decoded.values),
                        decoded.dim);
}

inline std::string write_worklist_jsonl(const std::vector<WorkItem>& worklist) {
  std::string out;
  for (const auto& item : worklist) {
    nlohmann::ordered_json j;
    j["row"] = item.row;
    j["headword"] = item.headword;
    j["text"] = item.text;
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace mipvu::store
