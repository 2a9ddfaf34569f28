#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "mipvu/dict_pipeline.hpp"
#include "mipvu/embedding_store.hpp"

namespace {

namespace fs = std::filesystem;
using namespace mipvu::store;

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("mipvu_store_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter_++));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  static inline int counter_ = 0;
  fs::path path_;
};

std::vector<float> random_matrix(std::size_t rows, std::size_t dim, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<float> n(0.0f, 1.0f);
  std::vector<float> m(rows * dim);
  for (auto& v : m) v = n(rng);
  return m;
}

void write_raw(const fs::path& matrix, const fs::path& index,
               const std::vector<float>& values, std::size_t rows, std::size_t dim,
               const std::string& index_text) {
  mipvu::io::write_atomic(matrix, encode_matrix(values, rows, dim));
  mipvu::io::write_atomic(index, index_text);
}

TEST(EmbeddingStore, LoadsAndLooksUp) {
  TempDir dir;
  auto values = random_matrix(2, kEmbeddingDim, 1);
  write_raw(dir.path() / "e.bin", dir.path() / "e.index", values, 2, kEmbeddingDim,
            "a\t0\nb\t1\n");
  auto store = load_store(dir.path() / "e.bin", dir.path() / "e.index");
  EXPECT_EQ(store.rows(), 2u);
  auto b = store.lookup("b");
  EXPECT_FALSE(b.oov);
  ASSERT_EQ(b.vector.size(), kEmbeddingDim);
  for (std::size_t i = 0; i < kEmbeddingDim; ++i) {
    ASSERT_EQ(b.vector[i], values[kEmbeddingDim + i]);
  }
}

TEST(EmbeddingStore, UnknownTokenIsZeroVector) {
  TempDir dir;
  write_raw(dir.path() / "e.bin", dir.path() / "e.index",
            random_matrix(2, kEmbeddingDim, 2), 2, kEmbeddingDim, "a\t0\nb\t1\n");
  auto store = load_store(dir.path() / "e.bin", dir.path() / "e.index");
  auto z = store.lookup("z");
  EXPECT_TRUE(z.oov);
  ASSERT_EQ(z.vector.size(), kEmbeddingDim);
  for (float v : z.vector) ASSERT_EQ(v, 0.0f);
}

TEST(EmbeddingStore, DimensionMismatch) {
  TempDir dir;
  write_raw(dir.path() / "e.bin", dir.path() / "e.index", random_matrix(2, 512, 3),
            2, 512, "a\t0\nb\t1\n");
  try {
    load_store(dir.path() / "e.bin", dir.path() / "e.index");
    FAIL() << "expected a dimension error";
  } catch (const mipvu::Error& e) {
    EXPECT_EQ(e.kind(), mipvu::ErrorKind::validation);
    EXPECT_NE(std::string(e.what()).find("dimension"), std::string::npos);
  }
}

TEST(EmbeddingStore, RowCountMismatch) {
  TempDir dir;
  write_raw(dir.path() / "e.bin", dir.path() / "e.index",
            random_matrix(3, kEmbeddingDim, 4), 3, kEmbeddingDim, "a\t0\nb\t1\n");
  try {
    load_store(dir.path() / "e.bin", dir.path() / "e.index");
    FAIL() << "expected a count error";
  } catch (const mipvu::Error& e) {
    EXPECT_NE(std::string(e.what()).find("count mismatch"), std::string::npos);
  }
}

TEST(EmbeddingStore, RejectsNonFiniteValues) {
  auto values = random_matrix(2, 4, 5);
  values[6] = std::numeric_limits<float>::quiet_NaN();
  EXPECT_THROW(EmbeddingStore(Index{{"a", 0}, {"b", 1}}, values, 4), mipvu::Error);
  values[6] = std::numeric_limits<float>::infinity();
  EXPECT_THROW(EmbeddingStore(Index{{"a", 0}, {"b", 1}}, values, 4), mipvu::Error);
}

TEST(EmbeddingStore, RejectsNonPermutationIndex) {
  auto values = random_matrix(2, 4, 6);
  EXPECT_THROW(EmbeddingStore(Index{{"a", 0}, {"b", 0}}, values, 4), mipvu::Error);
  EXPECT_THROW(EmbeddingStore(Index{{"a", 0}, {"b", 2}}, values, 4), mipvu::Error);
}

TEST(EmbeddingStore, RejectsCorruptHeader) {
  auto bytes = encode_matrix(random_matrix(1, 4, 7), 1, 4);
  EXPECT_THROW(decode_matrix(bytes.substr(0, 10)), mipvu::Error);
  EXPECT_THROW(decode_matrix(bytes.substr(0, bytes.size() - 1)), mipvu::Error);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_matrix(bad_magic), mipvu::Error);
}

TEST(EmbeddingStore, IndexRejectsMalformedLines) {
  std::istringstream no_tab("a 0\n");
  EXPECT_THROW(decode_index(no_tab), mipvu::Error);
  std::istringstream bad_row("a\tx\n");
  EXPECT_THROW(decode_index(bad_row), mipvu::Error);
  std::istringstream dup("a\t0\na\t1\n");
  EXPECT_THROW(decode_index(dup), mipvu::Error);
}

TEST(EmbeddingStoreProperty, WriteThenLoadIsBitIdentical) {
  TempDir dir;
  std::mt19937 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t rows = 1 + rng() % 30;
    const std::size_t dim = 1 + rng() % 64;
    auto values = random_matrix(rows, dim, static_cast<unsigned>(trial));
    std::vector<std::uint32_t> perm(rows);
    for (std::uint32_t i = 0; i < rows; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    Index index;
    for (std::size_t i = 0; i < rows; ++i) index["w" + std::to_string(i)] = perm[i];

    EmbeddingStore store(index, values, dim);
    write_store(dir.path() / "m.bin", dir.path() / "m.index", store);
    auto back = load_store(dir.path() / "m.bin", dir.path() / "m.index", dim);
    ASSERT_EQ(back.index(), index);
    auto m = back.matrix();
    ASSERT_EQ(m.size(), values.size());
    ASSERT_EQ(std::memcmp(m.data(), values.data(), values.size() * sizeof(float)), 0);

    // oov exactly when the token is absent from the index
    for (int probe = 0; probe < 40; ++probe) {
      const std::string token = "w" + std::to_string(rng() % (rows * 2));
      ASSERT_EQ(back.lookup(token).oov, !index.contains(token));
    }
  }
}

TEST(BuildIndex, RowsFollowSortedHeadwords) {
  auto table = mipvu::dict::parse_records(std::vector<mipvu::dict::RawEntry>{
                                              {"b", "乙。"}, {"a", "见〖b〗"}})
                   .table;
  auto [resolved, _] = mipvu::dict::resolve_references(table);
  auto build = build_index(resolved);
  EXPECT_EQ(build.index, (Index{{"a", 0}, {"b", 1}}));
  ASSERT_EQ(build.worklist.size(), 2u);
  EXPECT_EQ(build.worklist[0].row, 0u);
  EXPECT_EQ(build.worklist[0].headword, "a");
  EXPECT_EQ(build.worklist[0].text, "乙。");
  EXPECT_EQ(build.worklist[1].text, "乙。");
}

}  // namespace
