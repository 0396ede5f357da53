#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "mrset/error.hpp"
#include "mrset/index_io.hpp"
#include "reference.hpp"

using namespace mrset;

namespace {

ErrorCode load_error(std::vector<std::uint8_t> bytes) {
  try {
    deserialize_index(bytes, "S");
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kBadParameter;
}

}  // namespace

TEST(IndexFormat, HeaderLayout) {
  const MotherHash h = draw_mother(seed_from_u64(5), 64);
  const MultiResSet ms = MultiResSet::preprocess("S", std::vector<std::uint64_t>{1, 2, 2}, h, 128);
  const std::vector<std::uint8_t> b = serialize_index(ms, 3);
  ASSERT_GE(b.size(), 48u);
  EXPECT_EQ(std::string(b.begin(), b.begin() + 4), "MRS1");
  EXPECT_EQ(b[4], 64);   // w
  EXPECT_EQ(b[8], 128);  // W
  EXPECT_EQ(b[12], 3);   // C
  EXPECT_TRUE(std::equal(h.seed().begin(), h.seed().end(), b.begin() + 16));
  EXPECT_EQ(b[32], 2);  // n1
  EXPECT_EQ(b[40], 1);  // dedup
}

TEST(IndexFormat, RoundTripPreservesEveryGridLevel) {
  std::mt19937_64 rng(1);
  for (const std::size_t n : {0u, 1u, 2u, 77u, 5000u}) {
    const MotherHash h = draw_mother(seed_from_u64(n), 64);
    const auto s = ref::random_set(rng, n, 0);
    const MultiResSet ms = MultiResSet::preprocess("S", s, h, 256);
    const IndexFile back = deserialize_index(serialize_index(ms, 2), "S");
    EXPECT_EQ(back.C, 2u);
    EXPECT_EQ(back.set.keys(), ms.keys());
    EXPECT_EQ(back.set.elements(), s);
    EXPECT_EQ(back.set.lookup(), ms.lookup());
    for (std::size_t i = 0; i < ms.keys().size(); ++i)
      EXPECT_EQ(back.set.grid_set(i).flatten(), ms.grid_set(i).flatten());
    EXPECT_EQ(serialize_index(back.set, 2), serialize_index(ms, 2));
  }
}

TEST(IndexFormat, DeterministicBytes) {
  std::mt19937_64 rng(2);
  const auto s = ref::random_set(rng, 3000, 0);
  const MotherHash h = draw_mother(seed_from_u64(99), 64);
  EXPECT_EQ(serialize_index(MultiResSet::preprocess("S", s, h, 64), 2),
            serialize_index(MultiResSet::preprocess("S", s, h, 64), 2));
}

TEST(IndexFormat, CorruptInputRejected) {
  const MotherHash h = draw_mother(seed_from_u64(5), 64);
  const auto good = serialize_index(MultiResSet::preprocess("S", std::vector<std::uint64_t>{1, 2, 3, 4, 5}, h, 64), 2);
  auto bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_EQ(load_error(bad_magic), ErrorCode::kFormatError);
  EXPECT_EQ(load_error({good.begin(), good.end() - 3}), ErrorCode::kFormatError);
  auto extra = good;
  extra.push_back(0);
  EXPECT_EQ(load_error(extra), ErrorCode::kFormatError);
  auto reseeded = good;
  reseeded[16] ^= 1;
  EXPECT_EQ(load_error(reseeded), ErrorCode::kFormatError);
  auto bad_elem = good;
  bad_elem[bad_elem.size() - 1] ^= 0x40;
  EXPECT_EQ(load_error(bad_elem), ErrorCode::kFormatError);
}

TEST(IndexFormat, FileRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "mrset_index_io_test";
  std::filesystem::create_directories(dir);
  const MotherHash h = draw_mother(seed_from_u64(6), 32);
  const MultiResSet ms = MultiResSet::preprocess("S", std::vector<std::uint64_t>{10, 20, 30}, h, 64);
  write_index(dir / "s.mrs", ms, 2);
  EXPECT_EQ(read_index(dir / "s.mrs", "S").set.elements(), (std::vector<std::uint64_t>{10, 20, 30}));
  try {
    read_index(dir / "missing.mrs", "S");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIoError);
  }
  std::filesystem::remove_all(dir);
}
