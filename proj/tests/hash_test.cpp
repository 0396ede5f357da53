#include <gtest/gtest.h>

#include <random>

#include "mrset/error.hpp"
#include "mrset/hash.hpp"

using namespace mrset;

TEST(MotherHash, DeterministicInSeed) {
  const Seed seed = seed_from_u64(42);
  const MotherHash a = draw_mother(seed, 64);
  const MotherHash b = draw_mother(seed, 64);
  const MotherHash c = draw_mother(seed_from_u64(43), 64);
  std::mt19937_64 rng(1);
  int differ = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::uint64_t x = rng();
    EXPECT_EQ(a.star(x), b.star(x));
    differ += a.star(x) != c.star(x);
  }
  EXPECT_GT(differ, 990);
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(a == c);
}

TEST(MotherHash, WidthValidated) {
  EXPECT_THROW(draw_mother(Seed{}, 7), Error);
  EXPECT_THROW(draw_mother(Seed{}, 65), Error);
  EXPECT_NO_THROW(draw_mother(Seed{}, 8));
  const MotherHash h = draw_mother(Seed{}, 16);
  EXPECT_THROW(h.hash_r(1, 0), Error);
  EXPECT_THROW(h.hash_r(1, 17), Error);
}

TEST(MotherHash, OutputFitsWidth) {
  std::mt19937_64 rng(2);
  for (const unsigned w : {8u, 16u, 31u, 48u}) {
    const MotherHash h = draw_mother(seed_from_u64(w), w);
    for (int i = 0; i < 1000; ++i) EXPECT_LT(h.star(rng() >> (64 - w)), std::uint64_t{1} << w);
  }
}

TEST(HashR, TopBitsOfMotherValue) {
  // Find some 16-bit key whose mother value is 0xB3C1.
  for (std::uint64_t s = 0; s < 64; ++s) {
    const MotherHash h = draw_mother(seed_from_u64(s), 16);
    for (std::uint64_t x = 0; x < (1u << 16); ++x) {
      if (h.star(x) != 0xB3C1) continue;
      EXPECT_EQ(h.hash_r(x, 8), 0xB3u);
      EXPECT_EQ(h.hash_r(x, 4), 0xBu);
      EXPECT_EQ(h.hash_r(x, 16), 0xB3C1u);
      return;
    }
  }
  FAIL() << "no key with mother value 0xB3C1 found";
}

TEST(HashR, TruncationConsistency) {
  std::mt19937_64 rng(3);
  for (const unsigned w : {8u, 32u, 64u}) {
    const MotherHash h = draw_mother(seed_from_u64(rng()), w);
    for (int i = 0; i < 200; ++i) {
      const std::uint64_t x = w == 64 ? rng() : rng() >> (64 - w);
      EXPECT_EQ(h.hash_r(x, w), h.star(x));
      for (unsigned r = 1; r <= w; ++r)
        for (unsigned r2 = r; r2 <= w; r2 += 7) EXPECT_EQ(h.hash_r(x, r), h.hash_r(x, r2) >> (r2 - r));
    }
  }
}

TEST(HashR, PairwiseCollisionRate) {
  std::mt19937_64 rng(4);
  const MotherHash h = draw_mother(seed_from_u64(rng()), 64);
  const int pairs = 1'000'000;
  int collisions = 0;
  for (int i = 0; i < pairs; ++i) {
    const std::uint64_t x = rng();
    std::uint64_t y = rng();
    if (y == x) ++y;
    collisions += h.hash_r(x, 16) == h.hash_r(y, 16);
  }
  EXPECT_LE(static_cast<double>(collisions) / pairs, std::ldexp(1.0, -15));
}

TEST(Seed, HexRoundTrip) {
  const Seed s = seed_from_u64(0x1234);
  EXPECT_EQ(parse_seed(seed_hex(s)), s);
  EXPECT_EQ(seed_hex(s).size(), 32u);
  EXPECT_THROW(parse_seed("zz"), Error);
  EXPECT_THROW(parse_seed(std::string(32, 'g')), Error);
}
