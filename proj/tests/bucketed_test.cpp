#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "mrset/bucketed.hpp"
#include "mrset/error.hpp"
#include "reference.hpp"

using namespace mrset;
using V = std::vector<std::uint64_t>;

namespace {

std::vector<V> buckets_of(const BucketedSet& s) {
  std::vector<V> out;
  for (std::size_t i = 0; i < s.bucket_count(); ++i) out.push_back(decode(s.bucket(i)));
  return out;
}

V project(const V& v, unsigned x) {
  V out;
  for (const std::uint64_t e : v) out.push_back(x >= 64 ? 0 : e >> x);
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kIoError;
}

// Serialized bits of a balanced set divided by 2^b*W + size*(l-b). Largest
// value measured in Space.StaysWithinFrozenBound over l in {16,24,32,48,64},
// W in {64..512}, sizes up to 2^14: 2.0.
constexpr double kSpaceConstant = 3.0;

}  // namespace

TEST(Build, SplitsByHighBits) {
  const BucketedSet s = build_bucketed(V{3, 17, 18, 40}, 6, 2, 64);
  EXPECT_EQ(buckets_of(s), (std::vector<V>{{3}, {1, 2}, {8}, {}}));
  EXPECT_EQ(s.size(), 4u);
  EXPECT_EQ(s.flatten(), (V{3, 17, 18, 40}));
}

TEST(Build, EmptyAndSingleBucket) {
  const BucketedSet e = build_bucketed(V{}, 6, 2, 64);
  EXPECT_EQ(buckets_of(e), (std::vector<V>{{}, {}, {}, {}}));
  const BucketedSet s = build_bucketed(V{0, 63}, 6, 0, 64);
  EXPECT_EQ(buckets_of(s), (std::vector<V>{{0, 63}}));
}

TEST(Build, RejectsBadInput) {
  EXPECT_EQ(code_of([] { build_bucketed(V{2, 1}, 6, 1, 64); }), ErrorCode::kBadParameter);
  EXPECT_EQ(code_of([] { build_bucketed(V{64}, 6, 1, 64); }), ErrorCode::kValueOutOfRange);
  EXPECT_EQ(code_of([] { build_bucketed(V{1}, 6, 7, 64); }), ErrorCode::kBadParameter);
}

TEST(Rebucket, Examples) {
  const BucketedSet s = build_bucketed(V{3, 17, 18, 40}, 6, 2, 64);
  const BucketedSet r = rebucket(s, 1);
  EXPECT_EQ(buckets_of(r), (std::vector<V>{{3, 17, 18}, {8}}));
  EXPECT_EQ(r.flatten(), s.flatten());
  EXPECT_EQ(rebucket(s, 2), s);
  const BucketedSet z = build_bucketed(V{3, 17, 18, 40}, 6, 0, 64);
  EXPECT_EQ(rebucket(z, 2), s);
}

TEST(Rebucket, RandomSetsBothDirections) {
  std::mt19937_64 rng(21);
  for (const unsigned W : {64u, 128u, 512u}) {
    for (const unsigned l : {8u, 16u, 33u, 64u}) {
      for (int t = 0; t < 6; ++t) {
        const V v = ref::random_set(rng, rng() % 3000, l == 64 ? 0 : std::uint64_t{1} << l);
        const unsigned b0 = static_cast<unsigned>(rng() % std::min(l, 13u));
        if (l - b0 > 63) continue;
        const BucketedSet s = build_bucketed(v, l, b0, W);
        for (unsigned b = 0; b <= std::min(l, 12u); ++b) {
          if (l - b > 63) continue;
          const BucketedSet r = rebucket(s, b);
          ASSERT_EQ(r, build_bucketed(v, l, b, W)) << "W=" << W << " l=" << l << " " << b0 << "->" << b;
        }
      }
    }
  }
}

TEST(ProjectDiv, Examples) {
  const BucketedSet s = build_bucketed(V{3, 17, 18, 40}, 6, 1, 64);
  const BucketedSet p = project_div(s, 2);
  EXPECT_EQ(p.element_bits(), 4u);
  EXPECT_EQ(p.bucket_bits(), 1u);
  EXPECT_EQ(p.flatten(), (V{0, 4, 10}));
  EXPECT_EQ(project_div(build_bucketed(V{5}, 6, 1, 64), 5).flatten(), (V{0}));
  EXPECT_TRUE(project_div(build_bucketed(V{}, 6, 1, 64), 3).empty());
}

TEST(ProjectDiv, RangeChecked) {
  const BucketedSet s = build_bucketed(V{3, 17, 18, 40}, 6, 2, 64);
  EXPECT_EQ(code_of([&] { project_div(s, 2); }), ErrorCode::kBadParameter);
  EXPECT_EQ(code_of([&] { project_div(s, 7); }), ErrorCode::kBadParameter);
  EXPECT_EQ(project_div(s, 6).flatten(), (V{0}));
}

TEST(ProjectDiv, AnyShiftMatchesScalarDivision) {
  std::mt19937_64 rng(8);
  for (const unsigned W : {16u, 64u, 256u}) {
    for (const unsigned l : {6u, 12u, 20u, 40u, 64u}) {
      if (W == 16 && l > 20) continue;
      for (int t = 0; t < 5; ++t) {
        const V v = ref::random_set(rng, rng() % 2000, l == 64 ? 0 : std::uint64_t{1} << l);
        const BucketedSet s = build_bucketed(v, l, balanced_bucket_bits(v.size(), l, W), W);
        for (unsigned x = 0; x <= l; ++x) {
          const BucketedSet p = project_div_any(s, x);
          ASSERT_EQ(p.flatten(), project(v, x)) << "W=" << W << " l=" << l << " x=" << x;
          ASSERT_EQ(p.element_bits(), l - x);
        }
      }
    }
  }
}

TEST(Balance, FormulaAndClamp) {
  EXPECT_EQ(balanced_bucket_bits(4096, 32, 64), 6u);
  EXPECT_EQ(balanced_bucket_bits(100, 32, 512), 0u);
  EXPECT_EQ(balanced_bucket_bits(0, 32, 64), 0u);
  // Remainders must stay wide enough to index a word's fields.
  EXPECT_EQ(balanced_bucket_bits(1u << 20, 16, 64), 12u);
  std::mt19937_64 rng(4);
  const V v = ref::random_set(rng, 5000, std::uint64_t{1} << 30);
  const BucketedSet s = build_bucketed(v, 30, 0, 64);
  const BucketedSet b = balance(s);
  EXPECT_EQ(b.bucket_bits(), balanced_bucket_bits(v.size(), 30, 64));
  EXPECT_TRUE(b.balanced());
  EXPECT_EQ(b.flatten(), v);
}

TEST(SetOps, Examples) {
  const BucketedSet a = build_bucketed(V{1, 2, 3}, 6, 0, 64);
  const BucketedSet b = build_bucketed(V{2, 3, 4}, 6, 0, 64);
  EXPECT_EQ(bucketed_intersect(a, b).flatten(), (V{2, 3}));
  EXPECT_EQ(bucketed_union(a, b).flatten(), (V{1, 2, 3, 4}));
  const BucketedSet e(6, 64);
  EXPECT_EQ(bucketed_union(a, e).flatten(), a.flatten());
  EXPECT_TRUE(bucketed_intersect(a, e).empty());
  EXPECT_EQ(code_of([&] { bucketed_union(a, BucketedSet(7, 64)); }), ErrorCode::kParameterMismatch);
  EXPECT_EQ(code_of([&] { bucketed_intersect(a, BucketedSet(6, 128)); }),
            ErrorCode::kParameterMismatch);
}

TEST(SetOps, ExhaustiveThreeBitUniverse) {
  for (unsigned ma = 0; ma < 256; ++ma) {
    const V a = ref::subset_of_mask(ma);
    const BucketedSet ba = build_bucketed(a, 3, 0, 64);
    for (unsigned mb = 0; mb < 256; ++mb) {
      const V b = ref::subset_of_mask(mb);
      const BucketedSet bb = build_bucketed(b, 3, 0, 64);
      ASSERT_EQ(bucketed_union(ba, bb).flatten(), ref::set_union(a, b));
      ASSERT_EQ(bucketed_intersect(ba, bb).flatten(), ref::set_intersection(a, b));
    }
  }
}

TEST(SetOps, RandomFourBitPairs) {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 20000; ++t) {
    const V a = ref::subset_of_mask(static_cast<unsigned>(rng() & 0xffff));
    const V b = ref::subset_of_mask(static_cast<unsigned>(rng() & 0xffff));
    const BucketedSet ba = build_bucketed(a, 4, static_cast<unsigned>(rng() % 3), 64);
    const BucketedSet bb = build_bucketed(b, 4, 0, 64);
    ASSERT_EQ(bucketed_union(ba, bb).flatten(), ref::set_union(a, b));
    ASSERT_EQ(bucketed_intersect(ba, bb).flatten(), ref::set_intersection(a, b));
  }
}

TEST(SetOps, RandomLargeSetsAreBalanced) {
  std::mt19937_64 rng(31);
  for (const unsigned W : {64u, 128u, 256u, 512u}) {
    for (const unsigned l : {20u, 32u, 64u}) {
      for (int t = 0; t < 4; ++t) {
        const std::uint64_t lim = l == 64 ? 0 : std::uint64_t{1} << l;
        V a = ref::random_set(rng, rng() % 6000, lim);
        V b(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(a.size() / 3));
        const V extra = ref::random_set(rng, rng() % 6000, lim);
        b = ref::set_union(b, extra);
        const BucketedSet ba = balance(build_bucketed(a, l, l == 64 ? 1 : 0, W));
        const BucketedSet bb = balance(build_bucketed(b, l, l == 64 ? 1 : 0, W));
        const BucketedSet u = bucketed_union(ba, bb);
        const BucketedSet i = bucketed_intersect(ba, bb);
        ASSERT_EQ(u.flatten(), ref::set_union(a, b));
        ASSERT_EQ(i.flatten(), ref::set_intersection(a, b));
        EXPECT_TRUE(u.balanced());
        EXPECT_TRUE(i.balanced());
      }
    }
  }
}

TEST(Space, StaysWithinFrozenBound) {
  std::mt19937_64 rng(2);
  for (const unsigned W : {64u, 128u, 256u, 512u}) {
    for (const unsigned l : {16u, 24u, 32u, 48u, 64u}) {
      for (const std::size_t n : {10u, 300u, 4096u, 16384u}) {
        const V v = ref::random_set(rng, n, l == 64 ? 0 : std::uint64_t{1} << l);
        const BucketedSet s = balance(build_bucketed(v, l, l == 64 ? 1 : 0, W));
        const double bits = 64.0 * static_cast<double>(s.offsets().size() + s.payload().size());
        const double scale = std::ldexp(1.0, static_cast<int>(s.bucket_bits())) * W +
                             static_cast<double>(v.size()) * (l - s.bucket_bits());
        EXPECT_LE(bits / scale, kSpaceConstant) << "W=" << W << " l=" << l << " n=" << n;
      }
    }
  }
}

TEST(Constructor, ValidatesParts) {
  const BucketedSet s = build_bucketed(V{3, 17, 18, 40}, 6, 2, 64);
  EXPECT_NO_THROW(BucketedSet(6, 2, 64, s.offsets(), s.payload()));
  std::vector<std::uint64_t> bad = s.offsets();
  bad[1] = 3;
  EXPECT_EQ(code_of([&] { BucketedSet(6, 2, 64, bad, s.payload()); }), ErrorCode::kFormatError);
  std::vector<std::uint64_t> payload = s.payload();
  payload.push_back(0);
  EXPECT_EQ(code_of([&] { BucketedSet(6, 2, 64, s.offsets(), payload); }), ErrorCode::kFormatError);
}
