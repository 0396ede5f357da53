#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace mrset {

using Seed = std::array<std::uint8_t, 16>;

// Multiply-add hashing over 2w-bit arithmetic, keeping the top w bits:
// h*(x) = ((a*x + c) mod 2^(2w)) div 2^w. Pairwise independent over
// w-bit keys.
class MotherHash {
 public:
  MotherHash(const Seed& seed, unsigned w);

  unsigned width() const noexcept { return w_; }
  const Seed& seed() const noexcept { return seed_; }

  std::uint64_t star(std::uint64_t x) const noexcept;
  // Top r bits of h*(x); requires 1 <= r <= w.
  std::uint64_t hash_r(std::uint64_t x, unsigned r) const;

  bool operator==(const MotherHash& o) const noexcept { return w_ == o.w_ && seed_ == o.seed_; }

 private:
  Seed seed_;
  unsigned w_;
  std::uint64_t a_lo_ = 0, a_hi_ = 0, c_lo_ = 0, c_hi_ = 0;
};

MotherHash draw_mother(const Seed& seed, unsigned w);

// Seed from a 64-bit integer (little-endian, upper half derived from it).
Seed seed_from_u64(std::uint64_t value);
// 32 hex digits; throws BadParameter on malformed input.
Seed parse_seed(std::string_view hex);
std::string seed_hex(const Seed& seed);

}  // namespace mrset
