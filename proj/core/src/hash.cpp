#include "mrset/hash.hpp"

#include <cstdio>

#include "mrset/error.hpp"

namespace mrset {

namespace {

__extension__ using u128 = unsigned __int128;

u128 join(std::uint64_t hi, std::uint64_t lo) { return (u128{hi} << 64) | lo; }

u128 width_mask(unsigned w) {
  return w == 64 ? ~u128{0} : (u128{1} << (2 * w)) - 1;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t read_le(const Seed& s, unsigned off) {
  std::uint64_t v = 0;
  for (unsigned i = 0; i < 8; ++i) v |= std::uint64_t{s[off + i]} << (8 * i);
  return v;
}

}  // namespace

MotherHash::MotherHash(const Seed& seed, unsigned w) : seed_(seed), w_(w) {
  if (w < 8 || w > 64) fail(ErrorCode::kBadParameter, "hash width w must be in [8, 64]");
  std::uint64_t state = read_le(seed, 0) ^ (read_le(seed, 8) * 0x9e3779b97f4a7c15ULL);
  const u128 mask = width_mask(w);
  const auto draw = [&](std::uint64_t& hi, std::uint64_t& lo) {
    const std::uint64_t h = splitmix64(state);
    const u128 v = join(h, splitmix64(state)) & mask;
    hi = static_cast<std::uint64_t>(v >> 64);
    lo = static_cast<std::uint64_t>(v);
  };
  draw(a_hi_, a_lo_);
  draw(c_hi_, c_lo_);
}

std::uint64_t MotherHash::star(std::uint64_t x) const noexcept {
  const u128 v = (join(a_hi_, a_lo_) * x + join(c_hi_, c_lo_)) & width_mask(w_);
  return static_cast<std::uint64_t>(v >> w_);
}

std::uint64_t MotherHash::hash_r(std::uint64_t x, unsigned r) const {
  if (r < 1 || r > w_)
    fail(ErrorCode::kBadParameter, "resolution r=" + std::to_string(r) + " outside [1, w]");
  return star(x) >> (w_ - r);
}

MotherHash draw_mother(const Seed& seed, unsigned w) { return MotherHash(seed, w); }

Seed seed_from_u64(std::uint64_t value) {
  Seed s{};
  std::uint64_t state = value;
  const std::uint64_t hi = splitmix64(state);
  for (unsigned i = 0; i < 8; ++i) {
    s[i] = static_cast<std::uint8_t>(value >> (8 * i));
    s[8 + i] = static_cast<std::uint8_t>(hi >> (8 * i));
  }
  return s;
}

Seed parse_seed(std::string_view hex) {
  if (hex.size() != 32) fail(ErrorCode::kBadParameter, "seed must be 32 hex digits");
  Seed s{};
  for (unsigned i = 0; i < 16; ++i) {
    unsigned byte = 0;
    for (unsigned j = 0; j < 2; ++j) {
      const char c = hex[2 * i + j];
      unsigned d;
      if (c >= '0' && c <= '9') d = c - '0';
      else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
      else if (c >= 'A' && c <= 'F') d = c - 'A' + 10;
      else fail(ErrorCode::kBadParameter, "seed must be 32 hex digits");
      byte = byte * 16 + d;
    }
    s[i] = static_cast<std::uint8_t>(byte);
  }
  return s;
}

std::string seed_hex(const Seed& seed) {
  std::string out;
  char buf[3];
  for (const std::uint8_t b : seed) {
    std::snprintf(buf, sizeof buf, "%02x", b);
    out += buf;
  }
  return out;
}

}  // namespace mrset
