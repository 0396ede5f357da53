#include "mrset/word.hpp"

#include <algorithm>
#include <bit>
#include <cassert>

#include "mrset/error.hpp"

namespace mrset {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kBadParameter: return "BadParameter";
    case ErrorCode::kValueOutOfRange: return "ValueOutOfRange";
    case ErrorCode::kParameterMismatch: return "ParameterMismatch";
    case ErrorCode::kDuplicateElement: return "DuplicateElement";
    case ErrorCode::kSeedMismatch: return "SeedMismatch";
    case ErrorCode::kUnknownSet: return "UnknownSet";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kFormatError: return "FormatError";
  }
  return "Unknown";
}

Reg::Reg(unsigned nbits) : nbits_(nbits) {
  assert(nbits <= kMaxBits);
  for (unsigned i = 0; i < limbs(); ++i) v_[i] = 0;
}

Reg Reg::from_limbs(std::span<const std::uint64_t> limbs, unsigned nbits) {
  Reg r(nbits);
  const unsigned n = std::min<unsigned>(r.limbs(), static_cast<unsigned>(limbs.size()));
  for (unsigned i = 0; i < n; ++i) r.v_[i] = limbs[i];
  r.trim();
  return r;
}

void Reg::trim() noexcept {
  const unsigned rem = nbits_ % 64;
  if (rem != 0) v_[limbs() - 1] &= (std::uint64_t{1} << rem) - 1;
}

std::uint64_t Reg::extract(unsigned pos, unsigned len) const noexcept {
  if (len == 0 || pos >= nbits_) return 0;
  const unsigned li = pos / 64;
  const unsigned off = pos % 64;
  std::uint64_t out = v_[li] >> off;
  if (off != 0 && off + len > 64 && li + 1 < limbs()) out |= v_[li + 1] << (64 - off);
  if (len < 64) out &= (std::uint64_t{1} << len) - 1;
  return out;
}

void Reg::deposit(unsigned pos, unsigned len, std::uint64_t value) noexcept {
  if (len == 0 || pos >= nbits_) return;
  if (len < 64) value &= (std::uint64_t{1} << len) - 1;
  const unsigned li = pos / 64;
  const unsigned off = pos % 64;
  v_[li] |= value << off;
  if (off != 0 && off + len > 64 && li + 1 < limbs()) v_[li + 1] |= value >> (64 - off);
  trim();
}

bool Reg::any() const noexcept {
  for (unsigned i = 0; i < limbs(); ++i)
    if (v_[i] != 0) return true;
  return false;
}

unsigned Reg::find_next(unsigned from) const noexcept {
  if (from >= nbits_) return nbits_;
  unsigned li = from / 64;
  std::uint64_t cur = v_[li] & (~std::uint64_t{0} << (from % 64));
  while (true) {
    if (cur != 0) return std::min(nbits_, li * 64 + static_cast<unsigned>(std::countr_zero(cur)));
    if (++li >= limbs()) return nbits_;
    cur = v_[li];
  }
}

Reg Reg::resized(unsigned nbits) const {
  Reg r(nbits);
  const unsigned n = std::min(r.limbs(), limbs());
  for (unsigned i = 0; i < n; ++i) r.v_[i] = v_[i];
  r.trim();
  return r;
}

void Reg::store(std::span<std::uint64_t> out) const noexcept {
  const unsigned n = std::min<unsigned>(limbs(), static_cast<unsigned>(out.size()));
  for (unsigned i = 0; i < n; ++i) out[i] = v_[i];
}

Reg Reg::operator&(const Reg& o) const noexcept {
  Reg r(nbits_);
  for (unsigned i = 0; i < limbs(); ++i) r.v_[i] = v_[i] & (i < o.limbs() ? o.v_[i] : 0);
  return r;
}

Reg Reg::operator|(const Reg& o) const noexcept {
  Reg r(nbits_);
  for (unsigned i = 0; i < limbs(); ++i) r.v_[i] = v_[i] | (i < o.limbs() ? o.v_[i] : 0);
  r.trim();
  return r;
}

Reg Reg::operator^(const Reg& o) const noexcept {
  Reg r(nbits_);
  for (unsigned i = 0; i < limbs(); ++i) r.v_[i] = v_[i] ^ (i < o.limbs() ? o.v_[i] : 0);
  r.trim();
  return r;
}

Reg Reg::operator~() const noexcept {
  Reg r(nbits_);
  for (unsigned i = 0; i < limbs(); ++i) r.v_[i] = ~v_[i];
  r.trim();
  return r;
}

Reg Reg::operator<<(unsigned s) const noexcept {
  Reg r(nbits_);
  if (s >= nbits_) return r;
  const unsigned ls = s / 64;
  const unsigned bs = s % 64;
  for (unsigned i = limbs(); i-- > ls;) {
    std::uint64_t v = v_[i - ls] << bs;
    if (bs != 0 && i - ls >= 1) v |= v_[i - ls - 1] >> (64 - bs);
    r.v_[i] = v;
  }
  r.trim();
  return r;
}

Reg Reg::operator>>(unsigned s) const noexcept {
  Reg r(nbits_);
  if (s >= nbits_) return r;
  const unsigned ls = s / 64;
  const unsigned bs = s % 64;
  const unsigned n = limbs();
  for (unsigned i = 0; i + ls < n; ++i) {
    std::uint64_t v = v_[i + ls] >> bs;
    if (bs != 0 && i + ls + 1 < n) v |= v_[i + ls + 1] << (64 - bs);
    r.v_[i] = v;
  }
  return r;
}

Reg Reg::operator+(const Reg& o) const noexcept {
  Reg r(nbits_);
  std::uint64_t carry = 0;
  for (unsigned i = 0; i < limbs(); ++i) {
    const std::uint64_t b = i < o.limbs() ? o.v_[i] : 0;
    const std::uint64_t s = v_[i] + b;
    const std::uint64_t c1 = s < v_[i];
    r.v_[i] = s + carry;
    carry = c1 | (r.v_[i] < s);
  }
  r.trim();
  return r;
}

Reg Reg::operator-(const Reg& o) const noexcept {
  Reg r(nbits_);
  std::uint64_t borrow = 0;
  for (unsigned i = 0; i < limbs(); ++i) {
    const std::uint64_t b = i < o.limbs() ? o.v_[i] : 0;
    const std::uint64_t d = v_[i] - b;
    const std::uint64_t b1 = v_[i] < b;
    r.v_[i] = d - borrow;
    borrow = b1 | (d < borrow);
  }
  r.trim();
  return r;
}

bool Reg::operator==(const Reg& o) const noexcept {
  if (nbits_ != o.nbits_) return false;
  for (unsigned i = 0; i < limbs(); ++i)
    if (v_[i] != o.v_[i]) return false;
  return true;
}

}  // namespace mrset
