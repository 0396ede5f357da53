#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "mrset/op_counter.hpp"

namespace mrset {

// Simulated word widths. 16 and 32 exist so small layouts (e.g. 3-bit
// fields) satisfy the field-count condition; everything else is built from
// 64-bit limbs.
constexpr bool valid_word_width(unsigned w) noexcept {
  return w == 16 || w == 32 || w == 64 || w == 128 || w == 256 || w == 512;
}

constexpr unsigned limbs_per_word(unsigned w) noexcept { return (w + 63) / 64; }

constexpr unsigned ceil_log2(std::uint64_t x) noexcept {
  unsigned r = 0;
  while ((std::uint64_t{1} << r) < x && r < 64) ++r;
  return r;
}

constexpr unsigned floor_log2(std::uint64_t x) noexcept {
  unsigned r = 0;
  while (x > 1) {
    x >>= 1;
    ++r;
  }
  return r;
}

// Fixed-capacity bit register. Bits at positions >= bits() are always zero;
// limbs past limbs() are never read.
class Reg {
 public:
  static constexpr unsigned kMaxBits = 2048;
  static constexpr unsigned kMaxLimbs = kMaxBits / 64;

  Reg() = default;
  explicit Reg(unsigned nbits);

  static Reg from_limbs(std::span<const std::uint64_t> limbs, unsigned nbits);

  unsigned bits() const noexcept { return nbits_; }
  unsigned limbs() const noexcept { return (nbits_ + 63) / 64; }

  std::uint64_t limb(unsigned i) const noexcept { return v_[i]; }
  void set_limb(unsigned i, std::uint64_t value) noexcept { v_[i] = value; }

  bool test(unsigned bit) const noexcept { return (v_[bit / 64] >> (bit % 64)) & 1u; }
  void set(unsigned bit) noexcept { v_[bit / 64] |= std::uint64_t{1} << (bit % 64); }

  // Reads len <= 64 bits starting at pos.
  std::uint64_t extract(unsigned pos, unsigned len) const noexcept;
  // ORs the low len bits of value in at pos.
  void deposit(unsigned pos, unsigned len, std::uint64_t value) noexcept;

  bool any() const noexcept;
  // Lowest set bit at or above `from`, or bits() if none.
  unsigned find_next(unsigned from) const noexcept;

  Reg resized(unsigned nbits) const;
  void store(std::span<std::uint64_t> out) const noexcept;

  Reg operator&(const Reg& o) const noexcept;
  Reg operator|(const Reg& o) const noexcept;
  Reg operator^(const Reg& o) const noexcept;
  Reg operator~() const noexcept;
  Reg operator<<(unsigned s) const noexcept;
  Reg operator>>(unsigned s) const noexcept;
  Reg operator+(const Reg& o) const noexcept;
  Reg operator-(const Reg& o) const noexcept;
  Reg& operator|=(const Reg& o) noexcept { return *this = *this | o; }
  Reg& operator&=(const Reg& o) noexcept { return *this = *this & o; }

  bool operator==(const Reg& o) const noexcept;

 private:
  void trim() noexcept;

  std::array<std::uint64_t, kMaxLimbs> v_;
  unsigned nbits_ = 0;
};

// Counted arithmetic on simulated words. Every call charges
// ceil(register bits / W) word operations to the context's counter.
class Alu {
 public:
  Alu(unsigned word_bits, const ExecContext& ctx) : w_(word_bits), ctx_(ctx) {}

  unsigned word_bits() const noexcept { return w_; }
  const ExecContext& context() const noexcept { return ctx_; }

  Reg and_(const Reg& a, const Reg& b) const { charge(a); return a & b; }
  Reg or_(const Reg& a, const Reg& b) const { charge(a); return a | b; }
  Reg xor_(const Reg& a, const Reg& b) const { charge(a); return a ^ b; }
  Reg andn(const Reg& a, const Reg& b) const { charge(a); return a & ~b; }
  Reg shl(const Reg& a, unsigned s) const { charge(a); return a << s; }
  Reg shr(const Reg& a, unsigned s) const { charge(a); return a >> s; }
  Reg add(const Reg& a, const Reg& b) const { charge(a); return a + b; }
  Reg sub(const Reg& a, const Reg& b) const { charge(a); return a - b; }

  std::uint64_t extract(const Reg& a, unsigned pos, unsigned len) const {
    ctx_.charge_words(1);
    return a.extract(pos, len);
  }

  Reg load(std::span<const std::uint64_t> limbs, unsigned nbits) const {
    ctx_.charge_words(cost_of(nbits));
    return Reg::from_limbs(limbs, nbits);
  }
  void store(const Reg& r, std::span<std::uint64_t> out) const {
    charge(r);
    r.store(out);
  }

  void charge_words(std::uint64_t n) const { ctx_.charge_words(n); }

 private:
  std::uint64_t cost_of(unsigned nbits) const noexcept { return (nbits + w_ - 1) / w_; }
  void charge(const Reg& r) const { ctx_.charge_words(cost_of(r.bits())); }

  unsigned w_;
  ExecContext ctx_;
};

}  // namespace mrset
