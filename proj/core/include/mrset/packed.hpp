#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mrset/op_counter.hpp"

namespace mrset {

// Field layout of packed arrays: each simulated W-bit word is split into
// K = floor(W / (f + 1)) fields, numbered from the least significant end.
// The top bit of a field is its test bit (1 = vacant); the low f bits are
// the entry.
class PackedLayout {
 public:
  // Throws BadParameter unless W is a supported width and f >= ceil(log2 K).
  PackedLayout(unsigned word_bits, unsigned entry_bits);

  unsigned word_bits() const noexcept { return word_bits_; }
  unsigned entry_bits() const noexcept { return entry_bits_; }
  unsigned field_bits() const noexcept { return entry_bits_ + 1; }
  unsigned fields_per_word() const noexcept { return word_bits_ / (entry_bits_ + 1); }
  unsigned limbs_per_word() const noexcept { return (word_bits_ + 63) / 64; }
  std::uint64_t max_entry() const noexcept;

  // Words used by an array of n fields; the empty array keeps one word.
  std::size_t words_for(std::size_t n) const noexcept;

  bool operator==(const PackedLayout&) const = default;

 private:
  unsigned word_bits_;
  unsigned entry_bits_;
};

// Smallest entry width f for which f >= ceil(log2 floor(W/(f+1))).
unsigned min_entry_bits(unsigned word_bits);
bool layout_valid(unsigned word_bits, unsigned entry_bits) noexcept;

// Read-only view over packed words. May have zero words when length is 0.
class PackedView {
 public:
  PackedView(PackedLayout layout, std::size_t length, std::span<const std::uint64_t> limbs)
      : layout_(layout), length_(length), limbs_(limbs) {}

  const PackedLayout& layout() const noexcept { return layout_; }
  std::size_t length() const noexcept { return length_; }
  std::span<const std::uint64_t> limbs() const noexcept { return limbs_; }
  std::size_t word_count() const noexcept { return limbs_.size() / layout_.limbs_per_word(); }
  std::span<const std::uint64_t> word(std::size_t i) const noexcept {
    return limbs_.subspan(i * layout_.limbs_per_word(), layout_.limbs_per_word());
  }

  // Scalar field access; not charged to any counter.
  bool occupied(std::size_t i) const noexcept;
  std::uint64_t entry(std::size_t i) const noexcept;

 private:
  PackedLayout layout_;
  std::size_t length_;
  std::span<const std::uint64_t> limbs_;
};

class PackedArray {
 public:
  // An array of `length` vacant fields.
  PackedArray(PackedLayout layout, std::size_t length);
  PackedArray(PackedLayout layout, std::size_t length, std::vector<std::uint64_t> limbs);

  // nullopt marks a vacant field.
  static PackedArray from_slots(PackedLayout layout,
                                std::span<const std::optional<std::uint64_t>> slots);

  const PackedLayout& layout() const noexcept { return layout_; }
  std::size_t length() const noexcept { return length_; }
  std::size_t word_count() const noexcept { return limbs_.size() / layout_.limbs_per_word(); }
  const std::vector<std::uint64_t>& limbs() const noexcept { return limbs_; }
  PackedView view() const noexcept { return {layout_, length_, limbs_}; }

  bool occupied(std::size_t i) const noexcept { return view().occupied(i); }
  std::uint64_t entry(std::size_t i) const noexcept { return view().entry(i); }
  std::vector<std::optional<std::uint64_t>> slots() const;

  bool operator==(const PackedArray&) const = default;

 private:
  PackedLayout layout_;
  std::size_t length_;
  std::vector<std::uint64_t> limbs_;
};

// Packed array whose fields [0, length) are all occupied.
class PackedSequence {
 public:
  explicit PackedSequence(PackedArray array);

  const PackedArray& array() const noexcept { return array_; }
  const PackedLayout& layout() const noexcept { return array_.layout(); }
  std::size_t size() const noexcept { return array_.length(); }
  bool empty() const noexcept { return size() == 0; }
  PackedView view() const noexcept { return array_.view(); }
  std::vector<std::uint64_t> values() const;

  bool operator==(const PackedSequence&) const = default;

 private:
  PackedArray array_;
};

// Packed sequence with strictly increasing entries.
class PackedSet {
 public:
  explicit PackedSet(PackedSequence seq);
  static PackedSet from_sorted(std::span<const std::uint64_t> values, unsigned entry_bits,
                               unsigned word_bits);

  const PackedSequence& sequence() const noexcept { return seq_; }
  const PackedArray& array() const noexcept { return seq_.array(); }
  const PackedLayout& layout() const noexcept { return seq_.layout(); }
  std::size_t size() const noexcept { return seq_.size(); }
  bool empty() const noexcept { return seq_.empty(); }
  PackedView view() const noexcept { return seq_.view(); }
  std::vector<std::uint64_t> values() const { return seq_.values(); }

  bool operator==(const PackedSet&) const = default;

 private:
  PackedSequence seq_;
};

PackedSequence encode(std::span<const std::uint64_t> values, unsigned entry_bits,
                      unsigned word_bits);
std::vector<std::uint64_t> decode(const PackedView& view);

// True iff vacant fields hold a zero entry with the test bit set, fields at or
// past length are vacant, and bits above the last field of each word are zero.
bool test_bits_consistent(const PackedView& view);

PackedArray compact(const PackedArray& array, const ExecContext& ctx = {});
PackedSequence packed_merge(const PackedSequence& a, const PackedSequence& b,
                            const ExecContext& ctx = {});
PackedSet packed_union(const PackedSet& a, const PackedSet& b, const ExecContext& ctx = {});
PackedSet packed_intersect(const PackedSet& a, const PackedSet& b, const ExecContext& ctx = {});

}  // namespace mrset
