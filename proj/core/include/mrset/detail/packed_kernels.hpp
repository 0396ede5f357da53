#pragma once

// Word-parallel building blocks shared by the packed and bucketed layers.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mrset/packed.hpp"
#include "mrset/word.hpp"

namespace mrset::detail {

// Precomputed masks for one (W, f) layout. Q is K rounded up to a power of
// two; the merge network works on a register of 2Q fields.
struct Geometry {
  unsigned W = 0, f = 0, g = 0, K = 0, L = 0, Q = 0, log_q = 0;
  unsigned qbits = 0, rbits = 0;

  Reg test, entry, lsb, full;  // one word, K fields
  std::vector<Reg> prefix;     // prefix[n] covers fields [0, n)

  Reg q_test, q_pad;
  std::vector<Reg> q_low;  // fields whose index has bit j clear
  Reg r_test;
  std::vector<Reg> r_low;
  Reg r_first_k;

  PackedLayout layout() const { return PackedLayout(W, f); }
};

const Geometry& geometry(unsigned word_bits, unsigned entry_bits);
inline const Geometry& geometry(const PackedLayout& l) {
  return geometry(l.word_bits(), l.entry_bits());
}

// Per-field mask of entry bits [0, bits).
Reg low_entry_mask(const Geometry& geo, unsigned bits);

// Full-field mask from a register holding only test bits.
Reg spread_test_bits(const Alu& alu, const Geometry& geo, const Reg& t);

Reg load_word(const Alu& alu, const PackedView& v, std::size_t i);

// Appends fields to a word stream, K per word. Appended registers must be
// zero above their `count` fields.
class FieldWriter {
 public:
  FieldWriter(const Geometry& geo, const Alu& alu, std::vector<std::uint64_t>& out);

  void append(const Reg& fields, unsigned count);
  // Appends every field of a sequence view.
  void append_sequence(const PackedView& v);
  // Flushes a partial word (vacating its tail) and returns the field count.
  std::size_t finish();
  std::size_t written() const noexcept { return total_; }

 private:
  void emit(const Reg& word);

  const Geometry& geo_;
  const Alu& alu_;
  std::vector<std::uint64_t>& out_;
  Reg acc_;
  unsigned fill_ = 0;
  std::size_t total_ = 0;
};

// Sorted multiset merge of two sorted sequences; appends ceil((|a|+|b|)/K)
// words to out and returns the merged length.
std::size_t merge_into(const Geometry& geo, const Alu& alu, const PackedView& a,
                       const PackedView& b, std::vector<std::uint64_t>& out);

enum class DupRule {
  kKeepLast,   // vacate every field equal to its right neighbour
  kKeepPairs,  // keep only fields equal to their right neighbour
};

// In-place duplicate marking on a sorted sequence.
void mark_duplicates(const Geometry& geo, const Alu& alu, std::span<std::uint64_t> limbs,
                     std::size_t length, DupRule rule);

void compact_into(const Geometry& geo, const Alu& alu, const PackedView& v, FieldWriter& out);

// Merge, mark and compact: the sorted union (kKeepLast) or intersection
// (kKeepPairs) of two packed sets.
void set_op_into(const Geometry& geo, const Alu& alu, const PackedView& a, const PackedView& b,
                 DupRule rule, FieldWriter& out);

// Re-lays the fields of v with another entry width. Entries must fit the
// destination width.
void convert_into(const Geometry& src, const Geometry& dst, const Alu& alu, const PackedView& v,
                  FieldWriter& out);

}  // namespace mrset::detail
