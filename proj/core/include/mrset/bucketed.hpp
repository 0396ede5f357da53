#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mrset/op_counter.hpp"
#include "mrset/packed.hpp"

namespace mrset {

// Entry width used by buckets of l-bit values split on b high bits. Widths
// below the word's minimum field width are padded up to it.
unsigned bucket_entry_bits(unsigned l, unsigned b, unsigned word_bits);

// Largest b <= log2(size) - log2(W), clamped to [0, l] and lowered until the
// remainder width l - b can index a word's fields.
unsigned balanced_bucket_bits(std::uint64_t size, unsigned l, unsigned word_bits);

// A set of l-bit integers split into 2^b buckets by their b high bits. Bucket
// i holds the sorted low l - b bits of its members as a packed set. Buckets
// live back to back in one payload; offsets() holds cumulative element
// counts.
class BucketedSet {
 public:
  // Empty set of l-bit values with a single bucket.
  BucketedSet(unsigned l, unsigned word_bits);
  // Validating constructor over raw parts (used by deserialisation).
  BucketedSet(unsigned l, unsigned b, unsigned word_bits, std::vector<std::uint64_t> offsets,
              std::vector<std::uint64_t> payload);

  unsigned element_bits() const noexcept { return l_; }
  unsigned bucket_bits() const noexcept { return b_; }
  unsigned entry_bits() const noexcept { return f_; }
  unsigned word_bits() const noexcept { return w_; }
  PackedLayout layout() const { return PackedLayout(w_, f_); }

  std::uint64_t size() const noexcept { return offsets_.back(); }
  bool empty() const noexcept { return size() == 0; }
  std::size_t bucket_count() const noexcept { return offsets_.size() - 1; }
  std::uint64_t bucket_size(std::size_t i) const noexcept { return offsets_[i + 1] - offsets_[i]; }
  PackedView bucket(std::size_t i) const;

  const std::vector<std::uint64_t>& offsets() const noexcept { return offsets_; }
  const std::vector<std::uint64_t>& payload() const noexcept { return payload_; }

  // Members in increasing order.
  std::vector<std::uint64_t> flatten() const;
  bool balanced() const noexcept;

  bool operator==(const BucketedSet&) const = default;

 private:
  void index_words();

  unsigned l_ = 0, b_ = 0, f_ = 0, w_ = 0;
  std::vector<std::uint64_t> offsets_;
  std::vector<std::uint64_t> word_offsets_;
  std::vector<std::uint64_t> payload_;
};

BucketedSet build_bucketed(std::span<const std::uint64_t> sorted_values, unsigned l, unsigned b,
                           unsigned word_bits);
BucketedSet rebucket(const BucketedSet& s, unsigned b, const ExecContext& ctx = {});

// { v div 2^x : v in s } as (l - x)-bit values, bucket parameter kept.
// Requires b < x <= l.
BucketedSet project_div(const BucketedSet& s, unsigned x, const ExecContext& ctx = {});
// Same projection for any 0 <= x <= l; lowers b first when b > l - x.
BucketedSet project_div_any(const BucketedSet& s, unsigned x, const ExecContext& ctx = {});

BucketedSet balance(const BucketedSet& s, const ExecContext& ctx = {});
BucketedSet bucketed_union(const BucketedSet& a, const BucketedSet& b,
                           const ExecContext& ctx = {});
BucketedSet bucketed_intersect(const BucketedSet& a, const BucketedSet& b,
                               const ExecContext& ctx = {});

}  // namespace mrset
