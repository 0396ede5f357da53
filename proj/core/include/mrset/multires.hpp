#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mrset/bucketed.hpp"
#include "mrset/hash.hpp"
#include "mrset/op_counter.hpp"

namespace mrset {

// Resolutions stored for a set of n1 elements hashed to w bits:
// ceil(log2 n1) + 2^i for i = 0, 1, ... while the key stays <= w.
std::vector<unsigned> grid_keys(std::uint64_t n1, unsigned w);

enum class ResolutionMode { kGeneral, kIntersect };

// min(w, ceil(log2 n) + ceil(log2 w) + C), with n = total_n in general mode
// and n = min_set_size in intersection mode.
unsigned choose_resolution(std::uint64_t total_n, unsigned w, ResolutionMode mode,
                           std::uint64_t min_set_size, unsigned C = 2);

struct ResolutionView {
  std::shared_ptr<const BucketedSet> set;
  unsigned r_eff = 0;
  bool clamped = false;  // requested r exceeded the largest stored key
  bool derived = false;  // projected from a finer stored resolution
};

// Hash-value to element table with 2^s slots, s = ceil(log2 n1). Slot j lists
// the elements whose h* value starts with the s bits of j, in h* order.
struct LookupTable {
  unsigned slot_bits = 0;
  std::vector<std::uint64_t> starts;    // 2^s + 1 cumulative counts
  std::vector<std::uint64_t> stars;     // h*(x), non-decreasing
  std::vector<std::uint64_t> elements;  // x, parallel to stars

  bool operator==(const LookupTable&) const = default;
};

class MultiResSet {
 public:
  // Sorts and deduplicates `elements`; duplicates are counted, not rejected.
  static MultiResSet preprocess(std::string name, std::span<const std::uint64_t> elements,
                                const MotherHash& mh, unsigned word_bits,
                                const ExecContext& ctx = {});
  // Reassembles a set from stored parts, checking them against each other.
  static MultiResSet from_parts(std::string name, const MotherHash& mh, unsigned word_bits,
                                std::uint64_t dedup_count, std::vector<unsigned> keys,
                                std::vector<BucketedSet> grid, LookupTable lookup);

  const std::string& name() const noexcept { return name_; }
  const MotherHash& hash() const noexcept { return mh_; }
  unsigned hash_bits() const noexcept { return mh_.width(); }
  unsigned word_bits() const noexcept { return w_; }
  std::uint64_t size() const noexcept { return table_.elements.size(); }
  bool empty() const noexcept { return size() == 0; }
  std::uint64_t dedup_count() const noexcept { return dedup_; }

  const std::vector<unsigned>& keys() const noexcept { return keys_; }
  unsigned max_key() const noexcept { return keys_.back(); }
  const BucketedSet& grid_set(std::size_t i) const { return *grid_[i]; }
  const LookupTable& lookup() const noexcept { return table_; }

  // Sorted members.
  std::vector<std::uint64_t> elements() const;

  // {h_r(x)} at r when stored, derived from the next finer key otherwise, or
  // at the largest key when r exceeds it. Sets with at most one element are
  // hashed directly at r.
  ResolutionView resolution_view(unsigned r, const ExecContext& ctx = {}) const;

  // Members x with h_{r_eff}(x) == value.
  std::vector<std::uint64_t> lookup_elements(std::uint64_t value, unsigned r_eff,
                                             const ExecContext& ctx = {}) const;
  void append_lookup(std::uint64_t value, unsigned r_eff, std::vector<std::uint64_t>& out,
                     const ExecContext& ctx = {}) const;

  bool contains(std::uint64_t x, const ExecContext& ctx = {}) const;

 private:
  MultiResSet(std::string name, const MotherHash& mh, unsigned word_bits)
      : name_(std::move(name)), mh_(mh), w_(word_bits) {}

  std::string name_;
  MotherHash mh_;
  unsigned w_;
  std::uint64_t dedup_ = 0;
  std::vector<unsigned> keys_;
  std::vector<std::shared_ptr<const BucketedSet>> grid_;
  LookupTable table_;
};

}  // namespace mrset
