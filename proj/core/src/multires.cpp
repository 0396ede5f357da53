#include "mrset/multires.hpp"

#include <algorithm>
#include <string>
#include <utility>

#include "mrset/error.hpp"
#include "mrset/word.hpp"

namespace mrset {

namespace {

std::uint64_t shr(std::uint64_t v, unsigned k) { return k >= 64 ? 0 : v >> k; }

unsigned slot_bits_for(std::uint64_t n1, unsigned w) {
  return n1 <= 1 ? 0 : std::min(ceil_log2(n1), w);
}

std::shared_ptr<const BucketedSet> hash_image(std::span<const std::uint64_t> sorted_stars,
                                              unsigned w, unsigned r, unsigned word_bits) {
  std::vector<std::uint64_t> vals;
  vals.reserve(sorted_stars.size());
  for (const std::uint64_t s : sorted_stars) {
    const std::uint64_t v = shr(s, w - r);
    if (vals.empty() || vals.back() != v) vals.push_back(v);
  }
  return std::make_shared<const BucketedSet>(
      build_bucketed(vals, r, balanced_bucket_bits(vals.size(), r, word_bits), word_bits));
}

}  // namespace

std::vector<unsigned> grid_keys(std::uint64_t n1, unsigned w) {
  if (n1 <= 1) return {std::min(w, 2u)};
  const unsigned base = ceil_log2(n1);
  if (w <= base) return {w};
  std::vector<unsigned> keys;
  for (unsigned step = 1; base + step <= w; step *= 2) keys.push_back(base + step);
  return keys;
}

unsigned choose_resolution(std::uint64_t total_n, unsigned w, ResolutionMode mode,
                           std::uint64_t min_set_size, unsigned C) {
  const std::uint64_t n = std::max<std::uint64_t>(
      1, mode == ResolutionMode::kGeneral ? total_n : min_set_size);
  return std::clamp(ceil_log2(n) + ceil_log2(w) + C, 1u, w);
}

MultiResSet MultiResSet::preprocess(std::string name, std::span<const std::uint64_t> elements,
                                    const MotherHash& mh, unsigned word_bits,
                                    const ExecContext& ctx) {
  const unsigned w = mh.width();
  std::vector<std::uint64_t> sorted(elements.begin(), elements.end());
  for (const std::uint64_t x : sorted)
    if (shr(x, w) != 0)
      fail(ErrorCode::kValueOutOfRange,
           "element " + std::to_string(x) + " does not fit in " + std::to_string(w) + " bits");
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  MultiResSet ms(std::move(name), mh, word_bits);
  ms.dedup_ = elements.size() - sorted.size();

  std::vector<std::pair<std::uint64_t, std::uint64_t>> pairs;
  pairs.reserve(sorted.size());
  for (const std::uint64_t x : sorted) pairs.emplace_back(mh.star(x), x);
  ctx.charge_hashes(sorted.size());
  std::sort(pairs.begin(), pairs.end());

  LookupTable& t = ms.table_;
  t.slot_bits = slot_bits_for(sorted.size(), w);
  t.starts.assign((std::size_t{1} << t.slot_bits) + 1, 0);
  t.stars.reserve(pairs.size());
  t.elements.reserve(pairs.size());
  for (const auto& [s, x] : pairs) {
    ++t.starts[shr(s, w - t.slot_bits) + 1];
    t.stars.push_back(s);
    t.elements.push_back(x);
  }
  for (std::size_t i = 1; i < t.starts.size(); ++i) t.starts[i] += t.starts[i - 1];

  ms.keys_ = grid_keys(sorted.size(), w);
  ms.grid_.resize(ms.keys_.size());
  ms.grid_.back() = hash_image(t.stars, w, ms.keys_.back(), word_bits);
  for (std::size_t i = ms.keys_.size() - 1; i-- > 0;) {
    const BucketedSet& finer = *ms.grid_[i + 1];
    ms.grid_[i] = std::make_shared<const BucketedSet>(
        balance(project_div_any(finer, ms.keys_[i + 1] - ms.keys_[i], ctx), ctx));
  }
  return ms;
}

MultiResSet MultiResSet::from_parts(std::string name, const MotherHash& mh, unsigned word_bits,
                                    std::uint64_t dedup_count, std::vector<unsigned> keys,
                                    std::vector<BucketedSet> grid, LookupTable lookup) {
  const unsigned w = mh.width();
  const std::uint64_t n1 = lookup.elements.size();
  if (keys != grid_keys(n1, w))
    fail(ErrorCode::kFormatError, "stored resolution keys do not match the set size");
  if (grid.size() != keys.size())
    fail(ErrorCode::kFormatError, "resolution key and grid counts differ");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i].element_bits() != keys[i] || grid[i].word_bits() != word_bits ||
        grid[i].size() > n1 || !grid[i].balanced())
      fail(ErrorCode::kFormatError, "hash image at r=" + std::to_string(keys[i]) + " is malformed");
  }
  if (lookup.slot_bits != slot_bits_for(n1, w) ||
      lookup.starts.size() != (std::size_t{1} << lookup.slot_bits) + 1 ||
      lookup.stars.size() != n1 || lookup.starts.front() != 0 || lookup.starts.back() != n1)
    fail(ErrorCode::kFormatError, "lookup table has the wrong shape");
  for (std::size_t slot = 0; slot + 1 < lookup.starts.size(); ++slot) {
    if (lookup.starts[slot] > lookup.starts[slot + 1])
      fail(ErrorCode::kFormatError, "lookup slot offsets must be non-decreasing");
    for (std::uint64_t j = lookup.starts[slot]; j < lookup.starts[slot + 1]; ++j)
      if (shr(lookup.stars[j], w - lookup.slot_bits) != slot)
        fail(ErrorCode::kFormatError, "lookup entry stored in the wrong slot");
  }
  for (std::uint64_t j = 0; j < n1; ++j) {
    if (shr(lookup.elements[j], w) != 0 || mh.star(lookup.elements[j]) != lookup.stars[j])
      fail(ErrorCode::kFormatError, "lookup table does not match the stored hash seed");
    if (j > 0 && lookup.stars[j] < lookup.stars[j - 1])
      fail(ErrorCode::kFormatError, "lookup entries are not in hash order");
  }
  std::vector<std::uint64_t> sorted = lookup.elements;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    fail(ErrorCode::kFormatError, "lookup table repeats an element");

  MultiResSet ms(std::move(name), mh, word_bits);
  ms.dedup_ = dedup_count;
  ms.keys_ = std::move(keys);
  for (BucketedSet& b : grid) ms.grid_.push_back(std::make_shared<const BucketedSet>(std::move(b)));
  ms.table_ = std::move(lookup);
  return ms;
}

std::vector<std::uint64_t> MultiResSet::elements() const {
  std::vector<std::uint64_t> out = table_.elements;
  std::sort(out.begin(), out.end());
  return out;
}

ResolutionView MultiResSet::resolution_view(unsigned r, const ExecContext& ctx) const {
  const unsigned w = hash_bits();
  if (r < 1 || r > w)
    fail(ErrorCode::kBadParameter, "resolution r=" + std::to_string(r) + " outside [1, w]");
  const auto it = std::lower_bound(keys_.begin(), keys_.end(), r);
  const bool stored = it != keys_.end() && *it == r;
  if (size() <= 1 && !stored)
    return {hash_image(table_.stars, w, r, w_), r, false, true};
  if (it == keys_.end()) return {grid_.back(), keys_.back(), true, false};
  const std::size_t i = static_cast<std::size_t>(it - keys_.begin());
  if (stored) return {grid_[i], r, false, false};
  return {std::make_shared<const BucketedSet>(balance(project_div_any(*grid_[i], *it - r, ctx), ctx)),
          r, false, true};
}

void MultiResSet::append_lookup(std::uint64_t value, unsigned r_eff, std::vector<std::uint64_t>& out,
                                const ExecContext& ctx) const {
  const unsigned w = hash_bits();
  if (r_eff < 1 || r_eff > w)
    fail(ErrorCode::kBadParameter, "resolution r=" + std::to_string(r_eff) + " outside [1, w]");
  ctx.charge_probes(1);
  if (shr(value, r_eff) != 0) return;
  const unsigned s = table_.slot_bits;
  if (r_eff >= s) {
    const std::uint64_t slot = shr(value, r_eff - s);
    for (std::uint64_t j = table_.starts[slot]; j < table_.starts[slot + 1]; ++j)
      if (shr(table_.stars[j], w - r_eff) == value) out.push_back(table_.elements[j]);
    return;
  }
  const unsigned d = s - r_eff;
  const std::uint64_t lo = table_.starts[value << d];
  const std::uint64_t hi = table_.starts[(value + 1) << d];
  out.insert(out.end(), table_.elements.begin() + static_cast<std::ptrdiff_t>(lo),
             table_.elements.begin() + static_cast<std::ptrdiff_t>(hi));
}

std::vector<std::uint64_t> MultiResSet::lookup_elements(std::uint64_t value, unsigned r_eff,
                                                        const ExecContext& ctx) const {
  std::vector<std::uint64_t> out;
  append_lookup(value, r_eff, out, ctx);
  return out;
}

bool MultiResSet::contains(std::uint64_t x, const ExecContext& ctx) const {
  const unsigned w = hash_bits();
  if (shr(x, w) != 0) return false;
  ctx.charge_hashes(1);
  ctx.charge_probes(1);
  const std::uint64_t s = mh_.star(x);
  const std::uint64_t slot = shr(s, w - table_.slot_bits);
  for (std::uint64_t j = table_.starts[slot]; j < table_.starts[slot + 1]; ++j)
    if (table_.elements[j] == x) return true;
  return false;
}

}  // namespace mrset
