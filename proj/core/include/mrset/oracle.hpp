#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mrset/expr.hpp"

namespace mrset::oracle {

// Sorted, distinct values.
using PlainSet = std::vector<std::uint64_t>;
using PlainSets = std::map<std::string, PlainSet, std::less<>>;

PlainSet normalize(std::vector<std::uint64_t> values);
PlainSet plain_union(const PlainSet& a, const PlainSet& b);
PlainSet plain_intersect(const PlainSet& a, const PlainSet& b);

// Direct recursive evaluation. Throws UnknownSet.
PlainSet naive_evaluate(const ExprTree& tree, const PlainSets& sets);

struct MergeResult {
  PlainSet result;
  std::uint64_t comparisons = 0;
};

// Intersects by pairwise two-pointer merges, smallest set first.
MergeResult merge_intersect_baseline(const std::vector<PlainSet>& sets);

}  // namespace mrset::oracle
