#include "mrset/oracle.hpp"

#include <algorithm>
#include <iterator>

#include "mrset/error.hpp"

namespace mrset::oracle {

PlainSet normalize(std::vector<std::uint64_t> values) {
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  return values;
}

PlainSet plain_union(const PlainSet& a, const PlainSet& b) {
  PlainSet out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

PlainSet plain_intersect(const PlainSet& a, const PlainSet& b) {
  PlainSet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

PlainSet naive_evaluate(const ExprTree& tree, const PlainSets& sets) {
  std::vector<PlainSet> value(tree.size());
  for (int v = 0; v < static_cast<int>(tree.size()); ++v) {
    const ExprNode& n = tree.node(v);
    auto& out = value[static_cast<std::size_t>(v)];
    if (n.kind == NodeKind::kLeaf) {
      const auto it = sets.find(n.name);
      if (it == sets.end()) fail(ErrorCode::kUnknownSet, "unknown set '" + n.name + "'");
      out = it->second;
      continue;
    }
    const PlainSet& l = value[static_cast<std::size_t>(n.left)];
    const PlainSet& r = value[static_cast<std::size_t>(n.right)];
    out = n.kind == NodeKind::kUnion ? plain_union(l, r) : plain_intersect(l, r);
  }
  return value.back();
}

MergeResult merge_intersect_baseline(const std::vector<PlainSet>& sets) {
  if (sets.size() < 2) fail(ErrorCode::kBadParameter, "baseline intersection needs two sets");
  std::vector<const PlainSet*> order;
  for (const PlainSet& s : sets) order.push_back(&s);
  std::stable_sort(order.begin(), order.end(),
                   [](const PlainSet* a, const PlainSet* b) { return a->size() < b->size(); });
  MergeResult res;
  res.result = *order.front();
  for (std::size_t k = 1; k < order.size(); ++k) {
    const PlainSet& b = *order[k];
    PlainSet next;
    std::size_t i = 0, j = 0;
    while (i < res.result.size() && j < b.size()) {
      ++res.comparisons;
      if (res.result[i] < b[j]) ++i;
      else if (b[j] < res.result[i]) ++j;
      else {
        next.push_back(res.result[i]);
        ++i;
        ++j;
      }
    }
    res.result = std::move(next);
  }
  return res;
}

}  // namespace mrset::oracle
