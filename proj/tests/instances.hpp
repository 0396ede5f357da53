#pragma once

// Random expression instances shared by the evaluation tests and the
// acceptance driver.

#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "mrset/eval.hpp"
#include "mrset/hash.hpp"
#include "mrset/multires.hpp"
#include "mrset/oracle.hpp"

namespace inst {

struct Instance {
  mrset::ExprTree tree;
  mrset::oracle::PlainSets plain;
  std::vector<std::unique_ptr<mrset::MultiResSet>> owned;
  mrset::SetMap sets;
};

// Random binary tree over the given leaf names in order.
inline mrset::ExprTree random_tree(std::mt19937_64& rng, const std::vector<std::string>& names,
                                   std::size_t lo, std::size_t hi, double p_intersect) {
  if (hi - lo == 1) return mrset::ExprTree::leaf(names[lo]);
  const std::size_t mid = std::uniform_int_distribution<std::size_t>(lo + 1, hi - 1)(rng);
  const mrset::NodeKind kind = std::bernoulli_distribution(p_intersect)(rng)
                                   ? mrset::NodeKind::kIntersect
                                   : mrset::NodeKind::kUnion;
  return mrset::ExprTree::combine(kind, random_tree(rng, names, lo, mid, p_intersect),
                                  random_tree(rng, names, mid, hi, p_intersect));
}

// Sets drawn partly from a shared pool so that intersections are non-trivial.
// `overlap` is the fraction of each set taken from the pool.
inline mrset::oracle::PlainSets random_sets(std::mt19937_64& rng, std::size_t m,
                                            std::size_t max_size, double overlap,
                                            std::uint64_t universe) {
  std::uniform_int_distribution<std::uint64_t> any(0, universe - 1);
  std::vector<std::uint64_t> pool(max_size);
  for (auto& x : pool) x = any(rng);
  mrset::oracle::PlainSets out;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(0, max_size)(rng);
    std::vector<std::uint64_t> v;
    for (std::size_t j = 0; j < n; ++j)
      v.push_back(std::bernoulli_distribution(overlap)(rng) ? pool[j] : any(rng));
    out["S" + std::to_string(i)] = mrset::oracle::normalize(std::move(v));
  }
  return out;
}

inline void load(Instance& in, const mrset::MotherHash& mh, unsigned word_bits) {
  for (const auto& [name, values] : in.plain) {
    in.owned.push_back(std::make_unique<mrset::MultiResSet>(
        mrset::MultiResSet::preprocess(name, values, mh, word_bits)));
    in.sets[name] = in.owned.back().get();
  }
}

struct Shape {
  std::size_t min_leaves = 2;
  std::size_t max_leaves = 8;
  std::size_t max_size = 1u << 12;
  double p_intersect = 0.6;
  std::uint64_t universe = 1ull << 32;
};

inline Instance random_instance(std::mt19937_64& rng, const Shape& shape, const mrset::MotherHash& mh,
                                unsigned word_bits) {
  Instance in;
  const std::size_t m =
      std::uniform_int_distribution<std::size_t>(shape.min_leaves, shape.max_leaves)(rng);
  const double overlap = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  in.plain = random_sets(rng, m, shape.max_size, overlap, shape.universe);
  std::vector<std::string> names;
  for (const auto& [name, values] : in.plain) names.push_back(name);
  // Occasionally reuse a name so the same set appears at two leaves.
  if (m > 2 && std::bernoulli_distribution(0.2)(rng)) names[m - 1] = names[0];
  std::shuffle(names.begin(), names.end(), rng);
  in.tree = random_tree(rng, names, 0, names.size(), shape.p_intersect);
  load(in, mh, word_bits);
  return in;
}

}  // namespace inst
