#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mrset/bucketed.hpp"
#include "mrset/expr.hpp"
#include "mrset/multires.hpp"
#include "mrset/op_counter.hpp"

namespace mrset {

using SetMap = std::map<std::string, const MultiResSet*, std::less<>>;

enum class EvalMode { kAuto, kGeneral, kIntersect };

struct EvalConfig {
  unsigned C = 2;
  EvalMode mode = EvalMode::kAuto;
  bool rewrite = true;
  // Pure intersections in intersection mode go through intersect_fast.
  bool fast_intersect = true;
  // Forces the requested resolution instead of choose_resolution.
  std::optional<unsigned> r_override;
  CompactMode compact_mode = CompactMode::kWordParallel;
};

struct NodeStat {
  int node = 0;
  std::string label;
  std::uint64_t psi = 0;
  std::uint64_t psi_star = 0;
  std::optional<std::uint64_t> image;     // |I_v|, absent when skipped
  std::optional<std::uint64_t> filtered;  // |I'_v|
  std::optional<std::uint64_t> candidates;  // |S'_i|, leaves only
  bool reduced = false;
};

struct QueryStats {
  std::string path;  // "general" or "intersect_fast"
  unsigned r = 0;
  unsigned r_effective = 0;
  bool clamped = false;
  std::vector<NodeStat> nodes;
  std::vector<int> visit_order;
  std::uint64_t candidates = 0;        // sum of |S'_i|
  std::uint64_t false_candidates = 0;  // candidate occurrences not in the result
  std::uint64_t k = 0;
  std::uint64_t k_prime = 0;
  std::uint64_t reductions = 0;
  std::uint64_t skipped = 0;
  std::uint64_t rewrites_applied = 0;
  OpCounter approx;  // bottom-up hash-image evaluation
  OpCounter filter;  // top-down pass and candidate extraction
  OpCounter exact;   // final exact evaluation
  OpCounter rewrite;
  OpCounter total() const;
};

struct ApproxResult {
  unsigned r_eff = 0;
  bool clamped = false;
  // I_v per node; null when the subtree was skipped by a short circuit.
  std::vector<std::shared_ptr<const BucketedSet>> images;
  std::vector<bool> reduced;
  std::vector<int> visit_order;
  std::uint64_t skipped = 0;
  const BucketedSet& root() const { return *images.back(); }
};

// Throws UnknownSet for names missing from sets and SeedMismatch when the
// leaves were hashed with different mother hashes.
std::vector<const MultiResSet*> resolve_leaves(const ExprTree& tree, const SetMap& sets);
SizeMap leaf_sizes(const ExprTree& tree, const SetMap& sets);

// Largest resolution at or below r that every leaf can serve without clamping.
unsigned common_resolution(const std::vector<const MultiResSet*>& leaves, unsigned r, bool* clamped);

ApproxResult approx_evaluate(const ExprTree& tree, const SizeAnnotation& ann, const SetMap& sets,
                             unsigned r, const ExecContext& ctx = {});

struct FilterResult {
  std::vector<std::shared_ptr<const BucketedSet>> filtered;  // I'_v
  std::vector<std::vector<std::uint64_t>> candidates;         // S'_i by node id
};

FilterResult filter_topdown(const ExprTree& tree, const ApproxResult& approx, const SetMap& sets,
                            const ExecContext& ctx = {});

struct ExactResult {
  std::vector<std::uint64_t> result;  // sorted
  std::uint64_t k_prime = 0;
  std::uint64_t occurrences = 0;
};

// Exact f over per-leaf candidate lists (indexed by node id).
ExactResult exact_evaluate(const ExprTree& tree, const SizeAnnotation& ann,
                           const std::vector<std::vector<std::uint64_t>>& candidates,
                           const ExecContext& ctx = {});

struct QueryResult {
  std::vector<std::uint64_t> result;
  QueryStats stats;
};

QueryResult evaluate(const ExprTree& tree, const SetMap& sets, const EvalConfig& config = {});
QueryResult intersect_fast(const std::vector<const MultiResSet*>& sets,
                           const EvalConfig& config = {});

struct RewriteResult {
  ExprTree tree;
  std::vector<std::shared_ptr<const MultiResSet>> virtual_sets;
  std::size_t rewrites = 0;
};

// Word-op estimate for intersecting hash images of these sizes at resolution r.
double approx_intersection_cost(const std::vector<std::uint64_t>& sizes, unsigned r,
                                unsigned word_bits);

// Replaces each maximal all-leaf intersection whose probing cost (smallest
// size times leaf count) beats approx_intersection_cost by a precomputed leaf.
RewriteResult asymmetric_rewrite(const ExprTree& tree, const SetMap& sets, unsigned r,
                                 const ExecContext& ctx = {});

}  // namespace mrset
