#include "mrset/eval.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "mrset/error.hpp"

namespace mrset {

namespace {

using ImagePtr = std::shared_ptr<const BucketedSet>;

ImagePtr empty_image(unsigned r, unsigned word_bits) {
  return std::make_shared<const BucketedSet>(r, word_bits);
}

ImagePtr intersect_images(const ImagePtr& a, const ImagePtr& b, const ExecContext& ctx) {
  if (a->empty()) return a;
  if (b->empty()) return b;
  return std::make_shared<const BucketedSet>(bucketed_intersect(*a, *b, ctx));
}

std::string node_label(const ExprNode& n) {
  switch (n.kind) {
    case NodeKind::kLeaf: return n.name;
    case NodeKind::kUnion: return "|";
    case NodeKind::kIntersect: return "&";
  }
  return {};
}

std::uint64_t subtree_size(const ExprTree& t, int v) {
  const ExprNode& n = t.node(v);
  if (n.kind == NodeKind::kLeaf) return 1;
  return 1 + subtree_size(t, n.left) + subtree_size(t, n.right);
}

void check_compatible(const std::vector<const MultiResSet*>& sets) {
  for (const MultiResSet* s : sets) {
    if (!(s->hash() == sets.front()->hash()))
      fail(ErrorCode::kSeedMismatch, "sets '" + sets.front()->name() + "' and '" + s->name() +
                                         "' were built with different hash seeds");
    if (s->word_bits() != sets.front()->word_bits())
      fail(ErrorCode::kParameterMismatch, "sets '" + sets.front()->name() + "' and '" +
                                              s->name() + "' use different word widths");
  }
}

}  // namespace

OpCounter QueryStats::total() const {
  OpCounter t;
  t += approx;
  t += filter;
  t += exact;
  t += rewrite;
  return t;
}

std::vector<const MultiResSet*> resolve_leaves(const ExprTree& tree, const SetMap& sets) {
  std::vector<const MultiResSet*> out;
  for (const int v : tree.leaves()) {
    const auto it = sets.find(tree.node(v).name);
    if (it == sets.end() || it->second == nullptr)
      fail(ErrorCode::kUnknownSet, "unknown set '" + tree.node(v).name + "'");
    out.push_back(it->second);
  }
  check_compatible(out);
  return out;
}

SizeMap leaf_sizes(const ExprTree& tree, const SetMap& sets) {
  SizeMap sizes;
  const auto leaves = resolve_leaves(tree, sets);
  const std::vector<int> ids = tree.leaves();
  for (std::size_t j = 0; j < ids.size(); ++j) sizes[tree.node(ids[j]).name] = leaves[j]->size();
  return sizes;
}

unsigned common_resolution(const std::vector<const MultiResSet*>& leaves, unsigned r, bool* clamped) {
  unsigned out = std::min(r, leaves.front()->hash_bits());
  bool c = false;
  for (const MultiResSet* s : leaves) {
    if (s->size() > 1 && s->max_key() < out) {
      out = s->max_key();
      c = true;
    }
  }
  if (clamped != nullptr) *clamped = c;
  return std::max(out, 1u);
}

ApproxResult approx_evaluate(const ExprTree& tree, const SizeAnnotation& ann, const SetMap& sets,
                             unsigned r, const ExecContext& ctx) {
  const auto leaves = resolve_leaves(tree, sets);
  ApproxResult res;
  res.r_eff = common_resolution(leaves, r, &res.clamped);
  res.images.assign(tree.size(), nullptr);
  res.reduced.assign(tree.size(), false);

  const auto visit = [&](auto&& self, int v) -> void {
    const ExprNode& n = tree.node(v);
    const auto i = static_cast<std::size_t>(v);
    if (n.kind == NodeKind::kLeaf) {
      res.images[i] = sets.find(n.name)->second->resolution_view(res.r_eff, ctx).set;
    } else {
      const int first = ann.first_child[i];
      const int second = first == n.left ? n.right : n.left;
      self(self, first);
      const ImagePtr& a = res.images[static_cast<std::size_t>(first)];
      if (n.kind == NodeKind::kIntersect && a->empty()) {
        res.images[i] = a;
        res.skipped += subtree_size(tree, second);
      } else {
        self(self, second);
        const ImagePtr& b = res.images[static_cast<std::size_t>(second)];
        if (n.kind == NodeKind::kIntersect) {
          res.images[i] = intersect_images(a, b, ctx);
        } else if (a->empty() || b->empty()) {
          res.images[i] = a->empty() ? b : a;
        } else {
          res.images[i] = std::make_shared<const BucketedSet>(bucketed_union(*a, *b, ctx));
        }
      }
    }
    const int partner = ann.reduce_partner[i];
    if (partner >= 0 && res.images[i]->size() > 2 * ann.psi_star[i]) {
      const ImagePtr& p = res.images[static_cast<std::size_t>(partner)];
      if (p) {
        res.images[i] = intersect_images(res.images[i], p, ctx);
        res.reduced[i] = true;
      }
    }
    res.visit_order.push_back(v);
  };
  visit(visit, tree.root());
  return res;
}

FilterResult filter_topdown(const ExprTree& tree, const ApproxResult& approx, const SetMap& sets,
                            const ExecContext& ctx) {
  FilterResult out;
  const std::size_t n = tree.size();
  out.filtered.assign(n, nullptr);
  out.candidates.assign(n, {});
  const unsigned word_bits = approx.root().word_bits();
  const ImagePtr none = empty_image(approx.r_eff, word_bits);
  out.filtered[n - 1] = approx.images[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) {
    const ExprNode& nd = tree.node(static_cast<int>(i));
    const ImagePtr& parent = out.filtered[static_cast<std::size_t>(nd.parent)];
    const ImagePtr& own = approx.images[i];
    if (!own || parent->empty()) out.filtered[i] = own ? parent : none;
    else if (own == parent) out.filtered[i] = own;
    else out.filtered[i] = intersect_images(own, parent, ctx);
    if (nd.kind != NodeKind::kLeaf || out.filtered[i]->empty()) continue;
    const MultiResSet& s = *sets.find(nd.name)->second;
    for (const std::uint64_t h : out.filtered[i]->flatten())
      s.append_lookup(h, approx.r_eff, out.candidates[i], ctx);
  }
  if (tree.node(static_cast<int>(n - 1)).kind == NodeKind::kLeaf && !out.filtered[n - 1]->empty()) {
    const MultiResSet& s = *sets.find(tree.node(static_cast<int>(n - 1)).name)->second;
    for (const std::uint64_t h : out.filtered[n - 1]->flatten())
      s.append_lookup(h, approx.r_eff, out.candidates[n - 1], ctx);
  }
  return out;
}

ExactResult exact_evaluate(const ExprTree& tree, const SizeAnnotation& ann,
                           const std::vector<std::vector<std::uint64_t>>& candidates,
                           const ExecContext& ctx) {
  std::unordered_map<std::uint64_t, std::vector<int>> groups;
  ExactResult out;
  for (const int leaf : tree.leaves()) {
    for (const std::uint64_t x : candidates[static_cast<std::size_t>(leaf)]) {
      groups[x].push_back(leaf);
      ++out.occurrences;
    }
  }
  ctx.charge_probes(out.occurrences);

  std::vector<std::uint8_t> sides(tree.size(), 0);
  std::vector<int> touched;
  for (const auto& [x, occ] : groups) {
    bool hit = false;
    for (const int leaf : occ) {
      // Route a TRUE signal upward through the intersection skeleton.
      int a = ann.nia[static_cast<std::size_t>(leaf)];
      int side = ann.nia_side[static_cast<std::size_t>(leaf)];
      while (!hit) {
        if (a == kRootRegion) {
          hit = true;
          break;
        }
        std::uint8_t& s = sides[static_cast<std::size_t>(a)];
        if (s == 0) touched.push_back(a);
        const std::uint8_t before = s;
        s |= static_cast<std::uint8_t>(1u << side);
        if (s != 3 || before == 3) break;
        side = ann.nia_side[static_cast<std::size_t>(a)];
        a = ann.nia[static_cast<std::size_t>(a)];
      }
      if (hit) break;
    }
    for (const int a : touched) sides[static_cast<std::size_t>(a)] = 0;
    touched.clear();
    if (hit) {
      out.result.push_back(x);
      out.k_prime += occ.size();
    }
  }
  std::sort(out.result.begin(), out.result.end());
  return out;
}

double approx_intersection_cost(const std::vector<std::uint64_t>& sizes, unsigned r,
                                unsigned word_bits) {
  double total = 0;
  const double log_w = std::log2(static_cast<double>(word_bits));
  for (const std::uint64_t n : sizes) {
    if (n == 0) continue;
    const double bits = std::max(1.0, r - std::log2(static_cast<double>(n)) + log_w);
    total += std::ceil(static_cast<double>(n) * bits / word_bits);
  }
  return total;
}

RewriteResult asymmetric_rewrite(const ExprTree& tree, const SetMap& sets, unsigned r,
                                 const ExecContext& ctx) {
  resolve_leaves(tree, sets);
  const std::size_t n = tree.size();
  std::vector<bool> all_int(n, false);
  for (int v = 0; v < static_cast<int>(n); ++v) {
    const ExprNode& nd = tree.node(v);
    all_int[static_cast<std::size_t>(v)] =
        nd.kind == NodeKind::kLeaf ||
        (nd.kind == NodeKind::kIntersect && all_int[static_cast<std::size_t>(nd.left)] &&
         all_int[static_cast<std::size_t>(nd.right)]);
  }

  RewriteResult out;
  std::map<int, std::string> replaced;
  for (int v = 0; v < static_cast<int>(n); ++v) {
    const ExprNode& nd = tree.node(v);
    if (nd.kind != NodeKind::kIntersect || !all_int[static_cast<std::size_t>(v)]) continue;
    if (nd.parent >= 0 && all_int[static_cast<std::size_t>(nd.parent)]) continue;

    const ExprTree sub = tree.subtree(v);
    std::vector<const MultiResSet*> leaves = resolve_leaves(sub, sets);
    std::vector<std::uint64_t> sizes;
    for (const MultiResSet* s : leaves) sizes.push_back(s->size());
    const std::uint64_t smallest = *std::min_element(sizes.begin(), sizes.end());
    const double probe_cost = static_cast<double>(smallest) * static_cast<double>(leaves.size());
    if (!(probe_cost < approx_intersection_cost(sizes, r, leaves.front()->word_bits()))) continue;

    std::stable_sort(leaves.begin(), leaves.end(),
                     [](const MultiResSet* a, const MultiResSet* b) { return a->size() < b->size(); });
    std::vector<std::uint64_t> common;
    for (const std::uint64_t x : leaves.front()->elements()) {
      bool all = true;
      for (std::size_t j = 1; j < leaves.size() && all; ++j) all = leaves[j]->contains(x, ctx);
      if (all) common.push_back(x);
    }
    const std::string name = "#rw" + std::to_string(out.virtual_sets.size());
    out.virtual_sets.push_back(std::make_shared<const MultiResSet>(MultiResSet::preprocess(
        name, common, leaves.front()->hash(), leaves.front()->word_bits(), ctx)));
    replaced[v] = name;
  }
  out.rewrites = replaced.size();

  const auto rebuild = [&](auto&& self, int v) -> ExprTree {
    const auto it = replaced.find(v);
    if (it != replaced.end()) return ExprTree::leaf(it->second);
    const ExprNode& nd = tree.node(v);
    if (nd.kind == NodeKind::kLeaf) return ExprTree::leaf(nd.name);
    return ExprTree::combine(nd.kind, self(self, nd.left), self(self, nd.right));
  };
  out.tree = replaced.empty() ? tree : rebuild(rebuild, tree.root());
  return out;
}

QueryResult intersect_fast(const std::vector<const MultiResSet*>& sets, const EvalConfig& config) {
  if (sets.size() < 2) fail(ErrorCode::kBadParameter, "intersect_fast needs at least two sets");
  check_compatible(sets);
  QueryResult out;
  QueryStats& st = out.stats;
  st.path = "intersect_fast";

  std::vector<const MultiResSet*> order = sets;
  std::stable_sort(order.begin(), order.end(),
                   [](const MultiResSet* a, const MultiResSet* b) { return a->size() < b->size(); });
  std::uint64_t total = 0;
  for (const MultiResSet* s : order) total += s->size();
  const unsigned w = order.front()->hash_bits();
  st.r = config.r_override.value_or(
      choose_resolution(total, w, ResolutionMode::kIntersect, order.front()->size(), config.C));
  st.r_effective = common_resolution(order, st.r, &st.clamped);

  const ExecContext actx{&st.approx, config.compact_mode};
  ImagePtr h = order.front()->resolution_view(st.r_effective, actx).set;
  st.nodes.push_back({0, order.front()->name(), order.front()->size(), order.front()->size(),
                      h->size(), {}, {}, false});
  for (std::size_t j = 1; j < order.size(); ++j) {
    const MultiResSet& s = *order[j];
    NodeStat ns{static_cast<int>(j), s.name(), s.size(), s.size(), {}, {}, {}, false};
    if (h->empty()) {
      ++st.skipped;
    } else {
      const ImagePtr v = s.resolution_view(st.r_effective, actx).set;
      ns.image = v->size();
      h = intersect_images(h, v, actx);
    }
    st.nodes.push_back(ns);
  }

  const ExecContext fctx{&st.filter, config.compact_mode};
  std::vector<std::uint64_t> cands;
  for (const std::uint64_t v : h->flatten()) order.front()->append_lookup(v, st.r_effective, cands, fctx);
  st.nodes.front().candidates = cands.size();
  st.nodes.front().filtered = h->size();
  st.candidates = cands.size();

  const ExecContext ectx{&st.exact, config.compact_mode};
  for (const std::uint64_t x : cands) {
    bool all = true;
    for (std::size_t j = 1; j < order.size() && all; ++j) all = order[j]->contains(x, ectx);
    if (all) out.result.push_back(x);
  }
  std::sort(out.result.begin(), out.result.end());
  st.k = out.result.size();
  st.k_prime = st.k * order.size();
  st.false_candidates = st.candidates - st.k;
  return out;
}

QueryResult evaluate(const ExprTree& input, const SetMap& sets, const EvalConfig& config) {
  const auto original_leaves = resolve_leaves(input, sets);
  const unsigned w = original_leaves.front()->hash_bits();
  std::uint64_t total = 0;
  for (const MultiResSet* s : original_leaves) total += s->size();

  QueryStats st;
  ExprTree tree = input;
  SetMap all_sets = sets;
  RewriteResult rw;
  if (config.rewrite) {
    const unsigned r0 = config.r_override.value_or(
        choose_resolution(total, w, ResolutionMode::kGeneral, 0, config.C));
    rw = asymmetric_rewrite(input, sets, r0, ExecContext{&st.rewrite, config.compact_mode});
    tree = rw.tree;
    for (const auto& v : rw.virtual_sets) all_sets[v->name()] = v.get();
  }

  const bool pure = tree.size() > 1 && tree.pure_intersection();
  bool intersect_mode = false;
  switch (config.mode) {
    case EvalMode::kAuto: intersect_mode = pure; break;
    case EvalMode::kGeneral: break;
    case EvalMode::kIntersect:
      if (!input.pure_intersection())
        fail(ErrorCode::kBadParameter, "intersection mode needs an expression using only '&'");
      intersect_mode = true;
      break;
  }

  const auto leaves = resolve_leaves(tree, all_sets);
  if (intersect_mode && pure && config.fast_intersect) {
    QueryResult q = intersect_fast(leaves, config);
    q.stats.rewrite = st.rewrite;
    q.stats.rewrites_applied = rw.rewrites;
    return q;
  }

  std::uint64_t n = 0;
  std::uint64_t smallest = leaves.front()->size();
  for (const MultiResSet* s : leaves) {
    n += s->size();
    smallest = std::min(smallest, s->size());
  }
  st.path = "general";
  st.rewrites_applied = rw.rewrites;
  st.r = config.r_override.value_or(choose_resolution(
      n, w, intersect_mode ? ResolutionMode::kIntersect : ResolutionMode::kGeneral, smallest,
      config.C));

  const SizeAnnotation ann = annotate(tree, leaf_sizes(tree, all_sets));
  const ApproxResult approx =
      approx_evaluate(tree, ann, all_sets, st.r, ExecContext{&st.approx, config.compact_mode});
  const FilterResult filt =
      filter_topdown(tree, approx, all_sets, ExecContext{&st.filter, config.compact_mode});
  ExactResult exact =
      exact_evaluate(tree, ann, filt.candidates, ExecContext{&st.exact, config.compact_mode});

  st.r_effective = approx.r_eff;
  st.clamped = approx.clamped;
  st.visit_order = approx.visit_order;
  st.skipped = approx.skipped;
  for (int v = 0; v < static_cast<int>(tree.size()); ++v) {
    const auto i = static_cast<std::size_t>(v);
    NodeStat ns{v, node_label(tree.node(v)), ann.psi[i], ann.psi_star[i], {}, {}, {}, approx.reduced[i]};
    if (approx.images[i]) ns.image = approx.images[i]->size();
    ns.filtered = filt.filtered[i]->size();
    if (tree.node(v).kind == NodeKind::kLeaf) {
      ns.candidates = filt.candidates[i].size();
      st.candidates += filt.candidates[i].size();
    }
    if (approx.reduced[i]) ++st.reductions;
    st.nodes.push_back(std::move(ns));
  }
  st.k = exact.result.size();
  st.k_prime = exact.k_prime;
  st.false_candidates = exact.occurrences - exact.k_prime;
  return {std::move(exact.result), std::move(st)};
}

}  // namespace mrset
