#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "instances.hpp"
#include "mrset/error.hpp"
#include "mrset/eval.hpp"

using namespace mrset;
using oracle::PlainSet;

namespace {

bool subset(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

inst::Instance make(const oracle::PlainSets& plain, const std::string& expr, std::uint64_t seed = 1,
                    unsigned W = 64, unsigned w = 64) {
  inst::Instance in;
  in.plain = plain;
  in.tree = ExprTree::parse(expr);
  inst::load(in, draw_mother(seed_from_u64(seed), w), W);
  return in;
}

std::vector<std::uint64_t> hash_all(const MotherHash& mh, const PlainSet& s, unsigned r) {
  std::vector<std::uint64_t> out;
  for (const std::uint64_t x : s) out.push_back(mh.hash_r(x, r));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// f evaluated on the hash images of the inputs.
std::vector<std::uint64_t> hashed_eval(const inst::Instance& in, const MotherHash& mh, unsigned r) {
  oracle::PlainSets hashed;
  for (const auto& [name, s] : in.plain) hashed[name] = hash_all(mh, s, r);
  return oracle::naive_evaluate(in.tree, hashed);
}

int leaf_named(const ExprTree& t, const std::string& name) {
  for (const int v : t.leaves())
    if (t.node(v).name == name) return v;
  return -1;
}

}  // namespace

TEST(Evaluate, MatchesOracleOnRandomInstances) {
  std::mt19937_64 rng(11);
  inst::Shape shape;
  shape.max_size = 300;
  int checked = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const unsigned W = trial % 2 ? 512 : 64;
    const MotherHash mh = draw_mother(seed_from_u64(static_cast<std::uint64_t>(trial % 10)), 64);
    inst::Instance in = inst::random_instance(rng, shape, mh, W);
    const PlainSet want = oracle::naive_evaluate(in.tree, in.plain);
    for (const bool rw : {false, true}) {
      for (const EvalMode mode : {EvalMode::kAuto, EvalMode::kGeneral}) {
        EvalConfig cfg;
        cfg.rewrite = rw;
        cfg.mode = mode;
        const QueryResult q = evaluate(in.tree, in.sets, cfg);
        ASSERT_EQ(q.result, want) << in.tree.to_string();
        EXPECT_EQ(q.stats.k, want.size());
        EXPECT_GE(q.stats.k_prime, q.stats.k);
        ++checked;
      }
    }
  }
  EXPECT_EQ(checked, 1200);
}

TEST(Evaluate, ExactUnderHeavyCollisions) {
  std::mt19937_64 rng(12);
  inst::Shape shape;
  shape.max_size = 100;
  shape.universe = 4000;
  for (int trial = 0; trial < 200; ++trial) {
    const MotherHash mh = draw_mother(seed_from_u64(static_cast<std::uint64_t>(trial)), 32);
    inst::Instance in = inst::random_instance(rng, shape, mh, 64);
    EvalConfig cfg;
    cfg.r_override = 1 + static_cast<unsigned>(trial % 6);
    cfg.rewrite = trial % 3 == 0;
    ASSERT_EQ(evaluate(in.tree, in.sets, cfg).result, oracle::naive_evaluate(in.tree, in.plain))
        << in.tree.to_string() << " r=" << *cfg.r_override;
  }
}

TEST(Evaluate, PureIntersectionsTakeFastPath) {
  std::mt19937_64 rng(13);
  inst::Shape shape;
  shape.max_size = 400;
  shape.p_intersect = 1.0;
  for (int trial = 0; trial < 100; ++trial) {
    const MotherHash mh = draw_mother(seed_from_u64(static_cast<std::uint64_t>(trial)), 64);
    inst::Instance in = inst::random_instance(rng, shape, mh, 128);
    EvalConfig cfg;
    cfg.rewrite = false;
    const QueryResult q = evaluate(in.tree, in.sets, cfg);
    EXPECT_EQ(q.stats.path, "intersect_fast");
    ASSERT_EQ(q.result, oracle::naive_evaluate(in.tree, in.plain));
    cfg.fast_intersect = false;
    cfg.mode = EvalMode::kIntersect;
    const QueryResult g = evaluate(in.tree, in.sets, cfg);
    EXPECT_EQ(g.stats.path, "general");
    ASSERT_EQ(g.result, q.result);
  }
}

TEST(Evaluate, TrivialCases) {
  {
    inst::Instance in = make({{"A", {}}, {"B", {}}}, "(A | B)");
    const QueryResult q = evaluate(in.tree, in.sets);
    EXPECT_TRUE(q.result.empty());
    EXPECT_EQ(q.stats.candidates, 0u);
  }
  {
    PlainSet s;
    for (std::uint64_t i = 0; i < 500; ++i) s.push_back(i * 7919);
    inst::Instance in = make({{"A", s}, {"B", s}, {"C", s}}, "((A & B) & C)");
    EvalConfig cfg;
    cfg.rewrite = false;
    for (const bool fast : {true, false}) {
      cfg.fast_intersect = fast;
      const QueryResult q = evaluate(in.tree, in.sets, cfg);
      EXPECT_EQ(q.result, s);
      EXPECT_EQ(q.stats.k_prime, 3 * s.size());
    }
  }
  {
    inst::Instance in = make({{"A", {5, 6}}}, "A");
    EXPECT_EQ(evaluate(in.tree, in.sets).result, (PlainSet{5, 6}));
  }
}

TEST(Evaluate, Errors) {
  inst::Instance in = make({{"A", {1}}, {"B", {2}}}, "(A | B)");
  try {
    evaluate(ExprTree::parse("(A & Z)"), in.sets);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownSet);
  }
  EvalConfig cfg;
  cfg.mode = EvalMode::kIntersect;
  try {
    evaluate(in.tree, in.sets, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBadParameter);
  }
  const MultiResSet other =
      MultiResSet::preprocess("B", PlainSet{2}, draw_mother(seed_from_u64(999), 64), 64);
  SetMap mixed = in.sets;
  mixed["B"] = &other;
  try {
    evaluate(in.tree, mixed);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSeedMismatch);
  }
}

TEST(Phases, SupersetChain) {
  std::mt19937_64 rng(14);
  inst::Shape shape;
  shape.max_size = 200;
  shape.universe = 1u << 20;
  for (int trial = 0; trial < 150; ++trial) {
    const MotherHash mh = draw_mother(seed_from_u64(static_cast<std::uint64_t>(trial)), 32);
    inst::Instance in = inst::random_instance(rng, shape, mh, 64);
    const unsigned r = 4 + static_cast<unsigned>(trial % 20);
    const SizeAnnotation ann = annotate(in.tree, leaf_sizes(in.tree, in.sets));
    const ApproxResult ap = approx_evaluate(in.tree, ann, in.sets, r);
    const FilterResult fl = filter_topdown(in.tree, ap, in.sets);
    const auto H = ap.root().flatten();
    const PlainSet truth = oracle::naive_evaluate(in.tree, in.plain);
    ASSERT_TRUE(subset(hashed_eval(in, mh, ap.r_eff), H));
    PlainSet all_candidates;
    for (const auto& c : fl.candidates) all_candidates.insert(all_candidates.end(), c.begin(), c.end());
    EXPECT_TRUE(subset(truth, oracle::normalize(all_candidates)));
    EXPECT_EQ(exact_evaluate(in.tree, ann, fl.candidates).result, truth);
    for (int v = 0; v < static_cast<int>(in.tree.size()); ++v) {
      const auto i = static_cast<std::size_t>(v);
      const auto filtered = fl.filtered[i]->flatten();
      if (ap.images[i]) {
        const auto own = ap.images[i]->flatten();
        EXPECT_TRUE(subset(filtered, own));
        EXPECT_TRUE(subset(filtered, H));
      } else {
        EXPECT_TRUE(filtered.empty());
      }
      const ExprNode& nd = in.tree.node(v);
      if (nd.kind != NodeKind::kLeaf) continue;
      const PlainSet& s = in.plain.at(nd.name);
      PlainSet cand = oracle::normalize(fl.candidates[i]);
      EXPECT_EQ(cand.size(), fl.candidates[i].size());
      EXPECT_TRUE(subset(cand, s));
      // Elements whose hash survives at the leaf are all extracted.
      EXPECT_EQ(hash_all(mh, cand, ap.r_eff).size(), filtered.size());
    }
  }
}

TEST(Phases, UnfilteredLeafReturnsWholeSet) {
  inst::Instance in = make({{"A", {1, 2, 3, 4, 5}}}, "A");
  const SizeAnnotation ann = annotate(in.tree, leaf_sizes(in.tree, in.sets));
  const ApproxResult ap = approx_evaluate(in.tree, ann, in.sets, 20);
  EXPECT_EQ(ap.root().flatten(), in.sets.at("A")->resolution_view(20).set->flatten());
  const FilterResult fl = filter_topdown(in.tree, ap, in.sets);
  EXPECT_EQ(oracle::normalize(fl.candidates[0]), (PlainSet{1, 2, 3, 4, 5}));
}

TEST(Phases, EmptyRootFiltersEverything) {
  PlainSet a, b;
  for (std::uint64_t i = 0; i < 100; ++i) {
    a.push_back(2 * i);
    b.push_back(2 * i + 1);
  }
  inst::Instance in = make({{"A", a}, {"B", b}, {"C", {}}}, "((A | B) & C)");
  const SizeAnnotation ann = annotate(in.tree, leaf_sizes(in.tree, in.sets));
  const ApproxResult ap = approx_evaluate(in.tree, ann, in.sets, 30);
  EXPECT_TRUE(ap.root().empty());
  EXPECT_EQ(ap.skipped, 3u);
  const FilterResult fl = filter_topdown(in.tree, ap, in.sets);
  for (const auto& c : fl.candidates) EXPECT_TRUE(c.empty());
}

TEST(Phases, DisjointLeavesAtFullResolution) {
  inst::Instance in = make({{"A", {1, 2, 3}}, {"B", {4, 5, 6}}}, "(A & B)");
  const SizeAnnotation ann = annotate(in.tree, leaf_sizes(in.tree, in.sets));
  const ApproxResult ap = approx_evaluate(in.tree, ann, in.sets, 64);
  EXPECT_TRUE(ap.root().empty());
}

TEST(Phases, TraversalVisitsSmallerPsiStarFirst) {
  std::mt19937_64 rng(15);
  inst::Shape shape;
  shape.max_size = 300;
  for (int trial = 0; trial < 200; ++trial) {
    const MotherHash mh = draw_mother(seed_from_u64(static_cast<std::uint64_t>(trial)), 64);
    inst::Instance in = inst::random_instance(rng, shape, mh, 64);
    const SizeAnnotation ann = annotate(in.tree, leaf_sizes(in.tree, in.sets));
    const ApproxResult ap = approx_evaluate(in.tree, ann, in.sets, 24);
    std::vector<int> pos(in.tree.size(), -1);
    for (std::size_t j = 0; j < ap.visit_order.size(); ++j)
      pos[static_cast<std::size_t>(ap.visit_order[j])] = static_cast<int>(j);
    for (int v = 0; v < static_cast<int>(in.tree.size()); ++v) {
      const ExprNode& nd = in.tree.node(v);
      if (nd.kind != NodeKind::kIntersect || pos[static_cast<std::size_t>(v)] < 0) continue;
      const auto L = static_cast<std::size_t>(nd.left), R = static_cast<std::size_t>(nd.right);
      const int first = ann.first_child[static_cast<std::size_t>(v)];
      const int second = first == nd.left ? nd.right : nd.left;
      EXPECT_LE(ann.psi_star[static_cast<std::size_t>(first)],
                ann.psi_star[static_cast<std::size_t>(second)]);
      if (ann.psi_star[L] == ann.psi_star[R] && ann.psi[L] == ann.psi[R]) EXPECT_EQ(first, nd.left);
      ASSERT_GE(pos[static_cast<std::size_t>(first)], 0);
      if (pos[static_cast<std::size_t>(second)] >= 0)
        EXPECT_LT(pos[static_cast<std::size_t>(first)], pos[static_cast<std::size_t>(second)]);
    }
  }
}

TEST(Phases, ReductionFiresAndStaysExact) {
  PlainSet a{10, 20, 30}, b, c;
  for (std::uint64_t i = 0; i < 50; ++i) b.push_back(1000 + i);
  for (std::uint64_t i = 0; i < 60; ++i) c.push_back(5000 + i);
  b.push_back(20);
  c.push_back(30);
  b = oracle::normalize(b);
  c = oracle::normalize(c);
  inst::Instance in = make({{"A", a}, {"B", b}, {"C", c}}, "(A & (B | C))");
  const SizeAnnotation ann = annotate(in.tree, leaf_sizes(in.tree, in.sets));
  const ApproxResult ap = approx_evaluate(in.tree, ann, in.sets, 40);
  const int B = leaf_named(in.tree, "B");
  EXPECT_TRUE(ap.reduced[static_cast<std::size_t>(B)]);
  EXPECT_LE(ap.images[static_cast<std::size_t>(B)]->size(), 3u);
  EvalConfig cfg;
  cfg.r_override = 40;
  const QueryResult q = evaluate(in.tree, in.sets, cfg);
  EXPECT_EQ(q.result, (PlainSet{20, 30}));
  EXPECT_GE(q.stats.reductions, 2u);
}

TEST(Exact, SignalRouting) {
  const ExprTree t = ExprTree::parse("((A & B) | C)");
  const SizeAnnotation ann = annotate(t, {{"A", 3}, {"B", 3}, {"C", 3}});
  std::vector<std::vector<std::uint64_t>> cand(t.size());
  cand[static_cast<std::size_t>(leaf_named(t, "A"))] = {1, 2, 3};
  cand[static_cast<std::size_t>(leaf_named(t, "B"))] = {3};
  cand[static_cast<std::size_t>(leaf_named(t, "C"))] = {1};
  const ExactResult r = exact_evaluate(t, ann, cand);
  EXPECT_EQ(r.result, (PlainSet{1, 3}));
  EXPECT_EQ(r.k_prime, 4u);
  EXPECT_EQ(r.occurrences, 5u);
}

TEST(Exact, MatchesOracleOnRandomCandidates) {
  std::mt19937_64 rng(16);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t m = std::uniform_int_distribution<std::size_t>(1, 8)(rng);
    const oracle::PlainSets plain = inst::random_sets(rng, m, 20, 0.7, 30);
    std::vector<std::string> names;
    for (const auto& kv : plain) names.push_back(kv.first);
    const ExprTree t = inst::random_tree(rng, names, 0, names.size(), 0.5);
    SizeMap sizes;
    for (const auto& [n, s] : plain) sizes[n] = s.size();
    std::vector<std::vector<std::uint64_t>> cand(t.size());
    for (const int v : t.leaves()) cand[static_cast<std::size_t>(v)] = plain.at(t.node(v).name);
    ASSERT_EQ(exact_evaluate(t, annotate(t, sizes), cand).result, oracle::naive_evaluate(t, plain));
  }
}

TEST(IntersectFast, Examples) {
  inst::Instance in = make({{"A", {1, 2, 3}}, {"B", {2, 3, 4}}, {"C", {3, 5}}}, "((A & B) & C)");
  const QueryResult q =
      intersect_fast({in.sets.at("A"), in.sets.at("B"), in.sets.at("C")});
  EXPECT_EQ(q.result, (PlainSet{3}));
  EXPECT_EQ(q.stats.path, "intersect_fast");
  EXPECT_THROW(intersect_fast({in.sets.at("A")}), Error);

  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    PlainSet x, y;
    for (int i = 0; i < 1000; ++i) (rng() % 2 ? x : y).push_back(rng());
    inst::Instance d = make({{"X", oracle::normalize(x)}, {"Y", oracle::normalize(y)}}, "(X & Y)",
                            static_cast<std::uint64_t>(trial));
    const QueryResult f = intersect_fast({d.sets.at("X"), d.sets.at("Y")});
    EXPECT_TRUE(f.result.empty());
    EvalConfig cfg;
    cfg.mode = EvalMode::kGeneral;
    EXPECT_EQ(evaluate(d.tree, d.sets, cfg).result, f.result);
  }
}

TEST(Rewrite, CostModel) {
  EXPECT_GT(approx_intersection_cost({4, 1000000, 1000000}, 28, 64), 12.0);
  EXPECT_GT(approx_intersection_cost({4, 1000000, 1000000}, 28, 64), 1e4);
  EXPECT_LT(approx_intersection_cost({100000, 100000}, 26, 64), 2e5);
  EXPECT_EQ(approx_intersection_cost({0, 0}, 10, 64), 0.0);
}

TEST(Rewrite, SmallLeafIntersectionIsPrecomputed) {
  std::mt19937_64 rng(18);
  PlainSet big1, big2;
  for (int i = 0; i < 20000; ++i) {
    big1.push_back(rng() >> 1);
    big2.push_back(rng() >> 1);
  }
  big1.push_back(77);
  big2.push_back(77);
  big1.push_back(88);
  inst::Instance in = make({{"T", {77, 88, 99, 5}},
                            {"U", oracle::normalize(big1)},
                            {"V", oracle::normalize(big2)},
                            {"Z", {1, 2}}},
                           "(((T & U) & V) | Z)");
  const RewriteResult rw = asymmetric_rewrite(in.tree, in.sets, 30);
  ASSERT_EQ(rw.rewrites, 1u);
  EXPECT_EQ(rw.tree.to_string(), "(#rw0 | Z)");
  EXPECT_EQ(rw.virtual_sets.front()->elements(), (PlainSet{77}));
  const QueryResult q = evaluate(in.tree, in.sets);
  EXPECT_EQ(q.stats.rewrites_applied, 1u);
  EXPECT_EQ(q.result, (PlainSet{1, 2, 77}));

  PlainSet p, s;
  for (std::uint64_t i = 0; i < 100000; ++i) {
    p.push_back(i * 3);
    s.push_back(i * 5);
  }
  inst::Instance even = make({{"P", p}, {"S", s}}, "(P & S)");
  EXPECT_EQ(asymmetric_rewrite(even.tree, even.sets, 26).rewrites, 0u);
}
