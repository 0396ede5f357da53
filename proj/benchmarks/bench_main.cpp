#include <benchmark/benchmark.h>

#include <algorithm>
#include <memory>
#include <random>
#include <string>
#include <unordered_set>
#include <vector>

#include "mrset/eval.hpp"
#include "mrset/oracle.hpp"
#include "mrset/packed.hpp"

namespace {

using namespace mrset;

std::vector<std::uint64_t> sorted_random(std::mt19937_64& rng, std::size_t n, std::uint64_t mask) {
  std::unordered_set<std::uint64_t> seen;
  while (seen.size() < n) seen.insert(rng() & mask);
  std::vector<std::uint64_t> v(seen.begin(), seen.end());
  std::sort(v.begin(), v.end());
  return v;
}

struct Fixture {
  std::vector<std::vector<std::uint64_t>> plain;
  std::vector<std::unique_ptr<MultiResSet>> sets;
  SetMap map;
};

// Two sets of size n sharing about 1% of their elements.
Fixture pair_fixture(std::size_t n, unsigned W) {
  std::mt19937_64 rng(n * 31 + W);
  const auto pool = sorted_random(rng, 2 * n, ~std::uint64_t{0});
  std::vector<std::uint64_t> shuffled = pool;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const std::size_t shared = n / 100;
  Fixture f;
  const MotherHash mh = draw_mother(seed_from_u64(7), 64);
  for (int j = 0; j < 2; ++j) {
    std::vector<std::uint64_t> s(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(shared));
    const auto from = shuffled.begin() + static_cast<std::ptrdiff_t>(shared + j * (n - shared));
    s.insert(s.end(), from, from + static_cast<std::ptrdiff_t>(n - shared));
    std::sort(s.begin(), s.end());
    const std::string name = j == 0 ? "A" : "B";
    f.sets.push_back(std::make_unique<MultiResSet>(MultiResSet::preprocess(name, s, mh, W)));
    f.map[name] = f.sets.back().get();
    f.plain.push_back(std::move(s));
  }
  return f;
}

void BM_PackedIntersect(benchmark::State& state) {
  const auto W = static_cast<unsigned>(state.range(0));
  const unsigned f = 8;
  std::mt19937_64 rng(1);
  const auto a = sorted_random(rng, 200, 0xff);
  const auto b = sorted_random(rng, 200, 0xff);
  const PackedSet pa = PackedSet::from_sorted(a, f, W), pb = PackedSet::from_sorted(b, f, W);
  OpCounter ops;
  const ExecContext ctx{&ops};
  for (auto _ : state) benchmark::DoNotOptimize(packed_intersect(pa, pb, ctx));
  state.counters["word_ops"] =
      benchmark::Counter(static_cast<double>(ops.word_ops), benchmark::Counter::kAvgIterations);
}
BENCHMARK(BM_PackedIntersect)->Arg(64)->Arg(128)->Arg(256)->Arg(512);

void BM_Preprocess(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const auto v = sorted_random(rng, static_cast<std::size_t>(state.range(0)), ~std::uint64_t{0});
  const MotherHash mh = draw_mother(seed_from_u64(3), 64);
  for (auto _ : state) benchmark::DoNotOptimize(MultiResSet::preprocess("S", v, mh, 64));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Preprocess)->Range(1 << 10, 1 << 18);

void BM_IntersectFast(benchmark::State& state) {
  const Fixture f = pair_fixture(static_cast<std::size_t>(state.range(0)),
                                 static_cast<unsigned>(state.range(1)));
  const ExprTree tree = ExprTree::parse("(A & B)");
  EvalConfig cfg;
  cfg.rewrite = false;
  std::uint64_t ops = 0;
  for (auto _ : state) {
    const QueryResult q = evaluate(tree, f.map, cfg);
    ops += q.stats.approx.word_ops;
    benchmark::DoNotOptimize(q.result.data());
  }
  state.counters["approx_word_ops"] =
      benchmark::Counter(static_cast<double>(ops), benchmark::Counter::kAvgIterations);
  state.SetItemsProcessed(state.iterations() * 2 * state.range(0));
}
BENCHMARK(BM_IntersectFast)->ArgsProduct({{1 << 14, 1 << 17}, {64, 512}});

void BM_GeneralExpression(benchmark::State& state) {
  const Fixture f = pair_fixture(static_cast<std::size_t>(state.range(0)), 256);
  const ExprTree tree = ExprTree::parse("((A & B) | (B & A))");
  EvalConfig cfg;
  cfg.rewrite = false;
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(tree, f.map, cfg).result.data());
  state.SetItemsProcessed(state.iterations() * 4 * state.range(0));
}
BENCHMARK(BM_GeneralExpression)->Arg(1 << 14)->Arg(1 << 17);

void BM_MergeBaseline(benchmark::State& state) {
  const Fixture f = pair_fixture(static_cast<std::size_t>(state.range(0)), 64);
  for (auto _ : state) benchmark::DoNotOptimize(oracle::merge_intersect_baseline(f.plain));
  state.SetItemsProcessed(state.iterations() * 2 * state.range(0));
}
BENCHMARK(BM_MergeBaseline)->Arg(1 << 14)->Arg(1 << 17);

}  // namespace

BENCHMARK_MAIN();
