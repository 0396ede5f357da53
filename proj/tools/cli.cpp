#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <memory>
#include <ostream>
#include <random>
#include <sstream>
#include <unordered_set>

#include "mrset/index_io.hpp"
#include "mrset/multires.hpp"
#include "mrset/oracle.hpp"
#include "mrset/word.hpp"

namespace mrset::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kManifestFile = "manifest.json";

bool valid_name(std::string_view name) {
  return !name.empty() && std::all_of(name.begin(), name.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

Seed resolve_seed(std::string_view text) {
  if (text.size() == 32) return parse_seed(text);
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size())
    fail(ErrorCode::kBadParameter, "seed must be 32 hex digits or a decimal integer");
  return seed_from_u64(v);
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

json counter_json(const OpCounter& c) {
  return {{"word_ops", c.word_ops}, {"hash_probes", c.hash_probes}, {"hash_evals", c.hash_evals}};
}

template <typename T>
json opt_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParseError:
    case ErrorCode::kValueOutOfRange:
    case ErrorCode::kDuplicateElement: return kExitParse;
    case ErrorCode::kUnknownSet: return kExitUnknownSet;
    case ErrorCode::kSeedMismatch: return kExitSeedMismatch;
    case ErrorCode::kIoError:
    case ErrorCode::kFormatError: return kExitIo;
    default: return kExitUsage;
  }
}

const ManifestEntry* Manifest::find(std::string_view name) const {
  for (const ManifestEntry& e : sets)
    if (e.name == name) return &e;
  return nullptr;
}

std::string seed_digest(const Seed& seed) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const std::uint8_t b : seed) h = (h ^ b) * 0x100000001b3ULL;
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::optional<Manifest> load_manifest(const fs::path& dir) {
  const fs::path path = dir / kManifestFile;
  if (!fs::exists(path)) return std::nullopt;
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIoError, "cannot read " + path.string());
  try {
    const json j = json::parse(in);
    Manifest m;
    m.w = j.at("w").get<unsigned>();
    m.seed_hex = j.at("seed").get<std::string>();
    for (const json& s : j.at("sets")) {
      ManifestEntry e;
      e.name = s.at("name").get<std::string>();
      e.file = s.at("file").get<std::string>();
      e.n1 = s.at("n1").get<std::uint64_t>();
      e.dedup = s.at("dedup").get<std::uint64_t>();
      e.w = s.at("w").get<unsigned>();
      e.W = s.at("W").get<unsigned>();
      e.C = s.at("C").get<unsigned>();
      e.seed_digest = s.at("seed_digest").get<std::string>();
      e.binary_input = s.value("binary_input", false);
      m.sets.push_back(std::move(e));
    }
    return m;
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormatError, "malformed manifest " + path.string() + ": " + e.what());
  }
}

void save_manifest(const fs::path& dir, const Manifest& m) {
  json sets = json::array();
  for (const ManifestEntry& e : m.sets) {
    sets.push_back({{"name", e.name},
                    {"file", e.file},
                    {"n1", e.n1},
                    {"dedup", e.dedup},
                    {"w", e.w},
                    {"W", e.W},
                    {"C", e.C},
                    {"seed_digest", e.seed_digest},
                    {"binary_input", e.binary_input}});
  }
  const json j = {{"format", "mrset-manifest"}, {"version", 1}, {"w", m.w}, {"seed", m.seed_hex},
                  {"sets", sets}};
  const fs::path path = dir / kManifestFile;
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::kIoError, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) fail(ErrorCode::kIoError, "failed writing " + path.string());
}

std::vector<std::uint64_t> read_elements(const fs::path& path, bool binary, unsigned w) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoError, "cannot read " + path.string());
  const std::uint64_t limit = w >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << w) - 1;
  std::vector<std::uint64_t> out;
  if (binary) {
    const std::vector<char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    if (bytes.size() % 8 != 0)
      fail(ErrorCode::kParseError, path.string() + ": binary input is not a multiple of 8 bytes");
    for (std::size_t i = 0; i < bytes.size(); i += 8) {
      std::uint64_t v = 0;
      for (unsigned b = 0; b < 8; ++b)
        v |= std::uint64_t{static_cast<unsigned char>(bytes[i + b])} << (8 * b);
      if (v > limit)
        fail(ErrorCode::kParseError, path.string() + ": record " + std::to_string(i / 8 + 1) +
                                         " exceeds " + std::to_string(w) + " bits");
      out.push_back(v);
    }
    return out;
  }
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    const std::string_view tok(line.data() + first, last - first + 1);
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec == std::errc::result_out_of_range || (ec == std::errc() && p == tok.data() + tok.size() && v > limit))
      fail(ErrorCode::kParseError, path.string() + ":" + std::to_string(line_no) +
                                       ": value exceeds " + std::to_string(w) + " bits");
    if (ec != std::errc() || p != tok.data() + tok.size())
      fail(ErrorCode::kParseError, path.string() + ":" + std::to_string(line_no) +
                                       ": expected an unsigned decimal integer");
    out.push_back(v);
  }
  if (in.bad()) fail(ErrorCode::kIoError, "failed reading " + path.string());
  return out;
}

void cmd_build(const BuildOptions& opt, std::ostream& out) {
  if (!valid_name(opt.name))
    fail(ErrorCode::kBadParameter, "set name must match [A-Za-z0-9_]+");
  std::error_code ec;
  fs::create_directories(opt.out_dir, ec);
  if (ec) fail(ErrorCode::kIoError, "cannot create " + opt.out_dir.string() + ": " + ec.message());

  std::optional<Manifest> existing = load_manifest(opt.out_dir);
  Seed seed{};
  if (opt.seed) seed = resolve_seed(*opt.seed);
  else if (existing) seed = parse_seed(existing->seed_hex);
  else seed = seed_from_u64(0);
  if (existing) {
    if (existing->seed_hex != seed_hex(seed))
      fail(ErrorCode::kSeedMismatch, "index directory " + opt.out_dir.string() +
                                         " was built with a different seed");
    if (existing->w != opt.w)
      fail(ErrorCode::kSeedMismatch, "index directory " + opt.out_dir.string() + " uses w=" +
                                         std::to_string(existing->w));
  }

  const MotherHash mh = draw_mother(seed, opt.w);
  const std::vector<std::uint64_t> values = read_elements(opt.input, opt.binary, opt.w);
  const MultiResSet set = MultiResSet::preprocess(opt.name, values, mh, opt.W);
  const std::string file = opt.name + ".mrs";
  write_index(opt.out_dir / file, set, opt.C);

  Manifest m = existing.value_or(Manifest{opt.w, seed_hex(seed), {}});
  ManifestEntry e{opt.name, file, set.size(), set.dedup_count(), opt.w, opt.W, opt.C,
                  seed_digest(seed), opt.binary};
  const auto it = std::find_if(m.sets.begin(), m.sets.end(),
                               [&](const ManifestEntry& s) { return s.name == opt.name; });
  if (it != m.sets.end()) *it = e;
  else m.sets.push_back(e);
  save_manifest(opt.out_dir, m);

  json rec = {{"name", opt.name}, {"n1", set.size()}, {"dedup", set.dedup_count()},
              {"w", opt.w},       {"W", opt.W},       {"keys", set.keys()},
              {"file", (opt.out_dir / file).string()}};
  out << rec.dump() << '\n';
}

std::string stats_json(const QueryStats& st) {
  json nodes = json::array();
  for (const NodeStat& n : st.nodes) {
    nodes.push_back({{"node", n.node},
                     {"label", n.label},
                     {"psi", n.psi},
                     {"psi_star", n.psi_star},
                     {"image", opt_json(n.image)},
                     {"filtered", opt_json(n.filtered)},
                     {"candidates", opt_json(n.candidates)},
                     {"reduced", n.reduced}});
  }
  const OpCounter total = st.total();
  const json j = {{"path", st.path},
                  {"r", st.r},
                  {"r_effective", st.r_effective},
                  {"clamped", st.clamped},
                  {"nodes", nodes},
                  {"candidates", st.candidates},
                  {"false_candidates", st.false_candidates},
                  {"k", st.k},
                  {"k_prime", st.k_prime},
                  {"word_ops", total.word_ops},
                  {"hash_probes", total.hash_probes},
                  {"hash_evals", total.hash_evals},
                  {"rewrites_applied", st.rewrites_applied},
                  {"reductions", st.reductions},
                  {"skipped", st.skipped},
                  {"phases",
                   {{"approx", counter_json(st.approx)},
                    {"filter", counter_json(st.filter)},
                    {"exact", counter_json(st.exact)},
                    {"rewrite", counter_json(st.rewrite)}}}};
  return j.dump();
}

void cmd_query(const QueryOptions& opt, std::ostream& out, std::ostream& stats_out) {
  const ExprTree tree = ExprTree::parse(opt.expr);
  const std::optional<Manifest> m = load_manifest(opt.index_dir);
  if (!m) fail(ErrorCode::kIoError, "no manifest in " + opt.index_dir.string());
  const Seed seed = parse_seed(m->seed_hex);

  std::vector<std::unique_ptr<MultiResSet>> owned;
  SetMap sets;
  unsigned C = 2;
  for (const std::string& name : tree.leaf_names()) {
    const ManifestEntry* e = m->find(name);
    if (e == nullptr) fail(ErrorCode::kUnknownSet, "unknown set '" + name + "'");
    if (e->seed_digest != seed_digest(seed) || e->w != m->w)
      fail(ErrorCode::kSeedMismatch, "set '" + name + "' was built with a different seed");
    IndexFile idx = read_index(opt.index_dir / e->file, name);
    if (idx.set.hash().seed() != seed || idx.set.hash_bits() != m->w)
      fail(ErrorCode::kSeedMismatch, "index file for '" + name + "' does not match the manifest seed");
    C = idx.C;
    owned.push_back(std::make_unique<MultiResSet>(std::move(idx.set)));
    sets[name] = owned.back().get();
  }

  EvalConfig cfg;
  cfg.C = opt.C.value_or(C);
  cfg.mode = opt.mode;
  cfg.rewrite = opt.rewrite;
  cfg.r_override = opt.r;
  const QueryResult q = evaluate(tree, sets, cfg);
  for (const std::uint64_t x : q.result) out << x << '\n';
  if (opt.stats) stats_out << stats_json(q.stats) << '\n';
}

namespace {

struct Instance {
  std::vector<std::vector<std::uint64_t>> sets;
  ExprTree tree = ExprTree::leaf("S0");
};

Instance make_instance(const BenchOptions& opt, std::uint64_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::uint64_t mask = opt.w >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << opt.w) - 1;
  const auto planted = static_cast<std::uint64_t>(std::llround(opt.overlap * static_cast<double>(n)));
  std::unordered_set<std::uint64_t> used;
  const auto fresh = [&] {
    std::uint64_t x;
    do x = rng() & mask;
    while (!used.insert(x).second);
    return x;
  };
  std::vector<std::uint64_t> common(planted);
  for (auto& x : common) x = fresh();
  Instance inst;
  for (unsigned j = 0; j < opt.m; ++j) {
    std::vector<std::uint64_t> s = common;
    while (s.size() < n) s.push_back(fresh());
    std::sort(s.begin(), s.end());
    inst.sets.push_back(std::move(s));
  }
  for (unsigned j = 1; j < opt.m; ++j) {
    const NodeKind kind = opt.shape == "mixed" && j % 2 == 0 ? NodeKind::kUnion : NodeKind::kIntersect;
    inst.tree = ExprTree::combine(kind, inst.tree, ExprTree::leaf("S" + std::to_string(j)));
  }
  return inst;
}

}  // namespace

void cmd_bench(const BenchOptions& opt, std::ostream& out) {
  if (opt.m < 2) fail(ErrorCode::kBadParameter, "bench needs m >= 2");
  if (opt.trials == 0 || opt.sizes.empty() || opt.widths.empty())
    fail(ErrorCode::kBadParameter, "bench needs sizes, widths and at least one trial");
  if (opt.overlap < 0 || opt.overlap > 1) fail(ErrorCode::kBadParameter, "overlap must be in [0, 1]");
  if (opt.shape != "intersect" && opt.shape != "mixed")
    fail(ErrorCode::kBadParameter, "shape must be 'intersect' or 'mixed'");
  for (const unsigned W : opt.widths)
    if (!valid_word_width(W) || W < 64) fail(ErrorCode::kBadParameter, "unsupported bench width");

  out << json{{"type", "header"},   {"seed", opt.seed},       {"sizes", opt.sizes},
              {"widths", opt.widths}, {"m", opt.m},           {"overlap", opt.overlap},
              {"shape", opt.shape}, {"trials", opt.trials},   {"w", opt.w},
              {"C", opt.C},         {"trial_seeds", "splitmix64(seed + trial)"}}
             .dump()
      << '\n';

  std::map<std::pair<unsigned, std::uint64_t>, double> per_element;
  std::map<std::pair<unsigned, std::uint64_t>, double> approx_mean;
  for (const std::uint64_t n : opt.sizes) {
    for (const unsigned W : opt.widths) {
      double approx = 0, baseline = 0, inflation = 0, probes = 0, wall = 0, k = 0;
      for (unsigned t = 0; t < opt.trials; ++t) {
        const Instance inst = make_instance(opt, n, splitmix(opt.seed + t));
        const MotherHash mh = draw_mother(seed_from_u64(splitmix(opt.seed + t) ^ 0x5eed), opt.w);
        std::vector<MultiResSet> built;
        built.reserve(inst.sets.size());
        for (std::size_t j = 0; j < inst.sets.size(); ++j)
          built.push_back(MultiResSet::preprocess("S" + std::to_string(j), inst.sets[j], mh, W));
        SetMap sets;
        for (const MultiResSet& s : built) sets[s.name()] = &s;
        EvalConfig cfg;
        cfg.C = opt.C;
        cfg.rewrite = false;
        const auto t0 = std::chrono::steady_clock::now();
        const QueryResult q = evaluate(inst.tree, sets, cfg);
        wall += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        approx += static_cast<double>(q.stats.approx.word_ops);
        probes += static_cast<double>(q.stats.exact.hash_probes);
        inflation += static_cast<double>(q.stats.candidates) /
                     static_cast<double>(std::max<std::uint64_t>(1, q.stats.k_prime));
        k += static_cast<double>(q.stats.k);
        if (opt.shape == "intersect")
          baseline += static_cast<double>(oracle::merge_intersect_baseline(inst.sets).comparisons);
      }
      const double tr = opt.trials;
      const double total_n = static_cast<double>(n) * opt.m;
      per_element[{W, n}] = approx / tr / total_n;
      approx_mean[{W, n}] = approx / tr;
      json cell = {{"type", "cell"},
                   {"W", W},
                   {"n", n},
                   {"m", opt.m},
                   {"approx_word_ops", approx / tr},
                   {"approx_ops_per_element", approx / tr / total_n},
                   {"baseline_comparisons", opt.shape == "intersect" ? json(baseline / tr) : json(nullptr)},
                   {"candidate_inflation", inflation / tr},
                   {"exact_probes", probes / tr},
                   {"k", k / tr},
                   {"wall_ms", wall / tr}};
      out << cell.dump() << '\n';
    }
  }

  json decreasing = json::object();
  for (const std::uint64_t n : opt.sizes) {
    bool ok = true;
    for (std::size_t i = 1; i < opt.widths.size(); ++i)
      ok = ok && per_element[{opt.widths[i], n}] < per_element[{opt.widths[i - 1], n}];
    decreasing[std::to_string(n)] = ok;
  }
  json ratios = json::object();
  for (const unsigned W : opt.widths) {
    json r = json::array();
    for (std::size_t i = 1; i < opt.sizes.size(); ++i) {
      const double growth = static_cast<double>(opt.sizes[i]) / static_cast<double>(opt.sizes[i - 1]);
      const double ratio = approx_mean[{W, opt.sizes[i]}] / approx_mean[{W, opt.sizes[i - 1]}];
      r.push_back(std::pow(ratio, 1.0 / std::log2(growth)));
    }
    ratios[std::to_string(W)] = r;
  }
  out << json{{"type", "trend"}, {"per_element_decreasing_in_W", decreasing},
              {"doubling_ratio", ratios}}
             .dump()
      << '\n';
}

namespace {

std::vector<std::uint64_t> parse_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || p != item.data() + item.size())
      fail(ErrorCode::kBadParameter, "bad list entry '" + item + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-resolution set algebra: build indexes, evaluate queries, benchmark"};
  app.require_subcommand(1);

  BuildOptions b;
  std::string seed;
  auto* build = app.add_subcommand("build", "Preprocess an element file into an index directory");
  build->add_option("input", b.input, "Element file (decimal lines, or 8-byte records with --binary)")
      ->required();
  build->add_option("--name", b.name, "Set name")->required();
  build->add_option("--out", b.out_dir, "Index directory")->required();
  build->add_option("--w", b.w, "Element and hash width in bits")->check(CLI::Range(8, 64));
  build->add_option("--W", b.W, "Simulated word width")->check(CLI::IsMember({64, 128, 256, 512}));
  build->add_option("--seed", seed, "Hash seed: 32 hex digits or a decimal integer");
  build->add_option("--C", b.C, "Resolution slack constant stored with the index");
  build->add_flag("--binary", b.binary, "Input is raw little-endian 8-byte records");

  QueryOptions q;
  std::string mode = "auto";
  bool no_rewrite = false;
  unsigned qC = 0, qr = 0;
  auto* query = app.add_subcommand("query", "Evaluate an expression over an index directory");
  query->add_option("index_dir", q.index_dir, "Index directory")->required();
  query->add_option("--expr", q.expr, "Expression, e.g. \"(A & (B | C))\"")->required();
  query->add_flag("--stats", q.stats, "Write a JSON stats record to stderr");
  query->add_option("--mode", mode, "Resolution policy")->check(CLI::IsMember({"auto", "general", "intersect"}));
  query->add_flag("--no-rewrite", no_rewrite, "Disable the small-intersection rewrite");
  auto* c_opt = query->add_option("--C", qC, "Override the resolution slack constant");
  auto* r_opt = query->add_option("--r", qr, "Force the hash resolution")->check(CLI::Range(1, 64));

  BenchOptions bo;
  std::string sizes, widths, out_path;
  auto* bench = app.add_subcommand("bench", "Instrumented benchmark sweep (JSON lines)");
  bench->add_option("--sizes", sizes, "Comma-separated per-set sizes");
  bench->add_option("--W", widths, "Comma-separated word widths");
  bench->add_option("--m", bo.m, "Number of sets");
  bench->add_option("--overlap", bo.overlap, "Planted common fraction");
  bench->add_option("--shape", bo.shape, "intersect or mixed");
  bench->add_option("--trials", bo.trials, "Trials per cell");
  bench->add_option("--seed", bo.seed, "Root seed");
  bench->add_option("--w", bo.w, "Element width")->check(CLI::Range(8, 64));
  bench->add_option("--C", bo.C, "Resolution slack constant");
  bench->add_option("--out", out_path, "Write the report here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*build) {
      if (!seed.empty()) b.seed = seed;
      cmd_build(b, out);
    } else if (*query) {
      q.mode = mode == "general" ? EvalMode::kGeneral
                                 : mode == "intersect" ? EvalMode::kIntersect : EvalMode::kAuto;
      q.rewrite = !no_rewrite;
      if (*c_opt) q.C = qC;
      if (*r_opt) q.r = qr;
      cmd_query(q, out, err);
    } else if (*bench) {
      if (!sizes.empty()) bo.sizes = parse_list(sizes);
      if (!widths.empty()) {
        bo.widths.clear();
        for (const std::uint64_t v : parse_list(widths)) bo.widths.push_back(static_cast<unsigned>(v));
      }
      if (out_path.empty()) {
        cmd_bench(bo, out);
      } else {
        std::ofstream f(out_path, std::ios::trunc);
        if (!f) fail(ErrorCode::kIoError, "cannot write " + out_path);
        cmd_bench(bo, f);
      }
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitOk;
}

}  // namespace mrset::cli
