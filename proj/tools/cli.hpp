#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mrset/error.hpp"
#include "mrset/eval.hpp"
#include "mrset/hash.hpp"

namespace mrset::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitParse = 2;
inline constexpr int kExitUnknownSet = 3;
inline constexpr int kExitSeedMismatch = 4;
inline constexpr int kExitIo = 5;

int exit_code_for(ErrorCode code);

struct ManifestEntry {
  std::string name;
  std::string file;
  std::uint64_t n1 = 0;
  std::uint64_t dedup = 0;
  unsigned w = 64;
  unsigned W = 64;
  unsigned C = 2;
  std::string seed_digest;
  bool binary_input = false;
};

struct Manifest {
  unsigned w = 64;
  std::string seed_hex;
  std::vector<ManifestEntry> sets;

  const ManifestEntry* find(std::string_view name) const;
};

std::string seed_digest(const Seed& seed);
std::optional<Manifest> load_manifest(const std::filesystem::path& dir);
void save_manifest(const std::filesystem::path& dir, const Manifest& m);

// Newline-separated decimal values, or 8-byte little-endian records.
std::vector<std::uint64_t> read_elements(const std::filesystem::path& path, bool binary, unsigned w);

struct BuildOptions {
  std::filesystem::path input;
  std::string name;
  std::filesystem::path out_dir;
  unsigned w = 64;
  unsigned W = 64;
  unsigned C = 2;
  std::optional<std::string> seed;  // 32 hex digits or a decimal integer
  bool binary = false;
};

struct QueryOptions {
  std::filesystem::path index_dir;
  std::string expr;
  bool stats = false;
  EvalMode mode = EvalMode::kAuto;
  bool rewrite = true;
  std::optional<unsigned> C;
  std::optional<unsigned> r;
};

struct BenchOptions {
  std::vector<std::uint64_t> sizes{1u << 14, 1u << 15};
  std::vector<unsigned> widths{64, 128, 256, 512};
  unsigned m = 2;
  double overlap = 0.01;
  std::string shape = "intersect";  // intersect | mixed
  unsigned trials = 3;
  std::uint64_t seed = 1;
  unsigned w = 64;
  unsigned C = 2;
};

void cmd_build(const BuildOptions& opt, std::ostream& out);
void cmd_query(const QueryOptions& opt, std::ostream& out, std::ostream& stats_out);
void cmd_bench(const BenchOptions& opt, std::ostream& out);

std::string stats_json(const QueryStats& stats);

// Full command line front end; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mrset::cli
