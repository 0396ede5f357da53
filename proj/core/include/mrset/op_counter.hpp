#pragma once

#include <cstdint>

namespace mrset {

// Tally of simulated machine work. One word op is one ALU operation, load or
// store on a simulated W-bit word; operations on a register spanning several
// simulated words are charged once per word spanned.
struct OpCounter {
  std::uint64_t word_ops = 0;
  std::uint64_t hash_probes = 0;
  std::uint64_t hash_evals = 0;

  OpCounter& operator+=(const OpCounter& o) {
    word_ops += o.word_ops;
    hash_probes += o.hash_probes;
    hash_evals += o.hash_evals;
    return *this;
  }
};

enum class CompactMode { kWordParallel, kScalar };

// Per-call execution knobs. The counter is optional and never shared across
// queries.
struct ExecContext {
  OpCounter* counter = nullptr;
  CompactMode compact_mode = CompactMode::kWordParallel;

  void charge_words(std::uint64_t n) const {
    if (counter != nullptr) counter->word_ops += n;
  }
  void charge_probes(std::uint64_t n) const {
    if (counter != nullptr) counter->hash_probes += n;
  }
  void charge_hashes(std::uint64_t n) const {
    if (counter != nullptr) counter->hash_evals += n;
  }
};

}  // namespace mrset
