#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mrset/multires.hpp"

namespace mrset {

// On-disk form of one preprocessed set. All integers little-endian:
//   "MRS1", u32 w, u32 W, u32 C, seed[16], u64 n1, u64 dedup,
//   u32 key count, u32 keys[],
//   per key: u32 l, u32 b, u64 size, u64 offsets[2^b + 1],
//            u64 limb count, u64 limbs[],
//   u32 slot bits, u64 starts[2^s + 1], u64 stars[n1], u64 elements[n1].
struct IndexFile {
  MultiResSet set;
  unsigned C = 2;
};

std::vector<std::uint8_t> serialize_index(const MultiResSet& set, unsigned C);
// Throws FormatError on malformed input.
IndexFile deserialize_index(std::span<const std::uint8_t> bytes, std::string name);

// Throws IoError when the file cannot be written or read.
void write_index(const std::filesystem::path& path, const MultiResSet& set, unsigned C);
IndexFile read_index(const std::filesystem::path& path, std::string name);

}  // namespace mrset
