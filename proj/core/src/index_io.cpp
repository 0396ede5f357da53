#include "mrset/index_io.hpp"

#include <cstring>
#include <fstream>
#include <iterator>

#include "mrset/error.hpp"
#include "mrset/word.hpp"

namespace mrset {

namespace {

constexpr char kMagic[4] = {'M', 'R', 'S', '1'};

class Writer {
 public:
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u32(std::uint32_t v) {
    for (unsigned i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (unsigned i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64s(const std::vector<std::uint64_t>& v) {
    for (const std::uint64_t x : v) u64(x);
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) fail(ErrorCode::kFormatError, "index file is truncated");
  }
  void raw(void* p, std::size_t n) {
    need(n);
    std::memcpy(p, in_.data() + pos_, n);
    pos_ += n;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (unsigned i = 0; i < 4; ++i) v |= std::uint32_t{in_[pos_ + i]} << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (unsigned i = 0; i < 8; ++i) v |= std::uint64_t{in_[pos_ + i]} << (8 * i);
    pos_ += 8;
    return v;
  }
  std::vector<std::uint64_t> u64s(std::uint64_t n) {
    if (n > (in_.size() - pos_) / 8) fail(ErrorCode::kFormatError, "index file is truncated");
    std::vector<std::uint64_t> v(n);
    for (auto& x : v) x = u64();
    return v;
  }
  bool done() const noexcept { return pos_ == in_.size(); }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_index(const MultiResSet& set, unsigned C) {
  Writer w;
  w.raw(kMagic, sizeof kMagic);
  w.u32(set.hash_bits());
  w.u32(set.word_bits());
  w.u32(C);
  w.raw(set.hash().seed().data(), set.hash().seed().size());
  w.u64(set.size());
  w.u64(set.dedup_count());
  w.u32(static_cast<std::uint32_t>(set.keys().size()));
  for (const unsigned k : set.keys()) w.u32(k);
  for (std::size_t i = 0; i < set.keys().size(); ++i) {
    const BucketedSet& b = set.grid_set(i);
    w.u32(b.element_bits());
    w.u32(b.bucket_bits());
    w.u64(b.size());
    w.u64s(b.offsets());
    w.u64(b.payload().size());
    w.u64s(b.payload());
  }
  const LookupTable& t = set.lookup();
  w.u32(t.slot_bits);
  w.u64s(t.starts);
  w.u64s(t.stars);
  w.u64s(t.elements);
  return w.take();
}

IndexFile deserialize_index(std::span<const std::uint8_t> bytes, std::string name) {
  Reader r(bytes);
  char magic[4];
  r.raw(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0)
    fail(ErrorCode::kFormatError, "not an index file (bad magic)");
  const unsigned w = r.u32();
  const unsigned word_bits = r.u32();
  const unsigned C = r.u32();
  Seed seed{};
  r.raw(seed.data(), seed.size());
  if (w < 8 || w > 64 || !valid_word_width(word_bits) || C > 64)
    fail(ErrorCode::kFormatError, "index header holds unsupported parameters");
  const MotherHash mh(seed, w);
  const std::uint64_t n1 = r.u64();
  const std::uint64_t dedup = r.u64();
  const std::uint32_t key_count = r.u32();
  if (key_count == 0 || key_count > 64) fail(ErrorCode::kFormatError, "bad resolution key count");
  std::vector<unsigned> keys(key_count);
  for (auto& k : keys) k = r.u32();

  std::vector<BucketedSet> grid;
  for (std::uint32_t i = 0; i < key_count; ++i) {
    const unsigned l = r.u32();
    const unsigned b = r.u32();
    const std::uint64_t size = r.u64();
    if (l > 64 || b > 30 || b > l) fail(ErrorCode::kFormatError, "bad bucketed set header");
    std::vector<std::uint64_t> offsets = r.u64s((std::uint64_t{1} << b) + 1);
    std::vector<std::uint64_t> payload = r.u64s(r.u64());
    try {
      grid.emplace_back(l, b, word_bits, std::move(offsets), std::move(payload));
    } catch (const Error& e) {
      fail(ErrorCode::kFormatError, std::string("bad bucketed set: ") + e.what());
    }
    if (grid.back().size() != size) fail(ErrorCode::kFormatError, "bucketed set size mismatch");
  }

  LookupTable t;
  t.slot_bits = r.u32();
  if (t.slot_bits > 40) fail(ErrorCode::kFormatError, "bad lookup table size");
  t.starts = r.u64s((std::uint64_t{1} << t.slot_bits) + 1);
  t.stars = r.u64s(n1);
  t.elements = r.u64s(n1);
  if (!r.done()) fail(ErrorCode::kFormatError, "trailing bytes after index data");
  return {MultiResSet::from_parts(std::move(name), mh, word_bits, dedup, std::move(keys),
                                  std::move(grid), std::move(t)),
          C};
}

void write_index(const std::filesystem::path& path, const MultiResSet& set, unsigned C) {
  const std::vector<std::uint8_t> bytes = serialize_index(set, C);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::kIoError, "failed writing " + path.string());
}

IndexFile read_index(const std::filesystem::path& path, std::string name) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoError, "cannot read " + path.string());
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                        std::istreambuf_iterator<char>()};
  return deserialize_index(bytes, std::move(name));
}

}  // namespace mrset
