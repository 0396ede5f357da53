#include "mrset/packed.hpp"

#include <algorithm>
#include <bit>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <tuple>

#include "mrset/detail/packed_kernels.hpp"
#include "mrset/error.hpp"
#include "mrset/word.hpp"

namespace mrset {

// ---------------------------------------------------------------------------
// Layout

bool layout_valid(unsigned word_bits, unsigned entry_bits) noexcept {
  if (!valid_word_width(word_bits)) return false;
  if (entry_bits == 0 || entry_bits > 63 || entry_bits + 1 > word_bits) return false;
  const unsigned k = word_bits / (entry_bits + 1);
  return entry_bits >= ceil_log2(k);
}

unsigned min_entry_bits(unsigned word_bits) {
  for (unsigned f = 1; f < 64; ++f)
    if (layout_valid(word_bits, f)) return f;
  fail(ErrorCode::kBadParameter, "unsupported word width " + std::to_string(word_bits));
}

PackedLayout::PackedLayout(unsigned word_bits, unsigned entry_bits)
    : word_bits_(word_bits), entry_bits_(entry_bits) {
  if (!valid_word_width(word_bits))
    fail(ErrorCode::kBadParameter, "word width must be one of 16..512, got " +
                                       std::to_string(word_bits));
  if (!layout_valid(word_bits, entry_bits))
    fail(ErrorCode::kBadParameter,
         "entry width " + std::to_string(entry_bits) + " cannot index the " +
             std::to_string(word_bits / (entry_bits + 1)) + " fields of a " +
             std::to_string(word_bits) + "-bit word");
}

std::uint64_t PackedLayout::max_entry() const noexcept {
  return entry_bits_ >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << entry_bits_) - 1;
}

std::size_t PackedLayout::words_for(std::size_t n) const noexcept {
  const std::size_t k = fields_per_word();
  return std::max<std::size_t>(1, (n + k - 1) / k);
}

// ---------------------------------------------------------------------------
// Views and arrays

namespace {

std::uint64_t read_bits(std::span<const std::uint64_t> limbs, std::size_t pos, unsigned len) {
  const std::size_t li = pos / 64;
  const unsigned off = pos % 64;
  std::uint64_t v = limbs[li] >> off;
  if (off != 0 && off + len > 64 && li + 1 < limbs.size()) v |= limbs[li + 1] << (64 - off);
  return len >= 64 ? v : v & ((std::uint64_t{1} << len) - 1);
}

void write_bits(std::span<std::uint64_t> limbs, std::size_t pos, unsigned len,
                std::uint64_t value) {
  const std::size_t li = pos / 64;
  const unsigned off = pos % 64;
  const std::uint64_t mask = len >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << len) - 1;
  value &= mask;
  limbs[li] = (limbs[li] & ~(mask << off)) | (value << off);
  if (off != 0 && off + len > 64) {
    const unsigned spill = 64 - off;
    limbs[li + 1] = (limbs[li + 1] & ~(mask >> spill)) | (value >> spill);
  }
}

// Bit position of field i within the limb array.
std::size_t field_pos(const PackedLayout& l, std::size_t i) {
  const std::size_t k = l.fields_per_word();
  return (i / k) * l.limbs_per_word() * 64 + (i % k) * l.field_bits();
}

void fill_vacant(const PackedLayout& l, std::vector<std::uint64_t>& limbs, std::size_t from) {
  const std::size_t total = (limbs.size() / l.limbs_per_word()) * l.fields_per_word();
  const std::uint64_t vacant = std::uint64_t{1} << l.entry_bits();
  for (std::size_t i = from; i < total; ++i)
    write_bits(limbs, field_pos(l, i), l.field_bits(), vacant);
}

}  // namespace

bool PackedView::occupied(std::size_t i) const noexcept {
  const std::size_t pos = field_pos(layout_, i);
  return ((read_bits(limbs_, pos, layout_.field_bits()) >> layout_.entry_bits()) & 1u) == 0;
}

std::uint64_t PackedView::entry(std::size_t i) const noexcept {
  return read_bits(limbs_, field_pos(layout_, i), layout_.entry_bits());
}

PackedArray::PackedArray(PackedLayout layout, std::size_t length)
    : layout_(layout),
      length_(length),
      limbs_(layout.words_for(length) * layout.limbs_per_word(), 0) {
  fill_vacant(layout_, limbs_, 0);
}

PackedArray::PackedArray(PackedLayout layout, std::size_t length,
                         std::vector<std::uint64_t> limbs)
    : layout_(layout), length_(length), limbs_(std::move(limbs)) {
  if (limbs_.size() % layout_.limbs_per_word() != 0 ||
      limbs_.size() / layout_.limbs_per_word() < layout_.words_for(length_))
    fail(ErrorCode::kFormatError, "packed array storage too small for its length");
}

PackedArray PackedArray::from_slots(PackedLayout layout,
                                    std::span<const std::optional<std::uint64_t>> slots) {
  PackedArray a(layout, slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (!slots[i]) continue;
    if (*slots[i] > layout.max_entry())
      fail(ErrorCode::kValueOutOfRange, "value " + std::to_string(*slots[i]) +
                                            " does not fit in " +
                                            std::to_string(layout.entry_bits()) + " bits");
    write_bits(a.limbs_, field_pos(layout, i), layout.field_bits(), *slots[i]);
  }
  return a;
}

std::vector<std::optional<std::uint64_t>> PackedArray::slots() const {
  std::vector<std::optional<std::uint64_t>> out(length_);
  const PackedView v = view();
  for (std::size_t i = 0; i < length_; ++i)
    if (v.occupied(i)) out[i] = v.entry(i);
  return out;
}

PackedSequence::PackedSequence(PackedArray array) : array_(std::move(array)) {}

std::vector<std::uint64_t> PackedSequence::values() const { return decode(view()); }

PackedSet::PackedSet(PackedSequence seq) : seq_(std::move(seq)) {}

PackedSet PackedSet::from_sorted(std::span<const std::uint64_t> values, unsigned entry_bits,
                                 unsigned word_bits) {
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i - 1] >= values[i])
      fail(ErrorCode::kBadParameter, "packed set input must be strictly increasing");
  return PackedSet(encode(values, entry_bits, word_bits));
}

PackedSequence encode(std::span<const std::uint64_t> values, unsigned entry_bits,
                      unsigned word_bits) {
  const PackedLayout layout(word_bits, entry_bits);
  PackedArray a(layout, values.size());
  std::vector<std::uint64_t> limbs = a.limbs();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] > layout.max_entry())
      fail(ErrorCode::kValueOutOfRange, "value " + std::to_string(values[i]) +
                                            " does not fit in " + std::to_string(entry_bits) +
                                            " bits");
    write_bits(limbs, field_pos(layout, i), layout.field_bits(), values[i]);
  }
  return PackedSequence(PackedArray(layout, values.size(), std::move(limbs)));
}

std::vector<std::uint64_t> decode(const PackedView& view) {
  std::vector<std::uint64_t> out;
  out.reserve(view.length());
  const std::size_t cap = view.word_count() * view.layout().fields_per_word();
  const std::size_t n = std::min(view.length(), cap);
  for (std::size_t i = 0; i < n; ++i)
    if (view.occupied(i)) out.push_back(view.entry(i));
  return out;
}

bool test_bits_consistent(const PackedView& view) {
  const PackedLayout& l = view.layout();
  const std::size_t k = l.fields_per_word();
  const unsigned used = k * l.field_bits();
  for (std::size_t w = 0; w < view.word_count(); ++w) {
    const auto word = view.word(w);
    for (unsigned bit = used; bit < l.word_bits(); ++bit)
      if ((word[bit / 64] >> (bit % 64)) & 1u) return false;
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t i = w * k + j;
      const bool occ = view.occupied(i);
      if (!occ && view.entry(i) != 0) return false;
      if (i >= view.length() && occ) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Kernels

namespace detail {
namespace {

Reg field_pattern(unsigned nbits, unsigned nfields, unsigned g,
                  const std::function<std::uint64_t(unsigned)>& fn) {
  Reg r(nbits);
  for (unsigned i = 0; i < nfields; ++i) r.deposit(i * g, g, fn(i));
  return r;
}

std::unique_ptr<Geometry> build_geometry(unsigned w, unsigned f) {
  auto geo = std::make_unique<Geometry>();
  Geometry& G = *geo;
  G.W = w;
  G.f = f;
  G.g = f + 1;
  G.K = w / G.g;
  G.L = limbs_per_word(w);
  G.Q = std::bit_ceil(G.K);
  G.log_q = floor_log2(G.Q);
  G.qbits = G.Q * G.g;
  G.rbits = 2 * G.qbits;

  const std::uint64_t test_bit = std::uint64_t{1} << f;
  const std::uint64_t entry_ones = test_bit - 1;
  G.test = field_pattern(w, G.K, G.g, [&](unsigned) { return test_bit; });
  G.entry = field_pattern(w, G.K, G.g, [&](unsigned) { return entry_ones; });
  G.lsb = field_pattern(w, G.K, G.g, [](unsigned) { return std::uint64_t{1}; });
  G.full = G.test | G.entry;
  G.prefix.reserve(G.K + 1);
  for (unsigned n = 0; n <= G.K; ++n)
    G.prefix.push_back(field_pattern(w, n, G.g, [&](unsigned) { return test_bit | entry_ones; }));

  G.q_test = field_pattern(G.qbits, G.Q, G.g, [&](unsigned) { return test_bit; });
  G.q_pad = field_pattern(G.qbits, G.Q, G.g,
                          [&](unsigned i) { return i >= G.K ? entry_ones : 0; });
  G.r_test = field_pattern(G.rbits, 2 * G.Q, G.g, [&](unsigned) { return test_bit; });
  for (unsigned j = 0; j < G.log_q; ++j) {
    const unsigned bit = 1u << j;
    auto low = [&](unsigned i) { return (i & bit) ? 0 : (test_bit | entry_ones); };
    G.q_low.push_back(field_pattern(G.qbits, G.Q, G.g, low));
    G.r_low.push_back(field_pattern(G.rbits, 2 * G.Q, G.g, low));
  }
  G.r_first_k = field_pattern(G.rbits, G.K, G.g, [&](unsigned) { return test_bit | entry_ones; });
  return geo;
}

// Full-field mask of the fields where x >= y. Both operands must have clear
// test bits.
Reg ge_mask(const Alu& alu, const Reg& x, const Reg& y, const Reg& test, unsigned f) {
  const Reg d = alu.sub(alu.or_(x, test), y);
  const Reg t = alu.and_(d, test);
  return alu.or_(alu.sub(t, alu.shr(t, f)), t);
}

// Loads word i of a sorted sequence with vacant fields turned into copies of
// the maximum entry, so they sort last.
Reg load_padded(const Alu& alu, const Geometry& geo, const PackedView& v, std::size_t i) {
  Reg w = alu.load(v.word(i), geo.W);
  if ((i + 1) * geo.K > v.length()) {
    const Reg t = alu.and_(w, geo.test);
    const Reg fill = alu.sub(t, alu.shr(t, geo.f));
    w = alu.or_(alu.andn(w, geo.test), fill);
  }
  return w;
}

std::uint64_t head(const Alu& alu, const Geometry& geo, const PackedView& v, std::size_t i) {
  return alu.extract(Reg::from_limbs(v.word(i), geo.W), 0, geo.f);
}

struct MergeStep {
  Reg low, high;
};

// Bitonic merge of two sorted words of K fields: returns the K smallest and
// the K next-smallest fields, each as a word.
MergeStep merge_words(const Alu& alu, const Geometry& geo, const Reg& a, const Reg& b) {
  Reg x = alu.or_(a.resized(geo.qbits), geo.q_pad);
  Reg y = alu.or_(b.resized(geo.qbits), geo.q_pad);
  for (unsigned j = geo.log_q; j-- > 0;) {
    const unsigned s = (1u << j) * geo.g;
    y = alu.or_(alu.shl(alu.and_(y, geo.q_low[j]), s), alu.and_(alu.shr(y, s), geo.q_low[j]));
  }
  const Reg m = ge_mask(alu, x, y, geo.q_test, geo.f);
  const Reg lo = alu.or_(alu.and_(y, m), alu.andn(x, m));
  const Reg hi = alu.or_(alu.and_(x, m), alu.andn(y, m));
  Reg r = alu.or_(lo.resized(geo.rbits), alu.shl(hi.resized(geo.rbits), geo.qbits));
  for (unsigned j = geo.log_q; j-- > 0;) {
    const unsigned s = (1u << j) * geo.g;
    const Reg partner = alu.shr(r, s);
    const Reg swap = alu.and_(ge_mask(alu, r, partner, geo.r_test, geo.f), geo.r_low[j]);
    const Reg delta = alu.and_(alu.xor_(r, partner), swap);
    r = alu.xor_(alu.xor_(r, delta), alu.shl(delta, s));
  }
  MergeStep out;
  out.low = alu.and_(r, geo.r_first_k).resized(geo.W);
  out.high = alu.and_(alu.shr(r, geo.K * geo.g), geo.r_first_k).resized(geo.W);
  return out;
}

struct CompactedWord {
  Reg fields;
  unsigned count;
};

// Moves the occupied fields of one word to its low end, order preserved.
// Each occupied field i travels right by the number of vacant fields below
// it; the distance is applied one binary digit at a time, low digit first.
CompactedWord compact_word(const Alu& alu, const Geometry& geo, const Reg& w) {
  const Reg vac_t = alu.and_(w, geo.test);
  const Reg vac = alu.shr(vac_t, geo.f);
  Reg dist = alu.and_(alu.shl(vac, geo.g), geo.full);
  for (unsigned s = 1; s < geo.K; s <<= 1)
    dist = alu.add(dist, alu.and_(alu.shl(dist, s * geo.g), geo.full));
  const unsigned last = (geo.K - 1) * geo.g;
  const unsigned vacant = static_cast<unsigned>(alu.extract(dist, last, geo.f) +
                                                alu.extract(vac, last, 1));
  if (vacant == 0) return {w, geo.K};
  if (vacant == geo.K) return {Reg(geo.W), 0};
  const Reg vac_full = alu.or_(alu.sub(vac_t, vac), vac_t);
  Reg ent = alu.andn(w, vac_full);
  dist = alu.andn(dist, vac_full);
  for (unsigned j = 0; (1u << j) < geo.K; ++j) {
    const Reg bit = alu.and_(alu.shr(dist, j), geo.lsb);
    if (!bit.any()) continue;
    const Reg top = alu.shl(bit, geo.f);
    const Reg sel = alu.or_(alu.sub(top, bit), top);
    const unsigned s = (1u << j) * geo.g;
    const Reg te = alu.and_(ent, sel);
    ent = alu.or_(alu.xor_(ent, te), alu.shr(te, s));
    const Reg td = alu.and_(dist, sel);
    dist = alu.or_(alu.xor_(dist, td), alu.shr(td, s));
  }
  return {ent, geo.K - vacant};
}

// Staged bit gather within one word: bits of `keep` move to the low end in
// order. Stage j moves bits whose remaining displacement has bit j set.
struct GatherPlan {
  Reg keep;
  std::vector<std::pair<unsigned, Reg>> stages;  // (shift, movers before the shift)
};

GatherPlan make_gather_plan(unsigned w, const Reg& keep) {
  GatherPlan plan;
  plan.keep = keep;
  std::vector<std::pair<unsigned, unsigned>> bits;  // (source, displacement)
  unsigned dest = 0;
  for (unsigned p = 0; p < w; ++p)
    if (keep.test(p)) bits.emplace_back(p, p - dest++);
  for (unsigned j = 0; (1u << j) < w; ++j) {
    Reg movers(w);
    const unsigned low = (1u << j) - 1;
    for (const auto& [src, disp] : bits)
      if (disp & (1u << j)) movers.set(src - (disp & low));
    if (movers.any()) plan.stages.emplace_back(1u << j, movers);
  }
  return plan;
}

Reg gather(const Alu& alu, const GatherPlan& plan, Reg x) {
  x = alu.and_(x, plan.keep);
  for (const auto& [shift, movers] : plan.stages) {
    const Reg t = alu.and_(x, movers);
    x = alu.or_(alu.xor_(x, t), alu.shr(t, shift));
  }
  return x;
}

Reg scatter(const Alu& alu, const GatherPlan& plan, Reg x) {
  for (auto it = plan.stages.rbegin(); it != plan.stages.rend(); ++it) {
    const auto& [shift, movers] = *it;
    const Reg landed = alu.and_(alu.shl(x, shift), movers);
    x = alu.or_(alu.andn(x, movers >> shift), landed);
  }
  return alu.and_(x, plan.keep);
}

// Keep-mask selecting, in each field of `wide`, the low `narrow.f` entry bits
// and the test bit.
Reg width_mask(const Geometry& wide, const Geometry& narrow) {
  Reg r(wide.W);
  const std::uint64_t bits =
      (std::uint64_t{1} << wide.f) | ((std::uint64_t{1} << narrow.f) - 1);
  for (unsigned i = 0; i < wide.K; ++i) r.deposit(i * wide.g, wide.g, bits);
  return r;
}

const GatherPlan& gather_plan(const Geometry& wide, const Geometry& narrow) {
  static std::mutex mu;
  static std::map<std::tuple<unsigned, unsigned, unsigned>, std::unique_ptr<GatherPlan>> cache;
  const std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{wide.W, wide.f, narrow.f}];
  if (!slot) slot = std::make_unique<GatherPlan>(make_gather_plan(wide.W, width_mask(wide, narrow)));
  return *slot;
}

}  // namespace

const Geometry& geometry(unsigned word_bits, unsigned entry_bits) {
  static std::mutex mu;
  static std::map<std::pair<unsigned, unsigned>, std::unique_ptr<Geometry>> cache;
  const std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{word_bits, entry_bits}];
  if (!slot) {
    (void)PackedLayout(word_bits, entry_bits);
    slot = build_geometry(word_bits, entry_bits);
  }
  return *slot;
}

Reg low_entry_mask(const Geometry& geo, unsigned bits) {
  const std::uint64_t ones = bits >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits) - 1;
  return field_pattern(geo.W, geo.K, geo.g, [&](unsigned) { return ones; });
}

Reg spread_test_bits(const Alu& alu, const Geometry& geo, const Reg& t) {
  return alu.or_(alu.sub(t, alu.shr(t, geo.f)), t);
}

Reg load_word(const Alu& alu, const PackedView& v, std::size_t i) {
  return alu.load(v.word(i), v.layout().word_bits());
}

FieldWriter::FieldWriter(const Geometry& geo, const Alu& alu, std::vector<std::uint64_t>& out)
    : geo_(geo), alu_(alu), out_(out), acc_(geo.W) {}

void FieldWriter::emit(const Reg& word) {
  const std::size_t at = out_.size();
  out_.resize(at + geo_.L);
  alu_.store(word, std::span<std::uint64_t>(out_).subspan(at, geo_.L));
}

void FieldWriter::append(const Reg& fields, unsigned count) {
  if (count == 0) return;
  total_ += count;
  if (fill_ == 0) {
    acc_ = fields;
  } else {
    acc_ = alu_.or_(acc_, alu_.and_(alu_.shl(fields, fill_ * geo_.g), geo_.full));
  }
  const unsigned sum = fill_ + count;
  if (sum >= geo_.K) {
    emit(acc_);
    acc_ = fill_ == 0 ? Reg(geo_.W) : alu_.shr(fields, (geo_.K - fill_) * geo_.g);
    fill_ = sum - geo_.K;
  } else {
    fill_ = sum;
  }
}

void FieldWriter::append_sequence(const PackedView& v) {
  const std::size_t words = std::min(v.word_count(), (v.length() + geo_.K - 1) / geo_.K);
  for (std::size_t i = 0; i < words; ++i) {
    const unsigned count = static_cast<unsigned>(std::min<std::size_t>(geo_.K, v.length() - i * geo_.K));
    Reg w = load_word(alu_, v, i);
    if (count < geo_.K) w = alu_.and_(w, geo_.prefix[count]);
    append(w, count);
  }
}

std::size_t FieldWriter::finish() {
  if (fill_ > 0) {
    emit(alu_.or_(acc_, alu_.andn(geo_.test, geo_.prefix[fill_])));
    fill_ = 0;
    acc_ = Reg(geo_.W);
  }
  return total_;
}

std::size_t merge_into(const Geometry& geo, const Alu& alu, const PackedView& a,
                       const PackedView& b, std::vector<std::uint64_t>& out) {
  const std::size_t total = a.length() + b.length();
  if (a.length() == 0 || b.length() == 0) {
    FieldWriter w(geo, alu, out);
    w.append_sequence(a.length() == 0 ? b : a);
    return w.finish();
  }
  const std::size_t wa = (a.length() + geo.K - 1) / geo.K;
  const std::size_t wb = (b.length() + geo.K - 1) / geo.K;
  const std::size_t keep_words = (total + geo.K - 1) / geo.K;
  const std::size_t base = out.size();
  std::size_t emitted = 0;
  auto emit = [&](const Reg& word) {
    if (emitted++ >= keep_words) return;
    const std::size_t at = out.size();
    out.resize(at + geo.L);
    alu.store(word, std::span<std::uint64_t>(out).subspan(at, geo.L));
  };

  MergeStep step = merge_words(alu, geo, load_padded(alu, geo, a, 0), load_padded(alu, geo, b, 0));
  emit(step.low);
  Reg carry = step.high;
  std::size_t ia = 1, ib = 1;
  while (ia < wa || ib < wb) {
    const bool take_a = ib >= wb || (ia < wa && head(alu, geo, a, ia) <= head(alu, geo, b, ib));
    const Reg next = take_a ? load_padded(alu, geo, a, ia++) : load_padded(alu, geo, b, ib++);
    step = merge_words(alu, geo, carry, next);
    emit(step.low);
    carry = step.high;
  }
  emit(carry);

  const unsigned tail = static_cast<unsigned>(total % geo.K);
  if (tail != 0) {
    const auto last = std::span<std::uint64_t>(out).subspan(base + (keep_words - 1) * geo.L, geo.L);
    Reg w = alu.load(last, geo.W);
    w = alu.or_(alu.and_(w, geo.prefix[tail]), alu.andn(geo.test, geo.prefix[tail]));
    alu.store(w, last);
  }
  return total;
}

void mark_duplicates(const Geometry& geo, const Alu& alu, std::span<std::uint64_t> limbs,
                     std::size_t length, DupRule rule) {
  const std::size_t words = (length + geo.K - 1) / geo.K;
  if (words == 0) return;
  const PackedView v(geo.layout(), length, limbs);
  Reg next = load_word(alu, v, 0);
  for (std::size_t i = 0; i < words; ++i) {
    const Reg cur = next;
    Reg head0 = geo.prefix[1] & geo.test;  // vacant field past the end
    if (i + 1 < words) {
      next = load_word(alu, v, i + 1);
      head0 = alu.and_(next, geo.prefix[1]);
    }
    // Field j of right = field j + 1 of the sequence.
    const Reg right = alu.or_(alu.shr(cur, geo.g), alu.shl(head0, (geo.K - 1) * geo.g));
    const Reg diff = alu.sub(alu.or_(cur, geo.test), alu.andn(right, geo.test));
    const Reg eq = alu.andn(alu.and_(diff, geo.test), alu.or_(cur, right));
    const Reg eq_full = spread_test_bits(alu, geo, eq);
    Reg out;
    if (rule == DupRule::kKeepLast) {
      out = alu.or_(alu.andn(cur, eq_full), eq);
    } else {
      out = alu.or_(alu.and_(cur, eq_full), alu.andn(geo.test, eq));
    }
    alu.store(out, limbs.subspan(i * geo.L, geo.L));
  }
}

void compact_into(const Geometry& geo, const Alu& alu, const PackedView& v, FieldWriter& out) {
  const std::size_t words = std::min(v.word_count(), (v.length() + geo.K - 1) / geo.K);
  if (alu.context().compact_mode == CompactMode::kScalar) {
    for (std::size_t i = 0; i < words * geo.K && i < v.length(); ++i) {
      alu.charge_words(1);
      if (!v.occupied(i)) continue;
      Reg r(geo.W);
      r.deposit(0, geo.g, v.entry(i));
      out.append(r, 1);
    }
    return;
  }
  for (std::size_t i = 0; i < words; ++i) {
    Reg w = load_word(alu, v, i);
    const std::size_t remaining = v.length() - i * geo.K;
    if (remaining < geo.K) {
      // Fields past the array length count as vacant.
      const Reg lim = geo.prefix[remaining];
      w = alu.or_(alu.and_(w, lim), alu.andn(geo.test, lim));
    }
    const CompactedWord c = compact_word(alu, geo, w);
    out.append(c.fields, c.count);
  }
}

void set_op_into(const Geometry& geo, const Alu& alu, const PackedView& a, const PackedView& b,
                 DupRule rule, FieldWriter& out) {
  if (a.length() == 0 || b.length() == 0) {
    if (rule == DupRule::kKeepLast) out.append_sequence(a.length() == 0 ? b : a);
    return;
  }
  std::vector<std::uint64_t> merged;
  merged.reserve(((a.length() + b.length()) / geo.K + 2) * geo.L);
  const std::size_t n = merge_into(geo, alu, a, b, merged);
  mark_duplicates(geo, alu, merged, n, rule);
  compact_into(geo, alu, PackedView(geo.layout(), n, merged), out);
}

void convert_into(const Geometry& src, const Geometry& dst, const Alu& alu, const PackedView& v,
                  FieldWriter& out) {
  if (src.f == dst.f) {
    out.append_sequence(v);
    return;
  }
  const std::size_t words = std::min(v.word_count(), (v.length() + src.K - 1) / src.K);
  if (dst.f < src.f) {
    const GatherPlan& plan = gather_plan(src, dst);
    for (std::size_t i = 0; i < words; ++i) {
      const unsigned count =
          static_cast<unsigned>(std::min<std::size_t>(src.K, v.length() - i * src.K));
      Reg w = gather(alu, plan, load_word(alu, v, i));
      if (count < src.K) w = alu.and_(w, dst.prefix[count]);
      out.append(w, count);
    }
    return;
  }
  const GatherPlan& plan = gather_plan(dst, src);
  for (std::size_t i = 0; i < words; ++i) {
    const unsigned count =
        static_cast<unsigned>(std::min<std::size_t>(src.K, v.length() - i * src.K));
    const Reg w = load_word(alu, v, i);
    for (unsigned start = 0; start < count; start += dst.K) {
      const unsigned n = std::min(dst.K, count - start);
      const Reg chunk = alu.and_(alu.shr(w, start * src.g), src.prefix[n]);
      out.append(scatter(alu, plan, chunk), n);
    }
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Public operations

namespace {

void require_same_layout(const PackedLayout& a, const PackedLayout& b) {
  if (!(a == b))
    fail(ErrorCode::kParameterMismatch,
         "packed operands differ in layout (W=" + std::to_string(a.word_bits()) +
             ", f=" + std::to_string(a.entry_bits()) + " vs W=" +
             std::to_string(b.word_bits()) + ", f=" + std::to_string(b.entry_bits()) + ")");
}

PackedArray finish_array(const PackedLayout& layout, std::size_t length,
                         std::vector<std::uint64_t> limbs) {
  if (limbs.empty()) return PackedArray(layout, 0);
  return PackedArray(layout, length, std::move(limbs));
}

}  // namespace

PackedArray compact(const PackedArray& array, const ExecContext& ctx) {
  const detail::Geometry& geo = detail::geometry(array.layout());
  const Alu alu(geo.W, ctx);
  std::vector<std::uint64_t> out;
  detail::FieldWriter writer(geo, alu, out);
  detail::compact_into(geo, alu, array.view(), writer);
  writer.finish();
  // Same length as the input; fields past the occupied prefix stay vacant.
  std::vector<std::uint64_t> limbs = PackedArray(array.layout(), array.length()).limbs();
  std::copy(out.begin(), out.end(), limbs.begin());
  return PackedArray(array.layout(), array.length(), std::move(limbs));
}

PackedSequence packed_merge(const PackedSequence& a, const PackedSequence& b,
                            const ExecContext& ctx) {
  require_same_layout(a.layout(), b.layout());
  const detail::Geometry& geo = detail::geometry(a.layout());
  const Alu alu(geo.W, ctx);
  std::vector<std::uint64_t> out;
  const std::size_t n = detail::merge_into(geo, alu, a.view(), b.view(), out);
  return PackedSequence(finish_array(a.layout(), n, std::move(out)));
}

namespace {

PackedSet set_op(const PackedSet& a, const PackedSet& b, detail::DupRule rule,
                 const ExecContext& ctx) {
  require_same_layout(a.layout(), b.layout());
  const detail::Geometry& geo = detail::geometry(a.layout());
  const Alu alu(geo.W, ctx);
  std::vector<std::uint64_t> out;
  detail::FieldWriter writer(geo, alu, out);
  detail::set_op_into(geo, alu, a.view(), b.view(), rule, writer);
  const std::size_t n = writer.finish();
  return PackedSet(PackedSequence(finish_array(a.layout(), n, std::move(out))));
}

}  // namespace

PackedSet packed_union(const PackedSet& a, const PackedSet& b, const ExecContext& ctx) {
  return set_op(a, b, detail::DupRule::kKeepLast, ctx);
}

PackedSet packed_intersect(const PackedSet& a, const PackedSet& b, const ExecContext& ctx) {
  return set_op(a, b, detail::DupRule::kKeepPairs, ctx);
}

}  // namespace mrset
