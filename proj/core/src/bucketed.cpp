#include "mrset/bucketed.hpp"

#include <algorithm>
#include <optional>
#include <string>

#include "mrset/detail/packed_kernels.hpp"
#include "mrset/error.hpp"
#include "mrset/word.hpp"

namespace mrset {

namespace {

unsigned max_entry_width(unsigned word_bits) { return std::min(63u, word_bits - 1); }

// Smallest b keeping the remainder width representable in one field.
unsigned min_bucket_bits(unsigned l, unsigned word_bits) {
  const unsigned cap = max_entry_width(word_bits);
  return l > cap ? l - cap : 0;
}

void check_bucket_params(unsigned l, unsigned b, unsigned word_bits) {
  if (!valid_word_width(word_bits))
    fail(ErrorCode::kBadParameter, "unsupported word width " + std::to_string(word_bits));
  if (l > 64) fail(ErrorCode::kBadParameter, "element width above 64 bits");
  if (b > l || b < min_bucket_bits(l, word_bits) || b > 30)
    fail(ErrorCode::kBadParameter, "bucket parameter b=" + std::to_string(b) +
                                       " invalid for l=" + std::to_string(l) + ", W=" +
                                       std::to_string(word_bits));
}

// Builds a bucketed set one bucket at a time, in bucket order.
class Assembler {
 public:
  Assembler(const detail::Geometry& geo, const Alu& alu, std::size_t buckets)
      : geo_(geo), alu_(alu) {
    offsets_.reserve(buckets + 1);
    offsets_.push_back(0);
  }

  detail::FieldWriter& open() {
    writer_.emplace(geo_, alu_, payload_);
    return *writer_;
  }
  void close() {
    const std::size_t n = writer_->finish();
    writer_.reset();
    offsets_.push_back(offsets_.back() + n);
  }
  void empty_buckets(std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) offsets_.push_back(offsets_.back());
  }
  std::size_t buckets_done() const noexcept { return offsets_.size() - 1; }

  BucketedSet finish(unsigned l, unsigned b) {
    return BucketedSet(l, b, geo_.W, std::move(offsets_), std::move(payload_));
  }

 private:
  const detail::Geometry& geo_;
  const Alu& alu_;
  std::vector<std::uint64_t> offsets_;
  std::vector<std::uint64_t> payload_;
  std::optional<detail::FieldWriter> writer_;
};

// value replicated into every field's entry; one multiplication on a word RAM.
Reg broadcast(const Alu& alu, const detail::Geometry& geo, std::uint64_t value) {
  alu.charge_words(1);
  Reg r(geo.W);
  for (unsigned i = 0; i < geo.K; ++i) r.deposit(i * geo.g, geo.f, value);
  return r;
}

unsigned fields_in_word(const detail::Geometry& geo, std::size_t length, std::size_t word) {
  return static_cast<unsigned>(std::min<std::size_t>(geo.K, length - word * geo.K));
}

BucketedSet split_buckets(const BucketedSet& s, unsigned nb, const ExecContext& ctx) {
  const unsigned l = s.element_bits();
  const unsigned ob = s.bucket_bits();
  const detail::Geometry& src = detail::geometry(s.word_bits(), s.entry_bits());
  const detail::Geometry& dst =
      detail::geometry(s.word_bits(), bucket_entry_bits(l, nb, s.word_bits()));
  const Alu alu(src.W, ctx);
  const unsigned extra = nb - ob;
  const std::size_t fan = std::size_t{1} << extra;
  const unsigned sub_shift = l - nb;
  const Reg sub_mask = detail::low_entry_mask(src, extra);
  const Reg rem_mask = detail::low_entry_mask(src, l - nb);

  Assembler out(dst, alu, s.bucket_count() * fan);
  std::vector<std::uint64_t> temp;
  std::optional<detail::FieldWriter> temp_writer;
  std::size_t open_sub = 0;
  bool have_open = false;

  auto flush = [&](std::size_t group_base) {
    if (!have_open) return;
    const std::size_t n = temp_writer->finish();
    temp_writer.reset();
    out.empty_buckets(group_base + open_sub - out.buckets_done());
    detail::FieldWriter& w = out.open();
    detail::convert_into(src, dst, alu, PackedView(src.layout(), n, temp), w);
    out.close();
    have_open = false;
  };

  for (std::size_t i = 0; i < s.bucket_count(); ++i) {
    const std::size_t base = i * fan;
    const PackedView v = s.bucket(i);
    const std::size_t words = (v.length() + src.K - 1) / src.K;
    for (std::size_t wi = 0; wi < words; ++wi) {
      const unsigned cnt = fields_in_word(src, v.length(), wi);
      const Reg w = detail::load_word(alu, v, wi);
      const Reg hi = alu.and_(alu.shr(alu.and_(w, src.entry), sub_shift), sub_mask);
      const Reg rem = alu.and_(w, rem_mask);
      // Test bit of field j survives iff hi_j >= hi_{j+1}, i.e. no boundary.
      const Reg diff = alu.sub(alu.or_(hi, src.test), alu.shr(hi, src.g));
      const Reg cut = alu.and_(alu.andn(src.test, diff), src.prefix[cnt - 1]);
      unsigned start = 0;
      unsigned pos = cut.find_next(0);
      while (true) {
        const unsigned end = pos < cut.bits() ? pos / src.g : cnt - 1;
        const std::size_t sub = alu.extract(hi, start * src.g, extra);
        if (!have_open || sub != open_sub) {
          flush(base);
          temp.clear();
          temp_writer.emplace(src, alu, temp);
          open_sub = sub;
          have_open = true;
        }
        const unsigned n = end - start + 1;
        const Reg run = start == 0 && n == src.K
                            ? rem
                            : alu.and_(alu.shr(rem, start * src.g), src.prefix[n]);
        temp_writer->append(run, n);
        if (end + 1 >= cnt) break;
        start = end + 1;
        pos = cut.find_next(pos + 1);
      }
    }
    flush(base);
    out.empty_buckets(base + fan - out.buckets_done());
  }
  return out.finish(l, nb);
}

BucketedSet merge_buckets(const BucketedSet& s, unsigned nb, const ExecContext& ctx) {
  const unsigned l = s.element_bits();
  const unsigned ob = s.bucket_bits();
  const detail::Geometry& src = detail::geometry(s.word_bits(), s.entry_bits());
  const detail::Geometry& dst =
      detail::geometry(s.word_bits(), bucket_entry_bits(l, nb, s.word_bits()));
  const Alu alu(src.W, ctx);
  const std::size_t fan = std::size_t{1} << (ob - nb);
  const unsigned prefix_shift = l - ob;

  Assembler out(dst, alu, std::size_t{1} << nb);
  std::vector<std::uint64_t> temp;
  for (std::size_t j = 0; j < (std::size_t{1} << nb); ++j) {
    detail::FieldWriter& w = out.open();
    for (std::size_t p = 0; p < fan; ++p) {
      const PackedView v = s.bucket(j * fan + p);
      if (v.length() == 0) continue;
      temp.clear();
      detail::FieldWriter tw(dst, alu, temp);
      detail::convert_into(src, dst, alu, v, tw);
      const std::size_t n = tw.finish();
      if (p != 0) {
        const Reg high = broadcast(alu, dst, std::uint64_t{p} << prefix_shift);
        const std::size_t words = (n + dst.K - 1) / dst.K;
        for (std::size_t wi = 0; wi < words; ++wi) {
          const auto span = std::span<std::uint64_t>(temp).subspan(wi * dst.L, dst.L);
          const unsigned cnt = fields_in_word(dst, n, wi);
          const Reg add = cnt == dst.K ? high : alu.and_(high, dst.prefix[cnt]);
          alu.store(alu.or_(alu.load(span, dst.W), add), span);
        }
      }
      w.append_sequence(PackedView(dst.layout(), n, temp));
    }
    out.close();
  }
  return out.finish(l, nb);
}

BucketedSet copy_of(const BucketedSet& s) { return s; }

}  // namespace

unsigned bucket_entry_bits(unsigned l, unsigned b, unsigned word_bits) {
  return std::max(l - std::min(l, b), min_entry_bits(word_bits));
}

unsigned balanced_bucket_bits(std::uint64_t size, unsigned l, unsigned word_bits) {
  const unsigned floor_b = min_bucket_bits(l, word_bits);
  const unsigned log_w = floor_log2(word_bits);
  unsigned b = 0;
  if (size > 0 && floor_log2(size) > log_w) b = floor_log2(size) - log_w;
  b = std::min({b, l, 30u});
  const unsigned fmin = min_entry_bits(word_bits);
  while (b > floor_b && l - b < fmin) --b;
  return std::max(b, floor_b);
}

BucketedSet::BucketedSet(unsigned l, unsigned word_bits)
    : BucketedSet(l, min_bucket_bits(l, word_bits), word_bits,
                  std::vector<std::uint64_t>((std::size_t{1} << min_bucket_bits(l, word_bits)) + 1, 0),
                  {}) {}

BucketedSet::BucketedSet(unsigned l, unsigned b, unsigned word_bits,
                         std::vector<std::uint64_t> offsets, std::vector<std::uint64_t> payload)
    : l_(l), b_(b), w_(word_bits), offsets_(std::move(offsets)), payload_(std::move(payload)) {
  check_bucket_params(l, b, word_bits);
  f_ = bucket_entry_bits(l, b, word_bits);
  if (offsets_.size() != (std::size_t{1} << b) + 1 || offsets_.front() != 0)
    fail(ErrorCode::kFormatError, "bucket offset table has the wrong shape");
  for (std::size_t i = 1; i < offsets_.size(); ++i)
    if (offsets_[i] < offsets_[i - 1])
      fail(ErrorCode::kFormatError, "bucket offsets must be non-decreasing");
  if (l < 64 && offsets_.back() > (std::uint64_t{1} << l))
    fail(ErrorCode::kFormatError, "more buckets entries than l-bit values");
  index_words();
}

void BucketedSet::index_words() {
  const PackedLayout lay(w_, f_);
  const std::size_t k = lay.fields_per_word();
  word_offsets_.assign(offsets_.size(), 0);
  for (std::size_t i = 0; i + 1 < offsets_.size(); ++i) {
    const std::uint64_t n = offsets_[i + 1] - offsets_[i];
    word_offsets_[i + 1] = word_offsets_[i] + (n + k - 1) / k;
  }
  if (payload_.size() != word_offsets_.back() * lay.limbs_per_word())
    fail(ErrorCode::kFormatError, "bucket payload size does not match its offsets");
}

PackedView BucketedSet::bucket(std::size_t i) const {
  const PackedLayout lay(w_, f_);
  const std::size_t lpw = lay.limbs_per_word();
  const std::span<const std::uint64_t> all(payload_);
  return PackedView(lay, bucket_size(i),
                    all.subspan(word_offsets_[i] * lpw, (word_offsets_[i + 1] - word_offsets_[i]) * lpw));
}

std::vector<std::uint64_t> BucketedSet::flatten() const {
  std::vector<std::uint64_t> out;
  out.reserve(size());
  const unsigned shift = l_ - b_;
  for (std::size_t i = 0; i < bucket_count(); ++i) {
    const std::uint64_t high = shift >= 64 ? 0 : std::uint64_t{i} << shift;
    for (const std::uint64_t e : decode(bucket(i))) out.push_back(high | e);
  }
  return out;
}

bool BucketedSet::balanced() const noexcept {
  return b_ == balanced_bucket_bits(size(), l_, w_);
}

BucketedSet build_bucketed(std::span<const std::uint64_t> sorted_values, unsigned l, unsigned b,
                           unsigned word_bits) {
  check_bucket_params(l, b, word_bits);
  const unsigned shift = l - b;
  const std::uint64_t rem_mask = shift >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << shift) - 1;
  for (std::size_t i = 0; i < sorted_values.size(); ++i) {
    if (l < 64 && sorted_values[i] >> l)
      fail(ErrorCode::kValueOutOfRange,
           "value " + std::to_string(sorted_values[i]) + " exceeds " + std::to_string(l) + " bits");
    if (i > 0 && sorted_values[i - 1] >= sorted_values[i])
      fail(ErrorCode::kBadParameter, "bucketed set input must be sorted and distinct");
  }
  const unsigned f = bucket_entry_bits(l, b, word_bits);
  const PackedLayout lay(word_bits, f);
  std::vector<std::uint64_t> offsets{0};
  std::vector<std::uint64_t> payload;
  std::vector<std::uint64_t> rems;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < (std::size_t{1} << b); ++i) {
    rems.clear();
    while (pos < sorted_values.size() && (shift >= 64 ? 0 : sorted_values[pos] >> shift) == i)
      rems.push_back(sorted_values[pos++] & rem_mask);
    if (!rems.empty()) {
      const PackedSequence seq = encode(rems, f, word_bits);
      const auto& limbs = seq.array().limbs();
      payload.insert(payload.end(), limbs.begin(),
                     limbs.begin() + static_cast<std::ptrdiff_t>(
                                         lay.words_for(rems.size()) * lay.limbs_per_word()));
    }
    offsets.push_back(offsets.back() + rems.size());
  }
  return BucketedSet(l, b, word_bits, std::move(offsets), std::move(payload));
}

BucketedSet rebucket(const BucketedSet& s, unsigned b, const ExecContext& ctx) {
  check_bucket_params(s.element_bits(), b, s.word_bits());
  if (b == s.bucket_bits()) return copy_of(s);
  if (b > s.bucket_bits()) return split_buckets(s, b, ctx);
  return merge_buckets(s, b, ctx);
}

BucketedSet project_div(const BucketedSet& s, unsigned x, const ExecContext& ctx) {
  if (x <= s.bucket_bits() || x > s.element_bits())
    fail(ErrorCode::kBadParameter, "projection shift x=" + std::to_string(x) +
                                       " outside (b, l] = (" + std::to_string(s.bucket_bits()) +
                                       ", " + std::to_string(s.element_bits()) + "]");
  return project_div_any(s, x, ctx);
}

BucketedSet project_div_any(const BucketedSet& s, unsigned x, const ExecContext& ctx) {
  const unsigned l = s.element_bits();
  if (x > l) fail(ErrorCode::kBadParameter, "projection shift exceeds element width");
  if (x == 0) return copy_of(s);
  const unsigned nl = l - x;
  const unsigned b = s.bucket_bits();
  if (b > nl) {
    const unsigned target = std::max(nl, min_bucket_bits(l, s.word_bits()));
    if (target < b) return project_div_any(rebucket(s, target, ctx), x, ctx);
    // b cannot drop that far at width l yet: shrink l down to b first.
    const unsigned step = l - b;
    return project_div_any(project_div_any(s, step, ctx), x - step, ctx);
  }

  const detail::Geometry& src = detail::geometry(s.word_bits(), s.entry_bits());
  const detail::Geometry& dst = detail::geometry(s.word_bits(), bucket_entry_bits(nl, b, s.word_bits()));
  const Alu alu(src.W, ctx);
  const unsigned kept = l - b - x;
  const Reg keep = detail::low_entry_mask(src, kept);

  Assembler out(dst, alu, s.bucket_count());
  std::vector<std::uint64_t> shifted;
  std::vector<std::uint64_t> packed;
  for (std::size_t i = 0; i < s.bucket_count(); ++i) {
    const PackedView v = s.bucket(i);
    if (v.length() == 0) {
      out.empty_buckets(1);
      continue;
    }
    const std::size_t words = (v.length() + src.K - 1) / src.K;
    shifted.assign(words * src.L, 0);
    for (std::size_t wi = 0; wi < words; ++wi) {
      const Reg w = detail::load_word(alu, v, wi);
      const Reg e = alu.and_(alu.shr(alu.and_(w, src.entry), x), keep);
      alu.store(alu.or_(e, alu.and_(w, src.test)),
                std::span<std::uint64_t>(shifted).subspan(wi * src.L, src.L));
    }
    detail::mark_duplicates(src, alu, shifted, v.length(), detail::DupRule::kKeepLast);
    packed.clear();
    detail::FieldWriter pw(src, alu, packed);
    detail::compact_into(src, alu, PackedView(src.layout(), v.length(), shifted), pw);
    const std::size_t n = pw.finish();
    detail::FieldWriter& w = out.open();
    detail::convert_into(src, dst, alu, PackedView(src.layout(), n, packed), w);
    out.close();
  }
  return out.finish(nl, b);
}

BucketedSet balance(const BucketedSet& s, const ExecContext& ctx) {
  return rebucket(s, balanced_bucket_bits(s.size(), s.element_bits(), s.word_bits()), ctx);
}

namespace {

void require_compatible(const BucketedSet& a, const BucketedSet& b) {
  if (a.element_bits() != b.element_bits() || a.word_bits() != b.word_bits())
    fail(ErrorCode::kParameterMismatch,
         "bucketed operands differ (l=" + std::to_string(a.element_bits()) + ", W=" +
             std::to_string(a.word_bits()) + " vs l=" + std::to_string(b.element_bits()) +
             ", W=" + std::to_string(b.word_bits()) + ")");
}

BucketedSet bucketwise(const BucketedSet& a, const BucketedSet& b, detail::DupRule rule,
                       const ExecContext& ctx) {
  const unsigned l = a.element_bits();
  const unsigned nb = balanced_bucket_bits(a.size() + b.size(), l, a.word_bits());
  const BucketedSet ra = rebucket(a, nb, ctx);
  const BucketedSet rb = rebucket(b, nb, ctx);
  const detail::Geometry& geo = detail::geometry(ra.word_bits(), ra.entry_bits());
  const Alu alu(geo.W, ctx);
  Assembler out(geo, alu, ra.bucket_count());
  for (std::size_t i = 0; i < ra.bucket_count(); ++i) {
    const PackedView va = ra.bucket(i);
    const PackedView vb = rb.bucket(i);
    if (rule == detail::DupRule::kKeepPairs && (va.length() == 0 || vb.length() == 0)) {
      out.empty_buckets(1);
      continue;
    }
    detail::FieldWriter& w = out.open();
    detail::set_op_into(geo, alu, va, vb, rule, w);
    out.close();
  }
  return balance(out.finish(l, nb), ctx);
}

}  // namespace

BucketedSet bucketed_union(const BucketedSet& a, const BucketedSet& b, const ExecContext& ctx) {
  require_compatible(a, b);
  if (a.empty()) return balance(b, ctx);
  if (b.empty()) return balance(a, ctx);
  return bucketwise(a, b, detail::DupRule::kKeepLast, ctx);
}

BucketedSet bucketed_intersect(const BucketedSet& a, const BucketedSet& b,
                               const ExecContext& ctx) {
  require_compatible(a, b);
  if (a.empty() || b.empty()) return BucketedSet(a.element_bits(), a.word_bits());
  return bucketwise(a, b, detail::DupRule::kKeepPairs, ctx);
}

}  // namespace mrset
