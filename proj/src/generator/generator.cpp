#include "ujoin/generator/generator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

#include "ujoin/errors.hpp"
#include "ujoin/storage/tuple_codec.hpp"

namespace ujoin {

namespace {

// std distributions are implementation-defined; these keep datasets identical across
// standard libraries.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(rng()) * n) >> 64);
}

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

template <class T>
void shuffle_in_place(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[bounded(rng, i)]);
}

std::string random_payload(std::mt19937_64& rng, std::uint32_t bytes) {
  std::string p(bytes, '\0');
  for (char& ch : p) ch = static_cast<char>(rng() & 0xFF);
  return p;
}

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  ByteBuffer b;
  codec::put_u64(b, v);
  return codec::fnv1a(codec::as_bytes(b), h);
}

constexpr std::uint64_t kSideSalt[2] = {0x5851f42d4c957f2dULL, 0x14057b7ef767814fULL};

DatasetPair write_pair(BufferPool& pool, const std::filesystem::path& dir, const std::string& tag,
                       std::vector<UTuple> t1, std::vector<UTuple> t2, std::uint64_t seed,
                       std::uint64_t intended) {
  std::filesystem::create_directories(dir);
  std::mt19937_64 shuffle1(seed ^ kSideSalt[0]);
  std::mt19937_64 shuffle2(seed ^ kSideSalt[1]);
  shuffle_in_place(t1, shuffle1);
  shuffle_in_place(t2, shuffle2);
  RelationWriter w1(pool, dir / (tag + "-r1.rel"), tag + "-r1");
  for (const UTuple& t : t1) w1.append(t);
  Relation r1 = w1.finish();
  RelationWriter w2(pool, dir / (tag + "-r2.rel"), tag + "-r2");
  for (const UTuple& t : t2) w2.append(t);
  Relation r2 = w2.finish();
  return DatasetPair{std::move(r1), std::move(r2), intended};
}

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << v;
  return os.str();
}

}  // namespace

void GenSpec::validate() const {
  if (n < 1) throw SpecError("n must be at least 1");
  if (c < 1) throw SpecError("c must be at least 1");
  if (!(p >= 0.0 && p <= 100.0)) throw SpecError("p must lie in [0, 100]");
  if (s < 1) throw SpecError("s must be at least 1");
  if (c > 1 && std::gcd(static_cast<std::uint64_t>(s), std::uint64_t{c}) != 1) {
    throw SpecError("s=" + std::to_string(s) + " shares a factor with c=" + std::to_string(c) +
                    "; alternatives of different tuples would collide");
  }
  const long double top = static_cast<long double>(n) * c + static_cast<long double>(c) * s;
  if (top > static_cast<long double>(INT64_MAX)) throw SpecError("value range overflows 64 bits");
}

std::uint64_t GenSpec::hash() const noexcept {
  std::uint64_t h = codec::fnv1a({});
  h = mix(h, n);
  h = mix(h, c);
  h = mix(h, static_cast<std::uint64_t>(std::llround(p * 1000.0)));
  h = mix(h, static_cast<std::uint64_t>(s));
  h = mix(h, seed);
  return mix(h, payload_bytes);
}

std::string GenSpec::describe() const {
  std::ostringstream os;
  os << "n=" << n << " c=" << c << " p=" << p << " s=" << s << " seed=" << seed;
  return os.str();
}

std::int64_t next_coprime(std::int64_t s, std::uint32_t c) {
  if (s < 1) s = 1;
  if (c <= 1) return s;
  while (std::gcd(static_cast<std::uint64_t>(s), std::uint64_t{c}) != 1) ++s;
  return s;
}

std::vector<UTuple> generate_tuples(const GenSpec& spec, int side) {
  spec.validate();
  std::mt19937_64 values(spec.seed);
  std::mt19937_64 payloads(spec.seed ^ kSideSalt[side & 1] ^ 0xa0761d6478bd642fULL);
  const double frac = spec.p / 100.0;
  std::vector<UTuple> out;
  out.reserve(spec.n);
  std::vector<Value> alts;
  for (std::uint64_t i = 0; i < spec.n; ++i) {
    const bool uncertain = unit(values) < frac;
    const std::uint32_t ci = uncertain ? spec.c : 1;
    alts.clear();
    for (std::uint32_t j = 0; j < ci; ++j) {
      alts.push_back(static_cast<Value>(i) * spec.c + static_cast<Value>(j) * spec.s);
    }
    out.push_back(UTuple{i, UncertainValue::from_sorted(alts),
                         random_payload(payloads, spec.payload_bytes)});
  }
  return out;
}

DatasetPair generate(BufferPool& pool, const GenSpec& spec, const std::filesystem::path& dir) {
  spec.validate();
  // Values never collide across tuples (gcd(s, c) == 1), so each tuple matches only its twin.
  return write_pair(pool, dir, "gen-" + hex(spec.hash()), generate_tuples(spec, 0),
                    generate_tuples(spec, 1), spec.seed, spec.n);
}

std::optional<DatasetPair> open_generated(BufferPool& pool, const GenSpec& spec,
                                          const std::filesystem::path& dir) {
  const std::string tag = "gen-" + hex(spec.hash());
  const auto p1 = dir / (tag + "-r1.rel");
  const auto p2 = dir / (tag + "-r2.rel");
  if (!std::filesystem::exists(p1) || !std::filesystem::exists(p2)) return std::nullopt;
  try {
    Relation r1 = Relation::open(pool, p1);
    Relation r2 = Relation::open(pool, p2);
    if (r1.tuple_count() != spec.n || r2.tuple_count() != spec.n) return std::nullopt;
    return DatasetPair{std::move(r1), std::move(r2), spec.n};
  } catch (const StorageError&) {
    return std::nullopt;
  }
}

void AuthorSpec::validate() const {
  if (authors < 1 || institutions < 1) throw SpecError("authors and institutions must be >= 1");
  if (extra + 1 > institutions) throw SpecError("more candidate institutions than institutions");
  if (!(prob >= 0.0 && prob <= 1.0)) throw SpecError("prob must lie in [0, 1]");
}

std::uint64_t AuthorSpec::hash() const noexcept {
  std::uint64_t h = mix(codec::fnv1a({}), 0xa07);
  h = mix(h, authors);
  h = mix(h, institutions);
  h = mix(h, extra);
  h = mix(h, static_cast<std::uint64_t>(std::llround(prob * 1e6)));
  h = mix(h, seed);
  return mix(h, payload_bytes);
}

DatasetPair generate_authors(BufferPool& pool, const AuthorSpec& spec,
                             const std::filesystem::path& dir) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::vector<UTuple> authors;
  authors.reserve(spec.authors);
  std::uint64_t intended = 0;
  std::vector<Value> alts;
  for (std::uint64_t i = 0; i < spec.authors; ++i) {
    std::uint32_t k = 1;
    for (std::uint32_t e = 0; e < spec.extra; ++e) k += unit(rng) < spec.prob ? 1 : 0;
    alts.clear();
    while (alts.size() < k) {
      const auto inst = static_cast<Value>(bounded(rng, spec.institutions));
      if (std::find(alts.begin(), alts.end(), inst) == alts.end()) alts.push_back(inst);
    }
    intended += k;
    authors.push_back(UTuple{i, UncertainValue(alts), random_payload(rng, spec.payload_bytes)});
  }
  std::vector<UTuple> inst;
  inst.reserve(spec.institutions);
  for (std::uint64_t i = 0; i < spec.institutions; ++i) {
    inst.push_back(UTuple{i, UncertainValue::certain(static_cast<Value>(i)),
                          random_payload(rng, spec.payload_bytes)});
  }
  return write_pair(pool, dir, "authors-" + hex(spec.hash()), std::move(authors), std::move(inst),
                    spec.seed, intended);
}

double measure_spreading(std::span<const Bounds> a, std::span<const Bounds> b) {
  if (a.empty()) return 0.0;
  std::vector<Value> lbs, ubs;
  lbs.reserve(b.size());
  ubs.reserve(b.size());
  for (const Bounds& x : b) {
    lbs.push_back(x.lb);
    ubs.push_back(x.ub);
  }
  std::sort(lbs.begin(), lbs.end());
  std::sort(ubs.begin(), ubs.end());
  long double total = 0;
  for (const Bounds& q : a) {
    // ranges starting at or before q.ub, minus those already ended before q.lb
    const auto started = std::upper_bound(lbs.begin(), lbs.end(), q.ub) - lbs.begin();
    const auto ended = std::lower_bound(ubs.begin(), ubs.end(), q.lb) - ubs.begin();
    total += static_cast<long double>(started - ended);
  }
  return static_cast<double>(total / static_cast<long double>(a.size()));
}

std::vector<Bounds> relation_bounds(const Relation& rel) {
  std::vector<Bounds> out;
  out.reserve(rel.tuple_count());
  RelationCursor cur = rel.scan();
  while (cur.next_record()) {
    const TupleKey k = codec::decode_key(cur.record());
    out.push_back(Bounds{k.lb, k.ub});
  }
  return out;
}

double measure_spreading(const Relation& r1, const Relation& r2) {
  const auto b1 = relation_bounds(r1);
  if (&r1 == &r2) return measure_spreading(b1, b1);
  return measure_spreading(b1, relation_bounds(r2));
}

}  // namespace ujoin
