#include "ujoin/storage/tuple_codec.hpp"

#include <cstring>

#include "ujoin/errors.hpp"

namespace ujoin {

UTuple TupleBuffer::to_tuple() const {
  return UTuple{xid, UncertainValue::from_sorted(alts), payload};
}

namespace codec {

void put_varint(ByteBuffer& out, std::uint64_t v) {
  while (v >= 0x80) {
    out.push_back(static_cast<std::byte>((v & 0x7F) | 0x80));
    v >>= 7;
  }
  out.push_back(static_cast<std::byte>(v));
}

std::uint64_t get_varint(const std::byte*& p, const std::byte* end) {
  std::uint64_t v = 0;
  for (int shift = 0; shift < 64; shift += 7) {
    if (p == end) throw StorageError("truncated varint");
    const auto b = static_cast<std::uint8_t>(*p++);
    v |= std::uint64_t{b & 0x7Fu} << shift;
    if ((b & 0x80) == 0) return v;
  }
  throw StorageError("overlong varint");
}

void put_u64(ByteBuffer& out, std::uint64_t v) {
  const std::size_t at = out.size();
  out.resize(at + 8);
  store_le<std::uint64_t>(out.data() + at, v);
}

void encode_tuple(ByteBuffer& out, Xid xid, std::span<const Value> alts,
                  std::string_view payload) {
  put_u64(out, xid);
  put_varint(out, alts.size());
  put_varint(out, zigzag(alts.front()));
  const std::size_t last = alts.size() - 1;
  if (last > 0) {
    // The range width comes first so that the bounds can be read without the middle values.
    put_varint(out, static_cast<std::uint64_t>(alts[last]) - static_cast<std::uint64_t>(alts[0]));
    for (std::size_t i = 1; i < last; ++i) {
      put_varint(out,
                 static_cast<std::uint64_t>(alts[i]) - static_cast<std::uint64_t>(alts[i - 1]));
    }
  }
  put_varint(out, payload.size());
  const std::size_t at = out.size();
  out.resize(at + payload.size());
  std::memcpy(out.data() + at, payload.data(), payload.size());
}

namespace {

struct Head {
  Xid xid;
  std::uint64_t count;
  Value lb;
  Value ub;
};

const std::byte* decode_head(Bytes record, Head& h) {
  if (record.size() < 8) throw StorageError("tuple record shorter than its xid");
  const std::byte* p = record.data();
  const std::byte* end = p + record.size();
  h.xid = load_le<std::uint64_t>(p);
  p += 8;
  h.count = get_varint(p, end);
  if (h.count == 0 || h.count > record.size()) throw StorageError("bad alternative count");
  h.lb = unzigzag(get_varint(p, end));
  h.ub = h.lb;
  if (h.count > 1) {
    const std::uint64_t span = get_varint(p, end);
    if (span < h.count - 1) throw StorageError("alternatives not strictly increasing");
    h.ub = static_cast<Value>(static_cast<std::uint64_t>(h.lb) + span);
  }
  return p;
}

}  // namespace

void decode_tuple(Bytes record, TupleBuffer& out) {
  Head h;
  const std::byte* p = decode_head(record, h);
  const std::byte* end = record.data() + record.size();
  out.xid = h.xid;
  out.alts.clear();
  out.alts.reserve(h.count);
  out.alts.push_back(h.lb);
  Value v = h.lb;
  for (std::uint64_t i = 2; i < h.count; ++i) {
    const std::uint64_t delta = get_varint(p, end);
    v = static_cast<Value>(static_cast<std::uint64_t>(v) + delta);
    if (delta == 0 || v >= h.ub) throw StorageError("alternatives not strictly increasing");
    out.alts.push_back(v);
  }
  if (h.count > 1) out.alts.push_back(h.ub);
  const std::uint64_t len = get_varint(p, end);
  if (len != static_cast<std::uint64_t>(end - p)) throw StorageError("bad payload length");
  out.payload.assign(reinterpret_cast<const char*>(p), len);
}

UTuple decode_tuple(Bytes record) {
  TupleBuffer buf;
  decode_tuple(record, buf);
  return buf.to_tuple();
}

TupleKey decode_key(Bytes record) {
  Head h;
  decode_head(record, h);
  return TupleKey{h.lb, h.ub, h.xid};
}

std::uint64_t fnv1a(Bytes data, std::uint64_t seed) noexcept {
  std::uint64_t h = seed;
  for (std::byte b : data) {
    h ^= static_cast<std::uint8_t>(b);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace codec

}  // namespace ujoin
