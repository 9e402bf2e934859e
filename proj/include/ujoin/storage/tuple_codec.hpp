#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ujoin/model.hpp"
#include "ujoin/storage/page.hpp"

namespace ujoin {

using ByteBuffer = std::vector<std::byte>;

/// Decoded tuple whose buffers are reused across decodes (no allocation in steady state).
struct TupleBuffer {
  Xid xid = 0;
  std::vector<Value> alts;
  std::string payload;

  std::span<const Value> values() const noexcept { return alts; }
  Bounds bounds() const noexcept { return ujoin::bounds(std::span<const Value>(alts)); }
  UTuple to_tuple() const;
};

/// Sort key of a tuple record.
struct TupleKey {
  Value lb;
  Value ub;
  Xid xid;
};

namespace codec {

void put_varint(ByteBuffer& out, std::uint64_t v);
/// Advances `p`; throws StorageError on truncation.
std::uint64_t get_varint(const std::byte*& p, const std::byte* end);

inline std::uint64_t zigzag(std::int64_t v) noexcept {
  return (static_cast<std::uint64_t>(v) << 1) ^ static_cast<std::uint64_t>(v >> 63);
}
inline std::int64_t unzigzag(std::uint64_t v) noexcept {
  return static_cast<std::int64_t>(v >> 1) ^ -static_cast<std::int64_t>(v & 1);
}

void put_u64(ByteBuffer& out, std::uint64_t v);

/// Tuple record: [u64 xid][varint count][zigzag lb][varint ub - lb][varint deltas of the
/// middle alternatives...][varint payload length][payload]; the width is absent for a single
/// alternative. Alternatives must be strictly increasing. decode_key reads only the head.
void encode_tuple(ByteBuffer& out, Xid xid, std::span<const Value> alts,
                  std::string_view payload);
inline void encode_tuple(ByteBuffer& out, const UTuple& t) {
  encode_tuple(out, t.xid, t.val.alternatives(), t.payload);
}

void decode_tuple(Bytes record, TupleBuffer& out);
UTuple decode_tuple(Bytes record);
TupleKey decode_key(Bytes record);
inline Xid decode_xid(Bytes record) { return load_le<std::uint64_t>(record.data()); }

std::uint64_t fnv1a(Bytes data, std::uint64_t seed = 0xcbf29ce484222325ULL) noexcept;

inline Bytes as_bytes(const ByteBuffer& b) noexcept { return {b.data(), b.size()}; }

}  // namespace codec

}  // namespace ujoin
