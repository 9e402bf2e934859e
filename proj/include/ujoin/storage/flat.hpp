#pragma once

#include <cstdint>
#include <functional>

#include "ujoin/storage/external_sort.hpp"
#include "ujoin/storage/heap_file.hpp"
#include "ujoin/storage/relation.hpp"

namespace ujoin {

enum class FlatKind { KeyOnly, Full };

/// One conventional row per alternative value.
///
/// Row layouts: key-only = [i64 v][u64 xid]; full = [i64 v][tuple record]. In both the xid
/// sits at byte offset 8.
struct FlatRelation {
  TempHeap heap;
  FlatKind kind;
  std::uint64_t rows = 0;
};

namespace flat_row {
inline Value value(Bytes row) noexcept { return load_le<std::int64_t>(row.data()); }
inline Xid xid(Bytes row) noexcept { return load_le<std::uint64_t>(row.data() + 8); }
/// The embedded tuple record of a full row.
inline Bytes tuple_record(Bytes row) noexcept { return row.subspan(8); }
}  // namespace flat_row

FlatRelation flatten(ExecContext& ctx, const Relation& rel, FlatKind kind);

struct HashJoinStats {
  std::size_t partitions = 0;
  /// Partitions whose build side never fit and were joined block by block.
  std::size_t fallback_partitions = 0;
  std::uint64_t pairs = 0;
};

using FlatPairSink = std::function<void(Bytes probe_row, Bytes build_row)>;

/// Value-level equi-join of two flat relations. `build` is hashed in memory when it fits
/// `ctx.mem_pages`; otherwise both sides are hash-partitioned to spill files (up to three
/// levels) and a partition that still does not fit falls back to a block nested join.
/// Every bucket entry examined counts as one comparison.
HashJoinStats hash_join_flat(ExecContext& ctx, const FlatRelation& probe,
                             const FlatRelation& build, const FlatPairSink& sink);

}  // namespace ujoin
