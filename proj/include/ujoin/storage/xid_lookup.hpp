#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "ujoin/storage/external_sort.hpp"
#include "ujoin/storage/relation.hpp"
#include "ujoin/storage/row_table.hpp"

namespace ujoin {

/// Pair records start with [u64 xid1][u64 xid2]; anything after that is carried along.
namespace pair_record {
inline Xid xid1(Bytes rec) noexcept { return load_le<std::uint64_t>(rec.data()); }
inline Xid xid2(Bytes rec) noexcept { return load_le<std::uint64_t>(rec.data() + 8); }
/// Orders by (xid1, xid2) as unsigned numbers.
SortKey key(Bytes rec) noexcept;
}  // namespace pair_record

/// Duplicate elimination on the (xid1, xid2) identity: an external sort that keeps the
/// first record of every key. The output is ordered by (xid1, xid2).
inline ExternalSorter make_pair_dedup(ExecContext& ctx, const std::string& tag = "dedup") {
  return ExternalSorter(ctx, &pair_record::key, true, tag);
}

/// Recovers the full tuples of a stream of (xid1, xid2) pairs with equi-joins on xid.
///
/// When both relations fit in half the memory budget each is loaded into a hash table and
/// results follow the pair order. Otherwise a two-stage grace join runs: pairs and the outer
/// relation are partitioned on xid1, joined partition-wise and re-partitioned on xid2, then
/// joined against the partitioned inner relation one partition per pull. Nothing happens
/// until the first next(); an unknown xid raises IntegrityError.
class XidLookupJoin {
 public:
  XidLookupJoin(ExecContext& ctx, std::unique_ptr<RecordStream> pairs, const Relation& outer,
                const Relation& inner);
  ~XidLookupJoin();
  XidLookupJoin(const XidLookupJoin&) = delete;
  XidLookupJoin& operator=(const XidLookupJoin&) = delete;

  bool next();
  Bytes outer_record() const noexcept { return outer_; }
  Bytes inner_record() const noexcept { return inner_; }

  /// Valid after the first next().
  bool partitioned() const noexcept { return partitioned_; }

 private:
  void prepare();
  void prepare_partitioned();
  bool next_partitioned();
  bool open_partition(std::size_t part);

  ExecContext* ctx_;
  std::unique_ptr<RecordStream> pairs_;
  const Relation* outer_rel_;
  const Relation* inner_rel_;
  bool prepared_ = false;
  bool done_ = false;
  bool partitioned_ = false;
  Bytes outer_;
  Bytes inner_;
  // pairs arrive sorted on xid1, so the outer row is usually the one just found
  Xid last_x1_ = 0;
  bool have_x1_ = false;

  RowTable<Xid> outer_table_;
  RowTable<Xid> inner_table_;

  std::size_t parts_ = 0;
  std::size_t current_ = 0;
  std::vector<TempHeap> staged_;      // [xid2][outer record], partitioned on xid2
  std::vector<TempHeap> inner_parts_;  // inner tuple records, partitioned on xid2
  std::optional<HeapCursor> staged_cursor_;
};

}  // namespace ujoin
