#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "ujoin/model.hpp"
#include "ujoin/storage/buffer_pool.hpp"
#include "ujoin/storage/relation.hpp"

namespace ujoin {

struct IndexEntry {
  Value lb = 0;
  Value ub = 0;
  Xid xid = 0;
  Rid rid;
};

/// Static 1-D interval index over one relation's bounds, stored as a paged file.
///
/// Entries are sorted by (lb, ub, xid) and each carries the running maximum of ub over all
/// entries up to it. A query locates the last entry with lb <= q.ub (binary search over a
/// per-page fence array, then within the page) and sweeps backward while the running maximum
/// is still >= q.lb. File layout: page 0 header ("UIDX1", page size, entry count, relation
/// checksum and tuple count, leaf and fence page counts), then fence pages (first lb of each
/// leaf page), then leaf pages of fixed 40-byte entries.
class IntervalIndex {
 public:
  /// Scans `rel`, sorts its bounds in memory and writes the index file.
  static IntervalIndex build(BufferPool& pool, const Relation& rel,
                             const std::filesystem::path& path);
  /// Throws StaleIndexError when the index was built on a different relation content.
  static IntervalIndex open(BufferPool& pool, const std::filesystem::path& path,
                            const Relation& rel);

  IntervalIndex(IntervalIndex&& other) noexcept;
  IntervalIndex& operator=(IntervalIndex&& other) noexcept;
  IntervalIndex(const IntervalIndex&) = delete;
  IntervalIndex& operator=(const IntervalIndex&) = delete;
  ~IntervalIndex();

  /// Entries whose [lb, ub] overlaps `q`, in (lb, ub, xid) order. Fence pages are read on the
  /// first query.
  void query(Bounds q, std::vector<IndexEntry>& out) const;

  /// Throws StaleIndexError unless the index matches `rel`.
  void check_fresh(const Relation& rel) const;

  std::uint64_t size() const noexcept { return entries_; }
  std::uint64_t relation_checksum() const noexcept { return checksum_; }
  const std::filesystem::path& path() const noexcept { return path_; }
  /// Pages in the index file (header, fences, leaves).
  std::uint64_t pages() const noexcept { return 1 + fence_pages_ + leaf_pages_; }

 private:
  IntervalIndex(BufferPool& pool, FileId file, std::filesystem::path path)
      : pool_(&pool), file_(file), path_(std::move(path)) {}

  void read_header();
  void load_fences() const;
  IndexEntry entry_at(const PageRef& leaf, std::size_t slot, Value* max_ub) const;

  BufferPool* pool_ = nullptr;
  FileId file_ = 0;
  std::filesystem::path path_;
  std::uint64_t entries_ = 0;
  std::uint64_t checksum_ = 0;
  std::uint64_t tuple_count_ = 0;
  std::uint64_t leaf_pages_ = 0;
  std::uint64_t fence_pages_ = 0;
  std::uint32_t per_leaf_ = 0;
  mutable std::vector<Value> fences_;
  mutable bool fences_loaded_ = false;
};

}  // namespace ujoin
