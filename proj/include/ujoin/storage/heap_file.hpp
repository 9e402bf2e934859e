#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "ujoin/model.hpp"
#include "ujoin/storage/buffer_pool.hpp"

namespace ujoin {

/// Cursor position: "before record `slot` of `page`". `slot` may equal the page's slot count,
/// which is the same point as the start of the following page.
struct HeapPos {
  PageNo page = 0;
  SlotNo slot = 0;

  friend auto operator<=>(const HeapPos&, const HeapPos&) = default;
};

/// Appends variable-length records to the tail of a page file. Pages before `first_page`
/// (e.g. a file header) are never touched.
class HeapWriter {
 public:
  HeapWriter(BufferPool& pool, FileId file, PageNo first_page = 0);
  HeapWriter(const HeapWriter&) = delete;
  HeapWriter& operator=(const HeapWriter&) = delete;
  HeapWriter(HeapWriter&&) noexcept = default;
  HeapWriter& operator=(HeapWriter&&) noexcept = default;

  /// Throws StorageError when the record cannot fit on an empty page.
  Rid append(Bytes record);
  /// Unpins the tail page; appending afterwards re-pins it.
  void release() { tail_.release(); }

  std::uint64_t records() const noexcept { return records_; }

 private:
  BufferPool* pool_;
  FileId file_;
  PageNo first_page_;
  PageRef tail_;
  std::uint64_t records_ = 0;
};

/// Forward cursor over the records of a heap, starting at `first_page`.
///
/// The end of the heap is re-read from the pool whenever a page is exhausted, so a cursor
/// observes records appended after it was opened. The current record stays valid until the
/// cursor moves.
class HeapCursor {
 public:
  HeapCursor(BufferPool& pool, FileId file, PageNo first_page);

  bool next();
  Bytes record() const noexcept { return record_; }
  /// Address of the record last returned by next().
  Rid rid() const noexcept { return {pos_.page, static_cast<SlotNo>(pos_.slot - 1)}; }

  /// Position of the record that next() will return.
  HeapPos position() const noexcept { return pos_; }
  /// Throws StorageError for a position outside the heap.
  void seek(HeapPos pos);
  /// Steps back `rows` records from the current position, clamped at the first record.
  void move_back(std::uint64_t rows);

  PageNo first_page() const noexcept { return first_page_; }

 private:
  BufferPool* pool_;
  FileId file_;
  PageNo first_page_;
  HeapPos pos_;
  PageRef page_;
  Bytes record_;
};

/// Per-process scratch directory for temporary relations; removed on destruction.
class SpillSpace {
 public:
  /// Uses $UJOIN_SPILL_DIR when set, else the system temp directory.
  SpillSpace();
  explicit SpillSpace(std::filesystem::path root);
  ~SpillSpace();
  SpillSpace(const SpillSpace&) = delete;
  SpillSpace& operator=(const SpillSpace&) = delete;

  std::filesystem::path next_path(const std::string& tag);
  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::filesystem::path dir_;
  std::uint64_t counter_ = 0;
};

/// A temporary heap file registered in a pool; deleted when destroyed.
class TempHeap {
 public:
  TempHeap(BufferPool& pool, SpillSpace& spill, const std::string& tag);
  ~TempHeap();
  TempHeap(const TempHeap&) = delete;
  TempHeap& operator=(const TempHeap&) = delete;
  TempHeap(TempHeap&& other) noexcept;
  TempHeap& operator=(TempHeap&& other) noexcept;

  FileId file() const noexcept { return file_; }
  BufferPool& pool() const noexcept { return *pool_; }
  PageNo pages() const { return pool_->page_count(file_); }

  HeapWriter writer() const { return HeapWriter(*pool_, file_); }
  HeapCursor cursor() const { return HeapCursor(*pool_, file_, 0); }

 private:
  void drop() noexcept;

  BufferPool* pool_ = nullptr;
  FileId file_ = 0;
};

/// Resources of one join execution: the pool, the operator memory budget and spill space.
struct ExecContext {
  ExecContext(BufferPool& p, SpillSpace& s, std::size_t mem) : pool(p), spill(s), mem_pages(mem) {}

  BufferPool& pool;
  SpillSpace& spill;
  /// Operator working memory, in pages (sort runs, hash tables, nested-loop blocks).
  std::size_t mem_pages;
  /// Tuple-pair examinations of the run.
  ComparisonCounter comparisons;

  std::size_t mem_bytes() const noexcept { return mem_pages * pool.page_size(); }
  /// Streams that may be open at once in a merge or partitioning step.
  std::size_t max_fan_in() const noexcept;
};

}  // namespace ujoin
