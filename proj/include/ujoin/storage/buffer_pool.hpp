#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "ujoin/storage/page.hpp"

namespace ujoin {

using FileId = std::uint32_t;

/// Physical page traffic: reads are fetches that miss the pool, writes are dirty-page flushes.
struct IoCounters {
  std::uint64_t page_reads = 0;
  std::uint64_t page_writes = 0;

  friend IoCounters operator-(IoCounters a, IoCounters b) noexcept {
    return {a.page_reads - b.page_reads, a.page_writes - b.page_writes};
  }
  friend bool operator==(const IoCounters&, const IoCounters&) = default;
};

class BufferPool;

/// A pinned page. The frame stays resident until the reference is released or destroyed.
class PageRef {
 public:
  PageRef() = default;
  PageRef(const PageRef&) = delete;
  PageRef& operator=(const PageRef&) = delete;
  PageRef(PageRef&& other) noexcept { *this = std::move(other); }
  PageRef& operator=(PageRef&& other) noexcept;
  ~PageRef() { release(); }

  MutableBytes data() const noexcept { return {data_, size_}; }
  PageNo page_no() const noexcept { return page_no_; }
  explicit operator bool() const noexcept { return pool_ != nullptr; }

  void mark_dirty();
  void release() noexcept;

 private:
  friend class BufferPool;
  PageRef(BufferPool* pool, std::uint32_t frame, std::byte* data, std::size_t size, PageNo no)
      : pool_(pool), frame_(frame), data_(data), size_(size), page_no_(no) {}

  BufferPool* pool_ = nullptr;
  std::uint32_t frame_ = 0;
  std::byte* data_ = nullptr;
  std::size_t size_ = 0;
  PageNo page_no_ = 0;
};

/// Fixed-capacity page cache over page-granular files with clock (second-chance) eviction.
///
/// Every file access in the engine goes through a pool so that page reads and writes are
/// observable. The pool is internally synchronized; pinned frames are never evicted.
class BufferPool {
 public:
  explicit BufferPool(std::size_t capacity_pages, std::size_t page_size = kDefaultPageSize);
  ~BufferPool();
  BufferPool(const BufferPool&) = delete;
  BufferPool& operator=(const BufferPool&) = delete;

  /// Creates (truncating) a file and registers it.
  FileId create_file(const std::filesystem::path& path);
  /// Registers an existing file; its size must be a multiple of the page size.
  FileId open_file(const std::filesystem::path& path);
  /// Flushes dirty pages, forgets cached frames and closes the descriptor.
  void close_file(FileId file);
  /// Discards cached frames without writing them, closes and deletes the file.
  void drop_file(FileId file);

  PageNo page_count(FileId file) const;
  std::filesystem::path path(FileId file) const;

  PageRef fetch(FileId file, PageNo page);
  /// New zero-filled page at the end of the file, pinned and dirty. Not counted as a read.
  PageRef append_page(FileId file);

  void flush_file(FileId file);
  void flush_all();
  /// Cold cache: writes back dirty frames and invalidates every unpinned frame.
  void evict_all();

  IoCounters counters() const;
  void reset_counters();

  std::size_t capacity() const noexcept { return frames_.size(); }
  std::size_t page_size() const noexcept { return page_size_; }
  std::size_t pinned_frames() const;

 private:
  friend class PageRef;

  struct Frame {
    FileId file = 0;
    PageNo page = 0;
    std::uint32_t pins = 0;
    bool referenced = false;
    bool dirty = false;
    bool valid = false;
  };

  struct OpenFile {
    int fd = -1;
    std::filesystem::path path;
    PageNo pages = 0;
  };

  static std::uint64_t key(FileId f, PageNo p) noexcept {
    return (std::uint64_t{f} << 32) | p;
  }
  std::byte* frame_data(std::uint32_t frame) noexcept {
    return arena_.data() + std::size_t{frame} * page_size_;
  }
  OpenFile& file_locked(FileId file);
  const OpenFile& file_locked(FileId file) const;
  std::uint32_t victim_locked();
  void write_back_locked(std::uint32_t frame);
  void forget_file_frames_locked(FileId file, bool write_back);
  void unpin(std::uint32_t frame) noexcept;
  void set_dirty(std::uint32_t frame);

  std::size_t page_size_;
  mutable std::mutex mu_;
  std::vector<std::byte> arena_;
  std::vector<Frame> frames_;
  std::unordered_map<std::uint64_t, std::uint32_t> table_;
  std::unordered_map<FileId, OpenFile> files_;
  FileId next_file_ = 1;
  std::size_t hand_ = 0;
  IoCounters counters_;
};

}  // namespace ujoin
