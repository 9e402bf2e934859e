#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_set>

#include "ujoin/model.hpp"
#include "ujoin/storage/buffer_pool.hpp"
#include "ujoin/storage/heap_file.hpp"
#include "ujoin/storage/tuple_codec.hpp"

namespace ujoin {

inline constexpr std::uint32_t kVariableWidth = 0xFFFFFFFFu;

/// Fields of the relation header page.
///
/// Page 0 layout: "UREL1\0\0\0", u32 page_size, u32 payload_width, u64 tuple_count,
/// u64 data_pages, u64 checksum, u16 name length, name bytes; the rest is zero.
struct RelationHeader {
  std::uint32_t page_size = 0;
  /// Payload size shared by every tuple, or kVariableWidth.
  std::uint32_t payload_width = kVariableWidth;
  std::uint64_t tuple_count = 0;
  std::uint64_t data_pages = 0;
  /// FNV-1a over the record stream; identifies the relation's content.
  std::uint64_t checksum = 0;
  std::string name;
};

class Relation;

/// Sequential cursor over a relation, repositionable to any position it has produced.
class RelationCursor {
 public:
  explicit RelationCursor(const Relation& rel);

  /// Advances and decodes the next tuple.
  bool next();
  /// Advances without decoding; only record() and rid() are meaningful afterwards.
  bool next_record() { return heap_.next(); }

  const TupleBuffer& tuple() const noexcept { return tuple_; }
  Bytes record() const noexcept { return heap_.record(); }
  Rid rid() const noexcept { return heap_.rid(); }

  HeapPos position() const noexcept { return heap_.position(); }
  HeapPos start() const noexcept { return {1, 0}; }
  /// Restarts the stream so that next() yields the tuple at `pos`.
  void rescan_from(HeapPos pos) { heap_.seek(pos); }

 private:
  HeapCursor heap_;
  TupleBuffer tuple_;
};

/// Write-once paged heap file of uncertain tuples. Closes its pool registration on destruction.
class Relation {
 public:
  static Relation open(BufferPool& pool, const std::filesystem::path& path);

  Relation(Relation&& other) noexcept;
  Relation& operator=(Relation&& other) noexcept;
  Relation(const Relation&) = delete;
  Relation& operator=(const Relation&) = delete;
  ~Relation();

  const std::string& name() const noexcept { return header_.name; }
  const RelationHeader& header() const noexcept { return header_; }
  std::uint64_t tuple_count() const noexcept { return header_.tuple_count; }
  std::uint64_t data_pages() const noexcept { return header_.data_pages; }
  std::uint64_t checksum() const noexcept { return header_.checksum; }
  const std::filesystem::path& path() const noexcept { return path_; }
  FileId file() const noexcept { return file_; }
  BufferPool& pool() const noexcept { return *pool_; }

  RelationCursor scan() const { return RelationCursor(*this); }
  /// Random access by record id.
  void fetch(Rid rid, TupleBuffer& out) const;

 private:
  friend class RelationWriter;
  Relation(BufferPool& pool, FileId file, std::filesystem::path path, RelationHeader header)
      : pool_(&pool), file_(file), path_(std::move(path)), header_(std::move(header)) {}

  BufferPool* pool_ = nullptr;
  FileId file_ = 0;
  std::filesystem::path path_;
  RelationHeader header_;
};

class RelationWriter {
 public:
  /// Creates (truncating) `path`. The name defaults to the file stem.
  RelationWriter(BufferPool& pool, const std::filesystem::path& path, std::string name = {});

  /// Throws std::invalid_argument on a duplicate xid.
  Rid append(Xid xid, std::span<const Value> alts, std::string_view payload);
  Rid append(const UTuple& t) { return append(t.xid, t.val.alternatives(), t.payload); }

  /// Writes the header, flushes, and hands the file over to a Relation.
  Relation finish();

 private:
  BufferPool* pool_;
  std::filesystem::path path_;
  FileId file_;
  HeapWriter heap_;
  RelationHeader header_;
  ByteBuffer scratch_;
  std::unordered_set<Xid> xids_;
  bool first_ = true;
};

/// Raw header decoding; throws StorageError on a bad magic or page size.
RelationHeader read_relation_header(Bytes page0);

}  // namespace ujoin
