#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ujoin/storage/heap_file.hpp"

namespace ujoin {

/// Pull-based stream of byte records. record() is valid until the following next().
class RecordStream {
 public:
  virtual ~RecordStream() = default;
  virtual bool next() = 0;
  virtual Bytes record() const = 0;
};

/// Three-part lexicographic sort key extracted from a record.
struct SortKey {
  std::int64_t a = 0;
  std::int64_t b = 0;
  std::uint64_t c = 0;

  friend auto operator<=>(const SortKey&, const SortKey&) = default;
};

using SortKeyFn = std::function<SortKey(Bytes)>;

struct SortStats {
  std::uint64_t input_records = 0;
  /// Initial runs written by run generation (0 or 1 when the input fits in memory).
  std::size_t runs = 0;
  /// Run generation plus every merge pass, the lazy final merge included.
  std::size_t passes = 0;
  std::size_t fan_in = 0;
  bool spilled = false;
};

/// External merge sort under the context's memory budget.
///
/// Run generation fills `mem_pages` worth of records, sorts them and writes a run; merges
/// combine up to ExecContext::max_fan_in() runs per pass until one final merge remains, which
/// is returned as a lazy stream. With `unique`, records with equal keys collapse to the first.
class ExternalSorter {
 public:
  ExternalSorter(ExecContext& ctx, SortKeyFn key, bool unique = false, std::string tag = "sort");

  void add(Bytes record);
  std::unique_ptr<RecordStream> finish();
  const SortStats& stats() const noexcept { return stats_; }

 private:
  struct Entry {
    SortKey key;
    std::uint64_t offset;
    std::uint32_t length;
  };

  void sort_entries();
  void spill_run();

  ExecContext* ctx_;
  SortKeyFn key_;
  bool unique_;
  std::string tag_;
  std::size_t budget_bytes_;
  std::size_t used_bytes_ = 0;
  std::vector<std::byte> arena_;
  std::vector<Entry> entries_;
  std::vector<TempHeap> runs_;
  SortStats stats_;
  bool finished_ = false;
};

/// Materializes a forward-only stream into a temporary heap as it is read, giving the
/// consumer cursor semantics with backward moves (fetch past the end, then step back).
class Spool {
 public:
  Spool(ExecContext& ctx, std::unique_ptr<RecordStream> source, const std::string& tag);

  /// Returns false at the end; the position then sits one past the last row.
  bool fetch_next();
  Bytes record() const noexcept { return cursor_.record(); }
  /// Moves the position back `rows` rows, clamped at the start.
  void move_back(std::uint64_t rows);

  std::uint64_t materialized() const noexcept { return materialized_; }

 private:
  std::unique_ptr<RecordStream> source_;
  TempHeap heap_;
  HeapWriter writer_;
  HeapCursor cursor_;
  std::uint64_t position_ = 0;
  std::uint64_t materialized_ = 0;
  bool exhausted_ = false;
  bool after_end_ = false;
};

}  // namespace ujoin
