#include "ujoin/storage/external_sort.hpp"

#include <algorithm>
#include <queue>
#include <stdexcept>

#include "ujoin/errors.hpp"

namespace ujoin {

namespace {

class MemoryStream final : public RecordStream {
 public:
  struct Item {
    std::uint64_t offset;
    std::uint32_t length;
  };

  MemoryStream(std::vector<std::byte> arena, std::vector<Item> items)
      : arena_(std::move(arena)), items_(std::move(items)) {}

  bool next() override {
    if (index_ >= items_.size()) return false;
    current_ = Bytes(arena_.data() + items_[index_].offset, items_[index_].length);
    ++index_;
    return true;
  }
  Bytes record() const override { return current_; }

 private:
  std::vector<std::byte> arena_;
  std::vector<Item> items_;
  std::size_t index_ = 0;
  Bytes current_;
};

/// K-way merge of sorted runs; ties resolve to the lower run index.
class MergeStream final : public RecordStream {
 public:
  MergeStream(std::vector<TempHeap> runs, SortKeyFn key, bool unique)
      : runs_(std::move(runs)), key_(std::move(key)), unique_(unique) {
    cursors_.reserve(runs_.size());
    for (const TempHeap& run : runs_) cursors_.push_back(run.cursor());
  }

  bool next() override {
    if (!primed_) {
      for (std::size_t i = 0; i < cursors_.size(); ++i) push(i);
      primed_ = true;
    } else if (current_ != kNone) {
      push(current_);
    }
    while (!heap_.empty()) {
      const Head head = heap_.top();
      heap_.pop();
      if (unique_ && have_last_ && head.key == last_key_) {
        push(head.run);
        continue;
      }
      current_ = head.run;
      last_key_ = head.key;
      have_last_ = true;
      return true;
    }
    current_ = kNone;
    return false;
  }

  Bytes record() const override { return cursors_[current_].record(); }

 private:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  struct Head {
    SortKey key;
    std::size_t run;
    bool operator>(const Head& o) const {
      return key != o.key ? key > o.key : run > o.run;
    }
  };

  void push(std::size_t run) {
    if (cursors_[run].next()) heap_.push(Head{key_(cursors_[run].record()), run});
  }

  std::vector<TempHeap> runs_;
  std::vector<HeapCursor> cursors_;
  SortKeyFn key_;
  bool unique_;
  std::priority_queue<Head, std::vector<Head>, std::greater<>> heap_;
  std::size_t current_ = kNone;
  bool primed_ = false;
  SortKey last_key_;
  bool have_last_ = false;
};

}  // namespace

ExternalSorter::ExternalSorter(ExecContext& ctx, SortKeyFn key, bool unique, std::string tag)
    : ctx_(&ctx), key_(std::move(key)), unique_(unique), tag_(std::move(tag)) {
  if (ctx.mem_pages < 3) {
    throw std::invalid_argument("external sort needs a memory budget of at least 3 pages");
  }
  budget_bytes_ = ctx.mem_pages * (ctx.pool.page_size() - SlottedPage::kHeaderSize);
}

void ExternalSorter::add(Bytes record) {
  if (finished_) throw std::logic_error("sorter already finished");
  const std::size_t cost = record.size() + SlottedPage::kSlotSize;
  if (used_bytes_ + cost > budget_bytes_ && !entries_.empty()) spill_run();
  const std::uint64_t offset = arena_.size();
  arena_.insert(arena_.end(), record.begin(), record.end());
  entries_.push_back(Entry{key_(record), offset, static_cast<std::uint32_t>(record.size())});
  used_bytes_ += cost;
  ++stats_.input_records;
}

void ExternalSorter::sort_entries() {
  std::stable_sort(entries_.begin(), entries_.end(),
                   [](const Entry& x, const Entry& y) { return x.key < y.key; });
  if (unique_) {
    entries_.erase(std::unique(entries_.begin(), entries_.end(),
                               [](const Entry& x, const Entry& y) { return x.key == y.key; }),
                   entries_.end());
  }
}

void ExternalSorter::spill_run() {
  sort_entries();
  TempHeap run(ctx_->pool, ctx_->spill, tag_ + "-run");
  {
    HeapWriter writer = run.writer();
    for (const Entry& e : entries_) writer.append(Bytes(arena_.data() + e.offset, e.length));
  }
  runs_.push_back(std::move(run));
  entries_.clear();
  arena_.clear();
  used_bytes_ = 0;
  stats_.spilled = true;
}

std::unique_ptr<RecordStream> ExternalSorter::finish() {
  if (finished_) throw std::logic_error("sorter already finished");
  finished_ = true;
  stats_.passes = 1;
  stats_.fan_in = ctx_->max_fan_in();

  if (runs_.empty()) {
    sort_entries();
    stats_.runs = entries_.empty() ? 0 : 1;
    std::vector<MemoryStream::Item> items;
    items.reserve(entries_.size());
    for (const Entry& e : entries_) items.push_back({e.offset, e.length});
    entries_ = {};
    return std::make_unique<MemoryStream>(std::move(arena_), std::move(items));
  }

  if (!entries_.empty()) spill_run();
  stats_.runs = runs_.size();
  if (runs_.size() == 1) {
    // A single run needs no merge: stream it back.
    return std::make_unique<MergeStream>(std::move(runs_), key_, unique_);
  }

  const std::size_t fan_in = stats_.fan_in;
  while (runs_.size() > fan_in) {
    std::vector<TempHeap> next_level;
    for (std::size_t begin = 0; begin < runs_.size(); begin += fan_in) {
      const std::size_t end = std::min(runs_.size(), begin + fan_in);
      if (end - begin == 1) {
        next_level.push_back(std::move(runs_[begin]));
        continue;
      }
      std::vector<TempHeap> group;
      for (std::size_t i = begin; i < end; ++i) group.push_back(std::move(runs_[i]));
      MergeStream merge(std::move(group), key_, unique_);
      TempHeap out(ctx_->pool, ctx_->spill, tag_ + "-merge");
      {
        HeapWriter writer = out.writer();
        while (merge.next()) writer.append(merge.record());
      }
      next_level.push_back(std::move(out));
    }
    runs_ = std::move(next_level);
    ++stats_.passes;
  }
  ++stats_.passes;
  return std::make_unique<MergeStream>(std::move(runs_), key_, unique_);
}

Spool::Spool(ExecContext& ctx, std::unique_ptr<RecordStream> source, const std::string& tag)
    : source_(std::move(source)),
      heap_(ctx.pool, ctx.spill, tag),
      writer_(heap_.writer()),
      cursor_(heap_.cursor()) {}

bool Spool::fetch_next() {
  if (after_end_) return false;
  if (position_ == materialized_) {
    if (!exhausted_ && source_->next()) {
      writer_.append(source_->record());
      ++materialized_;
    } else {
      exhausted_ = true;
      after_end_ = true;
      return false;
    }
  }
  if (!cursor_.next()) throw StorageError("spool lost a materialized row");
  ++position_;
  return true;
}

void Spool::move_back(std::uint64_t rows) {
  if (rows == 0) return;
  if (after_end_) {
    after_end_ = false;
    --rows;
  }
  const std::uint64_t steps = std::min(rows, position_);
  cursor_.move_back(steps);
  position_ -= steps;
}

}  // namespace ujoin
