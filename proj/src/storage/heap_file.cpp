#include "ujoin/storage/heap_file.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cstdlib>

#include "ujoin/errors.hpp"

namespace ujoin {

HeapWriter::HeapWriter(BufferPool& pool, FileId file, PageNo first_page)
    : pool_(&pool), file_(file), first_page_(first_page) {}

Rid HeapWriter::append(Bytes record) {
  if (record.size() > SlottedPage::max_record_size(pool_->page_size())) {
    throw StorageError("record of " + std::to_string(record.size()) +
                       " bytes does not fit on a page");
  }
  if (!tail_) {
    const PageNo count = pool_->page_count(file_);
    if (count > first_page_) {
      tail_ = pool_->fetch(file_, count - 1);
      tail_.mark_dirty();
    }
  }
  if (tail_) {
    SlottedPage page(tail_.data());
    if (auto slot = page.insert(record)) {
      ++records_;
      return {tail_.page_no(), *slot};
    }
  }
  tail_ = pool_->append_page(file_);
  SlottedPage page(tail_.data());
  page.init(tail_.page_no());
  const auto slot = page.insert(record);
  ++records_;
  return {tail_.page_no(), *slot};
}

HeapCursor::HeapCursor(BufferPool& pool, FileId file, PageNo first_page)
    : pool_(&pool), file_(file), first_page_(first_page), pos_{first_page, 0} {}

bool HeapCursor::next() {
  for (;;) {
    if (!page_ || page_.page_no() != pos_.page) {
      page_.release();
      if (pos_.page >= pool_->page_count(file_)) return false;
      page_ = pool_->fetch(file_, pos_.page);
      page_view::validate(page_.data(), pos_.page);
    }
    const Bytes data = page_.data();
    if (pos_.slot < page_view::slot_count(data)) {
      record_ = page_view::record(data, pos_.slot);
      ++pos_.slot;
      return true;
    }
    if (pos_.page + 1 >= pool_->page_count(file_)) return false;
    pos_ = {pos_.page + 1, 0};
  }
}

void HeapCursor::seek(HeapPos pos) {
  const PageNo count = pool_->page_count(file_);
  if (pos.page < first_page_ || pos.page > count || (pos.page == count && pos.slot != 0)) {
    throw StorageError("invalid cursor position", pos.page);
  }
  if (pos.page < count) {
    if (!page_ || page_.page_no() != pos.page) {
      page_.release();
      page_ = pool_->fetch(file_, pos.page);
      page_view::validate(page_.data(), pos.page);
    }
    if (pos.slot > page_view::slot_count(page_.data())) {
      throw StorageError("invalid cursor slot " + std::to_string(pos.slot), pos.page);
    }
  }
  pos_ = pos;
}

void HeapCursor::move_back(std::uint64_t rows) {
  while (rows > 0) {
    if (pos_.slot >= rows) {
      pos_.slot = static_cast<SlotNo>(pos_.slot - rows);
      return;
    }
    rows -= pos_.slot;
    pos_.slot = 0;
    if (pos_.page == first_page_) return;
    --pos_.page;
    page_.release();
    page_ = pool_->fetch(file_, pos_.page);
    page_view::validate(page_.data(), pos_.page);
    pos_.slot = page_view::slot_count(page_.data());
  }
}

namespace {

std::filesystem::path default_spill_root() {
  if (const char* env = std::getenv("UJOIN_SPILL_DIR"); env != nullptr && *env != '\0') {
    return env;
  }
  return std::filesystem::temp_directory_path();
}

}  // namespace

SpillSpace::SpillSpace() : SpillSpace(default_spill_root()) {}

SpillSpace::SpillSpace(std::filesystem::path root) {
  static std::atomic<std::uint64_t> instance{0};
  dir_ = root / ("ujoin-spill-" + std::to_string(::getpid()) + "-" +
                 std::to_string(instance.fetch_add(1)));
  std::filesystem::create_directories(dir_);
}

SpillSpace::~SpillSpace() {
  std::error_code ec;
  std::filesystem::remove_all(dir_, ec);
}

std::filesystem::path SpillSpace::next_path(const std::string& tag) {
  return dir_ / (tag + "-" + std::to_string(counter_++) + ".tmp");
}

TempHeap::TempHeap(BufferPool& pool, SpillSpace& spill, const std::string& tag)
    : pool_(&pool), file_(pool.create_file(spill.next_path(tag))) {}

TempHeap::~TempHeap() { drop(); }

TempHeap::TempHeap(TempHeap&& other) noexcept
    : pool_(std::exchange(other.pool_, nullptr)), file_(other.file_) {}

TempHeap& TempHeap::operator=(TempHeap&& other) noexcept {
  if (this != &other) {
    drop();
    pool_ = std::exchange(other.pool_, nullptr);
    file_ = other.file_;
  }
  return *this;
}

void TempHeap::drop() noexcept {
  if (pool_ != nullptr) {
    try {
      pool_->drop_file(file_);
    } catch (...) {
    }
    pool_ = nullptr;
  }
}

std::size_t ExecContext::max_fan_in() const noexcept {
  const std::size_t by_memory = mem_pages > 1 ? mem_pages - 1 : 1;
  const std::size_t by_pool = pool.capacity() / 4;
  return std::max<std::size_t>(2, std::min(by_memory, by_pool));
}

}  // namespace ujoin
