#include "ujoin/joins/interval_index.hpp"

#include <algorithm>
#include <cstring>

#include "ujoin/errors.hpp"

namespace ujoin {

namespace {

constexpr char kMagic[8] = {'U', 'I', 'D', 'X', '1', 0, 0, 0};
constexpr std::size_t kPageHeader = 8;  // u32 page id, u32 entry count
constexpr std::size_t kEntrySize = 40;

struct BuildEntry {
  IndexEntry e;
  Value max_ub;
};

void put_entry(std::byte* p, const IndexEntry& e, Value max_ub) {
  store_le<std::int64_t>(p, e.lb);
  store_le<std::int64_t>(p + 8, e.ub);
  store_le<std::uint64_t>(p + 16, e.xid);
  store_le<std::uint32_t>(p + 24, e.rid.page);
  store_le<std::uint16_t>(p + 28, e.rid.slot);
  store_le<std::uint16_t>(p + 30, 0);
  store_le<std::int64_t>(p + 32, max_ub);
}

void check_page(const PageRef& page, PageNo expected, std::size_t max_count) {
  const auto id = load_le<std::uint32_t>(page.data().data());
  const auto count = load_le<std::uint32_t>(page.data().data() + 4);
  if (id != expected || count > max_count) throw StorageError("corrupt index page", expected);
}

}  // namespace

IntervalIndex IntervalIndex::build(BufferPool& pool, const Relation& rel,
                                   const std::filesystem::path& path) {
  std::vector<IndexEntry> entries;
  entries.reserve(rel.tuple_count());
  {
    RelationCursor cur = rel.scan();
    while (cur.next()) {
      const Bounds b = cur.tuple().bounds();
      entries.push_back(IndexEntry{b.lb, b.ub, cur.tuple().xid, cur.rid()});
    }
  }
  std::sort(entries.begin(), entries.end(), [](const IndexEntry& a, const IndexEntry& b) {
    if (a.lb != b.lb) return a.lb < b.lb;
    if (a.ub != b.ub) return a.ub < b.ub;
    return a.xid < b.xid;
  });

  const std::size_t ps = pool.page_size();
  const std::size_t per_leaf = (ps - kPageHeader) / kEntrySize;
  const std::size_t per_fence = (ps - kPageHeader) / sizeof(Value);
  const std::size_t leaves = (entries.size() + per_leaf - 1) / per_leaf;
  const std::size_t fences = (leaves + per_fence - 1) / per_fence;

  const FileId file = pool.create_file(path);
  IntervalIndex idx(pool, file, path);
  idx.entries_ = entries.size();
  idx.checksum_ = rel.checksum();
  idx.tuple_count_ = rel.tuple_count();
  idx.leaf_pages_ = leaves;
  idx.fence_pages_ = fences;
  idx.per_leaf_ = static_cast<std::uint32_t>(per_leaf);

  {
    PageRef h = pool.append_page(file);
    std::byte* p = h.data().data();
    std::memcpy(p, kMagic, sizeof(kMagic));
    store_le<std::uint32_t>(p + 8, static_cast<std::uint32_t>(ps));
    store_le<std::uint32_t>(p + 12, idx.per_leaf_);
    store_le<std::uint64_t>(p + 16, idx.entries_);
    store_le<std::uint64_t>(p + 24, idx.checksum_);
    store_le<std::uint64_t>(p + 32, idx.tuple_count_);
    store_le<std::uint64_t>(p + 40, idx.leaf_pages_);
    store_le<std::uint64_t>(p + 48, idx.fence_pages_);
  }
  for (std::size_t f = 0; f < fences; ++f) {
    PageRef page = pool.append_page(file);
    std::byte* p = page.data().data();
    const std::size_t first = f * per_fence;
    const std::size_t n = std::min(per_fence, leaves - first);
    store_le<std::uint32_t>(p, page.page_no());
    store_le<std::uint32_t>(p + 4, static_cast<std::uint32_t>(n));
    for (std::size_t i = 0; i < n; ++i) {
      store_le<std::int64_t>(p + kPageHeader + i * sizeof(Value), entries[(first + i) * per_leaf].lb);
    }
  }
  Value running = 0;
  for (std::size_t l = 0; l < leaves; ++l) {
    PageRef page = pool.append_page(file);
    std::byte* p = page.data().data();
    const std::size_t first = l * per_leaf;
    const std::size_t n = std::min(per_leaf, entries.size() - first);
    store_le<std::uint32_t>(p, page.page_no());
    store_le<std::uint32_t>(p + 4, static_cast<std::uint32_t>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const IndexEntry& e = entries[first + i];
      running = (first + i == 0) ? e.ub : std::max(running, e.ub);
      put_entry(p + kPageHeader + i * kEntrySize, e, running);
    }
  }
  pool.flush_file(file);
  return idx;
}

IntervalIndex IntervalIndex::open(BufferPool& pool, const std::filesystem::path& path,
                                  const Relation& rel) {
  IntervalIndex idx(pool, pool.open_file(path), path);
  idx.read_header();
  idx.check_fresh(rel);
  return idx;
}

void IntervalIndex::read_header() {
  if (pool_->page_count(file_) == 0) throw StorageError("empty index file " + path_.string());
  PageRef h = pool_->fetch(file_, 0);
  const std::byte* p = h.data().data();
  if (std::memcmp(p, kMagic, sizeof(kMagic)) != 0) {
    throw StorageError("not an index file (bad magic)", 0);
  }
  if (load_le<std::uint32_t>(p + 8) != pool_->page_size()) {
    throw StorageError("index page size does not match the pool", 0);
  }
  per_leaf_ = load_le<std::uint32_t>(p + 12);
  entries_ = load_le<std::uint64_t>(p + 16);
  checksum_ = load_le<std::uint64_t>(p + 24);
  tuple_count_ = load_le<std::uint64_t>(p + 32);
  leaf_pages_ = load_le<std::uint64_t>(p + 40);
  fence_pages_ = load_le<std::uint64_t>(p + 48);
  if (per_leaf_ != (pool_->page_size() - kPageHeader) / kEntrySize ||
      1 + fence_pages_ + leaf_pages_ != pool_->page_count(file_)) {
    throw StorageError("index header inconsistent with file " + path_.string(), 0);
  }
}

IntervalIndex::IntervalIndex(IntervalIndex&& other) noexcept { *this = std::move(other); }

IntervalIndex& IntervalIndex::operator=(IntervalIndex&& other) noexcept {
  if (this != &other) {
    if (pool_ != nullptr) {
      try {
        pool_->close_file(file_);
      } catch (...) {
      }
    }
    pool_ = std::exchange(other.pool_, nullptr);
    file_ = other.file_;
    path_ = std::move(other.path_);
    entries_ = other.entries_;
    checksum_ = other.checksum_;
    tuple_count_ = other.tuple_count_;
    leaf_pages_ = other.leaf_pages_;
    fence_pages_ = other.fence_pages_;
    per_leaf_ = other.per_leaf_;
    fences_ = std::move(other.fences_);
    fences_loaded_ = other.fences_loaded_;
  }
  return *this;
}

IntervalIndex::~IntervalIndex() {
  if (pool_ != nullptr) {
    try {
      pool_->close_file(file_);
    } catch (...) {
    }
  }
}

void IntervalIndex::check_fresh(const Relation& rel) const {
  if (rel.checksum() != checksum_ || rel.tuple_count() != tuple_count_) {
    throw StaleIndexError("index " + path_.string() + " does not match relation " + rel.name());
  }
}

void IntervalIndex::load_fences() const {
  if (fences_loaded_) return;
  const std::size_t per_fence = (pool_->page_size() - kPageHeader) / sizeof(Value);
  fences_.clear();
  fences_.reserve(leaf_pages_);
  for (std::uint64_t f = 0; f < fence_pages_; ++f) {
    const auto no = static_cast<PageNo>(1 + f);
    PageRef page = pool_->fetch(file_, no);
    check_page(page, no, per_fence);
    const std::byte* p = page.data().data();
    const auto n = load_le<std::uint32_t>(p + 4);
    for (std::uint32_t i = 0; i < n; ++i) {
      fences_.push_back(load_le<std::int64_t>(p + kPageHeader + i * sizeof(Value)));
    }
  }
  if (fences_.size() != leaf_pages_) throw StorageError("index fence count mismatch");
  fences_loaded_ = true;
}

IndexEntry IntervalIndex::entry_at(const PageRef& leaf, std::size_t slot, Value* max_ub) const {
  const std::byte* p = leaf.data().data() + kPageHeader + slot * kEntrySize;
  IndexEntry e;
  e.lb = load_le<std::int64_t>(p);
  e.ub = load_le<std::int64_t>(p + 8);
  e.xid = load_le<std::uint64_t>(p + 16);
  e.rid.page = load_le<std::uint32_t>(p + 24);
  e.rid.slot = load_le<std::uint16_t>(p + 28);
  if (max_ub != nullptr) *max_ub = load_le<std::int64_t>(p + 32);
  return e;
}

void IntervalIndex::query(Bounds q, std::vector<IndexEntry>& out) const {
  out.clear();
  if (entries_ == 0) return;
  load_fences();
  const auto it = std::upper_bound(fences_.begin(), fences_.end(), q.ub);
  if (it == fences_.begin()) return;  // every lb is above q.ub
  auto leaf = static_cast<std::int64_t>(it - fences_.begin()) - 1;

  auto fetch_leaf = [&](std::int64_t l, std::uint32_t& count) {
    const auto no = static_cast<PageNo>(1 + fence_pages_ + static_cast<std::uint64_t>(l));
    PageRef page = pool_->fetch(file_, no);
    check_page(page, no, per_leaf_);
    count = load_le<std::uint32_t>(page.data().data() + 4);
    return page;
  };

  std::uint32_t count = 0;
  PageRef page = fetch_leaf(leaf, count);
  // last slot with lb <= q.ub
  std::size_t lo = 0;
  std::size_t hi = count;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (entry_at(page, mid, nullptr).lb <= q.ub) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  if (lo == 0) return;  // cannot happen: the fence guarantees slot 0 qualifies
  auto slot = static_cast<std::int64_t>(lo) - 1;

  for (;;) {
    Value max_ub = 0;
    const IndexEntry e = entry_at(page, static_cast<std::size_t>(slot), &max_ub);
    if (max_ub < q.lb) break;
    if (e.ub >= q.lb) out.push_back(e);
    if (--slot < 0) {
      if (--leaf < 0) break;
      page.release();
      page = fetch_leaf(leaf, count);
      slot = static_cast<std::int64_t>(count) - 1;
    }
  }
  std::reverse(out.begin(), out.end());
}

}  // namespace ujoin
