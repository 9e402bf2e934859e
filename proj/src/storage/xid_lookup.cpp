#include "ujoin/storage/xid_lookup.hpp"

#include <algorithm>
#include <string>

#include "ujoin/errors.hpp"

namespace ujoin {

namespace pair_record {

SortKey key(Bytes rec) noexcept {
  // flip the sign bit so signed comparison matches unsigned order
  constexpr std::uint64_t kFlip = 1ULL << 63;
  return SortKey{static_cast<std::int64_t>(xid1(rec) ^ kFlip),
                 static_cast<std::int64_t>(xid2(rec) ^ kFlip), 0};
}

}  // namespace pair_record

namespace {

[[noreturn]] void missing(Xid xid, const Relation& rel) {
  throw IntegrityError("xid " + std::to_string(xid) + " not found in relation " + rel.name());
}

void load_table(RowTable<Xid>& table, const Relation& rel) {
  table.reset(rel.tuple_count());
  RelationCursor cur = rel.scan();
  while (cur.next_record()) table.insert(codec::decode_xid(cur.record()), cur.record());
}

void load_table(RowTable<Xid>& table, BufferPool& pool, FileId file) {
  table.reset(std::size_t{pool.page_count(file)} * pool.page_size() / 32);
  HeapCursor cur(pool, file, 0);
  while (cur.next()) table.insert(codec::decode_xid(cur.record()), cur.record());
}

std::vector<TempHeap> make_parts(ExecContext& ctx, std::size_t parts, const std::string& tag) {
  std::vector<TempHeap> out;
  out.reserve(parts);
  for (std::size_t i = 0; i < parts; ++i) out.emplace_back(ctx.pool, ctx.spill, tag);
  return out;
}

std::vector<HeapWriter> writers_for(const std::vector<TempHeap>& heaps) {
  std::vector<HeapWriter> w;
  w.reserve(heaps.size());
  for (const TempHeap& h : heaps) w.push_back(h.writer());
  return w;
}

std::vector<TempHeap> partition_relation(ExecContext& ctx, const Relation& rel,
                                         std::size_t parts, const std::string& tag) {
  std::vector<TempHeap> out = make_parts(ctx, parts, tag);
  std::vector<HeapWriter> w = writers_for(out);
  RelationCursor cur = rel.scan();
  while (cur.next_record()) {
    w[partition_of(codec::decode_xid(cur.record()), 7, parts)].append(cur.record());
  }
  return out;
}

}  // namespace

XidLookupJoin::XidLookupJoin(ExecContext& ctx, std::unique_ptr<RecordStream> pairs,
                             const Relation& outer, const Relation& inner)
    : ctx_(&ctx), pairs_(std::move(pairs)), outer_rel_(&outer), inner_rel_(&inner) {}

XidLookupJoin::~XidLookupJoin() = default;

void XidLookupJoin::prepare() {
  prepared_ = true;
  const std::uint64_t pages = outer_rel_->data_pages() + inner_rel_->data_pages();
  if (pages <= ctx_->mem_pages) {
    load_table(outer_table_, *outer_rel_);
    load_table(inner_table_, *inner_rel_);
    return;
  }
  partitioned_ = true;
  prepare_partitioned();
}

void XidLookupJoin::prepare_partitioned() {
  const std::uint64_t pages = std::max(outer_rel_->data_pages(), inner_rel_->data_pages());
  const std::uint64_t half = std::max<std::uint64_t>(1, ctx_->mem_pages / 2);
  parts_ = std::clamp<std::size_t>(static_cast<std::size_t>((pages + half - 1) / half) + 1, 2,
                                   ctx_->max_fan_in());

  // Stage 1: pairs and outer relation on xid1.
  std::vector<TempHeap> pair_parts = make_parts(*ctx_, parts_, "xidp");
  {
    std::vector<HeapWriter> w = writers_for(pair_parts);
    while (pairs_->next()) {
      const Bytes rec = pairs_->record();
      w[partition_of(pair_record::xid1(rec), 7, parts_)].append(rec.first(16));
    }
  }
  std::vector<TempHeap> outer_parts = partition_relation(*ctx_, *outer_rel_, parts_, "xido");
  staged_ = make_parts(*ctx_, parts_, "xids");
  {
    std::vector<HeapWriter> w = writers_for(staged_);
    ByteBuffer row;
    for (std::size_t i = 0; i < parts_; ++i) {
      load_table(outer_table_, ctx_->pool, outer_parts[i].file());
      HeapCursor cur(ctx_->pool, pair_parts[i].file(), 0);
      while (cur.next()) {
        const Xid x1 = pair_record::xid1(cur.record());
        const Xid x2 = pair_record::xid2(cur.record());
        const Bytes rec1 = outer_table_.find(x1);
        if (rec1.empty()) missing(x1, *outer_rel_);
        row.clear();
        codec::put_u64(row, x2);
        row.insert(row.end(), rec1.begin(), rec1.end());
        w[partition_of(x2, 7, parts_)].append(codec::as_bytes(row));
      }
      { TempHeap gone = std::move(pair_parts[i]); }
      { TempHeap gone = std::move(outer_parts[i]); }
    }
    outer_table_.reset(0);
  }
  // Stage 2 input: inner relation on xid2.
  inner_parts_ = partition_relation(*ctx_, *inner_rel_, parts_, "xidi");
  current_ = 0;
  open_partition(0);
}

bool XidLookupJoin::open_partition(std::size_t part) {
  staged_cursor_.reset();
  if (part >= parts_) return false;
  load_table(inner_table_, ctx_->pool, inner_parts_[part].file());
  staged_cursor_.emplace(ctx_->pool, staged_[part].file(), 0);
  return true;
}

bool XidLookupJoin::next_partitioned() {
  for (;;) {
    if (!staged_cursor_) return false;
    if (staged_cursor_->next()) {
      const Bytes row = staged_cursor_->record();
      const Xid x2 = load_le<std::uint64_t>(row.data());
      inner_ = inner_table_.find(x2);
      if (inner_.empty()) missing(x2, *inner_rel_);
      outer_ = row.subspan(8);
      return true;
    }
    staged_cursor_.reset();
    { TempHeap gone = std::move(staged_[current_]); }
    { TempHeap gone = std::move(inner_parts_[current_]); }
    ++current_;
    open_partition(current_);
  }
}

bool XidLookupJoin::next() {
  if (done_) return false;
  if (!prepared_) prepare();
  const bool ok = partitioned_ ? next_partitioned() : [&] {
    if (!pairs_->next()) return false;
    const Bytes rec = pairs_->record();
    const Xid x1 = pair_record::xid1(rec);
    const Xid x2 = pair_record::xid2(rec);
    if (!have_x1_ || x1 != last_x1_) {
      outer_ = outer_table_.find(x1);
      if (outer_.empty()) missing(x1, *outer_rel_);
      last_x1_ = x1;
      have_x1_ = true;
    }
    inner_ = inner_table_.find(x2);
    if (inner_.empty()) missing(x2, *inner_rel_);
    return true;
  }();
  if (!ok) done_ = true;
  return ok;
}

}  // namespace ujoin
