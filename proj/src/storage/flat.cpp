#include "ujoin/storage/flat.hpp"

#include <memory>
#include <vector>

#include "ujoin/storage/row_table.hpp"

namespace ujoin {

FlatRelation flatten(ExecContext& ctx, const Relation& rel, FlatKind kind) {
  FlatRelation out{TempHeap(ctx.pool, ctx.spill, kind == FlatKind::KeyOnly ? "flat1" : "flat2"),
                   kind, 0};
  HeapWriter writer = out.heap.writer();
  RelationCursor cur = rel.scan();
  ByteBuffer row;
  while (cur.next()) {
    const TupleBuffer& t = cur.tuple();
    for (Value v : t.alts) {
      row.clear();
      codec::put_u64(row, static_cast<std::uint64_t>(v));
      if (kind == FlatKind::KeyOnly) {
        codec::put_u64(row, t.xid);
      } else {
        const Bytes rec = cur.record();
        row.insert(row.end(), rec.begin(), rec.end());
      }
      writer.append(codec::as_bytes(row));
      ++out.rows;
    }
  }
  return out;
}

namespace {

constexpr std::uint64_t kMaxLevels = 3;

struct JoinState {
  ExecContext& ctx;
  const FlatPairSink& sink;
  HashJoinStats stats;
};

std::size_t expected_rows(const BufferPool& pool, PageNo pages) {
  return std::size_t{pages} * pool.page_size() / 24;
}

void probe_all(JoinState& st, FileId probe, const RowTable<Value>& table) {
  HeapCursor p(st.ctx.pool, probe, 0);
  while (p.next()) {
    const Bytes prow = p.record();
    st.ctx.comparisons.count += table.probe(flat_row::value(prow), [&](Bytes brow) {
      st.sink(prow, brow);
      ++st.stats.pairs;
    });
  }
}

void join_in_memory(JoinState& st, FileId probe, FileId build) {
  RowTable<Value> table(expected_rows(st.ctx.pool, st.ctx.pool.page_count(build)));
  HeapCursor b(st.ctx.pool, build, 0);
  while (b.next()) table.insert(flat_row::value(b.record()), b.record());
  probe_all(st, probe, table);
}

// Build side loaded one memory-sized block at a time, probe side rescanned per block.
void join_blocks(JoinState& st, FileId probe, FileId build) {
  ++st.stats.fallback_partitions;
  const std::size_t budget = st.ctx.mem_bytes();
  RowTable<Value> table(expected_rows(st.ctx.pool, static_cast<PageNo>(st.ctx.mem_pages)));
  HeapCursor b(st.ctx.pool, build, 0);
  bool more = b.next();
  while (more) {
    table.reset(expected_rows(st.ctx.pool, static_cast<PageNo>(st.ctx.mem_pages)));
    do {
      table.insert(flat_row::value(b.record()), b.record());
      more = b.next();
    } while (more && table.arena_bytes() < budget);
    probe_all(st, probe, table);
  }
}

std::vector<TempHeap> partition(ExecContext& ctx, FileId src, std::size_t parts,
                                std::uint64_t level, const char* tag) {
  std::vector<TempHeap> out;
  std::vector<HeapWriter> writers;
  out.reserve(parts);
  writers.reserve(parts);
  for (std::size_t i = 0; i < parts; ++i) {
    out.emplace_back(ctx.pool, ctx.spill, tag);
    writers.push_back(out.back().writer());
  }
  HeapCursor cur(ctx.pool, src, 0);
  while (cur.next()) {
    const Bytes row = cur.record();
    writers[partition_of(static_cast<std::uint64_t>(flat_row::value(row)), level, parts)]
        .append(row);
  }
  return out;
}

void join_level(JoinState& st, FileId probe, FileId build, std::uint64_t level) {
  BufferPool& pool = st.ctx.pool;
  const PageNo build_pages = pool.page_count(build);
  if (build_pages == 0 || pool.page_count(probe) == 0) return;
  if (std::size_t{build_pages} <= st.ctx.mem_pages) {
    join_in_memory(st, probe, build);
    return;
  }
  if (level >= kMaxLevels) {
    join_blocks(st, probe, build);
    return;
  }
  const std::size_t wanted = 2 * ((build_pages + st.ctx.mem_pages - 1) / st.ctx.mem_pages);
  const std::size_t parts = std::clamp<std::size_t>(wanted, 2, st.ctx.max_fan_in());
  st.stats.partitions += parts;
  std::vector<TempHeap> bparts = partition(st.ctx, build, parts, level, "hjb");
  std::vector<TempHeap> pparts = partition(st.ctx, probe, parts, level, "hjp");
  for (std::size_t i = 0; i < parts; ++i) {
    if (bparts[i].pages() >= build_pages) {
      // partitioning did not split the build side: a single hot value
      join_blocks(st, pparts[i].file(), bparts[i].file());
    } else {
      join_level(st, pparts[i].file(), bparts[i].file(), level + 1);
    }
    // release spill space as soon as a partition is done
    { TempHeap gone = std::move(bparts[i]); }
    { TempHeap gone = std::move(pparts[i]); }
  }
}

}  // namespace

HashJoinStats hash_join_flat(ExecContext& ctx, const FlatRelation& probe,
                             const FlatRelation& build, const FlatPairSink& sink) {
  JoinState st{ctx, sink, {}};
  join_level(st, probe.heap.file(), build.heap.file(), 0);
  return st.stats;
}

}  // namespace ujoin
