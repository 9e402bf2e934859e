#pragma once

// Factories of the concrete cursors; make_join() dispatches here.

#include "ujoin/joins/interval_index.hpp"
#include "ujoin/joins/join.hpp"
#include "ujoin/storage/tuple_codec.hpp"

namespace ujoin::detail {

std::unique_ptr<JoinCursor> nested_loop_join(ExecContext& ctx, const Relation& outer,
                                             const Relation& inner, JoinOptions opt);
std::unique_ptr<JoinCursor> base_join(ExecContext& ctx, const Relation& outer,
                                      const Relation& inner, JoinOptions opt);
std::unique_ptr<JoinCursor> sort_join(ExecContext& ctx, const Relation& outer,
                                      const Relation& inner, JoinOptions opt);
std::unique_ptr<JoinCursor> tuple_join_1(ExecContext& ctx, const Relation& outer,
                                         const Relation& inner, JoinOptions opt);
std::unique_ptr<JoinCursor> tuple_join_2(ExecContext& ctx, const Relation& outer,
                                         const Relation& inner, JoinOptions opt);
std::unique_ptr<JoinCursor> index_join(ExecContext& ctx, const Relation& outer,
                                       const Relation& inner, const IntervalIndex& index,
                                       JoinOptions opt);

inline void fill(ResultPair& out, const TupleBuffer& o, const TupleBuffer& i, bool materialize) {
  out.xid1 = o.xid;
  out.xid2 = i.xid;
  if (materialize) {
    out.outer = o.to_tuple();
    out.inner = i.to_tuple();
  } else {
    out.outer.reset();
    out.inner.reset();
  }
}

inline void fill(ResultPair& out, Bytes outer_rec, Bytes inner_rec, bool materialize) {
  out.xid1 = codec::decode_xid(outer_rec);
  out.xid2 = codec::decode_xid(inner_rec);
  if (materialize) {
    out.outer = codec::decode_tuple(outer_rec);
    out.inner = codec::decode_tuple(inner_rec);
  } else {
    out.outer.reset();
    out.inner.reset();
  }
}

}  // namespace ujoin::detail
