#include <optional>

#include "cursors.hpp"
#include "ujoin/storage/flat.hpp"
#include "ujoin/storage/xid_lookup.hpp"

namespace ujoin::detail {

namespace {

// Flatten to (v, xid) rows, join on v, keep distinct (xid1, xid2), then join back to both
// relations on xid. Everything up to the recovery join runs before the first result.
class TupleJoin1Cursor final : public JoinCursor {
 public:
  TupleJoin1Cursor(ExecContext& ctx, const Relation& outer, const Relation& inner, JoinOptions opt)
      : ctx_(ctx), outer_(outer), inner_(inner), opt_(opt) {}

  JoinAlgorithm algorithm() const noexcept override { return JoinAlgorithm::Tuple1; }

 protected:
  bool advance(ResultPair& out) override {
    if (!lookup_) start();
    if (!lookup_->next()) return false;
    fill(out, lookup_->outer_record(), lookup_->inner_record(), opt_.materialize);
    return true;
  }

 private:
  void start() {
    ExternalSorter dedup = make_pair_dedup(ctx_, "t1-dedup");
    {
      FlatRelation f1 = flatten(ctx_, outer_, FlatKind::KeyOnly);
      FlatRelation f2 = flatten(ctx_, inner_, FlatKind::KeyOnly);
      ByteBuffer pair;
      hash_join_flat(ctx_, f1, f2, [&](Bytes r1, Bytes r2) {
        pair.clear();
        codec::put_u64(pair, flat_row::xid(r1));
        codec::put_u64(pair, flat_row::xid(r2));
        dedup.add(codec::as_bytes(pair));
      });
    }
    lookup_.emplace(ctx_, dedup.finish(), outer_, inner_);
  }

  ExecContext& ctx_;
  const Relation& outer_;
  const Relation& inner_;
  JoinOptions opt_;
  std::optional<XidLookupJoin> lookup_;
};

// Flatten with the whole tuple on every row; one join, then distinct over the pair identity.
// Pair record: [xid1][xid2][u32 outer length][outer record][inner record].
class TupleJoin2Cursor final : public JoinCursor {
 public:
  TupleJoin2Cursor(ExecContext& ctx, const Relation& outer, const Relation& inner, JoinOptions opt)
      : ctx_(ctx), outer_(outer), inner_(inner), opt_(opt) {}

  JoinAlgorithm algorithm() const noexcept override { return JoinAlgorithm::Tuple2; }

 protected:
  bool advance(ResultPair& out) override {
    if (!stream_) start();
    if (!stream_->next()) return false;
    const Bytes rec = stream_->record();
    const auto len1 = load_le<std::uint32_t>(rec.data() + 16);
    fill(out, rec.subspan(20, len1), rec.subspan(20 + len1), opt_.materialize);
    return true;
  }

 private:
  void start() {
    ExternalSorter dedup = make_pair_dedup(ctx_, "t2-dedup");
    {
      FlatRelation f1 = flatten(ctx_, outer_, FlatKind::Full);
      FlatRelation f2 = flatten(ctx_, inner_, FlatKind::Full);
      ByteBuffer pair;
      hash_join_flat(ctx_, f1, f2, [&](Bytes r1, Bytes r2) {
        const Bytes t1 = flat_row::tuple_record(r1);
        const Bytes t2 = flat_row::tuple_record(r2);
        pair.clear();
        codec::put_u64(pair, flat_row::xid(r1));
        codec::put_u64(pair, flat_row::xid(r2));
        pair.resize(20);
        store_le<std::uint32_t>(pair.data() + 16, static_cast<std::uint32_t>(t1.size()));
        pair.insert(pair.end(), t1.begin(), t1.end());
        pair.insert(pair.end(), t2.begin(), t2.end());
        dedup.add(codec::as_bytes(pair));
      });
    }
    stream_ = dedup.finish();
  }

  ExecContext& ctx_;
  const Relation& outer_;
  const Relation& inner_;
  JoinOptions opt_;
  std::unique_ptr<RecordStream> stream_;
};

}  // namespace

std::unique_ptr<JoinCursor> tuple_join_1(ExecContext& ctx, const Relation& outer,
                                         const Relation& inner, JoinOptions opt) {
  return std::make_unique<TupleJoin1Cursor>(ctx, outer, inner, opt);
}

std::unique_ptr<JoinCursor> tuple_join_2(ExecContext& ctx, const Relation& outer,
                                         const Relation& inner, JoinOptions opt) {
  return std::make_unique<TupleJoin2Cursor>(ctx, outer, inner, opt);
}

}  // namespace ujoin::detail
