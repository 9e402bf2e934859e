#include <optional>

#include "cursors.hpp"
#include "ujoin/storage/external_sort.hpp"

namespace ujoin::detail {

namespace {

SortKey bounds_key(Bytes rec) {
  const TupleKey k = codec::decode_key(rec);
  return SortKey{k.lb, k.ub, k.xid};
}

// Follows the cursor listing step by step: the inner side is a spooled sorted stream that is
// moved back by `offset` rows before each outer tuple. Every inner row fetched counts as one
// comparison, including the row that ends the scan.
class SortJoinCursor final : public JoinCursor {
 public:
  SortJoinCursor(ExecContext& ctx, const Relation& outer, const Relation& inner, JoinOptions opt)
      : ctx_(ctx), outer_rel_(outer), inner_rel_(inner), opt_(opt) {}

  JoinAlgorithm algorithm() const noexcept override { return JoinAlgorithm::Sort; }

 protected:
  bool advance(ResultPair& out) override {
    if (!started_) start();
    for (;;) {
      if (!have_outer_) {
        if (!outer_->next()) return false;
        codec::decode_tuple(outer_->record(), rec1_);
        b1_ = rec1_.bounds();
        inner_->move_back(offset_);
        offset_ = 0;
        have_outer_ = true;
      }
      const bool found = inner_->fetch_next();
      ++offset_;
      if (!found) {
        have_outer_ = false;
        continue;
      }
      ++ctx_.comparisons.count;
      const TupleKey k2 = codec::decode_key(inner_->record());
      if (b1_.ub < k2.lb) {
        have_outer_ = false;
        continue;
      }
      if (k2.ub < b1_.lb && offset_ == 1) offset_ = 0;
      if (k2.ub >= b1_.lb) {
        codec::decode_tuple(inner_->record(), rec2_);
        if (intersects(rec1_.values(), rec2_.values())) {
          fill(out, rec1_, rec2_, opt_.materialize);
          return true;
        }
      }
    }
  }

 private:
  void start() {
    started_ = true;
    outer_ = sorted(outer_rel_, "sort-outer");
    inner_.emplace(ctx_, sorted(inner_rel_, "sort-inner"), "sort-spool");
  }

  std::unique_ptr<RecordStream> sorted(const Relation& rel, const char* tag) {
    ExternalSorter sorter(ctx_, &bounds_key, false, tag);
    RelationCursor cur = rel.scan();
    while (cur.next_record()) sorter.add(cur.record());
    return sorter.finish();
  }

  ExecContext& ctx_;
  const Relation& outer_rel_;
  const Relation& inner_rel_;
  JoinOptions opt_;
  bool started_ = false;
  std::unique_ptr<RecordStream> outer_;
  std::optional<Spool> inner_;
  TupleBuffer rec1_;
  TupleBuffer rec2_;
  Bounds b1_{0, 0};
  std::uint64_t offset_ = 0;
  bool have_outer_ = false;
};

}  // namespace

std::unique_ptr<JoinCursor> sort_join(ExecContext& ctx, const Relation& outer,
                                      const Relation& inner, JoinOptions opt) {
  return std::make_unique<SortJoinCursor>(ctx, outer, inner, opt);
}

}  // namespace ujoin::detail
