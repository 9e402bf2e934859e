#include <vector>

#include "cursors.hpp"

namespace ujoin::detail {

namespace {

// Probe the inner relation's interval index with each outer tuple's bounds, then fetch and
// verify every candidate. One verification is one comparison.
class IndexJoinCursor final : public JoinCursor {
 public:
  IndexJoinCursor(ExecContext& ctx, const Relation& outer, const Relation& inner,
                  const IntervalIndex& index, JoinOptions opt)
      : ctx_(ctx), outer_(outer.scan()), inner_(inner), index_(index), opt_(opt) {
    index.check_fresh(inner);
  }

  JoinAlgorithm algorithm() const noexcept override { return JoinAlgorithm::Index; }

 protected:
  bool advance(ResultPair& out) override {
    for (;;) {
      if (!have_outer_) {
        if (!outer_.next()) return false;
        index_.query(outer_.tuple().bounds(), candidates_);
        next_ = 0;
        have_outer_ = true;
      }
      while (next_ < candidates_.size()) {
        inner_.fetch(candidates_[next_++].rid, inner_buf_);
        if (intersects(outer_.tuple().values(), inner_buf_.values(), ctx_.comparisons)) {
          fill(out, outer_.tuple(), inner_buf_, opt_.materialize);
          return true;
        }
      }
      have_outer_ = false;
    }
  }

 private:
  ExecContext& ctx_;
  RelationCursor outer_;
  const Relation& inner_;
  const IntervalIndex& index_;
  JoinOptions opt_;
  std::vector<IndexEntry> candidates_;
  std::size_t next_ = 0;
  TupleBuffer inner_buf_;
  bool have_outer_ = false;
};

}  // namespace

std::unique_ptr<JoinCursor> index_join(ExecContext& ctx, const Relation& outer,
                                       const Relation& inner, const IntervalIndex& index,
                                       JoinOptions opt) {
  return std::make_unique<IndexJoinCursor>(ctx, outer, inner, index, opt);
}

}  // namespace ujoin::detail
