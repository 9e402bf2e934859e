#include <vector>

#include "cursors.hpp"

namespace ujoin::detail {

namespace {

// Tuple at a time: the inner relation is rewound for every outer tuple.
class NestedLoopCursor final : public JoinCursor {
 public:
  NestedLoopCursor(ExecContext& ctx, const Relation& outer, const Relation& inner, JoinOptions opt)
      : ctx_(ctx), outer_(outer.scan()), inner_(inner.scan()), opt_(opt) {}

  JoinAlgorithm algorithm() const noexcept override { return JoinAlgorithm::NestedLoop; }

 protected:
  bool advance(ResultPair& out) override {
    for (;;) {
      if (!have_outer_) {
        if (!outer_.next()) return false;
        inner_.rescan_from(inner_.start());
        have_outer_ = true;
      }
      if (!inner_.next()) {
        have_outer_ = false;
        continue;
      }
      if (intersects(outer_.tuple().values(), inner_.tuple().values(), ctx_.comparisons)) {
        fill(out, outer_.tuple(), inner_.tuple(), opt_.materialize);
        return true;
      }
    }
  }

 private:
  ExecContext& ctx_;
  RelationCursor outer_;
  RelationCursor inner_;
  JoinOptions opt_;
  bool have_outer_ = false;
};

// Block nested loop: a memory-sized block of outer tuples per inner pass. The predicate is
// treated as opaque, so every block tuple meets every inner tuple.
class BaseJoinCursor final : public JoinCursor {
 public:
  BaseJoinCursor(ExecContext& ctx, const Relation& outer, const Relation& inner, JoinOptions opt)
      : ctx_(ctx), outer_(outer.scan()), inner_(inner.scan()), opt_(opt) {}

  JoinAlgorithm algorithm() const noexcept override { return JoinAlgorithm::Base; }

 protected:
  bool advance(ResultPair& out) override {
    for (;;) {
      if (!block_loaded_) {
        if (!load_block()) return false;
        inner_.rescan_from(inner_.start());
        inner_valid_ = false;
      }
      if (!inner_valid_) {
        if (!inner_.next()) {
          block_loaded_ = false;
          continue;
        }
        inner_valid_ = true;
        pos_ = 0;
      }
      while (pos_ < used_) {
        const TupleBuffer& o = block_[pos_++];
        if (intersects(o.values(), inner_.tuple().values(), ctx_.comparisons)) {
          fill(out, o, inner_.tuple(), opt_.materialize);
          return true;
        }
      }
      inner_valid_ = false;
    }
  }

 private:
  bool load_block() {
    used_ = 0;
    if (outer_done_) return false;
    const std::size_t budget = ctx_.mem_bytes();
    std::size_t bytes = 0;
    while (bytes < budget) {
      if (!outer_.next()) {
        outer_done_ = true;
        break;
      }
      if (used_ == block_.size()) block_.emplace_back();
      block_[used_++] = outer_.tuple();
      bytes += outer_.record().size() + 4;
    }
    block_loaded_ = used_ > 0;
    return block_loaded_;
  }

  ExecContext& ctx_;
  RelationCursor outer_;
  RelationCursor inner_;
  JoinOptions opt_;
  std::vector<TupleBuffer> block_;
  std::size_t used_ = 0;
  std::size_t pos_ = 0;
  bool block_loaded_ = false;
  bool inner_valid_ = false;
  bool outer_done_ = false;
};

}  // namespace

std::unique_ptr<JoinCursor> nested_loop_join(ExecContext& ctx, const Relation& outer,
                                             const Relation& inner, JoinOptions opt) {
  return std::make_unique<NestedLoopCursor>(ctx, outer, inner, opt);
}

std::unique_ptr<JoinCursor> base_join(ExecContext& ctx, const Relation& outer,
                                      const Relation& inner, JoinOptions opt) {
  return std::make_unique<BaseJoinCursor>(ctx, outer, inner, opt);
}

}  // namespace ujoin::detail
