#include "ujoin/joins/join.hpp"

#include <stdexcept>

#include "cursors.hpp"

namespace ujoin {

namespace {
constexpr std::array<std::string_view, 6> kNames = {"nl", "base", "sort", "tuple1", "tuple2",
                                                     "index"};
}

std::string_view algorithm_name(JoinAlgorithm algo) noexcept {
  return kNames[static_cast<std::size_t>(algo)];
}

std::optional<JoinAlgorithm> parse_algorithm(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == name) return static_cast<JoinAlgorithm>(i);
  }
  return std::nullopt;
}

std::unique_ptr<JoinCursor> make_join(JoinAlgorithm algo, ExecContext& ctx,
                                      const Relation& outer, const Relation& inner,
                                      const IntervalIndex* index, JoinOptions options) {
  switch (algo) {
    case JoinAlgorithm::NestedLoop:
      return detail::nested_loop_join(ctx, outer, inner, options);
    case JoinAlgorithm::Base:
      return detail::base_join(ctx, outer, inner, options);
    case JoinAlgorithm::Sort:
      return detail::sort_join(ctx, outer, inner, options);
    case JoinAlgorithm::Tuple1:
      return detail::tuple_join_1(ctx, outer, inner, options);
    case JoinAlgorithm::Tuple2:
      return detail::tuple_join_2(ctx, outer, inner, options);
    case JoinAlgorithm::Index:
      if (index == nullptr) throw std::invalid_argument("index join needs an index on the inner relation");
      return detail::index_join(ctx, outer, inner, *index, options);
  }
  throw std::invalid_argument("unknown join algorithm");
}

PullResult first_k(std::unique_ptr<JoinCursor> cursor, ExecContext& ctx, const PullOptions& opt) {
  using Clock = std::chrono::steady_clock;
  PullResult res;
  res.run.algorithm = cursor->algorithm();
  const IoCounters io0 = ctx.pool.counters();
  const std::uint64_t cmp0 = ctx.comparisons.count;
  const auto t0 = Clock::now();
  auto ms_since = [&] {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  };

  std::uint64_t n = 0;
  ResultPair pair;
  while (n < opt.k && cursor->next(pair)) {
    ++n;
    if (opt.keep_results) res.results.push_back(pair);
    if (opt.trace && (n == 1 || n % opt.trace_every == 0)) {
      res.run.trace.push_back({ms_since(), n, ctx.comparisons.count - cmp0});
    }
  }
  cursor.reset();
  res.run.elapsed_ms = ms_since();
  res.run.result_count = n;
  res.run.comparisons = ctx.comparisons.count - cmp0;
  const IoCounters io = ctx.pool.counters() - io0;
  res.run.page_reads = io.page_reads;
  res.run.page_writes = io.page_writes;
  if (opt.trace && (res.run.trace.empty() || res.run.trace.back().emitted != n ||
                    res.run.trace.back().elapsed_ms < res.run.elapsed_ms)) {
    res.run.trace.push_back({res.run.elapsed_ms, n, res.run.comparisons});
  }
  return res;
}

}  // namespace ujoin
