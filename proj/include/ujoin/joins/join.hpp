#pragma once

#include <array>
#include <chrono>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "ujoin/model.hpp"
#include "ujoin/storage/heap_file.hpp"
#include "ujoin/storage/relation.hpp"

namespace ujoin {

enum class JoinAlgorithm { NestedLoop, Base, Sort, Tuple1, Tuple2, Index };

inline constexpr std::array<JoinAlgorithm, 6> kAllAlgorithms = {
    JoinAlgorithm::NestedLoop, JoinAlgorithm::Base,   JoinAlgorithm::Sort,
    JoinAlgorithm::Tuple1,     JoinAlgorithm::Tuple2, JoinAlgorithm::Index};

/// Short names used on the command line and in CSV output: nl, base, sort, tuple1, tuple2, index.
std::string_view algorithm_name(JoinAlgorithm algo) noexcept;
std::optional<JoinAlgorithm> parse_algorithm(std::string_view name) noexcept;

struct JoinOptions {
  /// Decode both tuples into each ResultPair. Identifiers are always filled.
  bool materialize = false;
};

/// Pull-based join result stream. Work starts at the first next(); once it returns false it
/// keeps returning false.
class JoinCursor {
 public:
  virtual ~JoinCursor() = default;

  bool next(ResultPair& out) {
    if (done_) return false;
    if (!advance(out)) done_ = true;
    return !done_;
  }

  virtual JoinAlgorithm algorithm() const noexcept = 0;

 protected:
  virtual bool advance(ResultPair& out) = 0;

 private:
  bool done_ = false;
};

class IntervalIndex;

/// `index` must be an index over `inner` when algo is Index (std::invalid_argument otherwise).
std::unique_ptr<JoinCursor> make_join(JoinAlgorithm algo, ExecContext& ctx,
                                      const Relation& outer, const Relation& inner,
                                      const IntervalIndex* index = nullptr,
                                      JoinOptions options = {});

/// (elapsed_ms, tuples_emitted, comparisons) sample of a running join.
struct TracePoint {
  double elapsed_ms = 0;
  std::uint64_t emitted = 0;
  std::uint64_t comparisons = 0;
};

/// Metrics of one execution, deltas over the context's counters.
struct JoinRun {
  JoinAlgorithm algorithm = JoinAlgorithm::NestedLoop;
  double elapsed_ms = 0;
  std::uint64_t comparisons = 0;
  std::uint64_t page_reads = 0;
  std::uint64_t page_writes = 0;
  std::uint64_t result_count = 0;
  std::vector<TracePoint> trace;
};

inline constexpr std::uint64_t kAllResults = ~std::uint64_t{0};

struct PullOptions {
  std::uint64_t k = kAllResults;
  bool keep_results = true;
  bool trace = false;
  /// A trace point every `trace_every` results, plus the first and the last.
  std::uint64_t trace_every = 1024;
};

struct PullResult {
  std::vector<ResultPair> results;
  JoinRun run;
};

/// Pulls min(k, total) results and abandons the cursor. Counters in the run cover only the
/// work done here; the cursor is destroyed before the I/O counters are read so that any
/// spill cleanup is part of the run.
PullResult first_k(std::unique_ptr<JoinCursor> cursor, ExecContext& ctx, const PullOptions& opt);

inline PullResult first_k(std::unique_ptr<JoinCursor> cursor, ExecContext& ctx, std::uint64_t k) {
  PullOptions opt;
  opt.k = k;
  return first_k(std::move(cursor), ctx, opt);
}

}  // namespace ujoin
