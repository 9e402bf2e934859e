#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ujoin/generator/generator.hpp"
#include "ujoin/joins/interval_index.hpp"
#include "ujoin/joins/join.hpp"
#include "ujoin/planner/planner.hpp"

namespace ujoin {

enum class Family { Cardinality, TopK, Spreading, TupleCardinality, Percentage, QueryTrace };

std::string_view family_name(Family f) noexcept;
std::optional<Family> parse_family(std::string_view name) noexcept;

/// One experiment family over a parameter grid. Every grid axis holds at least one value;
/// the grid is their cartesian product.
struct ExperimentSpec {
  Family family = Family::Cardinality;
  std::vector<std::uint64_t> n{1000};
  std::vector<std::uint32_t> c{3};
  std::vector<double> p{100.0};
  std::vector<std::int64_t> s{1};
  /// kAllResults for full runs.
  std::vector<std::uint64_t> k{kAllResults};
  std::vector<JoinAlgorithm> algorithms;
  int repetitions = 1;
  bool cold_cache = true;
  std::uint64_t seed = 1;
  std::uint32_t payload_bytes = 16;
  /// Author workload of the query_trace family; n, c, p and s are ignored there.
  AuthorSpec authors;
  /// Write a trace file per run (always on for query_trace).
  bool trace = false;
  std::uint64_t trace_every = 1024;

  std::size_t page_size = kDefaultPageSize;
  std::size_t pool_pages = 4096;
  std::size_t mem_pages = 16384;
  /// Dataset cache; `<out_dir>/data` when empty.
  std::filesystem::path data_dir;

  /// Family defaults: grid, algorithms and trace flag.
  static ExperimentSpec defaults(Family f);
  /// Throws SpecError.
  void validate() const;
  /// Replaces one axis from "key=v1,v2,..." or "key=a..b" (integers). Keys: n, c, p, s, k
  /// ("all" allowed), authors, institutions. Throws SpecError.
  void set_grid(std::string_view assignment);
};

struct RunOptions {
  std::uint64_t k = kAllResults;
  /// Evict the pool and reset its counters first.
  bool cold = true;
  bool trace = false;
  std::uint64_t trace_every = 1024;
  std::size_t mem_pages = 16384;
};

/// One execution of `algo` on (outer, inner), results counted but not kept.
JoinRun measure_join(BufferPool& pool, SpillSpace& spill, JoinAlgorithm algo,
                     const Relation& outer, const Relation& inner, const IntervalIndex* index,
                     const RunOptions& opt);

/// One CSV row of a run.
struct BenchRow {
  Family family = Family::Cardinality;
  JoinAlgorithm algorithm = JoinAlgorithm::NestedLoop;
  std::uint64_t n = 0;
  std::uint32_t c = 0;
  double p = 0;
  std::int64_t s = 0;
  std::uint64_t k = kAllResults;
  int rep = 0;
  double elapsed_ms = 0;
  std::uint64_t comparisons = 0;
  std::uint64_t page_reads = 0;
  std::uint64_t page_writes = 0;
  std::uint64_t result_count = 0;
};

inline constexpr std::string_view kResultHeader =
    "family,algo,n,c,p,s,k,rep,elapsed_ms,comparisons,page_reads,page_writes,result_count";

std::string format_row(const BenchRow& row);
/// Throws SchemaError carrying `line` on a malformed row.
BenchRow parse_row(std::string_view text, std::size_t line);

struct BenchSummary {
  std::vector<BenchRow> rows;
  /// Runs skipped because the manifest recorded them as done.
  std::size_t resumed = 0;
  /// Human-readable result-count mismatches; a non-empty list is a failed experiment.
  std::vector<std::string> mismatches;
  /// Spreading values moved to the next value coprime to c.
  std::vector<std::string> adjustments;
};

/// Runs the grid strictly sequentially. Appends to `<out_dir>/results.csv` and records each
/// finished run in `<out_dir>/manifest.txt` so an interrupted experiment resumes where it
/// stopped. Trace files go to `<out_dir>/traces/`, index build costs to
/// `<out_dir>/index_build.csv`. Progress lines go to `log` when given.
BenchSummary run_experiment(const ExperimentSpec& spec, const std::filesystem::path& out_dir,
                            std::ostream* log = nullptr);

/// Writes time_vs_n, io_vs_n, time_vs_s, io_vs_s, time_vs_c, io_vs_c, time_vs_p, topk and
/// trace CSVs (medians over repetitions, one series per algorithm) into `out_dir`. Traces are
/// read from `traces/` next to `results_csv`. Returns the files written. Throws SchemaError.
std::vector<std::filesystem::path> emit_plot_data(const std::filesystem::path& results_csv,
                                                  const std::filesystem::path& out_dir);

/// Grid used to fit the planner constants; smaller than the acceptance grid.
struct CalibrationPlan {
  std::vector<std::uint64_t> n{20'000, 50'000};
  std::vector<std::uint32_t> c{1, 2, 3, 5, 10};
  std::vector<std::int64_t> s{1, 2, 5, 8};
  std::uint64_t topk_n = 50'000;
  int repetitions = 3;
  std::uint64_t seed = 1;
  std::size_t page_size = kDefaultPageSize;
  std::size_t pool_pages = 4096;
  std::size_t mem_pages = 16384;
  std::string profile = "default";
};

/// Measures the plan (minimum time over repetitions, cold cache) and fits the planner.
Calibration calibrate(const CalibrationPlan& plan, const std::filesystem::path& work_dir,
                      std::ostream* log = nullptr);

}  // namespace ujoin
