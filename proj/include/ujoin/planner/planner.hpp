#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ujoin/joins/join.hpp"
#include "ujoin/storage/relation.hpp"

namespace ujoin {

struct RelationStats {
  std::uint64_t n = 0;
  double avg_card = 1.0;
  std::uint32_t max_card = 1;
  /// Fraction (0..1) of tuples with more than one alternative.
  double pct_uncertain = 0.0;
  /// Mean number of partner tuples whose range overlaps a tuple's range.
  double avg_overlap = 1.0;
  double flat_rows = 0.0;
  bool has_index = false;
  /// Heap pages and mean encoded tuple size, for the I/O terms.
  std::uint64_t pages = 0;
  double avg_record_bytes = 0.0;
};

/// One scan of `rel`; avg_overlap is measured against `partner` when given, else against
/// `rel` itself.
RelationStats collect_stats(const Relation& rel, const Relation* partner = nullptr,
                            bool has_index = false);

/// Execution environment the estimates assume.
struct PlannerEnv {
  std::size_t page_size = kDefaultPageSize;
  std::size_t pool_pages = 4096;
  std::size_t mem_pages = 16384;
};

/// Per-algorithm time coefficients: ms = io * page_ios + cmp * comparisons + row * rows.
struct CostCoefficients {
  double io = 0;
  double cmp = 0;
  double row = 0;
};

struct Calibration {
  std::array<CostCoefficients, 6> coef{};
  bool calibrated = false;
  std::string profile = "default";
  std::map<std::string, std::string> extra;

  /// Shipping defaults; `calibrated` is false.
  static Calibration defaults();
  /// key=value text; '#' starts a comment. Unknown keys are kept in `extra`.
  static Calibration load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  CostCoefficients& at(JoinAlgorithm a) { return coef[static_cast<std::size_t>(a)]; }
  const CostCoefficients& at(JoinAlgorithm a) const { return coef[static_cast<std::size_t>(a)]; }
};

struct CostEstimate {
  JoinAlgorithm algorithm = JoinAlgorithm::NestedLoop;
  double est_page_ios = 0;
  double est_comparisons = 0;
  /// Tuples or flat rows handled outside the comparison loop (sorting, hashing, probing).
  double est_rows = 0;
  double est_ms = 0;
  bool calibrated = false;
};

/// `k` is the number of results requested (kAllResults for the whole join).
CostEstimate estimate(JoinAlgorithm algo, const RelationStats& s1, const RelationStats& s2,
                      std::uint64_t k, const Calibration& cal = Calibration::defaults(),
                      const PlannerEnv& env = {});

/// Cheapest estimated time over the available algorithms (Index only with an index on the
/// inner relation). Ties go to Index, Sort, Tuple1, Tuple2, Base, NestedLoop in that order;
/// NestedLoop is only returned when nothing else is available.
JoinAlgorithm choose_algorithm(const RelationStats& s1, const RelationStats& s2, std::uint64_t k,
                               const Calibration& cal = Calibration::defaults(),
                               const PlannerEnv& env = {});

/// One measured run used to fit the coefficients.
struct CalibrationSample {
  JoinAlgorithm algorithm;
  RelationStats s1;
  RelationStats s2;
  std::uint64_t k;
  double elapsed_ms;
};

/// Fits every algorithm that has samples by non-negative least squares on relative error;
/// algorithms without samples keep their current coefficients.
Calibration fit_calibration(const std::vector<CalibrationSample>& samples,
                            const Calibration& start = Calibration::defaults(),
                            const PlannerEnv& env = {});

}  // namespace ujoin
