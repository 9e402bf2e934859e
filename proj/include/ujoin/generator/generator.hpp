#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ujoin/model.hpp"
#include "ujoin/storage/buffer_pool.hpp"
#include "ujoin/storage/relation.hpp"

namespace ujoin {

/// Synthetic dataset parameters. Tuple i carries i*c + j*s for j < c_i, where c_i = c for a
/// seeded p% of the tuples and 1 otherwise.
struct GenSpec {
  std::uint64_t n = 1000;
  std::uint32_t c = 3;
  /// Percentage of uncertain tuples, 0..100.
  double p = 100.0;
  std::int64_t s = 1;
  std::uint64_t seed = 1;
  std::uint32_t payload_bytes = 16;

  /// Throws SpecError with the reason.
  void validate() const;
  /// Stable across runs and platforms; names cached datasets.
  std::uint64_t hash() const noexcept;
  std::string describe() const;
};

/// Smallest s' >= s with gcd(s', c) == 1 (s itself when c == 1).
std::int64_t next_coprime(std::int64_t s, std::uint32_t c);

/// The tuples of one side in xid order (xid == i), before heap placement.
std::vector<UTuple> generate_tuples(const GenSpec& spec, int side = 0);

struct DatasetPair {
  Relation r1;
  Relation r2;
  /// Pairs a correct self-join must return.
  std::uint64_t intended_results = 0;
};

/// Writes `<dir>/<tag>-r1.rel` and `-r2.rel` with both sides sharing the value assignment;
/// heap placement is shuffled independently per side.
DatasetPair generate(BufferPool& pool, const GenSpec& spec, const std::filesystem::path& dir);

/// Reopens a pair produced by generate() when both files exist and are readable.
std::optional<DatasetPair> open_generated(BufferPool& pool, const GenSpec& spec,
                                          const std::filesystem::path& dir);

/// Author/institution-shaped many-to-one workload: every author lists 1 + Binomial(extra,
/// prob) distinct candidate institutions; institutions are certain with value == xid.
struct AuthorSpec {
  std::uint64_t authors = 70'000;
  std::uint64_t institutions = 600;
  std::uint32_t extra = 9;
  double prob = 0.3;
  std::uint64_t seed = 7;
  std::uint32_t payload_bytes = 16;

  void validate() const;
  std::uint64_t hash() const noexcept;
};

/// r1 = authors (outer), r2 = institutions.
DatasetPair generate_authors(BufferPool& pool, const AuthorSpec& spec,
                             const std::filesystem::path& dir);

/// Mean over `a` of the number of ranges in `b` overlapping it; O((|a|+|b|) log |b|).
double measure_spreading(std::span<const Bounds> a, std::span<const Bounds> b);
double measure_spreading(const Relation& r1, const Relation& r2);
std::vector<Bounds> relation_bounds(const Relation& rel);

struct CsvOptions {
  bool header = false;
  /// Number xids 1, 2, ... in file order instead of reading the digits of the id column.
  bool sequential_xid = false;
  /// Decimal digits kept when scaling values to integers ("224.480" with 3 -> 224480).
  int decimal_places = 0;
  std::string name;
};

struct CsvLoad {
  Relation relation;
  std::vector<std::string> warnings;
};

/// Rows `id,value,payload...` where value is an integer or `{v1|v2|...}`. The payload is the
/// rest of the line. Throws ParseError with the line number on a malformed row.
CsvLoad load_csv(BufferPool& pool, const std::filesystem::path& csv,
                 const std::filesystem::path& out, const CsvOptions& opt = {});

}  // namespace ujoin
