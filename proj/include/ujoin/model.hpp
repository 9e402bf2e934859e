#pragma once

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ujoin {

/// Domain value of the join attribute. Decimal inputs are scaled to integers at load time.
using Value = std::int64_t;

/// Unique record identifier within a relation.
using Xid = std::uint64_t;

/// A non-empty set of alternative values, stored sorted and without duplicates.
class UncertainValue {
 public:
  /// Normalizes (sort + dedup). Throws std::invalid_argument when `alts` is empty.
  explicit UncertainValue(std::vector<Value> alts);
  UncertainValue(std::initializer_list<Value> alts);

  static UncertainValue certain(Value v) { return UncertainValue({v}); }

  /// Takes ownership of an already strictly increasing sequence (e.g. decoded from a page).
  static UncertainValue from_sorted(std::vector<Value> alts);

  std::span<const Value> alternatives() const noexcept { return alts_; }
  std::size_t cardinality() const noexcept { return alts_.size(); }
  bool is_certain() const noexcept { return alts_.size() == 1; }
  Value min() const noexcept { return alts_.front(); }
  Value max() const noexcept { return alts_.back(); }
  bool contains(Value v) const noexcept;

  friend bool operator==(const UncertainValue&, const UncertainValue&) = default;

 private:
  UncertainValue() = default;
  std::vector<Value> alts_;
};

struct Bounds {
  Value lb;
  Value ub;

  friend bool operator==(const Bounds&, const Bounds&) = default;
};

/// Counts tuple-pair examinations performed by one join execution.
struct ComparisonCounter {
  std::uint64_t count = 0;
};

/// Two-pointer merge over sorted alternatives; true iff the sets share a value.
bool intersects(std::span<const Value> a, std::span<const Value> b) noexcept;

inline bool intersects(const UncertainValue& a, const UncertainValue& b) noexcept {
  return intersects(a.alternatives(), b.alternatives());
}

/// Counting variant: one call is one comparison.
inline bool intersects(std::span<const Value> a, std::span<const Value> b,
                       ComparisonCounter& counter) noexcept {
  ++counter.count;
  return intersects(a, b);
}

inline bool intersects(const UncertainValue& a, const UncertainValue& b,
                       ComparisonCounter& counter) noexcept {
  return intersects(a.alternatives(), b.alternatives(), counter);
}

/// Bounds of a sorted, non-empty alternative sequence.
inline Bounds bounds(std::span<const Value> sorted_alts) noexcept {
  return {sorted_alts.front(), sorted_alts.back()};
}

inline Bounds bounds(const UncertainValue& u) noexcept { return {u.min(), u.max()}; }

inline bool ranges_overlap(Bounds a, Bounds b) noexcept {
  return a.lb <= b.ub && b.lb <= a.ub;
}

/// An uncertain tuple. The payload stands for every non-join attribute and is opaque.
struct UTuple {
  Xid xid = 0;
  UncertainValue val = UncertainValue::certain(0);
  std::string payload;

  Bounds bounds() const noexcept { return ujoin::bounds(val); }

  friend bool operator==(const UTuple&, const UTuple&) = default;
};

/// One equi-join result: (outer, inner) identifiers and, when materialized, both tuples.
struct ResultPair {
  Xid xid1 = 0;
  Xid xid2 = 0;
  std::optional<UTuple> outer;
  std::optional<UTuple> inner;
};

}  // namespace ujoin
