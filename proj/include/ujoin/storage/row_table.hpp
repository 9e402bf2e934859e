#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <vector>

#include "ujoin/storage/page.hpp"

namespace ujoin {

/// In-memory chained hash table of byte rows keyed by a 64-bit integer. Rows are copied
/// into an arena; insertion order is kept within a bucket chain so probes are deterministic.
template <class Key>
class RowTable {
 public:
  explicit RowTable(std::size_t expected = 0) { reset(expected); }

  void reset(std::size_t expected) {
    const std::size_t want = std::bit_ceil(std::max<std::size_t>(16, expected + expected / 2));
    heads_.assign(want, kEnd);
    tails_.assign(want, kEnd);
    entries_.clear();
    arena_.clear();
    mask_ = want - 1;
  }

  void insert(Key key, Bytes row) {
    const auto at = static_cast<std::uint32_t>(entries_.size());
    entries_.push_back(Entry{key, arena_.size(), static_cast<std::uint32_t>(row.size()), kEnd});
    arena_.insert(arena_.end(), row.begin(), row.end());
    const std::size_t b = bucket(key);
    if (tails_[b] == kEnd) {
      heads_[b] = at;
    } else {
      entries_[tails_[b]].next = at;
    }
    tails_[b] = at;
  }

  /// Calls on_match(row) for every row with `key`; returns the bucket entries examined.
  template <class F>
  std::uint64_t probe(Key key, F&& on_match) const {
    std::uint64_t seen = 0;
    for (std::uint32_t i = heads_[bucket(key)]; i != kEnd; i = entries_[i].next) {
      ++seen;
      const Entry& e = entries_[i];
      if (e.key == key) on_match(Bytes(arena_.data() + e.offset, e.length));
    }
    return seen;
  }

  /// First row with `key`, or an empty span.
  Bytes find(Key key) const {
    for (std::uint32_t i = heads_[bucket(key)]; i != kEnd; i = entries_[i].next) {
      if (entries_[i].key == key) {
        return Bytes(arena_.data() + entries_[i].offset, entries_[i].length);
      }
    }
    return {};
  }

  bool contains(Key key) const {
    for (std::uint32_t i = heads_[bucket(key)]; i != kEnd; i = entries_[i].next) {
      if (entries_[i].key == key) return true;
    }
    return false;
  }

  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t arena_bytes() const noexcept { return arena_.size(); }

 private:
  static constexpr std::uint32_t kEnd = 0xFFFFFFFFu;

  struct Entry {
    Key key;
    std::uint64_t offset;
    std::uint32_t length;
    std::uint32_t next;
  };

  std::size_t bucket(Key key) const noexcept {
    // splitmix64 finalizer: consecutive keys spread over the buckets
    auto z = static_cast<std::uint64_t>(key) + 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return (z ^ (z >> 31)) & mask_;
  }

  std::vector<std::uint32_t> heads_;
  std::vector<std::uint32_t> tails_;
  std::vector<Entry> entries_;
  std::vector<std::byte> arena_;
  std::size_t mask_ = 0;
};

/// Partition number of a key for grace-style partitioning at a given recursion level.
inline std::size_t partition_of(std::uint64_t key, std::uint64_t level, std::size_t parts) noexcept {
  std::uint64_t z = key ^ (0xd6e8feb86659fd93ULL * (level + 1));
  z = (z ^ (z >> 32)) * 0xd6e8feb86659fd93ULL;
  z = (z ^ (z >> 32)) * 0xd6e8feb86659fd93ULL;
  z ^= z >> 32;
  return static_cast<std::size_t>(z % parts);
}

}  // namespace ujoin
