#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>

namespace ujoin {

using PageNo = std::uint32_t;
using SlotNo = std::uint16_t;
using Bytes = std::span<const std::byte>;
using MutableBytes = std::span<std::byte>;

inline constexpr std::size_t kDefaultPageSize = 8192;
inline constexpr std::size_t kMinPageSize = 256;
inline constexpr std::size_t kMaxPageSize = 32768;

/// Physical address of a record.
struct Rid {
  PageNo page = 0;
  SlotNo slot = 0;

  friend auto operator<=>(const Rid&, const Rid&) = default;
};

/// Little-endian fixed-width helpers.
template <class T>
inline T load_le(const std::byte* p) noexcept {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

template <class T>
inline void store_le(std::byte* p, T v) noexcept {
  std::memcpy(p, &v, sizeof(T));
}

/// View over a slotted page.
///
/// Layout: [u32 page_id][u16 slot_count][u16 free_end][slot directory: {u16 off, u16 len}...]
/// followed by free space; records are packed downward from the end of the page.
class SlottedPage {
 public:
  static constexpr std::size_t kHeaderSize = 8;
  static constexpr std::size_t kSlotSize = 4;

  explicit SlottedPage(MutableBytes data) noexcept : data_(data) {}

  /// Zero-fills the page and writes an empty header.
  void init(PageNo id) noexcept;

  PageNo page_id() const noexcept { return load_le<std::uint32_t>(data_.data()); }
  SlotNo slot_count() const noexcept { return load_le<std::uint16_t>(data_.data() + 4); }

  /// Bytes still available for one more record, its slot entry included.
  std::size_t free_space() const noexcept;

  /// Appends a record; nullopt when it does not fit.
  std::optional<SlotNo> insert(Bytes record) noexcept;

  /// Largest record a page of `page_size` can ever hold.
  static std::size_t max_record_size(std::size_t page_size) noexcept {
    return page_size - kHeaderSize - kSlotSize;
  }

 private:
  std::uint16_t free_end() const noexcept { return load_le<std::uint16_t>(data_.data() + 6); }

  MutableBytes data_;
};

/// Read-only accessors that validate the slot directory.
namespace page_view {

/// Throws StorageError when the header is inconsistent with `expected_id` or the page size.
void validate(Bytes page, PageNo expected_id);

SlotNo slot_count(Bytes page) noexcept;

/// Record bytes of `slot`; throws StorageError on an out-of-bounds slot entry.
Bytes record(Bytes page, SlotNo slot);

}  // namespace page_view

}  // namespace ujoin
