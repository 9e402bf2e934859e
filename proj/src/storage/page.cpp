#include "ujoin/storage/page.hpp"

#include <algorithm>

#include "ujoin/errors.hpp"

namespace ujoin {

void SlottedPage::init(PageNo id) noexcept {
  std::fill(data_.begin(), data_.end(), std::byte{0});
  store_le<std::uint32_t>(data_.data(), id);
  store_le<std::uint16_t>(data_.data() + 4, 0);
  // free_end == page size is stored as 0 for 65536-byte pages; sizes are capped well below.
  store_le<std::uint16_t>(data_.data() + 6, static_cast<std::uint16_t>(data_.size()));
}

std::size_t SlottedPage::free_space() const noexcept {
  const std::size_t dir_end = kHeaderSize + kSlotSize * slot_count();
  const std::size_t end = free_end();
  return end > dir_end ? end - dir_end : 0;
}

std::optional<SlotNo> SlottedPage::insert(Bytes record) noexcept {
  if (record.size() + kSlotSize > free_space() || slot_count() == 0xFFFF) {
    return std::nullopt;
  }
  const SlotNo slot = slot_count();
  const auto offset = static_cast<std::uint16_t>(free_end() - record.size());
  std::memcpy(data_.data() + offset, record.data(), record.size());
  std::byte* entry = data_.data() + kHeaderSize + kSlotSize * slot;
  store_le<std::uint16_t>(entry, offset);
  store_le<std::uint16_t>(entry + 2, static_cast<std::uint16_t>(record.size()));
  store_le<std::uint16_t>(data_.data() + 4, static_cast<std::uint16_t>(slot + 1));
  store_le<std::uint16_t>(data_.data() + 6, offset);
  return slot;
}

namespace page_view {

void validate(Bytes page, PageNo expected_id) {
  const auto id = load_le<std::uint32_t>(page.data());
  if (id != expected_id) {
    throw StorageError("page id mismatch: header says " + std::to_string(id), expected_id);
  }
  const auto slots = load_le<std::uint16_t>(page.data() + 4);
  const auto free_end = load_le<std::uint16_t>(page.data() + 6);
  const std::size_t dir_end = SlottedPage::kHeaderSize + SlottedPage::kSlotSize * slots;
  if (dir_end > page.size() || free_end > page.size() || free_end < dir_end) {
    throw StorageError("corrupt slot directory", expected_id);
  }
}

SlotNo slot_count(Bytes page) noexcept { return load_le<std::uint16_t>(page.data() + 4); }

Bytes record(Bytes page, SlotNo slot) {
  if (slot >= slot_count(page)) {
    throw StorageError("slot " + std::to_string(slot) + " out of range",
                       load_le<std::uint32_t>(page.data()));
  }
  const std::byte* entry = page.data() + SlottedPage::kHeaderSize + SlottedPage::kSlotSize * slot;
  const auto offset = load_le<std::uint16_t>(entry);
  const auto length = load_le<std::uint16_t>(entry + 2);
  if (std::size_t{offset} + length > page.size() ||
      offset < SlottedPage::kHeaderSize) {
    throw StorageError("slot " + std::to_string(slot) + " out of bounds",
                       load_le<std::uint32_t>(page.data()));
  }
  return page.subspan(offset, length);
}

}  // namespace page_view

}  // namespace ujoin
