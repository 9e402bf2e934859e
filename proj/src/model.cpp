#include "ujoin/model.hpp"

#include <algorithm>
#include <cassert>
#include <stdexcept>

namespace ujoin {

UncertainValue::UncertainValue(std::vector<Value> alts) : alts_(std::move(alts)) {
  if (alts_.empty()) {
    throw std::invalid_argument("uncertain value needs at least one alternative");
  }
  std::sort(alts_.begin(), alts_.end());
  alts_.erase(std::unique(alts_.begin(), alts_.end()), alts_.end());
}

UncertainValue::UncertainValue(std::initializer_list<Value> alts)
    : UncertainValue(std::vector<Value>(alts)) {}

UncertainValue UncertainValue::from_sorted(std::vector<Value> alts) {
  if (alts.empty()) {
    throw std::invalid_argument("uncertain value needs at least one alternative");
  }
  assert(std::adjacent_find(alts.begin(), alts.end(),
                            [](Value a, Value b) { return a >= b; }) == alts.end());
  UncertainValue u;
  u.alts_ = std::move(alts);
  return u;
}

bool UncertainValue::contains(Value v) const noexcept {
  return std::binary_search(alts_.begin(), alts_.end(), v);
}

bool intersects(std::span<const Value> a, std::span<const Value> b) noexcept {
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      return true;
    }
  }
  return false;
}

}  // namespace ujoin
