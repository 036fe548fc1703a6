#pragma once

#include <compare>
#include <functional>

namespace uavsim {

/// Index into the station directory: terrestrial stations first, the HAPS last.
struct StationId {
  int value = 0;
  auto operator<=>(const StationId&) const = default;
};

}  // namespace uavsim

template <>
struct std::hash<uavsim::StationId> {
  std::size_t operator()(const uavsim::StationId& id) const noexcept { return std::hash<int>{}(id.value); }
};
