#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <functional>
#include <string>

namespace msbin {

/// Ordered 3-band selection (roles R, G, B). Indices are 1-based and may repeat.
struct BandTriple {
  int r = 1;
  int g = 1;
  int b = 1;

  std::array<int, 3> bands() const { return {r, g, b}; }
  bool valid_for(int band_count) const {
    return r >= 1 && g >= 1 && b >= 1 && r <= band_count && g <= band_count && b <= band_count;
  }
  std::string str() const {
    return "(" + std::to_string(r) + "," + std::to_string(g) + "," + std::to_string(b) + ")";
  }

  friend auto operator<=>(const BandTriple&, const BandTriple&) = default;
};

/// Typical expert: red 650 nm, green 550 nm, blue 450 nm.
inline constexpr BandTriple kRgbTriple{4, 3, 2};

/// Dense index in [0, n^3) in lexicographic order.
inline std::size_t triple_index(const BandTriple& t, int band_count) {
  const auto n = static_cast<std::size_t>(band_count);
  return (static_cast<std::size_t>(t.r - 1) * n + static_cast<std::size_t>(t.g - 1)) * n +
         static_cast<std::size_t>(t.b - 1);
}

inline BandTriple triple_from_index(std::size_t index, int band_count) {
  const auto n = static_cast<std::size_t>(band_count);
  return BandTriple{static_cast<int>(index / (n * n)) + 1, static_cast<int>((index / n) % n) + 1,
                    static_cast<int>(index % n) + 1};
}

}  // namespace msbin

template <>
struct std::hash<msbin::BandTriple> {
  std::size_t operator()(const msbin::BandTriple& t) const noexcept {
    return (static_cast<std::size_t>(t.r) * 1315423911u) ^ (static_cast<std::size_t>(t.g) << 16) ^
           static_cast<std::size_t>(t.b);
  }
};
