#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <string>

namespace oilgame {

inline constexpr int kBoardSize = 32;
inline constexpr int kCellCount = kBoardSize * kBoardSize;

/// Dense board-shaped grid. Indexed (row, col) = (y, x).
template <typename Scalar>
using Grid = Eigen::Matrix<Scalar, kBoardSize, kBoardSize>;

using RealGrid = Grid<double>;

struct CellCoord {
  int x = 0;
  int y = 0;

  constexpr bool in_bounds() const noexcept { return x >= 0 && x < kBoardSize && y >= 0 && y < kBoardSize; }
  constexpr int index() const noexcept { return y * kBoardSize + x; }
  static constexpr CellCoord from_index(int i) noexcept { return {i % kBoardSize, i / kBoardSize}; }

  friend constexpr auto operator<=>(const CellCoord&, const CellCoord&) = default;
};

inline double euclidean(const CellCoord& a, const CellCoord& b) noexcept {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

template <typename Derived>
auto at(const Eigen::MatrixBase<Derived>& grid, const CellCoord& c) {
  return grid(c.y, c.x);
}

inline std::string to_string(const CellCoord& c) { return "(" + std::to_string(c.x) + "," + std::to_string(c.y) + ")"; }

}  // namespace oilgame

template <>
struct std::hash<oilgame::CellCoord> {
  std::size_t operator()(const oilgame::CellCoord& c) const noexcept { return static_cast<std::size_t>(c.index()); }
};
