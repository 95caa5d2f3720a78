#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "shapelab/error.hpp"

namespace shapelab {

using Point = std::array<double, 3>;  // third component unused when dim == 2
using CellIndex = std::array<int, 3>;

inline constexpr double kPi = 3.14159265358979323846;

/// Measure of the unit ball in R^N.
double unit_ball_volume(int dim);

// Uniform Cartesian grid: a cube of side cells*h with lower corner `origin`.
// Cell (i,j,k) has its center at origin + (i+1/2, j+1/2, k+1/2)*h.
struct GridSpec {
  int dim = 2;  // 2 or 3
  int cells = 64;
  double h = 1.0;
  Point origin{0.0, 0.0, 0.0};

  GridSpec() = default;
  GridSpec(int dim_, int cells_, double h_, Point origin_);

  /// Centered cube of side `side`.
  static GridSpec centered(int dim, int cells, double side);

  std::int64_t cell_count() const;
  double box_side() const { return cells * h; }
  double cell_volume() const;
  double center(int axis, int i) const { return origin[axis] + (i + 0.5) * h; }
  Point cell_center(const CellIndex& c) const;
  bool contains(const Point& p) const;
  /// Index of the cell containing p (valid only if contains(p)).
  CellIndex cell_of(const Point& p) const;

  std::int64_t flat(const CellIndex& c) const {
    std::int64_t id = c[0];
    for (int a = 1; a < dim; ++a) id = id * cells + c[a];
    return id;
  }
  CellIndex unflat(std::int64_t id) const {
    CellIndex c{0, 0, 0};
    for (int a = dim - 1; a >= 0; --a) {
      c[a] = static_cast<int>(id % cells);
      id /= cells;
    }
    return c;
  }
  bool in_box(const CellIndex& c) const {
    for (int a = 0; a < dim; ++a)
      if (c[a] < 0 || c[a] >= cells) return false;
    return true;
  }

  bool operator==(const GridSpec& o) const;
};

// Binary occupancy mask: cell occupied <=> cell center lies in the domain.
struct GridDomain {
  GridSpec spec;
  std::vector<std::uint8_t> mask;

  GridDomain() = default;
  explicit GridDomain(const GridSpec& s) : spec(s), mask(s.cell_count(), 0) {}

  bool occupied(const CellIndex& c) const {
    return spec.in_box(c) && mask[spec.flat(c)];
  }
  std::int64_t occupied_count() const;
  bool empty() const { return occupied_count() == 0; }

  /// Centroid of occupied cell centers.
  Point centroid() const;
  /// Occupied cells with at least one unoccupied (or out-of-box) face neighbor.
  std::vector<CellIndex> boundary_cells() const;
  /// Face-connected component labels (-1 outside); also returns the count.
  int components(std::vector<int>* labels = nullptr) const;
  bool connected() const { return components() == 1; }

  /// FNV-1a over the mask bytes and grid parameters; used as a cache key.
  std::uint64_t content_hash() const;
};

/// Visit occupied cells in flat (row-major) order.
template <typename F>
void for_each_occupied(const GridDomain& d, F&& f) {
  const auto n = d.spec.cell_count();
  for (std::int64_t id = 0; id < n; ++id)
    if (d.mask[id]) f(d.spec.unflat(id), id);
}

// Signed coordinate direction (axis e_a, sign +-1).
struct Direction {
  int axis = 0;
  int sign = -1;  // -1: tail toward decreasing coordinate

  /// Axis sweep order for the tail cuts: -e1, +e1, -e2, +e2, ...
  static std::vector<Direction> sweep_order(int dim);
};

}  // namespace shapelab
