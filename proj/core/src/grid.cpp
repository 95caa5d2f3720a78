#include "shapelab/grid.hpp"

#include <cmath>
#include <cstring>
#include <queue>

namespace shapelab {

double unit_ball_volume(int dim) {
  switch (dim) {
    case 1:
      return 2.0;
    case 2:
      return kPi;
    case 3:
      return 4.0 * kPi / 3.0;
    default:
      throw PreconditionError("dimension must be 2 or 3");
  }
}

GridSpec::GridSpec(int dim_, int cells_, double h_, Point origin_)
    : dim(dim_), cells(cells_), h(h_), origin(origin_) {
  if (dim != 2 && dim != 3) throw PreconditionError("dimension must be 2 or 3");
  if (cells < 8) throw PreconditionError("cells_per_axis must be >= 8");
  if (!(h > 0.0)) throw PreconditionError("spacing must be positive");
}

GridSpec GridSpec::centered(int dim, int cells, double side) {
  Point o{0, 0, 0};
  for (int a = 0; a < dim; ++a) o[a] = -side / 2.0;
  return GridSpec(dim, cells, side / cells, o);
}

std::int64_t GridSpec::cell_count() const {
  std::int64_t n = 1;
  for (int a = 0; a < dim; ++a) n *= cells;
  return n;
}

double GridSpec::cell_volume() const {
  double v = 1.0;
  for (int a = 0; a < dim; ++a) v *= h;
  return v;
}

Point GridSpec::cell_center(const CellIndex& c) const {
  Point p{0, 0, 0};
  for (int a = 0; a < dim; ++a) p[a] = center(a, c[a]);
  return p;
}

bool GridSpec::contains(const Point& p) const {
  for (int a = 0; a < dim; ++a)
    if (p[a] < origin[a] || p[a] >= origin[a] + cells * h) return false;
  return true;
}

CellIndex GridSpec::cell_of(const Point& p) const {
  CellIndex c{0, 0, 0};
  for (int a = 0; a < dim; ++a)
    c[a] = static_cast<int>(std::floor((p[a] - origin[a]) / h));
  return c;
}

bool GridSpec::operator==(const GridSpec& o) const {
  if (dim != o.dim || cells != o.cells || h != o.h) return false;
  for (int a = 0; a < dim; ++a)
    if (origin[a] != o.origin[a]) return false;
  return true;
}

std::int64_t GridDomain::occupied_count() const {
  std::int64_t n = 0;
  for (auto b : mask) n += b != 0;
  return n;
}

Point GridDomain::centroid() const {
  Point s{0, 0, 0};
  std::int64_t n = 0;
  for_each_occupied(*this, [&](const CellIndex& c, std::int64_t) {
    for (int a = 0; a < spec.dim; ++a) s[a] += spec.center(a, c[a]);
    ++n;
  });
  if (n == 0) throw PreconditionError("centroid of empty domain");
  for (int a = 0; a < spec.dim; ++a) s[a] /= static_cast<double>(n);
  return s;
}

std::vector<CellIndex> GridDomain::boundary_cells() const {
  std::vector<CellIndex> out;
  for_each_occupied(*this, [&](const CellIndex& c, std::int64_t) {
    for (int a = 0; a < spec.dim; ++a) {
      for (int s = -1; s <= 1; s += 2) {
        CellIndex nb = c;
        nb[a] += s;
        if (!occupied(nb)) {
          out.push_back(c);
          return;
        }
      }
    }
  });
  return out;
}

int GridDomain::components(std::vector<int>* labels) const {
  const std::int64_t n = spec.cell_count();
  std::vector<int> lab(n, -1);
  int comp = 0;
  std::vector<std::int64_t> stack;
  for (std::int64_t seed = 0; seed < n; ++seed) {
    if (!mask[seed] || lab[seed] >= 0) continue;
    stack.push_back(seed);
    lab[seed] = comp;
    while (!stack.empty()) {
      const std::int64_t id = stack.back();
      stack.pop_back();
      const CellIndex c = spec.unflat(id);
      for (int a = 0; a < spec.dim; ++a) {
        for (int s = -1; s <= 1; s += 2) {
          CellIndex nb = c;
          nb[a] += s;
          if (!spec.in_box(nb)) continue;
          const std::int64_t nid = spec.flat(nb);
          if (mask[nid] && lab[nid] < 0) {
            lab[nid] = comp;
            stack.push_back(nid);
          }
        }
      }
    }
    ++comp;
  }
  if (labels) *labels = std::move(lab);
  return comp;
}

std::uint64_t GridDomain::content_hash() const {
  std::uint64_t h64 = 1469598103934665603ULL;
  auto mix = [&](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h64 ^= (v >> (8 * i)) & 0xff;
      h64 *= 1099511628211ULL;
    }
  };
  mix(static_cast<std::uint64_t>(spec.dim));
  mix(static_cast<std::uint64_t>(spec.cells));
  std::uint64_t bits;
  static_assert(sizeof(double) == 8);
  std::memcpy(&bits, &spec.h, 8);
  mix(bits);
  for (int a = 0; a < spec.dim; ++a) {
    std::memcpy(&bits, &spec.origin[a], 8);
    mix(bits);
  }
  for (auto b : mask) {
    h64 ^= b;
    h64 *= 1099511628211ULL;
  }
  return h64;
}

std::vector<Direction> Direction::sweep_order(int dim) {
  std::vector<Direction> dirs;
  for (int a = 0; a < dim; ++a) {
    dirs.push_back({a, -1});
    dirs.push_back({a, +1});
  }
  return dirs;
}

}  // namespace shapelab
