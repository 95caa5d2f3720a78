#include "shapelab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace shapelab {

namespace {

double sq(double x) { return x * x; }

double dist2(const Point& a, const Point& b, int dim) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) s += sq(a[i] - b[i]);
  return s;
}

}  // namespace

double StarBoundary::coefficient(int mode, bool sine) const {
  const auto& v = sine ? sin_coeff : cos_coeff;
  if (mode < 0 || mode >= static_cast<int>(v.size())) return 0.0;
  return v[mode];
}

void StarBoundary::set_coefficient(int mode, bool sine, double value) {
  auto& v = sine ? sin_coeff : cos_coeff;
  if (mode >= static_cast<int>(v.size())) v.resize(mode + 1, 0.0);
  v[mode] = value;
}

double StarBoundary::phi(double theta) const {
  double s = cos_coeff.empty() ? 0.0 : cos_coeff[0];
  for (std::size_t k = 1; k < cos_coeff.size(); ++k)
    s += cos_coeff[k] * std::cos(k * theta);
  for (std::size_t k = 1; k < sin_coeff.size(); ++k)
    s += sin_coeff[k] * std::sin(k * theta);
  return s;
}

double StarBoundary::min_radius() const {
  const int samples = std::max(64, 16 * std::max(1, max_mode()));
  double m = std::numeric_limits<double>::max();
  for (int i = 0; i < samples; ++i)
    m = std::min(m, radius(2.0 * kPi * i / samples));
  return m;
}

double StarBoundary::max_radius() const {
  const int samples = std::max(64, 16 * std::max(1, max_mode()));
  double m = 0.0;
  for (int i = 0; i < samples; ++i)
    m = std::max(m, radius(2.0 * kPi * i / samples));
  return m;
}

double StarBoundary::analytic_area() const {
  // (1/2) int (R(1+phi))^2 = (R^2/2) [2pi (1+a0)^2 + pi sum_k (a_k^2+b_k^2)]
  const double a0 = cos_coeff.empty() ? 0.0 : cos_coeff[0];
  double modes = 0.0;
  for (std::size_t k = 1; k < cos_coeff.size(); ++k) modes += sq(cos_coeff[k]);
  for (std::size_t k = 1; k < sin_coeff.size(); ++k) modes += sq(sin_coeff[k]);
  return 0.5 * sq(base_radius) * (2.0 * kPi * sq(1.0 + a0) + kPi * modes);
}

void StarBoundary::scale_to_area(double target) {
  if (!(target > 0.0)) throw PreconditionError("target area must be positive");
  const double a = analytic_area();
  base_radius *= std::sqrt(target / a);
}

BallSpec BallSpec::with_measure(int dim, double m, Point center) {
  if (!(m > 0.0)) throw PreconditionError("ball measure must be positive");
  return BallSpec{center, std::pow(m / unit_ball_volume(dim), 1.0 / dim)};
}

double BallSpec::measure(int dim) const {
  return unit_ball_volume(dim) * std::pow(radius, dim);
}

double NecklaceSpec::ball_radius(int dim) const {
  return std::pow(total_measure / (ball_count * unit_ball_volume(dim)),
                  1.0 / dim);
}

GridDomain rasterize_star(const StarBoundary& boundary, const GridSpec& spec) {
  if (spec.dim != 2)
    throw PreconditionError("star boundaries are two-dimensional");
  if (boundary.min_radius() <= 0.0)
    throw PreconditionError("star radius function is not positive");
  const double rmax = boundary.max_radius();
  for (int a = 0; a < 2; ++a) {
    if (boundary.center[a] - rmax < spec.origin[a] + spec.h ||
        boundary.center[a] + rmax > spec.origin[a] + spec.box_side() - spec.h)
      throw BoundsError("star boundary exceeds the grid box");
  }
  GridDomain dom(spec);
  for (int i = 0; i < spec.cells; ++i) {
    const double x = spec.center(0, i) - boundary.center[0];
    for (int j = 0; j < spec.cells; ++j) {
      const double y = spec.center(1, j) - boundary.center[1];
      const double r = boundary.radius(std::atan2(y, x));
      if (x * x + y * y < r * r) dom.mask[spec.flat({i, j, 0})] = 1;
    }
  }
  return dom;
}

GridDomain make_ball(const GridSpec& spec, const BallSpec& ball) {
  if (!(ball.radius > 0.0)) throw PreconditionError("ball radius must be positive");
  for (int a = 0; a < spec.dim; ++a) {
    if (ball.center[a] - ball.radius < spec.origin[a] ||
        ball.center[a] + ball.radius > spec.origin[a] + spec.box_side())
      throw BoundsError("ball exceeds the grid box");
  }
  GridDomain dom(spec);
  const double r2 = sq(ball.radius);
  const std::int64_t n = spec.cell_count();
  for (std::int64_t id = 0; id < n; ++id) {
    const Point p = spec.cell_center(spec.unflat(id));
    if (dist2(p, ball.center, spec.dim) < r2) dom.mask[id] = 1;
  }
  return dom;
}

GridDomain make_necklace(const GridSpec& spec, const NecklaceSpec& neck) {
  if (neck.ball_count < 1) throw PreconditionError("ball_count must be >= 1");
  const double r = neck.ball_radius(spec.dim);
  if (neck.ball_count > 1 && neck.gap < 2.0 * r)
    throw PreconditionError("necklace balls overlap (gap < 2r)");
  const int k = neck.ball_count;
  const double span = (k - 1) * neck.gap;
  std::vector<Point> centers(k, neck.center);
  for (int i = 0; i < k; ++i) centers[i][0] += -span / 2.0 + i * neck.gap;

  GridDomain dom(spec);
  for (int i = 0; i < k; ++i) {
    BallSpec b{centers[i], r};
    GridDomain one = make_ball(spec, b);
    for (std::int64_t id = 0; id < spec.cell_count(); ++id)
      dom.mask[id] |= one.mask[id];
  }
  // Tangency bridges one cell: near-tangent neighbours get the cell holding
  // the kiss point, otherwise the strict center rule can leave a gap.
  for (int i = 0; i + 1 < k; ++i) {
    if (neck.gap <= 2.0 * r + spec.h) {
      Point mid = centers[i];
      mid[0] = 0.5 * (centers[i][0] + centers[i + 1][0]);
      if (spec.contains(mid)) dom.mask[spec.flat(spec.cell_of(mid))] = 1;
    }
  }
  return dom;
}

GridDomain make_dumbbell_tail(const GridSpec& spec, const DumbbellSpec& p) {
  Point cl = p.center, cr = p.center;
  cl[0] -= p.lobe_separation / 2.0;
  cr[0] += p.lobe_separation / 2.0;
  const double tail_start = cl[0] - p.lobe_radius_left - p.tail_length;
  if (tail_start < spec.origin[0] ||
      cr[0] + p.lobe_radius_right > spec.origin[0] + spec.box_side())
    throw BoundsError("dumbbell exceeds the grid box");

  GridDomain dom(spec);
  const std::int64_t n = spec.cell_count();
  for (std::int64_t id = 0; id < n; ++id) {
    const CellIndex c = spec.unflat(id);
    const Point q = spec.cell_center(c);
    bool in = dist2(q, cl, spec.dim) < sq(p.lobe_radius_left) ||
              dist2(q, cr, spec.dim) < sq(p.lobe_radius_right);
    if (!in && q[0] >= cl[0] && q[0] <= cr[0]) {
      double rr = 0.0;
      for (int a = 1; a < spec.dim; ++a) rr += sq(q[a] - p.center[a]);
      in = rr < sq(p.neck_half_width);
    }
    if (!in && p.tail_length > 0.0 && q[0] >= tail_start && q[0] <= cl[0]) {
      double rr = 0.0;
      for (int a = 1; a < spec.dim; ++a) rr += sq(q[a] - p.center[a]);
      in = rr < sq(p.tail_half_width);
    }
    if (in) dom.mask[id] = 1;
  }
  return dom;
}

double measure(const GridDomain& dom) {
  return static_cast<double>(dom.occupied_count()) * dom.spec.cell_volume();
}

GridDomain rescale_to_measure(const GridDomain& dom, double target) {
  if (!(target > 0.0)) throw PreconditionError("target measure must be positive");
  const double m = measure(dom);
  if (!(m > 0.0)) throw PreconditionError("cannot rescale an empty domain");
  const double t = std::pow(target / m, 1.0 / dom.spec.dim);
  const Point c = dom.centroid();

  // Conservative fit check: the scaled occupied bounding box must stay inside.
  if (t > 1.0) {
    for (int a = 0; a < dom.spec.dim; ++a) {
      double lo = std::numeric_limits<double>::max(), hi = -lo;
      for_each_occupied(dom, [&](const CellIndex& ci, std::int64_t) {
        const double x = dom.spec.center(a, ci[a]);
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      });
      const double slo = c[a] + t * (lo - c[a]) - dom.spec.h;
      const double shi = c[a] + t * (hi - c[a]) + dom.spec.h;
      if (slo < dom.spec.origin[a] ||
          shi > dom.spec.origin[a] + dom.spec.box_side())
        throw BoundsError("rescaled domain exceeds the grid box");
    }
  }

  GridDomain out(dom.spec);
  const std::int64_t n = dom.spec.cell_count();
  for (std::int64_t id = 0; id < n; ++id) {
    Point p = dom.spec.cell_center(dom.spec.unflat(id));
    Point src;
    for (int a = 0; a < dom.spec.dim; ++a) src[a] = c[a] + (p[a] - c[a]) / t;
    src[2] = 0.0;
    if (dom.spec.dim == 2) src[2] = dom.spec.origin[2];
    if (!dom.spec.contains(src)) continue;
    if (dom.mask[dom.spec.flat(dom.spec.cell_of(src))]) out.mask[id] = 1;
  }
  return out;
}

double symmetric_difference_measure(const GridDomain& a, const GridDomain& b) {
  if (!(a.spec == b.spec))
    throw SpecMismatchError("symmetric difference needs a common grid");
  std::int64_t count = 0;
  for (std::int64_t id = 0; id < a.spec.cell_count(); ++id)
    count += (a.mask[id] != 0) != (b.mask[id] != 0);
  return static_cast<double>(count) * a.spec.cell_volume();
}

double intersection_measure(const GridDomain& a, const GridDomain& b) {
  if (!(a.spec == b.spec))
    throw SpecMismatchError("intersection needs a common grid");
  std::int64_t count = 0;
  for (std::int64_t id = 0; id < a.spec.cell_count(); ++id)
    count += a.mask[id] && b.mask[id];
  return static_cast<double>(count) * a.spec.cell_volume();
}

namespace {

// |Omega /\ B_r(x)| / |Omega| with B rasterized by the center rule.
double symdiff_with_ball(const GridDomain& dom, const Point& x, double r,
                         std::int64_t dom_count) {
  const GridSpec& g = dom.spec;
  const double r2 = sq(r);
  std::int64_t ball_count = 0, inter = 0;
  CellIndex lo, hi;
  for (int a = 0; a < g.dim; ++a) {
    lo[a] = std::max(0, static_cast<int>(std::floor((x[a] - r - g.origin[a]) / g.h)));
    hi[a] = std::min(g.cells - 1,
                     static_cast<int>(std::floor((x[a] + r - g.origin[a]) / g.h)));
  }
  CellIndex c{0, 0, 0};
  const int kmin = (g.dim == 3) ? lo[2] : 0;
  const int kmax = (g.dim == 3) ? hi[2] : 0;
  for (c[0] = lo[0]; c[0] <= hi[0]; ++c[0]) {
    const double dx = g.center(0, c[0]) - x[0];
    for (c[1] = lo[1]; c[1] <= hi[1]; ++c[1]) {
      const double dy = g.center(1, c[1]) - x[1];
      for (c[2] = kmin; c[2] <= kmax; ++c[2]) {
        double d2 = dx * dx + dy * dy;
        if (g.dim == 3) d2 += sq(g.center(2, c[2]) - x[2]);
        if (d2 < r2) {
          ++ball_count;
          if (dom.mask[g.flat(c)]) ++inter;
        }
      }
    }
  }
  const double xor_count =
      static_cast<double>(dom_count + ball_count - 2 * inter);
  return xor_count / static_cast<double>(dom_count);
}

}  // namespace

AsymmetryResult fraenkel_asymmetry(const GridDomain& dom) {
  const double m = measure(dom);
  if (!(m > 0.0)) throw PreconditionError("asymmetry of empty domain");
  const std::int64_t cnt = dom.occupied_count();
  const double r = std::pow(m / unit_ball_volume(dom.spec.dim),
                            1.0 / dom.spec.dim);
  const Point c0 = dom.centroid();

  Point best = c0;
  double bestv = symdiff_with_ball(dom, c0, r, cnt);
  // coarse scan over the occupied bounding box (handles split shapes whose
  // centroid sits in empty space)
  Point lo{0, 0, 0}, hi{0, 0, 0};
  for (int a = 0; a < dom.spec.dim; ++a) {
    lo[a] = std::numeric_limits<double>::max();
    hi[a] = -lo[a];
  }
  for_each_occupied(dom, [&](const CellIndex& ci, std::int64_t) {
    for (int a = 0; a < dom.spec.dim; ++a) {
      const double x = dom.spec.center(a, ci[a]);
      lo[a] = std::min(lo[a], x);
      hi[a] = std::max(hi[a], x);
    }
  });
  const int half = 3;
  CellIndex off{0, 0, 0};
  const int kmin = (dom.spec.dim == 3) ? -half : 0;
  const int kmax = (dom.spec.dim == 3) ? half : 0;
  for (off[0] = -half; off[0] <= half; ++off[0])
    for (off[1] = -half; off[1] <= half; ++off[1])
      for (off[2] = kmin; off[2] <= kmax; ++off[2]) {
        Point x = c0;
        for (int a = 0; a < dom.spec.dim; ++a) {
          const double mid = 0.5 * (lo[a] + hi[a]);
          const double span = 0.5 * (hi[a] - lo[a]);
          x[a] = mid + off[a] * span / half;
        }
        const double v = symdiff_with_ball(dom, x, r, cnt);
        if (v < bestv) {
          bestv = v;
          best = x;
        }
      }
  // compass pattern search, step halved down to h/4
  double step = std::max(dom.spec.h * 4.0, r / 16.0);
  const double step_min = dom.spec.h / 4.0;
  while (step >= step_min * (1.0 - 1e-12)) {
    bool improved = false;
    for (int a = 0; a < dom.spec.dim; ++a) {
      for (int s = -1; s <= 1; s += 2) {
        Point x = best;
        x[a] += s * step;
        const double v = symdiff_with_ball(dom, x, r, cnt);
        if (v < bestv - 1e-15) {
          bestv = v;
          best = x;
          improved = true;
        }
      }
    }
    if (!improved) step /= 2.0;
  }
  return {bestv, BallSpec{best, r}};
}

AsymmetryResult fraenkel_asymmetry_scan(const GridDomain& dom,
                                        double window_radius, double step) {
  const double m = measure(dom);
  if (!(m > 0.0)) throw PreconditionError("asymmetry of empty domain");
  const std::int64_t cnt = dom.occupied_count();
  const double r = std::pow(m / unit_ball_volume(dom.spec.dim),
                            1.0 / dom.spec.dim);
  const Point c0 = dom.centroid();
  const int half = static_cast<int>(std::floor(window_radius / step));
  Point best = c0;
  double bestv = symdiff_with_ball(dom, c0, r, cnt);
  CellIndex off{0, 0, 0};
  const int kmin = (dom.spec.dim == 3) ? -half : 0;
  const int kmax = (dom.spec.dim == 3) ? half : 0;
  for (off[0] = -half; off[0] <= half; ++off[0])
    for (off[1] = -half; off[1] <= half; ++off[1])
      for (off[2] = kmin; off[2] <= kmax; ++off[2]) {
        Point x = c0;
        for (int a = 0; a < dom.spec.dim; ++a) x[a] += off[a] * step;
        const double v = symdiff_with_ball(dom, x, r, cnt);
        if (v < bestv) {
          bestv = v;
          best = x;
        }
      }
  return {bestv, BallSpec{best, r}};
}

double hausdorff_boundary_distance(const GridDomain& a, const GridDomain& b) {
  if (a.empty() || b.empty())
    throw PreconditionError("hausdorff distance needs non-empty domains");
  const auto ba = a.boundary_cells();
  const auto bb = b.boundary_cells();
  auto directed = [&](const std::vector<CellIndex>& from, const GridSpec& gf,
                      const std::vector<CellIndex>& to, const GridSpec& gt) {
    double worst = 0.0;
    for (const auto& cf : from) {
      const Point p = gf.cell_center(cf);
      double best = std::numeric_limits<double>::max();
      for (const auto& ct : to) {
        best = std::min(best, dist2(p, gt.cell_center(ct), gf.dim));
        if (best <= worst) break;  // cannot raise the max
      }
      worst = std::max(worst, best);
    }
    return worst;
  };
  const double d2 = std::max(directed(ba, a.spec, bb, b.spec),
                             directed(bb, b.spec, ba, a.spec));
  return std::sqrt(d2);
}

namespace {

// Andrew monotone chain on 2D points.
std::vector<std::array<double, 2>> convex_hull_2d(
    std::vector<std::array<double, 2>> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  const int n = static_cast<int>(pts.size());
  if (n <= 2) return pts;
  auto cross = [](const std::array<double, 2>& o, const std::array<double, 2>& a,
                  const std::array<double, 2>& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
  };
  std::vector<std::array<double, 2>> hull(2 * n);
  int k = 0;
  for (int i = 0; i < n; ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  const int lower = k + 1;
  for (int i = n - 2; i >= 0; --i) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

}  // namespace

double diameter(const GridDomain& dom) {
  if (dom.empty()) throw PreconditionError("diameter of empty domain");
  const auto bc = dom.boundary_cells();
  if (dom.spec.dim == 2) {
    std::vector<std::array<double, 2>> pts;
    pts.reserve(bc.size());
    for (const auto& c : bc)
      pts.push_back({dom.spec.center(0, c[0]), dom.spec.center(1, c[1])});
    const auto hull = convex_hull_2d(std::move(pts));
    double best = 0.0;
    for (std::size_t i = 0; i < hull.size(); ++i)
      for (std::size_t j = i + 1; j < hull.size(); ++j)
        best = std::max(best, sq(hull[i][0] - hull[j][0]) +
                                  sq(hull[i][1] - hull[j][1]));
    return std::sqrt(best);
  }
  // 3D: integer brute force over boundary cells
  double best = 0.0;
  for (std::size_t i = 0; i < bc.size(); ++i)
    for (std::size_t j = i + 1; j < bc.size(); ++j) {
      const std::int64_t dx = bc[i][0] - bc[j][0];
      const std::int64_t dy = bc[i][1] - bc[j][1];
      const std::int64_t dz = bc[i][2] - bc[j][2];
      best = std::max(best, static_cast<double>(dx * dx + dy * dy + dz * dz));
    }
  return std::sqrt(best) * dom.spec.h;
}

namespace {

std::vector<CellIndex> ball_offsets(const GridSpec& g, double radius) {
  const int r = static_cast<int>(std::floor(radius / g.h));
  std::vector<CellIndex> offs;
  CellIndex o{0, 0, 0};
  const int kmin = (g.dim == 3) ? -r : 0;
  const int kmax = (g.dim == 3) ? r : 0;
  for (o[0] = -r; o[0] <= r; ++o[0])
    for (o[1] = -r; o[1] <= r; ++o[1])
      for (o[2] = kmin; o[2] <= kmax; ++o[2]) {
        double d2 = sq(o[0]) + sq(o[1]) + sq(o[2]);
        if (d2 * sq(g.h) <= sq(radius)) offs.push_back(o);
      }
  return offs;
}

}  // namespace

GridDomain morphological_opening(const GridDomain& dom, double delta) {
  const auto offs = ball_offsets(dom.spec, delta);
  const GridSpec& g = dom.spec;
  GridDomain eroded(g);
  for_each_occupied(dom, [&](const CellIndex& c, std::int64_t id) {
    for (const auto& o : offs) {
      CellIndex nb{c[0] + o[0], c[1] + o[1], c[2] + o[2]};
      if (!dom.occupied(nb)) return;
    }
    eroded.mask[id] = 1;
  });
  GridDomain opened(g);
  for_each_occupied(eroded, [&](const CellIndex& c, std::int64_t) {
    for (const auto& o : offs) {
      CellIndex nb{c[0] + o[0], c[1] + o[1], c[2] + o[2]};
      if (g.in_box(nb)) opened.mask[g.flat(nb)] = 1;
    }
  });
  return opened;
}

StarBoundary random_star_boundary(std::uint64_t seed, int min_mode,
                                  int max_mode, double max_amp,
                                  double min_total) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> amp(-max_amp, max_amp);
  for (int attempt = 0; attempt < 256; ++attempt) {
    StarBoundary b;
    b.base_radius = 1.0;
    double total = 0.0;
    for (int k = min_mode; k <= max_mode; ++k) {
      const double a = amp(rng), s = amp(rng);
      b.set_coefficient(k, false, a);
      b.set_coefficient(k, true, s);
      total += std::abs(a) + std::abs(s);
    }
    if (b.min_radius() <= 0.15 || total < min_total) continue;
    b.scale_to_area(1.0);
    return b;
  }
  throw PreconditionError("rejection sampling failed to produce a star boundary");
}

bool check_internal_ball_condition(const GridDomain& dom, double delta) {
  if (delta < 2.0 * dom.spec.h)
    throw PreconditionError("delta below grid resolution (need delta >= 2h)");
  const GridDomain opened = morphological_opening(dom, delta);
  if (opened.empty()) return false;
  const auto bd = dom.boundary_cells();
  const auto bo = opened.boundary_cells();
  const double slack = dom.spec.h * std::sqrt(double(dom.spec.dim)) + 1e-12;
  for (const auto& c : bd) {
    const Point p = dom.spec.cell_center(c);
    double best = std::numeric_limits<double>::max();
    for (const auto& co : bo) {
      best = std::min(best, dist2(p, opened.spec.cell_center(co), dom.spec.dim));
      if (best <= sq(slack)) break;
    }
    if (best > sq(slack)) return false;
  }
  return true;
}

}  // namespace shapelab
