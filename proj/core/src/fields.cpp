#include "shapelab/fields.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace shapelab {

MaskedLaplacian::MaskedLaplacian(const GridDomain& dom) : spec_(dom.spec) {
  const std::int64_t n = spec_.cell_count();
  cell_rank_.assign(n, -1);
  for (std::int64_t id = 0; id < n; ++id) {
    if (dom.mask[id]) {
      cell_rank_[id] = static_cast<std::int64_t>(cells_.size());
      cells_.push_back(id);
    }
  }
  if (cells_.empty()) throw PreconditionError("solve on empty domain");
  const double inv_h2 = 1.0 / (spec_.h * spec_.h);
  nb_.resize(cells_.size());
  diag_.resize(cells_.size());
  for (std::size_t r = 0; r < cells_.size(); ++r) {
    const CellIndex c = spec_.unflat(cells_[r]);
    int missing = 0;
    int slot = 0;
    for (int a = 0; a < spec_.dim; ++a) {
      for (int s = -1; s <= 1; s += 2, ++slot) {
        CellIndex nb = c;
        nb[a] += s;
        std::int64_t rank = -1;
        if (spec_.in_box(nb)) rank = cell_rank_[spec_.flat(nb)];
        nb_[r][slot] = rank;
        if (rank < 0) ++missing;
      }
    }
    for (; slot < 6; ++slot) nb_[r][slot] = -1;
    diag_[r] = (2.0 * spec_.dim + missing) * inv_h2;
  }
}

void MaskedLaplacian::apply(const std::vector<double>& x,
                            std::vector<double>& y) const {
  const double inv_h2 = 1.0 / (spec_.h * spec_.h);
  const std::size_t m = cells_.size();
  y.resize(m);
  const int nslots = 2 * spec_.dim;
  for (std::size_t r = 0; r < m; ++r) {
    double acc = diag_[r] * x[r];
    for (int s = 0; s < nslots; ++s) {
      const std::int64_t nb = nb_[r][s];
      if (nb >= 0) acc -= inv_h2 * x[nb];
    }
    y[r] = acc;
  }
}

double MaskedLaplacian::rayleigh(const std::vector<double>& x) const {
  std::vector<double> y;
  apply(x, y);
  double num = 0.0, den = 0.0;
  for (std::size_t r = 0; r < x.size(); ++r) {
    num += x[r] * y[r];
    den += x[r] * x[r];
  }
  return num / den;
}

std::pair<double, int> MaskedLaplacian::solve_cg(const std::vector<double>& rhs,
                                                 std::vector<double>& x,
                                                 double tol, int max_iter) const {
  const std::size_t m = cells_.size();
  x.resize(m, 0.0);
  std::vector<double> r(m), z(m), p(m), Ap(m);
  apply(x, Ap);
  double rhs_norm2 = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    r[i] = rhs[i] - Ap[i];
    rhs_norm2 += rhs[i] * rhs[i];
  }
  if (rhs_norm2 == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    return {0.0, 0};
  }
  auto precond = [&](const std::vector<double>& v, std::vector<double>& out) {
    out.resize(m);
    for (std::size_t i = 0; i < m; ++i) out[i] = v[i] / diag_[i];
  };
  precond(r, z);
  p = z;
  double rz = std::inner_product(r.begin(), r.end(), z.begin(), 0.0);
  double res2 = std::inner_product(r.begin(), r.end(), r.begin(), 0.0);
  int it = 0;
  const double stop2 = tol * tol * rhs_norm2;
  while (res2 > stop2 && it < max_iter) {
    apply(p, Ap);
    const double pAp = std::inner_product(p.begin(), p.end(), Ap.begin(), 0.0);
    const double alpha = rz / pAp;
    for (std::size_t i = 0; i < m; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * Ap[i];
    }
    precond(r, z);
    const double rz_new = std::inner_product(r.begin(), r.end(), z.begin(), 0.0);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < m; ++i) p[i] = z[i] + beta * p[i];
    res2 = std::inner_product(r.begin(), r.end(), r.begin(), 0.0);
    ++it;
  }
  return {std::sqrt(res2 / rhs_norm2), it};
}

ScalarField MaskedLaplacian::to_field(const std::vector<double>& x) const {
  ScalarField f(spec_);
  for (std::size_t r = 0; r < cells_.size(); ++r) f.values[cells_[r]] = x[r];
  return f;
}

std::vector<double> MaskedLaplacian::restrict_field(const ScalarField& f) const {
  std::vector<double> x(cells_.size());
  for (std::size_t r = 0; r < cells_.size(); ++r) x[r] = f.values[cells_[r]];
  return x;
}

TorsionSolution solve_torsion(const GridDomain& dom, const SolverOptions& opts) {
  MaskedLaplacian A(dom);
  const std::size_t m = A.size();
  std::vector<double> rhs(m, 1.0), x;
  const int cap = opts.max_iter_factor * dom.spec.cells;
  auto [res, it] = A.solve_cg(rhs, x, opts.tol, cap);
  if (res > opts.tol)
    throw SolverError("torsion solve did not converge", res);
  TorsionSolution sol;
  sol.w = A.to_field(x);
  double sum = 0.0;
  for (double v : x) sum += v;
  sol.energy = -0.5 * dom.spec.cell_volume() * sum;
  sol.residual_norm = res;
  sol.iterations = it;
  return sol;
}

EigenSolution solve_first_eigen(const GridDomain& dom, const SolverOptions& opts) {
  if (!dom.connected())
    throw PreconditionError(
        "first eigenpair requires a connected domain (torsion handles "
        "disconnected sets)");
  MaskedLaplacian A(dom);
  const std::size_t m = A.size();
  std::vector<double> u(m, 1.0), next;
  auto normalize = [&](std::vector<double>& v) {
    double n2 = std::inner_product(v.begin(), v.end(), v.begin(), 0.0);
    const double s = 1.0 / std::sqrt(n2 * dom.spec.cell_volume());
    for (double& e : v) e *= s;
  };
  normalize(u);
  double lambda = A.rayleigh(u);
  const int cg_cap = opts.max_iter_factor * dom.spec.cells;
  int it = 0;
  double res = std::numeric_limits<double>::infinity();
  for (; it < opts.max_power_iter; ++it) {
    next.assign(m, 0.0);
    auto [cg_res, cg_it] = A.solve_cg(u, next, opts.tol, cg_cap);
    (void)cg_it;
    if (cg_res > opts.tol)
      throw SolverError("eigen inner solve did not converge", cg_res);
    normalize(next);
    const double lambda_new = A.rayleigh(next);
    res = std::abs(lambda_new - lambda) / std::abs(lambda_new);
    u.swap(next);
    lambda = lambda_new;
    if (res < opts.tol) break;
  }
  if (res >= opts.tol)
    throw SolverError("inverse power iteration did not converge", res);
  // sign-normalize: the first eigenfunction has one sign
  double sum = 0.0;
  for (double v : u) sum += v;
  if (sum < 0.0)
    for (double& v : u) v = -v;
  EigenSolution sol;
  sol.u = A.to_field(u);
  sol.lambda1 = lambda;
  sol.residual_norm = res;
  sol.iterations = it + 1;
  return sol;
}

ScalarField gradient_sq_field(const ScalarField& f, const GridDomain& dom) {
  ScalarField g(dom.spec);
  const double h = dom.spec.h;
  for_each_occupied(dom, [&](const CellIndex& c, std::int64_t id) {
    double acc = 0.0;
    for (int a = 0; a < dom.spec.dim; ++a) {
      CellIndex p = c, m = c;
      p[a] += 1;
      m[a] -= 1;
      const double vc = f.values[id];
      const bool has_p = dom.occupied(p), has_m = dom.occupied(m);
      // one-sided interior stencils at the boundary: the ghost reflection
      // overshoots tangential derivatives on staircase cells
      double d = 0.0;
      if (has_p && has_m)
        d = (f.at(p) - f.at(m)) / (2.0 * h);
      else if (has_p)
        d = (f.at(p) - vc) / h;
      else if (has_m)
        d = (vc - f.at(m)) / h;
      acc += d * d;
    }
    g.values[id] = acc;
  });
  return g;
}

namespace {

struct RawFluxSample {
  CellIndex cell;
  Point point;
  double q;
};

std::vector<RawFluxSample> raw_flux(const ScalarField& f, const GridDomain& dom,
                                    double source_slope, double curvature,
                                    const FluxOptions& opts, int* dropped) {
  const GridSpec& g = dom.spec;
  const double h = g.h;
  std::vector<RawFluxSample> out;
  *dropped = 0;
  for (const CellIndex& b : dom.boundary_cells()) {
    // inward normal from the 5x5(x5) occupancy first moment
    double nx[3] = {0, 0, 0};
    CellIndex o{0, 0, 0};
    const int kmin = (g.dim == 3) ? -2 : 0;
    const int kmax = (g.dim == 3) ? 2 : 0;
    for (o[0] = -2; o[0] <= 2; ++o[0])
      for (o[1] = -2; o[1] <= 2; ++o[1])
        for (o[2] = kmin; o[2] <= kmax; ++o[2]) {
          CellIndex c{b[0] + o[0], b[1] + o[1], b[2] + o[2]};
          if (dom.occupied(c))
            for (int a = 0; a < g.dim; ++a) nx[a] += o[a];
        }
    double nn = 0.0;
    for (int a = 0; a < g.dim; ++a) nn += nx[a] * nx[a];
    if (nn == 0.0) {
      ++(*dropped);
      continue;
    }
    nn = std::sqrt(nn);
    for (int a = 0; a < g.dim; ++a) nx[a] /= nn;

    // walk inward to a cell whose whole face neighbourhood is occupied
    CellIndex c{0, 0, 0};
    bool found = false;
    for (int step = opts.interior_depth; step < opts.interior_depth + 4; ++step) {
      for (int a = 0; a < g.dim; ++a)
        c[a] = b[a] + static_cast<int>(std::lround(nx[a] * step));
      if (!g.in_box(c) || !dom.mask[g.flat(c)]) continue;
      bool interior = true;
      for (int a = 0; a < g.dim && interior; ++a)
        for (int s = -1; s <= 1 && interior; s += 2) {
          CellIndex nb = c;
          nb[a] += s;
          if (!dom.occupied(nb)) interior = false;
        }
      if (interior) {
        found = true;
        break;
      }
    }
    if (!found) {
      ++(*dropped);
      continue;
    }

    double g2 = 0.0;
    for (int a = 0; a < g.dim; ++a) {
      CellIndex p = c, m = c;
      p[a] += 1;
      m[a] -= 1;
      const double d = (f.at(p) - f.at(m)) / (2.0 * h);
      g2 += d * d;
    }
    const double gmag = std::sqrt(g2);

    // distance from c to the zero locus: nearest unoccupied center minus h/2
    double best = std::numeric_limits<double>::max();
    const int rad = opts.interior_depth + 4;
    const int k2min = (g.dim == 3) ? -rad : 0;
    const int k2max = (g.dim == 3) ? rad : 0;
    for (o[0] = -rad; o[0] <= rad; ++o[0])
      for (o[1] = -rad; o[1] <= rad; ++o[1])
        for (o[2] = k2min; o[2] <= k2max; ++o[2]) {
          CellIndex v{c[0] + o[0], c[1] + o[1], c[2] + o[2]};
          if (!dom.occupied(v)) {
            double d2 = 0.0;
            for (int a = 0; a < g.dim; ++a) d2 += double(o[a]) * o[a];
            best = std::min(best, d2);
          }
        }
    const double d = std::sqrt(best) * h - 0.5 * h;

    // first-order transport to the boundary:
    //   torsion: |grad w|(d) = q + (1 - kappa q) d  ->  q = (|g|+d)/(1+kappa d)
    //   eigen:   |grad u|(d) = q (1 + kappa d)      ->  q = |g|/(1+kappa d)
    const double q = (gmag + source_slope * d) / (1.0 + curvature * d);
    out.push_back({b, g.cell_center(b), q});
  }
  return out;
}

BoundaryFlux flux_impl(const ScalarField& f, const GridDomain& dom,
                       bool torsion, const FluxOptions& opts) {
  const double m = measure(dom);
  const double rb = std::pow(m / unit_ball_volume(dom.spec.dim),
                             1.0 / dom.spec.dim);
  const double kappa = 1.0 / rb;  // ball-curvature heuristic
  int dropped = 0;
  auto raw = raw_flux(f, dom, torsion ? 1.0 : 0.0, kappa, opts, &dropped);

  BoundaryFlux out;
  out.dropped = dropped;
  out.from_torsion = torsion;
  out.samples.reserve(raw.size());
  if (!opts.smooth) {
    for (const auto& s : raw) out.samples.push_back({s.cell, s.point, s.q});
    return out;
  }
  const double rad = std::max(3.0 * dom.spec.h, opts.smooth_factor * rb);
  const double rad2 = rad * rad;
  for (const auto& s : raw) {
    double acc = 0.0;
    int cnt = 0;
    for (const auto& t : raw) {
      double d2 = 0.0;
      for (int a = 0; a < dom.spec.dim; ++a) d2 += (s.point[a] - t.point[a]) * (s.point[a] - t.point[a]);
      if (d2 <= rad2) {
        acc += t.q;
        ++cnt;
      }
    }
    out.samples.push_back({s.cell, s.point, acc / cnt});
  }
  return out;
}

}  // namespace

BoundaryFlux boundary_flux(const TorsionSolution& sol, const GridDomain& dom,
                           const FluxOptions& opts) {
  return flux_impl(sol.w, dom, true, opts);
}

BoundaryFlux boundary_flux(const EigenSolution& sol, const GridDomain& dom,
                           const FluxOptions& opts) {
  return flux_impl(sol.u, dom, false, opts);
}

DensityScan density_estimate_scan(const GridDomain& dom, double rho) {
  if (rho < 4.0 * dom.spec.h)
    throw PreconditionError("density scan radius must be at least 4h");
  const GridSpec& g = dom.spec;
  const int r = static_cast<int>(std::floor(rho / g.h));
  std::vector<CellIndex> offs;
  CellIndex o{0, 0, 0};
  const int kmin = (g.dim == 3) ? -r : 0;
  const int kmax = (g.dim == 3) ? r : 0;
  for (o[0] = -r; o[0] <= r; ++o[0])
    for (o[1] = -r; o[1] <= r; ++o[1])
      for (o[2] = kmin; o[2] <= kmax; ++o[2]) {
        double d2 = 0.0;
        for (int a = 0; a < g.dim; ++a) d2 += double(o[a]) * o[a];
        if (d2 * g.h * g.h <= rho * rho) offs.push_back(o);
      }
  DensityScan scan;
  scan.min_ratio = 1.0;
  scan.max_ratio = 0.0;
  for (const CellIndex& b : dom.boundary_cells()) {
    std::int64_t inside = 0;
    for (const auto& off : offs) {
      CellIndex c{b[0] + off[0], b[1] + off[1], b[2] + off[2]};
      if (dom.occupied(c)) ++inside;
    }
    const double ratio = static_cast<double>(inside) / offs.size();
    scan.samples.push_back({g.cell_center(b), ratio});
    scan.min_ratio = std::min(scan.min_ratio, ratio);
    scan.max_ratio = std::max(scan.max_ratio, ratio);
  }
  return scan;
}

}  // namespace shapelab
