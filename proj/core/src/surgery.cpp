#include "shapelab/surgery.hpp"

#include <algorithm>
#include <limits>
#include <cmath>

namespace shapelab {

std::string to_string(TrichotomyTag tag) {
  switch (tag) {
    case TrichotomyTag::kCond1:
      return "cond1";
    case TrichotomyTag::kCond2:
      return "cond2";
    case TrichotomyTag::kCond3:
      return "cond3";
  }
  return "?";
}

namespace {

// Slice j counts from the tail end: layer j for sign -1, layer n-1-j for +1.
int layer_of(const GridSpec& g, Direction d, int j) {
  return d.sign < 0 ? j : g.cells - 1 - j;
}

}  // namespace

SliceStats slice_statistics(const GridDomain& dom, const EigenSolution& eig,
                            Direction dir) {
  const GridSpec& g = dom.spec;
  const int n = g.cells;
  const double h = g.h;
  const double hNm1 = std::pow(h, g.dim - 1);
  SliceStats s;
  s.direction = dir;
  s.dim = g.dim;
  s.t.assign(n, 0.0);
  s.eps_t.assign(n, 0.0);
  s.delta_t.assign(n, 0.0);
  s.mu_t.assign(n, 0.0);
  s.m_t.assign(n, 0.0);
  s.phi_t.assign(n, 0.0);

  const ScalarField grad2 = gradient_sq_field(eig.u, dom);
  std::vector<std::int64_t> count(n, 0);
  std::vector<double> d2(n, 0.0), u2(n, 0.0);
  for_each_occupied(dom, [&](const CellIndex& c, std::int64_t id) {
    const int layer = c[dir.axis];
    const int j = dir.sign < 0 ? layer : n - 1 - layer;
    ++count[j];
    d2[j] += grad2.values[id];
    u2[j] += eig.u.values[id] * eig.u.values[id];
  });
  for (int j = 0; j < n; ++j) {
    s.t[j] = g.center(dir.axis, layer_of(g, dir, j));
    s.eps_t[j] = hNm1 * count[j];
    s.delta_t[j] = hNm1 * d2[j];
    s.mu_t[j] = hNm1 * u2[j];
  }
  for (int j = 1; j < n; ++j) {
    s.m_t[j] = s.m_t[j - 1] + h * s.eps_t[j - 1];
    s.phi_t[j] = s.phi_t[j - 1] + h * s.delta_t[j - 1];
  }
  return s;
}

TrichotomyTag classify_trichotomy(const SliceStats& s, std::size_t j, double C4) {
  if (j >= s.size()) throw PreconditionError("slice index out of range");
  if (!(C4 > 2.0)) throw PreconditionError("C4 must exceed 2");
  const double eps = s.eps_t[j], delta = s.delta_t[j], m = s.m_t[j];
  if (std::max(eps, delta) > 1.0) return TrichotomyTag::kCond1;
  const double bound = C4 * (eps + delta) * std::pow(eps, 1.0 / (s.dim - 1));
  if (m <= bound) return TrichotomyTag::kCond2;
  return TrichotomyTag::kCond3;
}

std::pair<GridDomain, ScalarField> build_cut_extension(const GridDomain& dom,
                                                       const EigenSolution& eig,
                                                       double t, Direction dir) {
  const GridSpec& g = dom.spec;
  const int n = g.cells;
  const int a = dir.axis;
  const int i = static_cast<int>(
      std::lround((t - g.origin[a]) / g.h - 0.5));
  if (i < 0 || i >= n) throw PreconditionError("cut coordinate outside the box");

  // sigma = eps(t)^(1/(N-1)), snapped to whole cells, at least one
  std::int64_t slice_count = 0;
  for_each_occupied(dom, [&](const CellIndex& c, std::int64_t) {
    if (c[a] == i) ++slice_count;
  });
  const double eps = std::pow(g.h, g.dim - 1) * static_cast<double>(slice_count);
  const double sigma = std::pow(eps, 1.0 / (g.dim - 1));
  const int sigma_cells =
      static_cast<int>(std::max<long long>(1, std::llround(sigma / g.h)));

  // cylinder layers: for sign -1 they sit at i-sigma..i-1; mirrored for +1
  const int cyl_lo = dir.sign < 0 ? i - sigma_cells : i + 1;
  const int cyl_hi = dir.sign < 0 ? i - 1 : i + sigma_cells;
  if (slice_count > 0 && (cyl_lo < 0 || cyl_hi >= n))
    throw BoundsError("interpolation cylinder leaves the grid box (pad the domain)");

  GridDomain out(g);
  ScalarField field(g);
  bool kept_any = false;
  for_each_occupied(dom, [&](const CellIndex& c, std::int64_t id) {
    const bool keep = dir.sign < 0 ? c[a] >= i : c[a] <= i;
    if (keep) {
      out.mask[id] = 1;
      field.values[id] = eig.u.values[id];
      kept_any = true;
    }
  });
  if (!kept_any) throw PreconditionError("cut removes the whole domain");

  if (slice_count > 0) {
    // ramp: zero at the outer cylinder face, u(t, y) at the cut plane
    for (int layer = cyl_lo; layer <= cyl_hi; ++layer) {
      const int steps = dir.sign < 0 ? i - layer : layer - i;  // 1..sigma_cells
      const double f =
          (sigma_cells - steps + 0.5) / static_cast<double>(sigma_cells);
      for_each_occupied(dom, [&](const CellIndex& c, std::int64_t id) {
        if (c[a] != i) return;
        CellIndex cc = c;
        cc[a] = layer;
        const std::int64_t cid = g.flat(cc);
        out.mask[cid] = 1;
        field.values[cid] = f * eig.u.values[id];
        (void)id;
      });
    }
  }
  return {std::move(out), std::move(field)};
}

RayleighBoundCheck rayleigh_bound_check(const GridDomain& dom,
                                        const EigenSolution& eig, double t,
                                        Direction dir,
                                        const SolverOptions& opts) {
  auto [cut, field] = build_cut_extension(dom, eig, t, dir);
  MaskedLaplacian A(cut);
  const std::vector<double> x = A.restrict_field(field);
  RayleighBoundCheck check;
  check.rq_tilde = A.rayleigh(x);
  check.lambda_tilde = solve_first_eigen(cut, opts).lambda1;
  check.ok = check.lambda_tilde <= check.rq_tilde * (1.0 + 1e-6);

  SliceStats stats = slice_statistics(dom, eig, dir);
  // locate the slice
  const GridSpec& g = dom.spec;
  const int i = static_cast<int>(std::lround((t - g.origin[dir.axis]) / g.h - 0.5));
  const int j = dir.sign < 0 ? i : g.cells - 1 - i;
  const double eps = stats.eps_t[j], delta = stats.delta_t[j];
  const double denom = std::pow(eps, 1.0 / (g.dim - 1)) * delta;
  check.measured_c3_ratio =
      denom > 0.0 ? (check.rq_tilde - eig.lambda1) / denom
                  : std::numeric_limits<double>::quiet_NaN();
  return check;
}

TailCutResult apply_tail_cut(const GridDomain& dom, const EigenSolution& eig,
                             Direction dir, const PenaltyParams& params,
                             const TailCutOptions& opts) {
  if (!dom.connected())
    throw PreconditionError("tail cut needs a connected domain");
  const double m0 = measure(dom);
  if (std::abs(m0 - 1.0) > 0.02)
    throw PreconditionError("tail cut expects unit measure within 2%");

  TailCutResult res;
  res.lambda_before = eig.lambda1;
  res.riesz_before = riesz_energy(dom, params.alpha);
  res.f_tilde_before = eig.lambda1 + params.epsilon * res.riesz_before;

  const AsymmetryResult asym = fraenkel_asymmetry(dom);
  const double tbar =
      std::pow(m0 / unit_ball_volume(dom.spec.dim), 1.0 / dom.spec.dim);
  const double center_a = asym.best_ball.center[dir.axis];

  SliceStats stats = slice_statistics(dom, eig, dir);
  // tail: beyond one ball radius from the best-ball center
  std::vector<std::size_t> candidates;
  for (std::size_t j = 0; j < stats.size(); ++j) {
    const double coord = stats.t[j];
    const bool in_tail = dir.sign < 0 ? coord <= center_a - tbar
                                      : coord >= center_a + tbar;
    if (!in_tail || stats.eps_t[j] <= 0.0) continue;
    if (classify_trichotomy(stats, j, opts.C4) == TrichotomyTag::kCond3)
      candidates.push_back(j);
  }
  if (candidates.empty()) {
    res.cut_performed = false;
    res.cut_domain = dom;
    res.rescaled_domain = dom;
    res.lambda_after = res.lambda_before;
    res.riesz_after = res.riesz_before;
    res.f_tilde_after = res.f_tilde_before;
    res.epsilon_bar = std::numeric_limits<double>::infinity();
    return res;
  }
  const std::size_t j_hat = *std::max_element(candidates.begin(), candidates.end());
  // strongest cut (largest tail mass) within the unit-length window behind j_hat
  std::size_t j_star = j_hat;
  for (std::size_t j : candidates) {
    if (j <= j_hat && (j_hat - j) * dom.spec.h <= 1.0 &&
        stats.m_t[j] > stats.m_t[j_star])
      j_star = j;
  }
  res.cut_performed = true;
  res.label = TrichotomyTag::kCond3;
  res.t_star = stats.t[j_star];

  auto [cut, field] = build_cut_extension(dom, eig, res.t_star, dir);
  (void)field;
  res.cut_domain = cut;
  res.rescaled_domain = rescale_to_measure(cut, 1.0);
  res.lambda_after = solve_first_eigen(res.rescaled_domain, opts.solver).lambda1;
  res.riesz_after = riesz_energy(res.rescaled_domain, params.alpha);
  res.f_tilde_after = res.lambda_after + params.epsilon * res.riesz_after;
  // F~ = lambda + eps V is linear in eps: the cut keeps improving it up to
  // the measured crossover of the lambda drop against the V increase
  const double dl = res.lambda_before - res.lambda_after;
  const double dv = res.riesz_after - res.riesz_before;
  res.epsilon_bar =
      dv > 0.0 ? dl / dv : std::numeric_limits<double>::infinity();
  res.contract_ok =
      res.lambda_after <= res.lambda_before * (1.0 + opts.slack) + opts.slack;
  return res;
}

SweepResult surgery_sweep(const GridDomain& dom, const PenaltyParams& params,
                          const TailCutOptions& opts) {
  SweepResult sweep;
  sweep.domain = dom;
  sweep.initial_diameter = diameter(dom);

  EigenSolution eig = solve_first_eigen(dom, opts.solver);
  sweep.initial_lambda = eig.lambda1;
  sweep.initial_f_tilde =
      eig.lambda1 + params.epsilon * riesz_energy(dom, params.alpha);

  for (const Direction& dir : Direction::sweep_order(dom.spec.dim)) {
    TailCutResult cut = apply_tail_cut(sweep.domain, eig, dir, params, opts);
    SweepLogRow row;
    row.direction = dir;
    row.cut_performed = cut.cut_performed;
    row.t_star = cut.t_star;
    row.label = cut.cut_performed ? to_string(cut.label) : "tail_short";
    row.lambda_before = cut.lambda_before;
    row.lambda_after = cut.lambda_after;
    row.f_tilde_before = cut.f_tilde_before;
    row.f_tilde_after = cut.f_tilde_after;
    row.epsilon_bar = cut.epsilon_bar;
    if (cut.cut_performed) {
      SliceStats stats = slice_statistics(sweep.domain, eig, dir);
      for (std::size_t j = 0; j < stats.size(); ++j) {
        if (stats.t[j] == cut.t_star) {
          row.eps_t = stats.eps_t[j];
          row.delta_t = stats.delta_t[j];
          row.m_t = stats.m_t[j];
          break;
        }
      }
      sweep.domain = cut.rescaled_domain;
      eig = solve_first_eigen(sweep.domain, opts.solver);
    }
    row.diameter_after = diameter(sweep.domain);
    sweep.log.push_back(row);
  }
  sweep.final_diameter = diameter(sweep.domain);
  sweep.final_lambda = eig.lambda1;
  sweep.final_f_tilde =
      eig.lambda1 + params.epsilon * riesz_energy(sweep.domain, params.alpha);
  return sweep;
}

}  // namespace shapelab
