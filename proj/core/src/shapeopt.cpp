#include "shapelab/shapeopt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace shapelab {

void DescentConfig::validate() const {
  if (max_mode < 2) throw PreconditionError("descent needs max_mode K >= 2");
  if (!(initial_step > 0.0)) throw PreconditionError("step must be positive");
  params.validate(grid.dim);
}

CoefficientVector CoefficientVector::from_boundary(const StarBoundary& b, int K) {
  CoefficientVector v;
  v.max_mode = K;
  v.values.assign(2 * K + 1, 0.0);
  for (int k = 0; k <= K; ++k) v.values[k] = b.coefficient(k, false);
  for (int k = 1; k <= K; ++k) v.values[K + k] = b.coefficient(k, true);
  return v;
}

void CoefficientVector::apply_to(StarBoundary& b) const {
  const int K = max_mode;
  b.cos_coeff.assign(K + 1, 0.0);
  b.sin_coeff.assign(K + 1, 0.0);
  for (int k = 0; k <= K; ++k) b.cos_coeff[k] = values[k];
  for (int k = 1; k <= K; ++k) b.sin_coeff[k] = values[K + k];
}

double CoefficientVector::norm_inf() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

namespace {

struct EvalParts {
  double objective;
  double energy_term;  // E or lambda1
  double riesz_term;
  double measure;
};

EvalParts evaluate_parts(const StarBoundary& boundary,
                         const DescentConfig& cfg, Evaluator& ev) {
  const GridDomain dom = rasterize_star(boundary, cfg.grid);
  const int N = cfg.grid.dim;
  const double m = measure(dom);
  if (!(m > 0.0)) throw PreconditionError("descent iterate became empty");
  // the penalty sees the boundary's exact area: the rasterized measure
  // jitters by a fraction of a percent, which the 1/eta slope above
  // measure one would amplify into objective shocks
  const double area = boundary.analytic_area();
  const double eps = cfg.params.epsilon;
  EvalParts parts{};
  parts.measure = m;
  const double V = ev.riesz(dom, cfg.params.alpha);
  parts.riesz_term = V;
  switch (cfg.objective) {
    case ObjectiveKind::kTorsion: {
      const double E = ev.torsion_energy(dom);
      parts.energy_term = E;
      if (cfg.volume_mode == VolumeMode::kProjection)
        parts.objective = E * std::pow(m, -double(N + 2) / N) +
                          eps * V * std::pow(m, -double(N + cfg.params.alpha) / N);
      else
        parts.objective = E + eps * V + f_eta(area, cfg.params.eta);
      break;
    }
    case ObjectiveKind::kEigen: {
      const double lam = ev.eigenvalue(dom);
      parts.energy_term = lam;
      if (cfg.volume_mode == VolumeMode::kProjection)
        parts.objective = lam * std::pow(m, 2.0 / N) +
                          eps * V * std::pow(m, -double(N + cfg.params.alpha) / N);
      else
        parts.objective = lam + eps * V + f_eta(area, cfg.params.eta);
      break;
    }
    case ObjectiveKind::kPenalty: {
      const double E = ev.torsion_energy(dom);
      parts.energy_term = E;
      parts.objective = E + eps * V + f_eta(area, cfg.params.eta);
      break;
    }
  }
  return parts;
}

}  // namespace

double descent_objective(const StarBoundary& boundary,
                         const DescentConfig& cfg, Evaluator& ev) {
  return evaluate_parts(boundary, cfg, ev).objective;
}

CoefficientVector shape_gradient(const StarBoundary& boundary,
                                 const DescentConfig& cfg, Evaluator& ev) {
  cfg.validate();
  const int K = cfg.max_mode;
  CoefficientVector base = CoefficientVector::from_boundary(boundary, K);
  CoefficientVector grad;
  grad.max_mode = K;
  grad.values.assign(2 * K + 1, 0.0);
  const double da = std::min(
      0.05, std::max(1e-3, 10.0 * cfg.grid.h / boundary.base_radius));
  for (std::size_t slot = 0; slot < base.values.size(); ++slot) {
    // skip untouched modes: k=1 cos/sin (translations) are not descent DOFs,
    // but the gradient is still reported for every coefficient
    CoefficientVector plus = base, minus = base;
    plus.values[slot] += da;
    minus.values[slot] -= da;
    StarBoundary bp = boundary, bm = boundary;
    plus.apply_to(bp);
    minus.apply_to(bm);
    const double fp = descent_objective(bp, cfg, ev);
    const double fm = descent_objective(bm, cfg, ev);
    grad.values[slot] = (fp - fm) / (2.0 * da);
  }
  return grad;
}

DescentResult descend(const StarBoundary& start, const DescentConfig& cfg) {
  cfg.validate();
  Evaluator ev(cfg.solver);
  const int K = cfg.max_mode;
  StarBoundary cur = start;
  const bool penalty_mode = cfg.volume_mode == VolumeMode::kPenalty ||
                            cfg.objective == ObjectiveKind::kPenalty;
  if (!penalty_mode) cur.scale_to_area(1.0);

  DescentResult result;
  // shape DOFs only; in penalty mode the volume moves through a separate
  // one-dimensional search on the dilation coefficient
  std::vector<int> slots;
  for (int k = 2; k <= K; ++k) slots.push_back(k);
  for (int k = 2; k <= K; ++k) slots.push_back(K + k);
  const double da =
      std::min(0.05, std::max(1e-3, 10.0 * cfg.grid.h / cur.base_radius));
  double step = cfg.initial_step;

  auto record = [&](int iter, const EvalParts& parts, double used_step) {
    DescentTraceRow row;
    row.iteration = iter;
    row.objective = parts.objective;
    row.energy = parts.energy_term;
    row.riesz = parts.riesz_term;
    row.measure = parts.measure;
    const GridDomain dom = rasterize_star(cur, cfg.grid);
    row.asymmetry = ev.asymmetry(dom);
    row.residual_std = std::numeric_limits<double>::quiet_NaN();
    if (cfg.trace_residual) {
      try {
        row.residual_std =
            optimality_residual(dom, cfg.params, cfg.solver).relative_std;
      } catch (const Error&) {
      }
    }
    row.step = used_step;
    result.trace.push_back(row);
  };

  EvalParts parts = evaluate_parts(cur, cfg, ev);
  record(0, parts, 0.0);

  for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
    double volume_move = 0.0;
    if (penalty_mode) {
      // volume sub-step: one-dimensional descent on the dilation coefficient;
      // backtracking lands on the f_eta kink without a finite-difference
      // gradient (which any probe across measure one would corrupt)
      double a0_step = 0.08;
      int sub_moves = 0;
      while (a0_step >= 1e-4 && sub_moves < 24) {
        bool moved = false;
        for (int sgn : {+1, -1}) {
          StarBoundary cand = cur;
          cand.set_coefficient(0, false,
                               cand.coefficient(0, false) + sgn * a0_step);
          if (cand.min_radius() <= 0.05 * cand.base_radius) continue;
          EvalParts cand_parts{};
          try {
            cand_parts = evaluate_parts(cand, cfg, ev);
          } catch (const Error&) {
            continue;
          }
          if (cand_parts.objective < parts.objective) {
            cur = cand;
            parts = cand_parts;
            volume_move += a0_step;
            ++sub_moves;
            moved = true;
            break;
          }
        }
        if (!moved) a0_step *= 0.5;
      }
    }

    CoefficientVector base = CoefficientVector::from_boundary(cur, K);
    const double area_now = cur.analytic_area();
    // shape gradient; in penalty mode the probes are volume-neutral so the
    // kink in f_eta cannot leak into the shape direction
    std::vector<double> g(slots.size(), 0.0);
    double gnorm2 = 0.0;
    for (std::size_t s = 0; s < slots.size(); ++s) {
      CoefficientVector plus = base, minus = base;
      plus.values[slots[s]] += da;
      minus.values[slots[s]] -= da;
      StarBoundary bp = cur, bm = cur;
      plus.apply_to(bp);
      minus.apply_to(bm);
      if (penalty_mode) {
        bp.scale_to_area(area_now);
        bm.scale_to_area(area_now);
      }
      g[s] = (descent_objective(bp, cfg, ev) - descent_objective(bm, cfg, ev)) /
             (2.0 * da);
      gnorm2 += g[s] * g[s];
    }
    const double gnorm = std::sqrt(gnorm2);
    if (gnorm == 0.0) {
      result.converged = true;
      result.stop_reason = "zero gradient";
      break;
    }

    // backtracking along the normalized direction: trial_step is the
    // coefficient-space move length, directional derivative is -gnorm
    double trial_step = step;
    bool accepted = false;
    StarBoundary next;
    EvalParts next_parts{};
    while (trial_step >= 1e-6 * cfg.initial_step) {
      CoefficientVector cand = base;
      for (std::size_t s = 0; s < slots.size(); ++s)
        cand.values[slots[s]] -= trial_step * g[s] / gnorm;
      next = cur;
      cand.apply_to(next);
      next.scale_to_area(penalty_mode ? area_now : 1.0);
      if (next.min_radius() <= 0.05 * next.base_radius) {
        trial_step *= cfg.shrink;
        continue;
      }
      try {
        next_parts = evaluate_parts(next, cfg, ev);
      } catch (const Error&) {
        trial_step *= cfg.shrink;
        continue;
      }
      const double required =
          cfg.backtracking
              ? parts.objective - cfg.armijo_c * trial_step * gnorm
              : std::numeric_limits<double>::max();
      if (!cfg.backtracking || next_parts.objective <= required) {
        accepted = true;
        break;
      }
      trial_step *= cfg.shrink;
    }
    if (!accepted && volume_move == 0.0) {
      result.stagnated = true;
      result.stop_reason = "backtracking step underflow";
      break;
    }
    if (accepted) {
      cur = next;
      parts = next_parts;
      step = std::min(cfg.initial_step, trial_step * 2.0);  // re-expansion
    }
    record(iter, parts, accepted ? trial_step : 0.0);
    if ((accepted ? trial_step : 0.0) + volume_move < cfg.coeff_tol) {
      result.converged = true;
      result.stop_reason = "coefficient change below tolerance";
      break;
    }
  }
  if (result.stop_reason.empty()) result.stop_reason = "max iterations";
  result.final_boundary = cur;
  return result;
}

OptimalityReport optimality_residual(const GridDomain& dom,
                                     const PenaltyParams& params,
                                     const SolverOptions& opts) {
  params.validate(dom.spec.dim);
  if (!dom.connected())
    throw PreconditionError("optimality residual needs a connected domain");
  TorsionSolution tor = solve_torsion(dom, opts);
  BoundaryFlux flux = boundary_flux(tor, dom);
  if (flux.samples.size() < 8)
    throw PreconditionError("fewer than 8 usable boundary samples");
  RieszPotentialField pot = riesz_potential(dom, params.alpha);

  OptimalityReport rep;
  rep.samples = static_cast<int>(flux.samples.size());
  std::vector<double> vals;
  vals.reserve(flux.samples.size());
  for (const auto& s : flux.samples) {
    const double v = pot.v.values[dom.spec.flat(s.cell)];
    vals.push_back(s.q * s.q - params.epsilon * v);
  }
  double mean = 0.0;
  for (double v : vals) mean += v;
  mean /= vals.size();
  double var = 0.0;
  for (double v : vals) var += (v - mean) * (v - mean);
  var /= vals.size();
  rep.lambda = mean;
  rep.residual_std = std::sqrt(var);
  rep.relative_std = rep.residual_std / std::abs(mean);
  rep.residuals.reserve(vals.size());
  for (double v : vals) rep.residuals.push_back(v - mean);
  return rep;
}

SphericalNorms nearly_spherical_norms(const StarBoundary& b) {
  SphericalNorms n;
  const double R = b.base_radius;
  const double a0 = b.coefficient(0, false);
  const int K = b.max_mode();
  n.spectrum.resize(K + 1, 0.0);
  n.spectrum[0] = std::abs(a0);
  double modes = 0.0, weighted = 0.0;
  for (int k = 1; k <= K; ++k) {
    const double ak = b.coefficient(k, false);
    const double bk = b.coefficient(k, true);
    const double m2 = ak * ak + bk * bk;
    modes += m2;
    weighted += (1.0 + k) * m2 / 2.0;
    n.spectrum[k] = std::sqrt(m2) / 2.0;  // |c_k| = |c_-k|
  }
  n.l2_sq = R * (2.0 * kPi * a0 * a0 + kPi * modes);
  n.h_half_sq = kPi * R * (a0 * a0 + weighted);
  return n;
}

QuadraticFit deficit_quadratic_fit(int mode,
                                   const std::vector<double>& amplitudes,
                                   const PenaltyParams& params,
                                   const GridSpec& grid) {
  if (amplitudes.size() < 5)
    throw PreconditionError("quadratic fit needs at least 5 amplitudes");
  for (double a : amplitudes)
    if (!(a > 0.0 && a <= 0.2))
      throw PreconditionError("amplitudes must lie in (0, 0.2]");
  const int N = grid.dim;
  Evaluator ev;

  auto scale_invariant = [&](const StarBoundary& b, double* e_si, double* v_si) {
    GridDomain dom = rasterize_star(b, grid);
    const double m = measure(dom);
    *e_si = ev.torsion_energy(dom) * std::pow(m, -double(N + 2) / N);
    *v_si = ev.riesz(dom, params.alpha) * std::pow(m, -double(N + params.alpha) / N);
  };

  StarBoundary ball;
  ball.base_radius = 1.0;
  ball.scale_to_area(1.0);
  double e0, v0;
  scale_invariant(ball, &e0, &v0);

  QuadraticFit fit;
  std::vector<double> lx, ley, lvy;
  for (double a : amplitudes) {
    StarBoundary b;
    b.base_radius = 1.0;
    b.set_coefficient(mode, false, a);
    b.scale_to_area(1.0);
    double e_si, v_si;
    scale_invariant(b, &e_si, &v_si);
    const double e_def = e_si - e0;        // Saint-Venant deficit >= 0
    const double v_def = v0 - v_si;        // Riesz deficit >= 0
    if (e_def <= 0.0 || v_def <= 0.0) {
      ++fit.excluded;
      continue;
    }
    lx.push_back(std::log(a));
    ley.push_back(std::log(e_def));
    lvy.push_back(std::log(v_def));
  }
  if (lx.size() < 3) throw PreconditionError("too few positive deficit samples");

  auto regress = [](const std::vector<double>& x, const std::vector<double>& y,
                    double* slope, double* r2) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      sx += x[i];
      sy += y[i];
      sxx += x[i] * x[i];
      sxy += x[i] * y[i];
      syy += y[i] * y[i];
    }
    const double cov = sxy - sx * sy / n;
    const double vx = sxx - sx * sx / n;
    const double vy = syy - sy * sy / n;
    *slope = cov / vx;
    *r2 = (vy > 0.0) ? cov * cov / (vx * vy) : 1.0;
  };
  regress(lx, ley, &fit.e_exponent, &fit.e_r_squared);
  regress(lx, lvy, &fit.v_exponent, &fit.v_r_squared);
  return fit;
}

}  // namespace shapelab
