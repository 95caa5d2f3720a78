#include "shapelab/functionals.hpp"

#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>

namespace shapelab {

void PenaltyParams::validate(int dim) const {
  if (!(eta > 0.0 && eta < 1.0)) throw PreconditionError("eta must lie in (0,1)");
  if (!(epsilon >= 0.0)) throw PreconditionError("epsilon must be >= 0");
  if (!(alpha > 0.0 && alpha < dim))
    throw PreconditionError("alpha must lie in (0, N)");
}

double f_eta(double s, double eta) {
  if (!(eta > 0.0 && eta < 1.0)) throw PreconditionError("eta must lie in (0,1)");
  if (!(s >= 0.0)) throw PreconditionError("measure must be >= 0");
  return s <= 1.0 ? eta * (s - 1.0) : (s - 1.0) / eta;
}

double bessel_j01() { return 2.4048255576957728; }

double ball_torsion_energy_unit(int dim) {
  // E(B_R) = -w_N R^(N+2) / (2N(N+2)) at w_N R^N = 1
  const double wn = unit_ball_volume(dim);
  return -std::pow(wn, -2.0 / dim) / (2.0 * dim * (dim + 2));
}

double ball_eigenvalue_unit(int dim) {
  const double wn = unit_ball_volume(dim);
  const double r = std::pow(wn, -1.0 / dim);
  const double j = (dim == 2) ? bessel_j01() : kPi;  // j_{1/2,1} = pi
  return j * j / (r * r);
}

namespace {

std::mutex riesz_ref_mutex;
std::map<std::pair<int, double>, double> riesz_ref_cache;

double riesz_ball_grid(int dim, double alpha, int cells) {
  const double r = std::pow(unit_ball_volume(dim), -1.0 / dim);
  GridSpec spec = GridSpec::centered(dim, cells, 2.0 * r * 1.25);
  GridDomain ball = make_ball(spec, BallSpec{{0, 0, 0}, r});
  return riesz_energy(ball, alpha);
}

}  // namespace

double ball_riesz_energy_unit(int dim, double alpha) {
  std::lock_guard<std::mutex> lock(riesz_ref_mutex);
  const auto key = std::make_pair(dim, alpha);
  auto it = riesz_ref_cache.find(key);
  if (it != riesz_ref_cache.end()) return it->second;
  const int coarse = (dim == 2) ? 192 : 48;
  const double v1 = riesz_ball_grid(dim, alpha, coarse);
  const double v2 = riesz_ball_grid(dim, alpha, 2 * coarse);
  const double v = v2 + (v2 - v1) / 3.0;  // Richardson, order-2 model
  riesz_ref_cache[key] = v;
  return v;
}

std::string ball_riesz_reference_provenance(int dim, double alpha) {
  std::ostringstream os;
  const int coarse = (dim == 2) ? 192 : 48;
  os << "richardson_p2(grids=" << coarse << "," << 2 * coarse << "; N=" << dim
     << "; alpha=" << alpha << ")";
  return os.str();
}

double Evaluator::torsion_energy(const GridDomain& dom) {
  const auto key = dom.content_hash();
  auto it = torsion_cache_.find(key);
  if (it != torsion_cache_.end()) return it->second;
  const double e = solve_torsion(dom, opts_).energy;
  torsion_cache_[key] = e;
  return e;
}

double Evaluator::eigenvalue(const GridDomain& dom) {
  const auto key = dom.content_hash();
  auto it = eigen_cache_.find(key);
  if (it != eigen_cache_.end()) return it->second;
  const double l = solve_first_eigen(dom, opts_).lambda1;
  eigen_cache_[key] = l;
  return l;
}

double Evaluator::riesz(const GridDomain& dom, double alpha) {
  const auto key = std::make_pair(dom.content_hash(), alpha);
  auto it = riesz_cache_.find(key);
  if (it != riesz_cache_.end()) return it->second;
  const double v = riesz_energy(dom, alpha);
  riesz_cache_[key] = v;
  return v;
}

double Evaluator::asymmetry(const GridDomain& dom) {
  const auto key = dom.content_hash();
  auto it = asym_cache_.find(key);
  if (it != asym_cache_.end()) return it->second;
  const double a = fraenkel_asymmetry(dom).value;
  asym_cache_[key] = a;
  return a;
}

FunctionalReport Evaluator::evaluate_all(const GridDomain& dom,
                                         const PenaltyParams& p,
                                         bool with_eigen) {
  p.validate(dom.spec.dim);
  FunctionalReport r;
  r.measure = measure(dom);
  r.energy = torsion_energy(dom);
  r.riesz = (p.epsilon > 0.0 || p.alpha > 0.0) ? riesz(dom, p.alpha) : 0.0;
  r.F = r.energy + p.epsilon * r.riesz;
  r.G = r.F + f_eta(r.measure, p.eta);
  if (with_eigen) {
    r.lambda1 = eigenvalue(dom);
    r.F_tilde = *r.lambda1 + p.epsilon * r.riesz;
  }
  r.asymmetry = asymmetry(dom);

  const int N = dom.spec.dim;
  const double m = r.measure;
  r.deficits["saint_venant"] =
      r.energy * std::pow(m, -double(N + 2) / N) - ball_torsion_energy_unit(N);
  if (r.lambda1)
    r.deficits["faber_krahn"] =
        std::pow(m, 2.0 / N) * (*r.lambda1) - ball_eigenvalue_unit(N);
  r.deficits["riesz"] = ball_riesz_energy_unit(N, p.alpha) -
                        r.riesz * std::pow(m, -double(N + p.alpha) / N);
  return r;
}

namespace {

DeficitReport make_deficit(const std::string& name, double deficit,
                           double asym) {
  DeficitReport d;
  d.name = name;
  d.deficit = deficit;
  d.asymmetry = asym;
  if (asym > 0.02) d.ratio = deficit / (asym * asym);
  return d;
}

}  // namespace

DeficitReport saint_venant_deficit(const GridDomain& dom, Evaluator& ev) {
  const int N = dom.spec.dim;
  const double m = measure(dom);
  const double d = ev.torsion_energy(dom) * std::pow(m, -double(N + 2) / N) -
                   ball_torsion_energy_unit(N);
  return make_deficit("saint_venant", d, ev.asymmetry(dom));
}

DeficitReport faber_krahn_deficit(const GridDomain& dom, Evaluator& ev) {
  const int N = dom.spec.dim;
  const double m = measure(dom);
  const double d =
      std::pow(m, 2.0 / N) * ev.eigenvalue(dom) - ball_eigenvalue_unit(N);
  return make_deficit("faber_krahn", d, ev.asymmetry(dom));
}

DeficitReport riesz_deficit(const GridDomain& dom, double alpha, Evaluator& ev) {
  const int N = dom.spec.dim;
  const double m = measure(dom);
  const double d = ball_riesz_energy_unit(N, alpha) -
                   ev.riesz(dom, alpha) * std::pow(m, -double(N + alpha) / N);
  return make_deficit("riesz", d, ev.asymmetry(dom));
}

KohlerJobinCheck kohler_jobin_check(const GridDomain& dom, Evaluator& ev) {
  const int N = dom.spec.dim;
  const double m = measure(dom);
  KohlerJobinCheck c;
  // scale-invariant forms: compare against the unit-measure ball
  const double lam_si = std::pow(m, 2.0 / N) * ev.eigenvalue(dom);
  const double e_si = ev.torsion_energy(dom) * std::pow(m, -double(N + 2) / N);
  c.lhs = lam_si / ball_eigenvalue_unit(N);
  c.rhs = std::pow(ball_torsion_energy_unit(N) / e_si, 2.0 / (N + 2));
  c.ok = c.lhs >= c.rhs - std::max(1e-6, 1e-3 * std::abs(c.rhs));
  return c;
}

double mass_to_epsilon_eigen(double m, int dim, double alpha) {
  if (!(m > 0.0)) throw PreconditionError("mass must be positive");
  return std::pow(std::pow(m, 1.0 / dim), dim + alpha + 2.0);
}

double mass_to_epsilon_torsion(double m, int dim, double alpha) {
  if (!(m > 0.0)) throw PreconditionError("mass must be positive");
  return std::pow(std::pow(m, 1.0 / dim), alpha - 2.0);
}

double penalty_margin_limit(double P, double Q, int dim, double alpha) {
  return P * (dim + 2.0) / dim - Q * (dim + alpha) / dim;
}

PenaltyMargin penalty_margin(double P, double Q, int dim, double alpha,
                             std::int64_t grid) {
  if (!(P > 0.0) || !(Q >= 0.0))
    throw PreconditionError("penalty margin needs P > 0, Q >= 0");
  if (grid < 1000) throw PreconditionError("margin grid must be >= 1000");
  PenaltyMargin out;
  out.inf_value = std::numeric_limits<double>::max();
  for (std::int64_t i = 0; i < grid; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(grid);
    const double tn = std::pow(t, dim);
    const double u = (P * (1.0 - std::pow(t, dim + 2)) -
                      Q * (1.0 - std::pow(t, dim + alpha))) /
                     (1.0 - tn);
    if (u < out.inf_value) {
      out.inf_value = u;
      out.argmin = t;
    }
  }
  const double at_one = penalty_margin_limit(P, Q, dim, alpha);
  if (at_one < out.inf_value) {
    out.inf_value = at_one;
    out.argmin = 1.0;
  }
  return out;
}

NecklaceBounds necklace_bounds(double delta, double epsilon, int dim,
                               double alpha, int grid, double spread_factor) {
  if (!(delta > 0.0 && delta < 1.0))
    throw PreconditionError("delta must lie in (0,1)");
  NecklaceBounds nb;
  nb.alpha_in_regime = (alpha > dim - 1 && alpha < dim);
  nb.k = static_cast<int>(std::floor(std::pow(delta, -double(dim))));
  if (nb.k < 2) throw PreconditionError("degenerate necklace: k < 2");

  NecklaceSpec neck;
  neck.ball_count = nb.k;
  neck.total_measure = 1.0;
  const double r = neck.ball_radius(dim);
  nb.ball_radius = r;
  nb.tangent_diameter = 2.0 * r * nb.k;
  neck.gap = spread_factor * 2.0 * r;

  const double span = (nb.k - 1) * neck.gap + 2.0 * r;
  GridSpec nspec = GridSpec::centered(dim, grid, span * 1.1);
  GridDomain necklace = make_necklace(nspec, neck);

  const double rb = std::pow(unit_ball_volume(dim), -1.0 / dim);
  GridSpec bspec = GridSpec::centered(dim, grid, 2.0 * rb * 1.25);
  GridDomain ball = make_ball(bspec, BallSpec{{0, 0, 0}, rb});

  SolverOptions opts;
  nb.E_ball = solve_torsion(ball, opts).energy;
  nb.V_ball = riesz_energy(ball, alpha);
  nb.E_necklace = solve_torsion(necklace, opts).energy;
  nb.V_necklace = riesz_energy(necklace, alpha);
  nb.numeric_ball_F = nb.E_ball + epsilon * nb.V_ball;
  nb.numeric_necklace_F = nb.E_necklace + epsilon * nb.V_necklace;
  nb.necklace_wins = nb.numeric_necklace_F < nb.numeric_ball_F;

  const double EB = ball_torsion_energy_unit(dim);
  const double VB = ball_riesz_energy_unit(dim, alpha);
  nb.lower_ball_side =
      EB + epsilon * std::pow(nb.tangent_diameter, alpha - dim);
  // point-mass interaction between distinct balls at the actual spacing
  const double mass = 1.0 / nb.k;
  for (int i = 0; i < nb.k; ++i)
    for (int j = 0; j < nb.k; ++j)
      if (i != j)
        nb.cross_term +=
            mass * mass * std::pow(std::abs(i - j) * neck.gap, alpha - dim);
  nb.upper_necklace_side =
      std::pow(double(nb.k), -2.0 / dim) * EB +
      epsilon * (std::pow(double(nb.k), -alpha / dim) * VB + nb.cross_term);

  const double dE = nb.E_necklace - nb.E_ball;   // > 0
  const double dV = nb.V_ball - nb.V_necklace;   // > 0
  nb.flip_epsilon = (dV > 0.0) ? dE / dV : std::numeric_limits<double>::infinity();
  return nb;
}

}  // namespace shapelab
