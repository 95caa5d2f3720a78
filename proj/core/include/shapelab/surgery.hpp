#pragma once

#include <string>
#include <vector>

#include "shapelab/functionals.hpp"

namespace shapelab {

// Per-slice tail statistics along a signed coordinate direction. Slices are
// cell layers; index 0 is the layer nearest the tail end. For direction sign
// -1 the tail extends toward decreasing coordinates, so cumulative sums run
// from the far end of the tail toward the bulk.
struct SliceStats {
  Direction direction;
  int dim = 2;
  std::vector<double> t;        // slice center coordinates
  std::vector<double> eps_t;    // (N-1)-measure of the slice
  std::vector<double> delta_t;  // slice Dirichlet energy of u
  std::vector<double> mu_t;     // slice mass of u^2
  std::vector<double> m_t;      // tail volume up to (excluding) the slice
  std::vector<double> phi_t;    // tail Dirichlet energy up to the slice

  std::size_t size() const { return t.size(); }
};

enum class TrichotomyTag {
  kCond1,  // max(eps, delta) > 1
  kCond2,  // m <= C4 (eps + delta) eps^(1/(N-1))
  kCond3,  // neither: the cut strictly helps
};

std::string to_string(TrichotomyTag tag);

struct TailCutResult {
  bool cut_performed = false;  // false: tail already short (cond3 never held)
  double t_star = 0.0;
  TrichotomyTag label = TrichotomyTag::kCond2;
  GridDomain cut_domain;       // Omega~(t*): kept part plus cylinder
  GridDomain rescaled_domain;  // Omega^(t*): rescaled to unit measure
  double lambda_before = 0.0, lambda_after = 0.0;
  double riesz_before = 0.0, riesz_after = 0.0;
  double f_tilde_before = 0.0, f_tilde_after = 0.0;
  // measured threshold: the cut improves lambda + eps V for eps below this
  double epsilon_bar = 0.0;
  bool contract_ok = true;  // lambda_after <= lambda_before + slack
};

/// Per-slice sums of the eigenfunction along `direction`:
/// eps(t) = h^(N-1) * occupied cells, delta/mu from the discrete gradient and
/// values of u, m and phi by cumulative sums from the tail end.
SliceStats slice_statistics(const GridDomain& dom, const EigenSolution& eig,
                            Direction direction);

/// Cut the domain at slice-coordinate t and glue the interpolation cylinder
/// Q(t) = (t - sigma, t) x Omega_t, sigma = eps(t)^(1/(N-1)) snapped to at
/// least one cell; the returned field equals u on the kept part and the
/// linear ramp (x - t + sigma)/sigma * u(t, y) on the cylinder.
std::pair<GridDomain, ScalarField> build_cut_extension(const GridDomain& dom,
                                                       const EigenSolution& eig,
                                                       double t,
                                                       Direction direction);

struct RayleighBoundCheck {
  double rq_tilde = 0.0;     // Rayleigh quotient of the glued field
  double lambda_tilde = 0.0; // fresh eigensolve on the cut domain
  double measured_c3_ratio = 0.0;  // (rq - lambda(Omega)) / (eps^(1/(N-1)) delta)
  bool ok = false;           // lambda_tilde <= rq_tilde (variational principle)
};

RayleighBoundCheck rayleigh_bound_check(const GridDomain& dom,
                                        const EigenSolution& eig, double t,
                                        Direction direction,
                                        const SolverOptions& opts = {});

TrichotomyTag classify_trichotomy(const SliceStats& stats, std::size_t slice,
                                  double C4);

struct TailCutOptions {
  double C4 = 10.0;
  double slack = 1e-6;        // relative, for the lambda contract
  SolverOptions solver;
};

/// Find the cond3 slice closest to the bulk in the tail (beyond one
/// ball-radius from the best-ball center), pick the strongest cut in the
/// unit-length window behind it, build the extension and rescale to unit
/// measure.
TailCutResult apply_tail_cut(const GridDomain& dom, const EigenSolution& eig,
                             Direction direction, const PenaltyParams& params,
                             const TailCutOptions& opts = {});

struct SweepLogRow {
  Direction direction;
  bool cut_performed = false;
  double t_star = 0.0;
  std::string label;
  double eps_t = 0.0, delta_t = 0.0, m_t = 0.0;
  double lambda_before = 0.0, lambda_after = 0.0;
  double f_tilde_before = 0.0, f_tilde_after = 0.0;
  double epsilon_bar = 0.0;
  double diameter_after = 0.0;
};

struct SweepResult {
  GridDomain domain;
  std::vector<SweepLogRow> log;
  double initial_diameter = 0.0;
  double final_diameter = 0.0;
  double initial_lambda = 0.0;
  double final_lambda = 0.0;
  double initial_f_tilde = 0.0;
  double final_f_tilde = 0.0;
};

/// Apply the tail cut in the directions -e1, +e1, -e2, ..., +eN, each pass
/// consuming the previous result.
SweepResult surgery_sweep(const GridDomain& dom, const PenaltyParams& params,
                          const TailCutOptions& opts = {});

}  // namespace shapelab
