#pragma once

#include <map>
#include <optional>
#include <string>

#include "shapelab/fields.hpp"
#include "shapelab/geometry.hpp"
#include "shapelab/riesz.hpp"

namespace shapelab {

struct PenaltyParams {
  double eta = 0.5;       // in (0, 1)
  double epsilon = 0.0;   // >= 0
  double alpha = 1.0;     // in (0, N)
  double container_radius = 0.0;  // 0: use the grid box half-diagonal

  void validate(int dim) const;
};

// Piecewise linear volume penalty: slope eta below measure 1, slope 1/eta above.
double f_eta(double s, double eta);

struct FunctionalReport {
  double measure = 0.0;
  double energy = 0.0;              // E
  std::optional<double> lambda1;    // first eigenvalue when requested
  double riesz = 0.0;               // V_alpha
  double F = 0.0;                   // E + eps V
  std::optional<double> F_tilde;    // lambda1 + eps V
  double G = 0.0;                   // F + f_eta(|Omega|)
  double asymmetry = 0.0;
  std::map<std::string, double> deficits;
};

struct DeficitReport {
  std::string name;
  double deficit = 0.0;
  double asymmetry = 0.0;
  std::optional<double> ratio;  // deficit / asymmetry^2 when asymmetry > 0.02
};

// -- ball reference values ----------------------------------------------------

/// E of the ball with unit measure (closed form).
double ball_torsion_energy_unit(int dim);
/// lambda1 of the ball with unit measure (Bessel zero / pi^2).
double ball_eigenvalue_unit(int dim);
/// V_alpha of the ball with unit measure: one-time grid evaluation with
/// Richardson extrapolation over two grids, cached per (N, alpha).
double ball_riesz_energy_unit(int dim, double alpha);
/// Provenance string for the Riesz ball reference (grids used, order).
std::string ball_riesz_reference_provenance(int dim, double alpha);

double bessel_j01();  // first zero of J_0

// -- evaluation ---------------------------------------------------------------

class Evaluator {
 public:
  explicit Evaluator(SolverOptions opts = {}) : opts_(opts) {}

  FunctionalReport evaluate_all(const GridDomain& dom, const PenaltyParams& p,
                                bool with_eigen);

  double torsion_energy(const GridDomain& dom);
  double eigenvalue(const GridDomain& dom);
  double riesz(const GridDomain& dom, double alpha);
  double asymmetry(const GridDomain& dom);

  const SolverOptions& options() const { return opts_; }

 private:
  SolverOptions opts_;
  std::map<std::uint64_t, double> torsion_cache_;
  std::map<std::uint64_t, double> eigen_cache_;
  std::map<std::pair<std::uint64_t, double>, double> riesz_cache_;
  std::map<std::uint64_t, double> asym_cache_;
};

DeficitReport saint_venant_deficit(const GridDomain& dom, Evaluator& ev);
DeficitReport faber_krahn_deficit(const GridDomain& dom, Evaluator& ev);
DeficitReport riesz_deficit(const GridDomain& dom, double alpha, Evaluator& ev);

struct KohlerJobinCheck {
  double lhs = 0.0;  // lambda1(Omega)/lambda1(B)
  double rhs = 0.0;  // ((-E(B))/(-E(Omega)))^(2/(N+2))
  bool ok = false;
};
KohlerJobinCheck kohler_jobin_check(const GridDomain& dom, Evaluator& ev);

// -- scaling maps (mass <-> epsilon) -----------------------------------------

/// Eigenvalue functional: minimizing lambda1 + V at mass m equals minimizing
/// lambda1 + eps V at mass 1 with eps = t^(N+alpha+2), t = m^(1/N).
double mass_to_epsilon_eigen(double m, int dim, double alpha);
/// Torsion functional: eps = t^(alpha-2); decreasing in m for alpha < 2.
double mass_to_epsilon_torsion(double m, int dim, double alpha);

// -- the penalty margin u(t) --------------------------------------------------

struct PenaltyMargin {
  double inf_value = 0.0;
  double argmin = 0.0;
};

/// u(t) = (P(1-t^(N+2)) - Q(1-t^(N+alpha))) / (1-t^N) on a uniform grid over
/// [0,1) with the analytic limit value at t=1 appended.
PenaltyMargin penalty_margin(double P, double Q, int dim, double alpha,
                             std::int64_t grid);
double penalty_margin_limit(double P, double Q, int dim, double alpha);

// -- necklace vs ball bounds --------------------------------------------------

struct NecklaceBounds {
  int k = 0;
  double ball_radius = 0.0;        // radius of one necklace ball
  double tangent_diameter = 0.0;   // 2 r k, the U(delta) chain diameter
  // numeric values on rasterized sets
  double E_ball = 0.0, V_ball = 0.0;
  double E_necklace = 0.0, V_necklace = 0.0;
  double numeric_ball_F = 0.0, numeric_necklace_F = 0.0;
  // analytic sides at the given epsilon
  double lower_ball_side = 0.0;      // E(B) + eps * diam^(alpha-N)
  double cross_term = 0.0;           // point-mass sum over distinct ball pairs
  double upper_necklace_side = 0.0;  // k^(-2/N)E(B) + eps(k^(-a/N)V(B) + cross)
  bool necklace_wins = false;
  bool alpha_in_regime = true;  // alpha in (N-1, N)
  // F is linear in epsilon, so the flip point is closed-form
  double flip_epsilon = 0.0;
};

/// Evaluates the competing bounds at k = floor(delta^-N) on rasterized sets
/// and with the analytic formulas. `grid` controls the evaluation resolution;
/// the necklace is spread to spacing spread_factor * 2r, and the analytic
/// upper side carries the point-mass interaction of the spread balls.
NecklaceBounds necklace_bounds(double delta, double epsilon, int dim,
                               double alpha, int grid = 384,
                               double spread_factor = 3.0);

}  // namespace shapelab
