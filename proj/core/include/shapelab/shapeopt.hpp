#pragma once

#include <vector>

#include "shapelab/functionals.hpp"

namespace shapelab {

enum class ObjectiveKind {
  kTorsion,  // F  = E + eps V
  kEigen,    // F~ = lambda1 + eps V
  kPenalty,  // G  = E + eps V + f_eta(|Omega|)
};

enum class VolumeMode {
  kProjection,  // scale-invariant objective, radius renormalized each step
  kPenalty,     // volume handled by f_eta only
};

struct DescentConfig {
  PenaltyParams params;
  ObjectiveKind objective = ObjectiveKind::kTorsion;
  VolumeMode volume_mode = VolumeMode::kProjection;
  int max_mode = 4;  // K >= 2
  bool backtracking = true;
  double initial_step = 0.05;
  double shrink = 0.5;
  double armijo_c = 1e-4;
  int max_iterations = 60;
  double coeff_tol = 1e-4;  // stop on max coefficient change below this
  GridSpec grid = GridSpec::centered(2, 128, 3.0);
  SolverOptions solver;
  bool trace_residual = false;  // optimality residual per accepted iterate

  void validate() const;
};

// Coefficient vector layout used by the gradient: [a_0, a_1..a_K, b_1..b_K].
struct CoefficientVector {
  int max_mode = 0;
  std::vector<double> values;  // size 2K+1

  static CoefficientVector from_boundary(const StarBoundary& b, int K);
  void apply_to(StarBoundary& b) const;
  double& a(int k) { return values[k]; }
  double& b(int k) { return values[max_mode + k]; }
  double norm_inf() const;
};

struct OptimalityReport {
  double lambda = 0.0;  // boundary mean of q^2 - eps v
  std::vector<double> residuals;  // q^2 - eps v - lambda per sample
  double residual_std = 0.0;
  double relative_std = 0.0;  // residual_std / |lambda|
  int samples = 0;
};

struct SphericalNorms {
  double l2_sq = 0.0;      // R * int phi^2 dtheta
  double h_half_sq = 0.0;  // pi R sum (1+|k|) |c_k|^2
  std::vector<double> spectrum;  // |c_k| for k = 0..K
};

struct DescentTraceRow {
  int iteration = 0;
  double objective = 0.0;
  double energy = 0.0;       // E or lambda1, per the objective
  double riesz = 0.0;
  double measure = 0.0;
  double asymmetry = 0.0;
  double residual_std = 0.0;  // NaN unless trace_residual
  double step = 0.0;
};

struct DescentResult {
  StarBoundary final_boundary;
  std::vector<DescentTraceRow> trace;
  bool converged = false;
  bool stagnated = false;  // backtracking underflow
  std::string stop_reason;
};

/// Central finite-difference gradient of the configured objective with
/// respect to the Fourier coefficients (step max(1e-3, 10h/R)), one
/// re-rasterization and re-solve per evaluation.
CoefficientVector shape_gradient(const StarBoundary& boundary,
                                 const DescentConfig& config, Evaluator& ev);

/// Objective value for a boundary under the configured volume handling.
double descent_objective(const StarBoundary& boundary,
                         const DescentConfig& config, Evaluator& ev);

DescentResult descend(const StarBoundary& start, const DescentConfig& config);

/// First-order optimality diagnostic: q_u^2 - eps v_Omega sampled on the
/// boundary (q from the torsion flux), Lambda = boundary mean.
OptimalityReport optimality_residual(const GridDomain& dom,
                                     const PenaltyParams& params,
                                     const SolverOptions& opts = {});

SphericalNorms nearly_spherical_norms(const StarBoundary& boundary);

struct QuadraticFit {
  double e_exponent = 0.0;
  double e_r_squared = 0.0;
  double v_exponent = 0.0;
  double v_r_squared = 0.0;
  int excluded = 0;  // non-positive deficit samples dropped
};

/// Log-log fit of the E- and V-deficits of single-mode perturbations against
/// the amplitude. Deficits are measured against the same-grid rasterized ball
/// so that the common discretization bias cancels.
QuadraticFit deficit_quadratic_fit(int mode, const std::vector<double>& amplitudes,
                                   const PenaltyParams& params,
                                   const GridSpec& grid);

}  // namespace shapelab
