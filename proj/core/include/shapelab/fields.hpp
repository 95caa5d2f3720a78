#pragma once

#include <vector>

#include "shapelab/geometry.hpp"
#include "shapelab/grid.hpp"

namespace shapelab {

// Grid field, identically zero on unoccupied cells.
struct ScalarField {
  GridSpec spec;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(const GridSpec& s) : spec(s), values(s.cell_count(), 0.0) {}
  double at(const CellIndex& c) const {
    return spec.in_box(c) ? values[spec.flat(c)] : 0.0;
  }
};

struct TorsionSolution {
  ScalarField w;
  double energy = 0.0;  // E = -(1/2) h^N sum w, always <= 0
  double residual_norm = 0.0;
  int iterations = 0;
};

struct EigenSolution {
  ScalarField u;  // nonnegative, h^N sum u^2 = 1
  double lambda1 = 0.0;
  double residual_norm = 0.0;
  int iterations = 0;
};

struct FluxSample {
  CellIndex cell;
  Point point;
  double q = 0.0;
};

struct BoundaryFlux {
  std::vector<FluxSample> samples;
  int dropped = 0;  // boundary cells without a usable interior stencil
  bool from_torsion = true;
};

struct SolverOptions {
  double tol = 1e-8;        // relative residual (CG) / relative eigenvalue change
  int max_iter_factor = 50;  // CG cap = factor * cells_per_axis
  int max_power_iter = 200;
};

// Matrix-free masked Laplacian. The Dirichlet zero sits on the faces between
// occupied and unoccupied cells: each missing face neighbour contributes an
// extra +1 to the diagonal (ghost value -w_c). See the build notes in the
// repository docs for the boundary-locus error this accepts.
class MaskedLaplacian {
 public:
  explicit MaskedLaplacian(const GridDomain& dom);

  std::int64_t size() const { return static_cast<std::int64_t>(cells_.size()); }
  const std::vector<std::int64_t>& cells() const { return cells_; }
  const GridSpec& spec() const { return spec_; }

  void apply(const std::vector<double>& x, std::vector<double>& y) const;
  double rayleigh(const std::vector<double>& x) const;

  /// Diagonally preconditioned conjugate gradient; returns (residual, iters).
  std::pair<double, int> solve_cg(const std::vector<double>& rhs,
                                  std::vector<double>& x, double tol,
                                  int max_iter) const;

  ScalarField to_field(const std::vector<double>& x) const;
  std::vector<double> restrict_field(const ScalarField& f) const;

 private:
  GridSpec spec_;
  std::vector<std::int64_t> cells_;            // flat ids of occupied cells
  std::vector<std::int64_t> cell_rank_;        // flat id -> rank or -1
  std::vector<std::array<std::int64_t, 6>> nb_;  // rank of face nbs or -1
  std::vector<double> diag_;                   // (2N + missing) / h^2
};

/// -Delta w = 1 on the occupied cells, zero Dirichlet data on the boundary
/// faces. Disconnected domains are allowed: the energies of the components add.
TorsionSolution solve_torsion(const GridDomain& dom, const SolverOptions& opts = {});

/// First Dirichlet eigenpair by inverse power iteration (all-ones start,
/// CG inner solves, Rayleigh-quotient stopping). The domain must be connected.
EigenSolution solve_first_eigen(const GridDomain& dom, const SolverOptions& opts = {});

struct FluxOptions {
  // Interior sampling depth in cells and smoothing window; the window is
  // max(3h, smooth_factor * ball_radius(|Omega|)).
  int interior_depth = 2;
  double smooth_factor = 0.1;
  bool smooth = true;
};

/// Normal derivative magnitude q at each boundary cell, reconstructed from
/// interior cells: central gradient two cells inside along the inward normal,
/// transported to the boundary with the field's first-order profile
/// (torsion: |grad w|(d) ~ q + d, eigenfunction: ~ q(1 + kappa d)) and
/// averaged over a boundary window proportional to the domain scale.
BoundaryFlux boundary_flux(const TorsionSolution& sol, const GridDomain& dom,
                           const FluxOptions& opts = {});
BoundaryFlux boundary_flux(const EigenSolution& sol, const GridDomain& dom,
                           const FluxOptions& opts = {});

struct DensitySample {
  Point point;
  double ratio = 0.0;
};

struct DensityScan {
  std::vector<DensitySample> samples;
  double min_ratio = 0.0;
  double max_ratio = 0.0;
};

/// |Omega cap B_rho(x0)| / |B_rho| at every boundary cell, counted on cells.
DensityScan density_estimate_scan(const GridDomain& dom, double rho);

/// Central-difference |grad f|^2 with ghost reflection (zero at faces), as a
/// per-cell field; shared by the slice statistics and diagnostics.
ScalarField gradient_sq_field(const ScalarField& f, const GridDomain& dom);

}  // namespace shapelab
