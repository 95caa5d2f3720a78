#pragma once

#include <map>
#include <string>
#include <vector>

#include "shapelab/fields.hpp"
#include "shapelab/grid.hpp"

namespace shapelab {

// Cell-averaged Riesz kernel |x-y|^(alpha-N). Offsets with |d|_inf <= 1 carry
// exact cell-pair integrals from dyadic subdivision quadrature (the coincident
// pair closes through the kernel's scaling identity); farther offsets use the
// point value at the cell centers.
struct RieszKernelTable {
  int dim = 2;
  double alpha = 1.0;
  double h = 1.0;
  int cells = 0;
  int correction_order = 4;
  // J(d): normalized pair integral over unit cells at offset d, |d|_inf <= 1.
  std::map<std::array<int, 3>, double> near_corrections;

  double self_cell() const;  // kernel value at offset 0 (potential units)
  /// Kernel value for a lattice offset, in potential units (v = h^N sum k chi).
  double value(const CellIndex& offset) const;

  static RieszKernelTable build(int dim, double alpha, const GridSpec& spec,
                                int correction_order = 4);
  std::string cache_key() const;
};

struct RieszPotentialField {
  ScalarField v;   // potential over the whole box
  double energy = 0.0;  // V_alpha = h^N sum_Omega v >= 0
};

/// Riesz potential v_Omega over the whole grid box by zero-padded FFT
/// convolution with the corrected kernel; alpha in (0, N).
RieszPotentialField riesz_potential(const GridDomain& dom, double alpha);
RieszPotentialField riesz_potential(const GridDomain& dom,
                                    const RieszKernelTable& table);

double riesz_energy(const GridDomain& dom, double alpha);

/// O(M^2) pairwise summation with the same kernel table; test oracle for the
/// FFT path.
double riesz_energy_bruteforce(const GridDomain& dom, const RieszKernelTable& table);

/// Gradient of v_Omega at the grid cell nearest to x, by singular-integral
/// evaluation (near cells through subdivided moment quadrature, far cells by
/// midpoint). Requires alpha in (1, N): below 1 the gradient integral is not
/// absolutely convergent.
std::array<double, 3> riesz_potential_gradient(const GridDomain& dom,
                                               double alpha, const Point& x);

/// C0(N, alpha) = int_{B} |z|^(alpha-N) dz over the ball of unit measure,
/// clamped below by 1 (the clamp is reported through `clamped` and never
/// binds for N in {2,3}).
double c0_constant(int dim, double alpha, bool* clamped = nullptr);

struct DifferenceBoundCheck {
  double lhs = 0.0;  // V(b) - V(a)
  double rhs = 0.0;  // C0 |a/\b| (|a|^(a/N) + |b|^(a/N))
  bool ok = false;
};

/// The kernel difference bound V(F) - V(Omega) <= C0 |Omega/\F| [...]
DifferenceBoundCheck km_difference_bound_check(const GridDomain& a,
                                               const GridDomain& b, double alpha);

/// Directory used for on-disk kernel-table caching; empty disables caching.
/// Controlled by the SHAPELAB_KERNEL_CACHE environment variable.
std::string kernel_cache_dir();

}  // namespace shapelab
