#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "shapelab/grid.hpp"

namespace shapelab {

// Star-shaped planar domain r(theta) = R*(1 + phi(theta)) with
// phi = a0 + sum_{k>=1} a_k cos(k theta) + b_k sin(k theta).
// cos_coeff[k] = a_k (index 0 is the constant term), sin_coeff[k] = b_k
// (index 0 unused). Fixed to N = 2.
struct StarBoundary {
  double base_radius = 1.0;
  Point center{0.0, 0.0, 0.0};
  std::vector<double> cos_coeff{0.0};
  std::vector<double> sin_coeff{0.0};

  int max_mode() const {
    return static_cast<int>(std::max(cos_coeff.size(), sin_coeff.size())) - 1;
  }
  double coefficient(int mode, bool sine) const;
  void set_coefficient(int mode, bool sine, double value);
  double phi(double theta) const;
  double radius(double theta) const { return base_radius * (1.0 + phi(theta)); }
  /// min of r over >= 16*K uniform samples; must stay positive.
  double min_radius() const;
  double max_radius() const;
  /// Exact area (1/2) * integral r^2 dtheta via the Fourier identity.
  double analytic_area() const;
  /// Scale base_radius so that analytic_area() == target.
  void scale_to_area(double target);
};

struct BallSpec {
  Point center{0.0, 0.0, 0.0};
  double radius = 1.0;

  static BallSpec with_measure(int dim, double measure, Point center = {0, 0, 0});
  double measure(int dim) const;
};

// k equal balls with centers on the e1 axis at spacing q, total measure fixed.
struct NecklaceSpec {
  int ball_count = 1;
  double gap = 0.0;  // center-to-center spacing q
  double total_measure = 1.0;
  Point center{0.0, 0.0, 0.0};  // centroid of the chain

  double ball_radius(int dim) const;
};

// Two ball lobes joined by a straight neck, plus an optional thin tail
// sticking out of the left lobe in the -e1 direction. Test fixture for the
// tail-cutting machinery.
struct DumbbellSpec {
  Point center{0.0, 0.0, 0.0};  // midpoint between the lobe centers
  double lobe_radius_left = 0.4;
  double lobe_radius_right = 0.4;
  double lobe_separation = 1.2;  // distance between lobe centers
  double neck_half_width = 0.1;
  double tail_length = 0.0;
  double tail_half_width = 0.05;
};

// -- constructors -----------------------------------------------------------

GridDomain rasterize_star(const StarBoundary& boundary, const GridSpec& spec);
GridDomain make_ball(const GridSpec& spec, const BallSpec& ball);
GridDomain make_necklace(const GridSpec& spec, const NecklaceSpec& neck);
GridDomain make_dumbbell_tail(const GridSpec& spec, const DumbbellSpec& params);

// -- set measures and algebra ----------------------------------------------

double measure(const GridDomain& dom);
GridDomain rescale_to_measure(const GridDomain& dom, double target);
double symmetric_difference_measure(const GridDomain& a, const GridDomain& b);
double intersection_measure(const GridDomain& a, const GridDomain& b);

// -- shape statistics --------------------------------------------------------

struct AsymmetryResult {
  double value = 0.0;
  BallSpec best_ball;
};

/// Fraenkel asymmetry min_x |Omega /\ B(x)| / |Omega| over balls of equal
/// measure. Centroid-seeded coarse scan plus pattern search refined to h/4.
AsymmetryResult fraenkel_asymmetry(const GridDomain& dom);

/// Exhaustive scan on a half-cell center lattice inside a window around the
/// centroid; slow, used as the test oracle for fraenkel_asymmetry.
AsymmetryResult fraenkel_asymmetry_scan(const GridDomain& dom,
                                        double window_radius, double step);

double hausdorff_boundary_distance(const GridDomain& a, const GridDomain& b);
double diameter(const GridDomain& dom);

/// Discrete surrogate of the internal delta-ball condition: morphological
/// opening by the radius-delta cell ball must not retreat from the boundary
/// by more than one cell layer (slack h*sqrt(N)).
bool check_internal_ball_condition(const GridDomain& dom, double delta);

/// Morphological opening by the discrete ball of radius delta (exposed for
/// tests).
GridDomain morphological_opening(const GridDomain& dom, double delta);

/// Seeded random star boundary with modes in [min_mode, max_mode], coefficient
/// amplitudes below max_amp, rejection-sampled for a positive radius and a
/// total perturbation of at least min_total; scaled to unit area. The corpus
/// generator and the acceptance suite share this stream.
StarBoundary random_star_boundary(std::uint64_t seed, int min_mode = 2,
                                  int max_mode = 6, double max_amp = 0.08,
                                  double min_total = 0.125);

}  // namespace shapelab
