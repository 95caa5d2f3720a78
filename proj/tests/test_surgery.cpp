#include <doctest.h>

#include <cmath>

#include "shapelab/surgery.hpp"
#include "test_helpers.hpp"

using namespace shapelab;
using namespace shapelab::testing;

namespace {

// unit square [0,1]^2 inside a padded box (the interpolation cylinder of a
// full slice has length eps^(1/(N-1)) = 1 and needs the margin)
GridDomain padded_square(int cells = 192, double box = 2.4) {
  GridSpec spec = GridSpec::centered(2, cells, box);
  GridDomain dom(spec);
  for (std::int64_t id = 0; id < spec.cell_count(); ++id) {
    const Point p = spec.cell_center(spec.unflat(id));
    if (p[0] > 0.0 && p[0] < 1.0 && p[1] > 0.0 && p[1] < 1.0)
      dom.mask[id] = 1;
  }
  return dom;
}

// asymmetric dumbbell with a long thin tail, unit measure; asymmetric lobes
// keep the spectral gap away from degeneracy
GridDomain tail_fixture(int cells = 192, double box = 4.5) {
  GridSpec spec = GridSpec::centered(2, cells, box);
  DumbbellSpec db;
  db.center = {0.4, 0.0, 0.0};
  db.lobe_radius_left = 0.34;
  db.lobe_radius_right = 0.46;
  db.lobe_separation = 1.0;
  db.neck_half_width = 0.10;
  db.tail_length = 1.5;
  db.tail_half_width = 0.045;
  GridDomain dom = make_dumbbell_tail(spec, db);
  return rescale_to_measure(dom, 1.0);
}

}  // namespace

TEST_CASE("slice statistics on the unit square") {
  GridDomain square = padded_square();
  auto eig = solve_first_eigen(square);
  auto stats = slice_statistics(square, eig, {0, -1});
  const double h = square.spec.h;
  const int n = square.spec.cells;
  REQUIRE(stats.size() == static_cast<std::size_t>(n));

  int occupied_slices = 0;
  for (int j = 0; j < n; ++j) {
    if (stats.eps_t[j] > 0.0) {
      ++occupied_slices;
      CHECK(stats.eps_t[j] == doctest::Approx(1.0));
    }
  }
  CHECK(occupied_slices == doctest::Approx(1.0 / h).epsilon(0.02));

  // interior slices carry delta(t) = 2 pi^2 (|grad u|^2 integrated in y)
  for (int j = 0; j < n; ++j) {
    const double t = stats.t[j];
    if (t > 0.25 && t < 0.75)
      CHECK(stats.delta_t[j] == doctest::Approx(2.0 * kPi * kPi).epsilon(0.02));
  }
  // cumulative consistency
  for (int j = 0; j + 1 < n; ++j) {
    CHECK(std::abs(stats.m_t[j + 1] - stats.m_t[j] - stats.eps_t[j] * h) <
          h * h);
    CHECK(std::abs(stats.phi_t[j + 1] - stats.phi_t[j] -
                   stats.delta_t[j] * h) < 1e-9);
  }
  // slice Faber-Krahn bound: mu <= eps^2 delta / pi^2 in the plane
  for (int j = 0; j < n; ++j) {
    if (stats.eps_t[j] > 0.0 && stats.delta_t[j] > 0.0) {
      const double ratio =
          stats.mu_t[j] / (stats.eps_t[j] * stats.eps_t[j] * stats.delta_t[j]);
      CHECK(ratio < 0.2);
    }
  }
}

TEST_CASE("cut extension: ramp endpoints") {
  GridDomain square = padded_square();
  auto eig = solve_first_eigen(square);
  Direction dir{0, -1};
  auto stats = slice_statistics(square, eig, dir);
  const GridSpec& g = square.spec;
  // cut one quarter into the square
  const int i = g.cell_of({0.25, 0.5, 0})[0];
  const double t = g.center(0, i);
  auto [cut, field] = build_cut_extension(square, eig, t, dir);

  const double eps = stats.eps_t[i];  // sign -1: slice j == layer i
  const int sigma_cells =
      std::max(1, static_cast<int>(std::llround(eps / g.h)));
  const int jmid = g.cell_of({0.25, 0.5, 0})[1];
  // kept side carries u unchanged, including the cut slice itself
  for (int j = 0; j < g.cells; ++j)
    CHECK(field.at({i, j, 0}) == eig.u.at({i, j, 0}));
  // the cylinder ramp: layer i-s has factor (sigma - s + 1/2)/sigma
  for (int s = 1; s <= sigma_cells; ++s) {
    const double f = (sigma_cells - s + 0.5) / sigma_cells;
    CHECK(field.at({i - s, jmid, 0}) ==
          doctest::Approx(f * eig.u.at({i, jmid, 0})));
  }
  // the ramp vanishes at the outer cylinder face: the outermost layer holds
  // the half-cell value 0.5/sigma * u
  CHECK(field.at({i - sigma_cells, jmid, 0}) ==
        doctest::Approx(0.5 / sigma_cells * eig.u.at({i, jmid, 0})));
  // everything beyond the cylinder is gone
  for (int layer = 0; layer < i - sigma_cells; ++layer)
    for (int j = 0; j < g.cells; ++j) CHECK(!cut.occupied({layer, j, 0}));

  // cylinder Dirichlet energy against eps^(1/(N-1)) delta: the measured
  // constant is finite and order one
  ScalarField grad2 = gradient_sq_field(field, cut);
  double cyl_energy = 0.0;
  for (int layer = i - sigma_cells; layer < i; ++layer)
    for (int j = 0; j < g.cells; ++j)
      cyl_energy += grad2.at({layer, j, 0}) * g.cell_volume();
  const double c2_ratio = cyl_energy / (eps * stats.delta_t[i]);
  CHECK(c2_ratio > 0.0);
  CHECK(c2_ratio < 100.0);
}

TEST_CASE("rayleigh bound: variational principle on square cuts") {
  GridDomain square = padded_square();
  auto eig = solve_first_eigen(square);
  Direction dir{0, -1};
  auto stats = slice_statistics(square, eig, dir);
  for (double frac : {0.1, 0.3}) {
    const double t = square.spec.center(
        0, square.spec.cell_of({frac, 0.5, 0})[0]);
    auto check = rayleigh_bound_check(square, eig, t, dir);
    CHECK(check.ok);
    CHECK(check.lambda_tilde <= check.rq_tilde * (1.0 + 1e-6));
    CHECK(std::isfinite(check.measured_c3_ratio));
  }
}

TEST_CASE("rayleigh bound: C3 ratio stable across grids") {
  double ratios[2];
  int idx = 0;
  for (int cells : {128, 256}) {
    GridDomain square = padded_square(cells, 2.4);
    auto eig = solve_first_eigen(square);
    Direction dir{0, -1};
    const double t =
        square.spec.center(0, square.spec.cell_of({0.1, 0.5, 0})[0]);
    auto check = rayleigh_bound_check(square, eig, t, dir);
    ratios[idx++] = check.measured_c3_ratio;
  }
  CHECK(ratios[0] == doctest::Approx(ratios[1]).epsilon(0.2));
}

TEST_CASE("rayleigh bound: empty tail leaves the domain unchanged") {
  GridSpec spec = GridSpec::centered(2, 96, 2.0);
  GridDomain disk = make_ball(spec, BallSpec{{0, 0, 0}, 0.6});
  auto eig = solve_first_eigen(disk);
  auto check = rayleigh_bound_check(disk, eig, -0.8, {0, -1});
  CHECK(check.rq_tilde == doctest::Approx(eig.lambda1).epsilon(1e-6));
  CHECK(check.ok);
}

TEST_CASE("trichotomy classification") {
  GridDomain square = padded_square();
  auto eigs = solve_first_eigen(square);
  auto stats = slice_statistics(square, eigs, {0, -1});
  // mid-square slice: eps = 1 (not > 1), delta = 2 pi^2 > 1 -> cond1
  const int mid = square.spec.cell_of({0.5, 0.5, 0})[0];
  CHECK(classify_trichotomy(stats, mid, 10.0) == TrichotomyTag::kCond1);

  // ball tail: the tail mass is tiny, so no slice near the rim can reach
  // cond3 (the staircase corners genuinely inflate the discrete delta, so
  // rim slices alternate between cond1 and cond2)
  GridSpec spec = GridSpec::centered(2, 128, 1.5);
  GridDomain ball = make_ball(spec, BallSpec::with_measure(2, 1.0, {0, 0, 0}));
  auto eigb = solve_first_eigen(ball);
  auto bstats = slice_statistics(ball, eigb, {0, -1});
  std::size_t first_occupied = 0;
  while (bstats.eps_t[first_occupied] == 0.0) ++first_occupied;
  for (std::size_t j = first_occupied; j < first_occupied + 8; ++j)
    CHECK(classify_trichotomy(bstats, j, 10.0) != TrichotomyTag::kCond3);
  // far from the rim the slice mass dominates: m(t) stays under the cond2
  // bound whenever delta is small; verify the partition on synthetic values
  SliceStats synth;
  synth.dim = 2;
  synth.direction = {0, -1};
  synth.t = {0.0};
  synth.eps_t = {0.1};
  synth.delta_t = {0.05};
  synth.m_t = {0.01};
  synth.mu_t = {0.0};
  synth.phi_t = {0.0};
  CHECK(classify_trichotomy(synth, 0, 10.0) == TrichotomyTag::kCond2);
  synth.m_t = {0.5};
  CHECK(classify_trichotomy(synth, 0, 10.0) == TrichotomyTag::kCond3);
  synth.delta_t = {1.5};
  CHECK(classify_trichotomy(synth, 0, 10.0) == TrichotomyTag::kCond1);

  // dumbbell tail base -> cond3 for the default C4
  GridDomain fixture = tail_fixture();
  auto eigf = solve_first_eigen(fixture);
  auto fstats = slice_statistics(fixture, eigf, {0, -1});
  bool found_cond3 = false;
  for (std::size_t j = 0; j < fstats.size(); ++j) {
    if (fstats.eps_t[j] > 0.0 &&
        classify_trichotomy(fstats, j, 10.0) == TrichotomyTag::kCond3)
      found_cond3 = true;
  }
  CHECK(found_cond3);

  // C4 moves tags only between cond2 and cond3
  for (std::size_t j = 0; j < fstats.size(); ++j) {
    auto lo = classify_trichotomy(fstats, j, 5.0);
    auto hi = classify_trichotomy(fstats, j, 20.0);
    if (lo == TrichotomyTag::kCond1) CHECK(hi == TrichotomyTag::kCond1);
    if (lo == TrichotomyTag::kCond2) CHECK(hi == TrichotomyTag::kCond2);
    if (lo == TrichotomyTag::kCond3) CHECK(hi != TrichotomyTag::kCond1);
  }
}

TEST_CASE("apply_tail_cut: ball untouched, tail fixture improves") {
  PenaltyParams p;
  p.alpha = 1.5;
  p.epsilon = 1e-3;

  GridSpec spec = GridSpec::centered(2, 128, 1.5);
  GridDomain ball = make_ball(spec, BallSpec::with_measure(2, 1.0, {0, 0, 0}));
  auto eigb = solve_first_eigen(ball);
  auto resb = apply_tail_cut(ball, eigb, {0, -1}, p);
  CHECK_FALSE(resb.cut_performed);
  CHECK(resb.lambda_after == resb.lambda_before);

  GridDomain fixture = tail_fixture();
  auto eigf = solve_first_eigen(fixture);
  auto res = apply_tail_cut(fixture, eigf, {0, -1}, p);
  REQUIRE(res.cut_performed);
  CHECK(res.label == TrichotomyTag::kCond3);
  CHECK(res.contract_ok);
  CHECK(res.lambda_after < res.lambda_before);
  CHECK(res.f_tilde_after <= res.f_tilde_before + 1e-9);
  CHECK(measure(res.rescaled_domain) == doctest::Approx(1.0).epsilon(0.02));
  // the measured crossover: the cut improves F~ exactly for eps below it
  CHECK(res.epsilon_bar > p.epsilon);
  const double eps_above = 2.0 * res.epsilon_bar;
  const double before = res.lambda_before + eps_above * res.riesz_before;
  const double after = res.lambda_after + eps_above * res.riesz_after;
  CHECK(after > before);
}

TEST_CASE("surgery sweep: round domain unchanged, cross arms shortened") {
  PenaltyParams p;
  p.alpha = 1.5;
  p.epsilon = 1e-3;

  GridSpec spec = GridSpec::centered(2, 128, 1.5);
  GridDomain ball = make_ball(spec, BallSpec::with_measure(2, 1.0, {0, 0, 0}));
  auto sweep = surgery_sweep(ball, p);
  for (const auto& row : sweep.log) CHECK_FALSE(row.cut_performed);
  CHECK(symmetric_difference_measure(sweep.domain, ball) == 0.0);

  // cross with unequal thin arms; the hub radius is bisected so the raw
  // measure lands on 1 without a rescale
  GridSpec cspec = GridSpec::centered(2, 256, 5.0);
  auto build_cross = [&](double hub) {
    GridDomain cross(cspec);
    for (std::int64_t id = 0; id < cspec.cell_count(); ++id) {
      const Point q = cspec.cell_center(cspec.unflat(id));
      const bool in_hub = std::hypot(q[0], q[1]) < hub;
      const bool arm_x = std::abs(q[1]) < 0.06 && std::abs(q[0]) < 2.2;
      const bool arm_y = std::abs(q[0]) < 0.06 && std::abs(q[1]) < 1.2;
      if (in_hub || arm_x || arm_y) cross.mask[id] = 1;
    }
    return cross;
  };
  double lo = 0.2, hi = 0.55;
  GridDomain cross = build_cross(0.4);
  for (int iter = 0; iter < 40; ++iter) {
    const double mid = 0.5 * (lo + hi);
    cross = build_cross(mid);
    (measure(cross) < 1.0 ? lo : hi) = mid;
  }
  REQUIRE(std::abs(measure(cross) - 1.0) < 0.01);
  REQUIRE(cross.connected());

  auto csweep = surgery_sweep(cross, p);
  CHECK(csweep.final_diameter < csweep.initial_diameter);
  CHECK(csweep.final_lambda <= csweep.initial_lambda * (1.0 + 1e-6));
  CHECK(csweep.final_f_tilde <= csweep.initial_f_tilde * (1.0 + 1e-6));
  CHECK(measure(csweep.domain) == doctest::Approx(1.0).epsilon(0.02));
}
