#include <doctest.h>

#include <cmath>

#include "shapelab/fields.hpp"
#include "shapelab/functionals.hpp"
#include "test_helpers.hpp"

using namespace shapelab;
using namespace shapelab::testing;

namespace {

GridDomain unit_disk(int cells, double box = 2.5) {
  return make_ball(GridSpec::centered(2, cells, box), BallSpec{{0, 0, 0}, 1.0});
}

}  // namespace

TEST_CASE("torsion: unit disk energy") {
  GridDomain disk = unit_disk(128);
  auto sol = solve_torsion(disk);
  CHECK(sol.energy < 0.0);
  CHECK(sol.energy == doctest::Approx(-kPi / 16.0).epsilon(0.02));
  CHECK(sol.residual_norm <= 1e-8);
}

TEST_CASE("torsion: unit-measure disk energy") {
  GridSpec spec = GridSpec::centered(2, 128, 1.5);
  GridDomain disk = make_ball(spec, BallSpec::with_measure(2, 1.0, {0, 0, 0}));
  auto sol = solve_torsion(disk);
  CHECK(sol.energy == doctest::Approx(-1.0 / (16.0 * kPi)).epsilon(0.02));
}

TEST_CASE("torsion: scaling law E(2B) = 2^(N+2) E(B)") {
  GridSpec spec = GridSpec::centered(2, 192, 2.0);
  GridDomain small = make_ball(spec, BallSpec{{0, 0, 0}, 0.4});
  GridDomain big = make_ball(spec, BallSpec{{0, 0, 0}, 0.8});
  const double ratio = solve_torsion(big).energy / solve_torsion(small).energy;
  CHECK(ratio == doctest::Approx(16.0).epsilon(0.03));
}

TEST_CASE("torsion: monotone under inclusion, negative") {
  GridSpec spec = GridSpec::centered(2, 96, 2.0);
  GridDomain inner = make_ball(spec, BallSpec{{0, 0, 0}, 0.5});
  GridDomain outer = make_ball(spec, BallSpec{{0, 0, 0}, 0.8});
  const double ei = solve_torsion(inner).energy;
  const double eo = solve_torsion(outer).energy;
  CHECK(ei < 0.0);
  CHECK(eo < 0.0);
  CHECK(ei >= eo);  // adding cells never increases E
}

TEST_CASE("torsion: disconnected components add") {
  GridSpec spec = GridSpec::centered(2, 128, 3.0);
  GridDomain a = make_ball(spec, BallSpec{{-0.7, 0, 0}, 0.4});
  GridDomain b = make_ball(spec, BallSpec{{0.7, 0.1, 0}, 0.3});
  GridDomain both = a;
  for (std::int64_t i = 0; i < spec.cell_count(); ++i)
    both.mask[i] |= b.mask[i];
  REQUIRE(both.components() == 2);
  const double sum = solve_torsion(a).energy + solve_torsion(b).energy;
  CHECK(solve_torsion(both).energy == doctest::Approx(sum).epsilon(1e-6));
}

TEST_CASE("eigen: unit disk lambda1") {
  GridDomain disk = unit_disk(128, 2.2);
  auto sol = solve_first_eigen(disk);
  const double exact = bessel_j01() * bessel_j01();
  CHECK(sol.lambda1 == doctest::Approx(exact).epsilon(0.01));
  // normalization and sign
  double norm = 0.0, minu = 1e300;
  for (double v : sol.u.values) norm += v * v;
  norm *= disk.spec.cell_volume();
  for_each_occupied(disk, [&](const CellIndex&, std::int64_t id) {
    minu = std::min(minu, sol.u.values[id]);
  });
  CHECK(norm == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(minu >= 0.0);
}

TEST_CASE("eigen: unit square lambda1 = 2 pi^2") {
  GridSpec spec(2, 128, 1.0 / 128, {0, 0, 0});
  GridDomain square(spec);
  std::fill(square.mask.begin(), square.mask.end(), 1);
  auto sol = solve_first_eigen(square);
  CHECK(sol.lambda1 == doctest::Approx(2.0 * kPi * kPi).epsilon(0.01));
}

TEST_CASE("eigen: unit-measure disk") {
  GridSpec spec = GridSpec::centered(2, 128, 1.5);
  GridDomain disk = make_ball(spec, BallSpec::with_measure(2, 1.0, {0, 0, 0}));
  auto sol = solve_first_eigen(disk);
  CHECK(sol.lambda1 ==
        doctest::Approx(kPi * bessel_j01() * bessel_j01()).epsilon(0.01));
}

TEST_CASE("eigen: monotone under inclusion; scaling t^-2") {
  GridSpec spec = GridSpec::centered(2, 160, 2.0);
  GridDomain inner = make_ball(spec, BallSpec{{0, 0, 0}, 0.45});
  GridDomain outer = make_ball(spec, BallSpec{{0, 0, 0}, 0.9});
  const double li = solve_first_eigen(inner).lambda1;
  const double lo = solve_first_eigen(outer).lambda1;
  CHECK(li >= lo);
  CHECK(li / lo == doctest::Approx(4.0).epsilon(0.03));  // lambda(tB) t^2 const
}

TEST_CASE("eigen: Rayleigh identity and disconnected rejection") {
  GridSpec spec = GridSpec::centered(2, 96, 2.2);
  GridDomain disk = make_ball(spec, BallSpec{{0, 0, 0}, 0.8});
  auto sol = solve_first_eigen(disk);
  MaskedLaplacian A(disk);
  const double rq = A.rayleigh(A.restrict_field(sol.u));
  CHECK(rq == doctest::Approx(sol.lambda1).epsilon(1e-7));

  GridDomain two = disk;
  GridDomain other = make_ball(spec, BallSpec{{0, 0, 0}, 0.3});
  // carve a ring to disconnect: keep r<0.3 and 0.5<r<0.8
  for (std::int64_t id = 0; id < spec.cell_count(); ++id) {
    const Point p = spec.cell_center(spec.unflat(id));
    const double r = std::hypot(p[0], p[1]);
    two.mask[id] = (r < 0.3 || (r > 0.5 && r < 0.8)) ? 1 : 0;
  }
  REQUIRE(two.components() > 1);
  CHECK_THROWS_AS(solve_first_eigen(two), PreconditionError);
}

TEST_CASE("flux: torsion ball profile q = R/N") {
  GridDomain disk = unit_disk(128);
  auto sol = solve_torsion(disk);
  auto flux = boundary_flux(sol, disk);
  REQUIRE(flux.samples.size() > 100);
  double mean = 0.0;
  for (const auto& s : flux.samples) mean += s.q;
  mean /= flux.samples.size();
  double var = 0.0;
  for (const auto& s : flux.samples) var += (s.q - mean) * (s.q - mean);
  var /= flux.samples.size();
  CHECK(mean == doctest::Approx(0.5).epsilon(0.05));
  CHECK(std::sqrt(var) / mean < 0.05);
}

TEST_CASE("flux: eigen ball is constant within 5 percent") {
  GridDomain disk = unit_disk(128, 2.2);
  auto sol = solve_first_eigen(disk);
  auto flux = boundary_flux(sol, disk);
  double mean = 0.0;
  for (const auto& s : flux.samples) mean += s.q;
  mean /= flux.samples.size();
  double var = 0.0;
  for (const auto& s : flux.samples) var += (s.q - mean) * (s.q - mean);
  var /= flux.samples.size();
  CHECK(std::sqrt(var) / mean < 0.05);
}

TEST_CASE("flux: square corners are depressed") {
  GridSpec spec(2, 128, 1.0 / 128, {0, 0, 0});
  GridDomain square(spec);
  std::fill(square.mask.begin(), square.mask.end(), 1);
  auto sol = solve_torsion(square);
  auto flux = boundary_flux(sol, square);
  double corner = 0.0, edge = 0.0;
  int nc = 0, ne = 0;
  for (const auto& s : flux.samples) {
    const double dx = std::min(s.point[0], 1.0 - s.point[0]);
    const double dy = std::min(s.point[1], 1.0 - s.point[1]);
    const double corner_dist = std::hypot(std::min(dx, 0.5), std::min(dy, 0.5));
    if (dx < 0.08 && dy < 0.08) {
      corner += s.q;
      ++nc;
    } else if (corner_dist > 0.4) {
      edge += s.q;
      ++ne;
    }
  }
  REQUIRE(nc > 0);
  REQUIRE(ne > 0);
  CHECK(corner / nc < edge / ne);
}

TEST_CASE("density scan: square edges sit near one half") {
  GridSpec spec = GridSpec::centered(2, 128, 2.0);
  GridDomain square(spec);
  for (std::int64_t id = 0; id < spec.cell_count(); ++id) {
    const Point p = spec.cell_center(spec.unflat(id));
    if (std::abs(p[0]) < 0.6 && std::abs(p[1]) < 0.6) square.mask[id] = 1;
  }
  auto scan = density_estimate_scan(square, 8.0 * spec.h);
  REQUIRE(!scan.samples.empty());
  CHECK(scan.min_ratio >= 0.2);  // corners approach 1/4
  CHECK(scan.max_ratio <= 0.8);
  double mid = 0.0;
  int n = 0;
  for (const auto& s : scan.samples) {
    if (std::abs(s.point[1]) < 0.1) {  // edge midpoints
      mid += s.ratio;
      ++n;
    }
  }
  CHECK(mid / n == doctest::Approx(0.5).epsilon(0.1));
  CHECK_THROWS_AS(density_estimate_scan(square, 2.0 * spec.h), PreconditionError);
}

TEST_CASE("solver: 3d ball torsion and eigenvalue against closed forms") {
  GridSpec spec = GridSpec::centered(3, 48, 1.6);
  GridDomain ball = make_ball(spec, BallSpec{{0, 0, 0}, 0.6});
  auto sol = solve_torsion(ball);
  // E(B_R) = -w_N R^(N+2)/(2N(N+2)), N=3
  const double exact = -unit_ball_volume(3) * std::pow(0.6, 5.0) / 30.0;
  CHECK(sol.energy == doctest::Approx(exact).epsilon(0.04));
  // lambda1(B_R) = (pi/R)^2 in three dimensions
  auto eig = solve_first_eigen(ball);
  CHECK(eig.lambda1 == doctest::Approx(kPi * kPi / 0.36).epsilon(0.03));
}

TEST_CASE("solver: unreachable tolerance raises a solver error") {
  GridSpec spec = GridSpec::centered(2, 64, 2.0);
  GridDomain disk = make_ball(spec, BallSpec{{0, 0, 0}, 0.7});
  SolverOptions strict;
  strict.tol = 1e-8;
  strict.max_iter_factor = 0;  // zero CG budget
  CHECK_THROWS_AS(solve_torsion(disk, strict), SolverError);
  SolverOptions no_power;
  no_power.max_power_iter = 0;
  CHECK_THROWS_AS(solve_first_eigen(disk, no_power), SolverError);
  try {
    solve_torsion(disk, strict);
  } catch (const SolverError& e) {
    CHECK(e.residual() > 0.0);
  }
}
