#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>

#include "shapelab/riesz.hpp"
#include "test_helpers.hpp"

using namespace shapelab;
using namespace shapelab::testing;

TEST_CASE("riesz: FFT equals brute force to 1e-12") {
  for (double alpha : {0.5, 1.5}) {
    GridSpec spec2 = GridSpec::centered(2, 16, 1.0);
    auto table2 = RieszKernelTable::build(2, alpha, spec2);
    for (unsigned seed : {7u, 8u}) {
      GridDomain dom = random_mask(spec2, seed);
      const double vf = riesz_potential(dom, table2).energy;
      const double vb = riesz_energy_bruteforce(dom, table2);
      CHECK(std::abs(vf - vb) <= 1e-12 * std::abs(vb));
    }
  }
  GridSpec spec3 = GridSpec::centered(3, 16, 1.0);
  auto table3 = RieszKernelTable::build(3, 1.5, spec3);
  GridDomain dom3 = random_mask(spec3, 11u, 0.3);
  const double vf = riesz_potential(dom3, table3).energy;
  const double vb = riesz_energy_bruteforce(dom3, table3);
  CHECK(std::abs(vf - vb) <= 1e-12 * std::abs(vb));
}

TEST_CASE("riesz: empty domain has zero potential") {
  GridSpec spec = GridSpec::centered(2, 32, 1.0);
  GridDomain empty(spec);
  auto pot = riesz_potential(empty, 1.0);
  CHECK(pot.energy == 0.0);
  for (double v : pot.v.values) CHECK(v == 0.0);
}

TEST_CASE("riesz: potential scaling at the center") {
  const double alpha = 1.2;
  GridSpec spec = GridSpec::centered(2, 256, 2.5);
  GridDomain small = make_ball(spec, BallSpec{{0, 0, 0}, 0.5});
  GridDomain big = make_ball(spec, BallSpec{{0, 0, 0}, 1.0});
  const CellIndex center{128, 128, 0};
  const double vs = riesz_potential(small, alpha).v.at(center);
  const double vb = riesz_potential(big, alpha).v.at(center);
  CHECK(vb / vs == doctest::Approx(std::pow(2.0, alpha)).epsilon(0.02));
}

TEST_CASE("riesz: energy scaling and ball maximality") {
  const double alpha = 1.5;
  GridSpec spec = GridSpec::centered(2, 256, 2.5);
  GridDomain small = make_ball(spec, BallSpec{{0, 0, 0}, 0.5});
  GridDomain big = make_ball(spec, BallSpec{{0, 0, 0}, 1.0});
  const double ratio = riesz_energy(big, alpha) / riesz_energy(small, alpha);
  CHECK(ratio == doctest::Approx(std::pow(2.0, 2.0 + alpha)).epsilon(0.03));

  GridDomain ball = make_ball(spec, BallSpec{{0, 0, 0}, 0.564});
  GridDomain ell = make_ellipse(spec, 0.798, 0.399);
  CHECK(riesz_energy(ball, alpha) > riesz_energy(ell, alpha));
}

TEST_CASE("riesz: strictly monotone in the mask") {
  GridSpec spec = GridSpec::centered(2, 24, 1.0);
  GridDomain dom = random_mask(spec, 3u, 0.4);
  auto table = RieszKernelTable::build(2, 1.0, spec);
  const double before = riesz_potential(dom, table).energy;
  std::int64_t hole = -1;
  for (std::int64_t id = 0; id < spec.cell_count(); ++id)
    if (!dom.mask[id]) {
      hole = id;
      break;
    }
  REQUIRE(hole >= 0);
  dom.mask[hole] = 1;
  CHECK(riesz_potential(dom, table).energy > before);
}

TEST_CASE("riesz: far pair interaction expansion") {
  const double alpha = 1.5;
  GridSpec spec = GridSpec::centered(2, 256, 8.0);
  const double r = 0.3, d = 6.0;
  GridDomain a = make_ball(spec, BallSpec{{-d / 2, 0, 0}, r});
  GridDomain b = make_ball(spec, BallSpec{{d / 2, 0, 0}, r});
  GridDomain both = a;
  for (std::int64_t i = 0; i < spec.cell_count(); ++i) both.mask[i] |= b.mask[i];
  const double va = riesz_energy(a, alpha);
  const double vb = riesz_energy(b, alpha);
  const double vboth = riesz_energy(both, alpha);
  const double ma = measure(a), mb = measure(b);
  const double expected = va + vb + 2.0 * ma * mb * std::pow(d, alpha - 2.0);
  CHECK(vboth == doctest::Approx(expected).epsilon(0.05));
}

TEST_CASE("riesz gradient: symmetry, FD agreement, equivariance") {
  const double alpha = 1.5;
  // odd cell count so the box center is a cell center
  GridSpec spec = GridSpec::centered(2, 97, 2.0);
  GridDomain disk = make_ball(spec, BallSpec{{0, 0, 0}, 0.7});
  auto g0 = riesz_potential_gradient(disk, alpha, {0, 0, 0});
  const double scale = riesz_potential(disk, alpha).v.at(spec.cell_of({0, 0, 0}));
  CHECK(std::hypot(g0[0], g0[1]) < 1e-5 * scale);

  // finite differences of the potential field at interior probes
  auto pot = riesz_potential(disk, alpha);
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> pick(30, 65);
  int checked = 0;
  for (int trial = 0; trial < 60 && checked < 20; ++trial) {
    CellIndex c{pick(rng), pick(rng), 0};
    if (!disk.occupied(c)) continue;
    const Point x = spec.cell_center(c);
    auto g = riesz_potential_gradient(disk, alpha, x);
    CellIndex xp = c, xm = c, yp = c, ym = c;
    xp[0]++, xm[0]--, yp[1]++, ym[1]--;
    const double fdx = (pot.v.at(xp) - pot.v.at(xm)) / (2.0 * spec.h);
    const double fdy = (pot.v.at(yp) - pot.v.at(ym)) / (2.0 * spec.h);
    const double mag = std::hypot(fdx, fdy);
    if (mag < 1e-3) continue;
    CHECK(std::hypot(g[0] - fdx, g[1] - fdy) <
          std::max(0.01 * mag, 0.01));
    ++checked;
  }
  CHECK(checked >= 10);

  // translation equivariance on a shifted grid: identical to the last bit
  const int shift = 3;
  GridSpec spec2 = spec;
  spec2.origin[0] += shift * spec.h;
  GridDomain disk2(spec2);
  for (int i = 0; i < spec.cells; ++i)
    for (int j = 0; j < spec.cells; ++j)
      disk2.mask[spec2.flat({i, j, 0})] = disk.mask[spec.flat({i, j, 0})];
  Point probe = spec.cell_center({40, 52, 0});
  Point probe2 = probe;
  probe2[0] += shift * spec.h;
  auto ga = riesz_potential_gradient(disk, alpha, probe);
  auto gb = riesz_potential_gradient(disk2, alpha, probe2);
  CHECK(ga[0] == gb[0]);
  CHECK(ga[1] == gb[1]);
}

TEST_CASE("riesz: 3d energy scaling") {
  const double alpha = 1.5;
  GridSpec spec = GridSpec::centered(3, 64, 1.3);
  GridDomain small = make_ball(spec, BallSpec{{0, 0, 0}, 0.25});
  GridDomain big = make_ball(spec, BallSpec{{0, 0, 0}, 0.5});
  const double ratio = riesz_energy(big, alpha) / riesz_energy(small, alpha);
  CHECK(ratio == doctest::Approx(std::pow(2.0, 3.0 + alpha)).epsilon(0.04));
}

TEST_CASE("riesz gradient: 3d ball center symmetry") {
  GridSpec spec = GridSpec::centered(3, 33, 1.2);
  GridDomain ball = make_ball(spec, BallSpec{{0, 0, 0}, 0.45});
  auto g = riesz_potential_gradient(ball, 2.0, {0, 0, 0});
  CHECK(std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]) < 1e-8);
}

TEST_CASE("riesz gradient: alpha at most 1 is rejected") {
  GridSpec spec = GridSpec::centered(2, 32, 2.0);
  GridDomain disk = make_ball(spec, BallSpec{{0, 0, 0}, 0.6});
  CHECK_THROWS_AS(riesz_potential_gradient(disk, 0.9, {0, 0, 0}),
                  PreconditionError);
  CHECK_THROWS_AS(riesz_potential(disk, 2.5), PreconditionError);
}

TEST_CASE("c0 constant: closed forms") {
  bool clamped = true;
  CHECK(c0_constant(2, 1.0, &clamped) ==
        doctest::Approx(2.0 * std::sqrt(kPi)).epsilon(1e-12));
  CHECK_FALSE(clamped);
  const double r3 = std::pow(3.0 / (4.0 * kPi), 1.0 / 3.0);
  CHECK(c0_constant(3, 2.0) == doctest::Approx(2.0 * kPi * r3 * r3).epsilon(1e-12));
  // alpha -> 0 diverges like 1/alpha
  CHECK(c0_constant(2, 1e-12) > 1e11);
  // the clamp at 1 never binds for N in {2,3}
  for (int dim : {2, 3})
    for (double a = 0.1; a < dim - 0.05; a += 0.1) {
      c0_constant(dim, a, &clamped);
      CHECK_FALSE(clamped);
    }
  CHECK_THROWS_AS(c0_constant(2, 2.0), PreconditionError);
}

TEST_CASE("kernel difference bound") {
  const double alpha = 1.3;
  GridSpec spec = GridSpec::centered(2, 48, 2.0);
  GridDomain ball = make_ball(spec, BallSpec{{0, 0, 0}, 0.7});
  auto same = km_difference_bound_check(ball, ball, alpha);
  CHECK(same.lhs == 0.0);
  CHECK(same.rhs == 0.0);
  CHECK(same.ok);

  GridDomain half = ball;
  for (std::int64_t id = 0; id < spec.cell_count(); ++id)
    if (spec.cell_center(spec.unflat(id))[0] > 0.0) half.mask[id] = 0;
  auto check = km_difference_bound_check(half, ball, alpha);
  CHECK(check.lhs > 0.0);
  CHECK(check.ok);

  for (unsigned seed = 0; seed < 10; ++seed) {
    GridDomain a = random_mask(spec, seed, 0.45);
    GridDomain b = random_mask(spec, seed + 50, 0.45);
    CHECK(km_difference_bound_check(a, b, alpha).ok);
  }
}

TEST_CASE("kernel table: quadrature depth stability and disk cache") {
  GridSpec spec = GridSpec::centered(2, 32, 1.0);
  auto t4 = RieszKernelTable::build(2, 1.5, spec, 4);
  auto t7 = RieszKernelTable::build(2, 1.5, spec, 7);
  for (const auto& [k, v] : t4.near_corrections) {
    CHECK(v == doctest::Approx(t7.near_corrections.at(k)).epsilon(2e-3));
    CHECK(v > 0.0);
  }

  const auto dir = std::filesystem::temp_directory_path() / "shapelab_ktab";
  std::filesystem::remove_all(dir);
  setenv("SHAPELAB_KERNEL_CACHE", dir.c_str(), 1);
  auto fresh = RieszKernelTable::build(2, 1.5, spec, 4);
  CHECK(std::filesystem::exists(dir / (fresh.cache_key() + ".tab")));
  auto cached = RieszKernelTable::build(2, 1.5, spec, 4);
  for (const auto& [k, v] : fresh.near_corrections)
    CHECK(v == cached.near_corrections.at(k));
  unsetenv("SHAPELAB_KERNEL_CACHE");
  std::filesystem::remove_all(dir);
}
