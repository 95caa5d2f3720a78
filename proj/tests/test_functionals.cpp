#include <doctest.h>

#include <cmath>
#include <random>

#include "shapelab/functionals.hpp"
#include "test_helpers.hpp"

using namespace shapelab;
using namespace shapelab::testing;

TEST_CASE("f_eta: values and bi-Lipschitz property") {
  CHECK(f_eta(1.0, 0.5) == 0.0);
  CHECK(f_eta(0.5, 0.5) == doctest::Approx(-0.25));
  CHECK(f_eta(1.5, 0.5) == doctest::Approx(1.0));
  CHECK_THROWS_AS(f_eta(1.0, 1.5), PreconditionError);

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (double eta : {0.1, 0.5, 0.9}) {
    for (int i = 0; i < 200; ++i) {
      double s1 = u(rng), s2 = u(rng);
      if (s1 < s2) std::swap(s1, s2);
      const double diff = f_eta(s1, eta) - f_eta(s2, eta);
      CHECK(diff >= eta * (s1 - s2) - 1e-12);
      CHECK(diff <= (s1 - s2) / eta + 1e-12);
    }
  }
}

TEST_CASE("ball reference values") {
  CHECK(ball_torsion_energy_unit(2) == doctest::Approx(-1.0 / (16.0 * kPi)));
  CHECK(ball_eigenvalue_unit(2) ==
        doctest::Approx(kPi * bessel_j01() * bessel_j01()));
  // V reference: compare the extrapolated value to a single finer grid
  const double vref = ball_riesz_energy_unit(2, 1.5);
  GridSpec spec = GridSpec::centered(2, 512, 1.3);
  GridDomain ball = make_ball(spec, BallSpec::with_measure(2, 1.0, {0, 0, 0}));
  CHECK(vref == doctest::Approx(riesz_energy(ball, 1.5)).epsilon(0.005));
  CHECK(!ball_riesz_reference_provenance(2, 1.5).empty());
}

TEST_CASE("evaluate_all: unit-measure ball with eps 0") {
  GridSpec spec = GridSpec::centered(2, 128, 1.5);
  GridDomain ball = make_ball(spec, BallSpec::with_measure(2, 1.0, {0, 0, 0}));
  Evaluator ev;
  PenaltyParams p;
  p.eta = 0.5;
  p.epsilon = 0.0;
  p.alpha = 1.0;
  auto rep = ev.evaluate_all(ball, p, true);
  CHECK(rep.F == doctest::Approx(ball_torsion_energy_unit(2)).epsilon(0.02));
  CHECK(rep.G == doctest::Approx(rep.F + f_eta(rep.measure, p.eta)));
  CHECK(std::abs(rep.G - rep.F) < 0.01);  // measure ~ 1, penalty ~ 0
  CHECK(rep.lambda1.has_value());
  CHECK(rep.asymmetry < 0.05);

  // any domain inside B_R obeys G >= w^{(N+2)/N} E(B) R^{N+2} - eta
  const double R = 0.75 * std::sqrt(2.0);  // box half-diagonal
  const double lower = std::pow(unit_ball_volume(2), 2.0) *
                           ball_torsion_energy_unit(2) * std::pow(R, 4.0) -
                       p.eta;
  CHECK(rep.G >= lower);
}

TEST_CASE("mass-to-epsilon maps") {
  CHECK(mass_to_epsilon_eigen(0.25, 2, 1.0) == doctest::Approx(0.03125));
  CHECK(mass_to_epsilon_torsion(0.7, 2, 2.0) == doctest::Approx(1.0));
  CHECK(mass_to_epsilon_torsion(3.1, 3, 2.0) == doctest::Approx(1.0));
  CHECK(mass_to_epsilon_torsion(0.125, 3, 2.5) ==
        doctest::Approx(std::pow(0.5, 0.5)));
  // monotonicity: eigen always increasing; torsion increasing iff alpha > 2
  CHECK(mass_to_epsilon_eigen(0.5, 2, 1.5) < mass_to_epsilon_eigen(0.9, 2, 1.5));
  CHECK(mass_to_epsilon_torsion(0.5, 3, 2.5) <
        mass_to_epsilon_torsion(0.9, 3, 2.5));
  CHECK(mass_to_epsilon_torsion(0.5, 2, 1.5) >
        mass_to_epsilon_torsion(0.9, 2, 1.5));
}

TEST_CASE("deficits: ball near zero, ellipse positive") {
  GridSpec spec = GridSpec::centered(2, 192, 1.6);
  GridDomain ball = make_ball(spec, BallSpec::with_measure(2, 1.0, {0, 0, 0}));
  Evaluator ev;
  auto sv = saint_venant_deficit(ball, ev);
  auto fk = faber_krahn_deficit(ball, ev);
  auto rz = riesz_deficit(ball, 1.5, ev);
  // discretization biases the deficits upward; they must never go negative
  CHECK(sv.deficit >= -1e-3 * std::abs(ball_torsion_energy_unit(2)));
  CHECK(sv.deficit < 0.02 * std::abs(ball_torsion_energy_unit(2)));
  CHECK(fk.deficit >= -1e-3 * ball_eigenvalue_unit(2));
  CHECK(fk.deficit < 0.02 * ball_eigenvalue_unit(2));
  CHECK(rz.deficit >= -1e-3 * ball_riesz_energy_unit(2, 1.5));
  CHECK(!sv.ratio.has_value());  // asymmetry below the 0.02 threshold

  GridSpec espec = GridSpec::centered(2, 192, 2.4);
  GridDomain ell = make_ellipse(espec, 0.798, 0.399);
  auto sve = saint_venant_deficit(ell, ev);
  auto fke = faber_krahn_deficit(ell, ev);
  auto rze = riesz_deficit(ell, 1.5, ev);
  CHECK(sve.deficit > 0.0);
  CHECK(fke.deficit > 0.0);
  CHECK(rze.deficit > 0.0);
  CHECK(sve.ratio.has_value());
  CHECK(*sve.ratio > 0.0);
}

TEST_CASE("kohler-jobin: ball near equality, square strict") {
  GridSpec spec = GridSpec::centered(2, 192, 1.6);
  GridDomain ball = make_ball(spec, BallSpec::with_measure(2, 1.0, {0, 0, 0}));
  Evaluator ev;
  auto kj = kohler_jobin_check(ball, ev);
  CHECK(kj.lhs == doctest::Approx(1.0).epsilon(0.01));
  CHECK(kj.rhs == doctest::Approx(1.0).epsilon(0.01));
  CHECK(kj.ok);

  GridSpec sq(2, 128, 1.0 / 128, {0, 0, 0});
  GridDomain square(sq);
  std::fill(square.mask.begin(), square.mask.end(), 1);
  auto kjs = kohler_jobin_check(square, ev);
  CHECK(kjs.lhs > kjs.rhs + 1e-3);
  CHECK(kjs.ok);
}

TEST_CASE("penalty margin: analytic limit and bounds") {
  // Q = 0: u = P f(t) with f increasing from 1 to (N+2)/N, so inf = P at t=0
  auto m = penalty_margin(2.0, 0.0, 2, 1.0, 100000);
  CHECK(m.inf_value == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(m.argmin == 0.0);
  CHECK(penalty_margin_limit(2.0, 0.0, 2, 1.0) == doctest::Approx(4.0));

  CHECK(penalty_margin_limit(1.0, 1.0, 2, 1.5) ==
        doctest::Approx((2.0 + 2.0) / 2.0 - (2.0 + 1.5) / 2.0));

  // with Q = P m_f / (2 M_g) the margin is guaranteed: inf >= P m_f / 2
  const int N = 2;
  const double alpha = 1.5;
  const double P = 1.0;
  const double m_f = 1.0;                    // min of f on [0,1] is f(0) = 1
  const double M_g = (N + alpha) / N;        // max of g is g(1)
  const double Q = P * m_f / (2.0 * M_g);
  auto mg = penalty_margin(P, Q, N, alpha, 100000);
  CHECK(mg.inf_value >= P * m_f / 2.0 - 1e-9);
  CHECK(mg.inf_value > 0.0);
}

TEST_CASE("necklace bounds: epsilon 0 favors the ball; flip exists") {
  auto nb = necklace_bounds(0.4, 0.0, 2, 1.5, 256);
  CHECK(nb.k == 6);
  CHECK_FALSE(nb.necklace_wins);       // Saint-Venant
  CHECK(nb.flip_epsilon > 0.0);
  CHECK(std::isfinite(nb.flip_epsilon));
  // beyond the flip epsilon the necklace wins
  auto nb2 = necklace_bounds(0.4, 2.0 * nb.flip_epsilon, 2, 1.5, 256);
  CHECK(nb2.necklace_wins);
  CHECK(nb2.alpha_in_regime);
  CHECK_THROWS_AS(necklace_bounds(0.95, 0.0, 2, 1.5, 256), PreconditionError);
}
