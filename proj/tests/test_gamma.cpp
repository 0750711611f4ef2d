#include <cmath>
#include <numbers>

#include <doctest.h>

#include "oracles.hpp"
#include "pmtv/gamma.hpp"

using pmtv::Field;

TEST_CASE("linear lower bound margins") {
  // Small eps with the proof-scale grid: bound holds.
  const double sigma_max = 2e3 * std::log(1e3);
  const auto pass = pmtv::lower_bound_margin(1e-3, 0.5, 0.5, sigma_max, 10000);
  CHECK(pass.pass);
  CHECK(pass.min_margin >= 0.0);

  // sigma = 0 sits on the grid and contributes margin b.
  const pmtv::ConvexEnvelope env =
      pmtv::convex_envelope(pmtv::ScalarPotential(1e-3));
  CHECK(env.value(0.0) - 0.5 * 0.0 + 0.5 == 0.5);

  // Near-tight constants at large eps: expected failure.
  const auto fail = pmtv::lower_bound_margin(0.5, 0.99, 0.01, 200.0, 10000);
  CHECK_FALSE(fail.pass);
  CHECK(fail.min_margin < 0.0);

  CHECK_THROWS_AS(pmtv::lower_bound_margin(1e-3, 1.5, 0.5, sigma_max, 10000),
                  std::domain_error);
  // Grid that stops short of the fourth region.
  CHECK_THROWS_AS(pmtv::lower_bound_margin(1e-3, 0.5, 0.5, 10.0, 10000),
                  pmtv::ConfigError);
}

TEST_CASE("eps1 search") {
  const auto r = pmtv::find_eps1(0.5, 0.5);
  CHECK(r.found);
  CHECK(r.eps1 > 1e-6);
  CHECK(r.eps1 < 1.0);
  // Every tested eps at or below eps1 passed.
  for (const auto& probe : r.tested) {
    if (probe.eps <= r.eps1) CHECK(probe.pass);
  }

  // Re-assert the bound on a finer grid below eps1.
  const double eps = 0.5 * r.eps1;
  const pmtv::ScalarPotential pot(eps);
  const double sigma_max =
      4.0 * std::max(2.0 / eps, 1.0 / (eps * pot.log_eps_abs));
  const auto refined = pmtv::lower_bound_margin(eps, 0.5, 0.5, sigma_max, 40000);
  CHECK(refined.pass);
  CHECK(refined.min_margin >= 0.0);
}

TEST_CASE("eps1 trends in a and b") {
  // The admissible range shrinks as a -> 1 (small b keeps the bound tight).
  const auto a50 = pmtv::find_eps1(0.5, 0.01);
  const auto a90 = pmtv::find_eps1(0.9, 0.01);
  const auto a99 = pmtv::find_eps1(0.99, 0.01);
  REQUIRE(a50.found);
  if (a90.found) {
    CHECK(a90.eps1 <= a50.eps1);
  }
  if (a99.found) {
    REQUIRE(a90.found);
    CHECK(a99.eps1 <= a90.eps1);
  }

  // Larger b weakens the requirement.
  const auto b_small = pmtv::find_eps1(0.5, 0.1);
  const auto b_large = pmtv::find_eps1(0.5, 0.9);
  REQUIRE(b_small.found);
  REQUIRE(b_large.found);
  CHECK(b_large.eps1 >= b_small.eps1);
}

TEST_CASE("limsup coefficient") {
  CHECK(std::fabs(pmtv::limsup_coeff(0.01) - 1.07526) <= 1e-4);
  CHECK(std::fabs(pmtv::limsup_coeff(0.1) - 1.15078) <= 1e-4);

  double prev = pmtv::limsup_coeff(0.1);
  for (double eps : {0.01, 1e-3, 1e-4}) {
    const double a = pmtv::limsup_coeff(eps);
    CHECK(a < prev);
    CHECK(a > 1.0);
    prev = a;
  }

  // Chord property: envelope below a_eps * sigma on [0, 2/eps].
  for (double eps : {0.1, 0.01}) {
    const double a = pmtv::limsup_coeff(eps);
    const pmtv::ConvexEnvelope env =
        pmtv::convex_envelope(pmtv::ScalarPotential(eps));
    const double upper = 2.0 / eps;
    for (int i = 0; i <= 2000; ++i) {
      const double s = upper * i / 2000.0;
      CHECK(env.value(s) <= a * s + 1e-12 * std::max(1.0, a * s));
    }
  }
}

TEST_CASE("jump cost of the compressed profile") {
  // Optimal half-width: within 10% of the jump height at eps = 1e-3.
  const auto optimal = pmtv::linear_ramp_profile(1.0, 0.25, 20000);
  const double cost = pmtv::jump_cost(optimal, 1e-3);
  CHECK(std::fabs(cost - 1.0) <= 0.1);

  // The cost decreases toward 2 eta + J^2/(8 eta) as eps shrinks.
  double prev = pmtv::jump_cost(optimal, 1e-1);
  for (double eps : {1e-2, 1e-3, 1e-4}) {
    const double c = pmtv::jump_cost(optimal, eps);
    CHECK(c < prev);
    CHECK(c > 1.0);
    prev = c;
  }

  // Suboptimal half-width approaches 2 + 1/8.
  const auto wide = pmtv::linear_ramp_profile(1.0, 1.0, 20000);
  const double c_wide = pmtv::jump_cost(wide, 1e-3);
  CHECK(c_wide > 1.8);
  CHECK(c_wide < 2.125);

  // Support overflow.
  CHECK_THROWS_AS(pmtv::jump_cost(pmtv::linear_ramp_profile(1.0, 3.0, 1000), 0.5),
                  pmtv::ConfigError);

  // Lower-bound instance: cost at least a TV(v) - b |Omega| with a = b = 1/2
  // and TV(v) = J on the domain (-1, 1).
  CHECK(cost >= 0.5 * 1.0 - 0.5 * 2.0);
  CHECK(pmtv::jump_cost(pmtv::linear_ramp_profile(2.5, 0.4, 20000), 1e-3) >=
        0.5 * 2.5 - 0.5 * 2.0);
}

TEST_CASE("optimal half-width") {
  // Closed form against the brute-force grid oracle.
  for (double jump : {1.0, 2.0}) {
    const auto opt = pmtv::optimal_eta(jump);
    auto objective = [jump](double eta) {
      return 2.0 * eta + jump * jump / (8.0 * eta);
    };
    const auto [eta_grid, val_grid] =
        oracle::grid_minimize(objective, 1e-4, 2.0 * jump, 1e-4);
    CHECK(std::fabs(opt.eta_star - eta_grid) <= 1e-3);
    CHECK(std::fabs(opt.min_value - val_grid) <= 1e-3);
  }
  CHECK(pmtv::optimal_eta(1.0).eta_star == doctest::Approx(0.25));
  CHECK(pmtv::optimal_eta(1.0).min_value == doctest::Approx(1.0));
  CHECK(pmtv::optimal_eta(2.0).eta_star == doctest::Approx(0.5));
  CHECK(pmtv::optimal_eta(2.0).min_value == doctest::Approx(2.0));

  // One-homogeneous under (eta, J) -> (s eta, s J).
  for (double s : {0.5, 3.0}) {
    CHECK(pmtv::optimal_eta(s).eta_star == doctest::Approx(s * 0.25));
    CHECK(pmtv::optimal_eta(s).min_value == doctest::Approx(s * 1.0));
  }
  CHECK_THROWS_AS(pmtv::optimal_eta(0.0), std::domain_error);
}

TEST_CASE("jump energies") {
  const std::vector<double> ones = {1.0, 1.0};
  CHECK(pmtv::h_alpha(ones, 1.0) == 2.0);

  const std::vector<double> four = {4.0};
  CHECK(pmtv::h_alpha(four, 0.5) == doctest::Approx(2.0));

  const std::vector<double> es = {std::numbers::e,
                                  std::numbers::e * std::numbers::e};
  CHECK(pmtv::h_alpha(es, 0.0) == doctest::Approx(3.0));

  const std::vector<double> with_zero = {1.0, 0.0};
  CHECK_THROWS_AS(pmtv::h_alpha(with_zero, 1.0), std::domain_error);
  CHECK_THROWS_AS(pmtv::h_alpha(ones, 1.5), std::domain_error);
  CHECK_THROWS_AS(pmtv::h_alpha(ones, -0.1), std::domain_error);

  // alpha = 1 agrees with the total variation of the matching piecewise
  // constant field.
  const std::vector<double> jumps = {0.5, -1.2, 0.3};
  Field pw({40}, 0.05, 0.0);
  double level = 0.0;
  for (int i = 0; i < 40; ++i) {
    if (i == 10) level += jumps[0];
    if (i == 20) level += jumps[1];
    if (i == 30) level += jumps[2];
    pw[i] = level;
  }
  std::vector<double> mags = {0.5, 1.2, 0.3};
  CHECK(pmtv::h_alpha(mags, 1.0) ==
        doctest::Approx(energy(pw, pmtv::EnergyKind::kTotalVariation)));
}

TEST_CASE("compactness bound instances") {
  Field constant({16}, 0.125, 2.0);
  const auto flat = pmtv::compactness_bound(constant, 1e-3);
  CHECK(flat.pass);
  CHECK(flat.lhs == 0.0);
  CHECK(flat.rhs == doctest::Approx(-0.5 * constant.domain_measure()));

  const int n = 400;
  Field step({n}, 2.0 / n);
  for (int i = 0; i < n; ++i) step[i] = i < n / 2 ? -0.5 : 0.5;
  const auto jumped = pmtv::compactness_bound(step, 1e-3);
  CHECK(jumped.pass);
  CHECK(jumped.rhs == doctest::Approx(0.5 * 1.0 - 0.5 * 2.0));

  const Field noisy = oracle::random_field({16, 16}, 0.0625, 999);
  CHECK(pmtv::compactness_bound(noisy, 1e-3).pass);
}
