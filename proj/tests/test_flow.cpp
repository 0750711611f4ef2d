#include <cmath>

#include <doctest.h>

#include "oracles.hpp"
#include "pmtv/flow.hpp"

using pmtv::ConvexEnvelope;
using pmtv::EnergyKind;
using pmtv::ExperimentConfig;
using pmtv::Field;
using pmtv::FlowModel;
using pmtv::FlowTrace;
using pmtv::ScalarPotential;

namespace {

Field step_field(int n, double h, double jump) {
  Field u({n}, h);
  for (int i = 0; i < n; ++i) u[i] = (i < n / 2 ? -0.5 : 0.5) * jump;
  return u;
}

ExperimentConfig base_config(FlowModel model, int n, double h) {
  ExperimentConfig cfg;
  cfg.model = model;
  cfg.grid.dims = 1;
  cfg.grid.shape = {n, n};
  cfg.grid.spacing = h;
  cfg.init.kind = "step";
  cfg.init.jump = 1.0;
  cfg.tau = 1e-3;
  cfg.t_end = 0.05;
  cfg.inner_tol = 1e-8;
  return cfg;
}

}  // namespace

TEST_CASE("time rescale map") {
  const auto r = pmtv::delta_of_eps(0.1);
  CHECK(std::fabs(r.delta - 0.0057565) <= 1e-7);
  CHECK(std::fabs(r.time_factor - 4.342945) <= 1e-6);

  // |ln eps| -> 0 as eps -> 1: delta vanishes, the speed-up blows up.
  const auto near_one = pmtv::delta_of_eps(1.0 - 1e-9);
  CHECK(near_one.delta < 1e-9);
  CHECK(near_one.time_factor > 1e8);

  CHECK_THROWS_AS(pmtv::delta_of_eps(0.0), std::domain_error);
  CHECK_THROWS_AS(pmtv::delta_of_eps(1.0), std::domain_error);
  CHECK_THROWS_AS(pmtv::delta_of_eps(-3.0), std::domain_error);
}

TEST_CASE("rescaled problems are the same recursion") {
  // One eps-step with tau equals one delta-form step with tau/(eps |ln eps|)
  // on the energy scaled by eps |ln eps|; the proximal subproblems coincide
  // after the change of variables, so the fields must match.
  const double eps = 0.2;
  const auto rescale = pmtv::delta_of_eps(eps);
  const ConvexEnvelope env = pmtv::convex_envelope(ScalarPotential(eps));
  const Field u = oracle::random_field({16}, 0.125, 7);

  const double tau = 1e-3;
  Field direct = u;
  for (int k = 0; k < 20; ++k) direct = mm_step(direct, tau, env, 1e-11);

  // delta-form: minimize scale*E(v) + ||v-u||^2/(2 tau') with
  // scale = 1/(rescale.time_factor) applied tau'/... == mm_step with
  // tau' * scale = tau again; the rescale map must reproduce that tau.
  const double tau_delta = tau * rescale.time_factor;
  const double tau_back = tau_delta / rescale.time_factor;
  Field rescaled = u;
  for (int k = 0; k < 20; ++k) rescaled = mm_step(rescaled, tau_back, env, 1e-11);

  CHECK(l2_distance(direct, rescaled) <= 1e-10);
  // And the rescale map itself is consistent: delta * 4 / eps^2 = |ln eps|.
  CHECK(rescale.delta * 4.0 / (eps * eps) ==
        doctest::Approx(std::fabs(std::log(eps))).epsilon(1e-12));
}

TEST_CASE("mm_step basics") {
  const ConvexEnvelope env = pmtv::convex_envelope(ScalarPotential(0.2));
  const double tau = 1e-3;

  // Constant datum is already the minimizer.
  Field c({12}, 0.1, 0.7);
  const Field vc = mm_step(c, tau, env, 1e-10);
  for (int i = 0; i < c.size(); ++i) CHECK(vc[i] == c[i]);

  // Optimality residual contract.
  const Field u = oracle::random_field({24}, 0.08, 11);
  const double tol = 1e-9;
  const Field v = mm_step(u, tau, env, tol);
  Field res = slope_field(v, env);
  for (int i = 0; i < u.size(); ++i) res[i] += (v[i] - u[i]) / tau;
  CHECK(res.l2_norm() <= tol);

  // Mean preserved, sup norm does not grow.
  CHECK(std::fabs(v.mean() - u.mean()) <= 1e-12);
  CHECK(v.linf_norm() <= u.linf_norm() + tol * tau);

  // Energy decreases.
  CHECK(energy(v, EnergyKind::kConvexified, nullptr, &env) <=
        energy(u, EnergyKind::kConvexified, nullptr, &env));
}

TEST_CASE("mm_step agrees with explicit Euler to second order") {
  const ConvexEnvelope env = pmtv::convex_envelope(ScalarPotential(0.3));
  // Gradients kept inside (0, sigma1), where the envelope is strictly
  // convex; inside the affine window the gradient field is locally constant
  // and the implicit and explicit steps coincide exactly.
  const int n = 16;
  Field u({n}, 0.125);
  for (int i = 0; i < n; ++i) {
    u[i] = 0.15 * std::sin(3.14159265358979 * u.coord(0, i));
  }

  auto implicit_vs_explicit = [&](double tau) {
    const Field v = mm_step(u, tau, env, 1e-12);
    const Field g = slope_field(u, env);
    Field expl = u;
    for (int i = 0; i < n; ++i) expl[i] = u[i] - tau * g[i];
    return l2_distance(v, expl);
  };
  const double e1 = implicit_vs_explicit(1e-3);
  const double e2 = implicit_vs_explicit(5e-4);
  CHECK(e1 / e2 > 3.0);
  CHECK(e1 / e2 < 5.0);
  // Second-order shrinkage persists down to tau/10.
  CHECK(implicit_vs_explicit(1e-4) <= e1 / 50.0);
}

TEST_CASE("mm_step is a contraction") {
  const ConvexEnvelope env = pmtv::convex_envelope(ScalarPotential(0.15));
  const double tau = 2e-3;
  const double tol = 1e-10;
  for (std::uint64_t seed : {101ULL, 102ULL, 103ULL}) {
    const Field u = oracle::random_field({20}, 0.1, seed);
    const Field w = oracle::random_field({20}, 0.1, seed + 50);
    const Field su = mm_step(u, tau, env, tol);
    const Field sw = mm_step(w, tau, env, tol);
    CHECK(l2_distance(su, sw) <= l2_distance(u, w) + 2.0 * tol * tau);
  }
}

TEST_CASE("prox_tv basics") {
  const double tau = 1e-3;

  Field c({30}, 0.05, -1.3);
  const Field vc = pmtv::prox_tv(c, tau, 1e-10);
  for (int i = 0; i < c.size(); ++i) CHECK(vc[i] == c[i]);

  // One step moves the step plateaus toward each other by tau; the jump
  // location does not move.
  const int n = 400;
  const double h = 2.0 / n;
  const Field u0 = step_field(n, h, 1.0);
  const Field v = pmtv::prox_tv(u0, tau, 1e-12);
  for (int i = 0; i < n; ++i) {
    const double expect = (i < n / 2 ? -1.0 : 1.0) * (0.5 - tau);
    CHECK(std::fabs(v[i] - expect) <= 2.0 * h);
  }
  // Far from the boundary and the jump the match is much tighter.
  CHECK(std::fabs(v[100] - (tau - 0.5)) <= 1e-6);
  CHECK(std::fabs(v[300] - (0.5 - tau)) <= 1e-6);
  CHECK(std::fabs(v.mean() - u0.mean()) <= 1e-12);
}

TEST_CASE("prox_tv in 2D preserves the mean and dissipates") {
  const Field u = oracle::random_field({9, 7}, 0.2, 77);
  const Field v = pmtv::prox_tv(u, 5e-3, 1e-10);
  CHECK(std::fabs(v.mean() - u.mean()) <= 1e-12);
  CHECK(energy(v, EnergyKind::kTotalVariation) <=
        energy(u, EnergyKind::kTotalVariation));
  CHECK(v.linf_norm() <= u.linf_norm() + 1e-9);
}

TEST_CASE("evolve produces consistent traces") {
  ExperimentConfig cfg = base_config(FlowModel::kTotalVariation, 64, 2.0 / 64);
  cfg.t_end = 0.03;
  const FlowTrace trace = evolve(cfg);

  REQUIRE(trace.times.size() == trace.energies.size());
  REQUIRE(trace.times.size() == trace.fields.size());
  REQUIRE(trace.times.size() == trace.slopes.size());
  REQUIRE(trace.step_norms.size() + 1 == trace.times.size());

  const double mean0 = trace.fields.front().mean();
  for (std::size_t k = 1; k < trace.fields.size(); ++k) {
    CHECK(trace.energies[k] <= trace.energies[k - 1] + 1e-11);
    CHECK(trace.fields[k].linf_norm() <=
          trace.fields[k - 1].linf_norm() + 1e-11);
    CHECK(trace.fields[k].l2_norm() <= trace.fields[k - 1].l2_norm() + 1e-11);
    CHECK(std::fabs(trace.fields[k].mean() - mean0) <= 1e-10);
  }
}

TEST_CASE("constant datum stays frozen under both models") {
  for (FlowModel model : {FlowModel::kPeronaMalik, FlowModel::kTotalVariation}) {
    ExperimentConfig cfg = base_config(model, 16, 0.125);
    cfg.eps = 0.25;
    cfg.init.kind = "random";
    cfg.init.amplitude = 0.0;  // identically zero
    cfg.t_end = 0.01;
    const FlowTrace trace = evolve(cfg);
    for (double e : trace.energies) CHECK(e == 0.0);
    for (const auto& f : trace.fields) CHECK(f.linf_norm() == 0.0);
  }
}

TEST_CASE("pm trace stays near the tv trace at desk scale") {
  // Smoke-sized companion of the headline sweep.
  ExperimentConfig tv_cfg = base_config(FlowModel::kTotalVariation, 100, 0.02);
  tv_cfg.t_end = 0.1;
  const FlowTrace tv = evolve(tv_cfg);

  ExperimentConfig pm_cfg = tv_cfg;
  pm_cfg.model = FlowModel::kPeronaMalik;
  pm_cfg.eps = 0.05;
  const FlowTrace pm = evolve(pm_cfg);

  double sup = 0.0;
  for (std::size_t k = 0; k < tv.fields.size(); ++k) {
    sup = std::max(sup, l2_distance(pm.fields[k], tv.fields[k]));
  }
  CHECK(sup <= 0.15);
}

TEST_CASE("tv flow reaches the mean of the initial datum") {
  ExperimentConfig cfg = base_config(FlowModel::kTotalVariation, 24, 0.1);
  cfg.init.kind = "random";
  cfg.init.seed = 2024;
  cfg.init.amplitude = 0.4;
  cfg.tau = 2e-3;
  cfg.t_end = 2.0;
  const FlowTrace trace = evolve(cfg);
  const double target = pmtv::steady_mean(trace.fields.front());
  Field limit = trace.fields.back();
  for (double& v : limit.values()) v -= target;
  CHECK(limit.l2_norm() <= 1e-3);

  // steady_mean trivia.
  CHECK(pmtv::steady_mean(step_field(10, 0.1, 2.0)) == doctest::Approx(0.0));
  Field c({5}, 1.0, 3.25);
  CHECK(pmtv::steady_mean(c) == 3.25);
}

TEST_CASE("holder continuity along traces") {
  ExperimentConfig cfg = base_config(FlowModel::kPeronaMalik, 32, 0.0625);
  cfg.eps = 0.2;
  cfg.init.kind = "random";
  cfg.init.seed = 5;
  cfg.init.amplitude = 0.8;
  cfg.t_end = 0.02;
  const FlowTrace trace = evolve(cfg);
  const double budget = std::sqrt(2.0 * trace.energies.front());
  for (std::size_t s = 0; s < trace.times.size(); ++s) {
    for (std::size_t t = s + 1; t < trace.times.size(); ++t) {
      const double dist = l2_distance(trace.fields[t], trace.fields[s]);
      const double bound =
          std::sqrt(trace.times[t] - trace.times[s]) * budget;
      CHECK(dist <= bound + 1e-9);
    }
  }
}

TEST_CASE("solver failures carry the failing step") {
  ExperimentConfig cfg = base_config(FlowModel::kPeronaMalik, 8, 0.25);
  cfg.eps = 0.2;
  cfg.t_end = 0.01;
  cfg.inner_tol = 1e-300;  // below the floating-point noise floor
  try {
    evolve(cfg);
    FAIL("expected FlowStepError");
  } catch (const pmtv::FlowStepError& e) {
    CHECK(e.step_index() == 1);
    CHECK(e.time() == doctest::Approx(cfg.tau));
  }
}

TEST_CASE("config validation lists offenders") {
  ExperimentConfig cfg = base_config(FlowModel::kPeronaMalik, 16, 0.1);
  cfg.tau = -1.0;
  cfg.eps = 1.5;
  cfg.init.kind = "wiggle";
  const auto bad = cfg.validate();
  REQUIRE(bad.size() == 3);  // tau, eps, init.kind
  CHECK(std::find(bad.begin(), bad.end(), "tau") != bad.end());
  CHECK(std::find(bad.begin(), bad.end(), "eps") != bad.end());
  CHECK(std::find(bad.begin(), bad.end(), "init.kind") != bad.end());
  CHECK_THROWS_AS(evolve(cfg), pmtv::ConfigError);
}

TEST_CASE("initial data generators") {
  pmtv::GridSpec grid;
  grid.dims = 1;
  grid.shape = {8, 8};
  grid.spacing = 0.25;

  pmtv::InitSpec step;
  step.kind = "step";
  step.jump = 2.0;
  const Field us = pmtv::make_initial_field(grid, step);
  CHECK(us[0] == -1.0);
  CHECK(us[7] == 1.0);

  pmtv::InitSpec ramp;
  ramp.kind = "ramp";
  const Field ur = pmtv::make_initial_field(grid, ramp);
  CHECK(ur[0] == doctest::Approx(-0.875));
  CHECK(ur[7] == doctest::Approx(0.875));

  pmtv::InitSpec rnd;
  rnd.kind = "random";
  rnd.seed = 99;
  rnd.amplitude = 0.5;
  const Field ua = pmtv::make_initial_field(grid, rnd);
  const Field ub = pmtv::make_initial_field(grid, rnd);
  for (int i = 0; i < ua.size(); ++i) {
    CHECK(ua[i] == ub[i]);
    CHECK(std::fabs(ua[i]) <= 0.5);
  }

  pmtv::InitSpec sine;
  sine.kind = "sine";
  sine.wavenumber = 1;
  grid.dims = 2;
  const Field u2 = pmtv::make_initial_field(grid, sine);
  CHECK(u2.dims() == 2);
  CHECK(std::fabs(u2.mean()) <= 1e-12);
}
