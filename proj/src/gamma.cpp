#include "pmtv/gamma.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace pmtv {

BoundReport lower_bound_margin(double eps, double a, double b, double sigma_max,
                               int samples) {
  if (!(a > 0.0) || !(a < 1.0) || !(b > 0.0) || !(b < 1.0)) {
    throw std::domain_error("lower bound constants must lie in (0,1)");
  }
  const ScalarPotential pot(eps);
  const double case_edge = std::sqrt(std::numbers::e * std::numbers::e - 1.0);
  const double tail_edge = 1.0 / (eps * pot.log_eps_abs);
  if (!(sigma_max > tail_edge) || !(sigma_max > case_edge) ||
      !(sigma_max > b)) {
    throw ConfigError({"sigma_max (must cover all four case regions)"});
  }
  if (samples < 16) {
    throw ConfigError({"samples"});
  }
  const ConvexEnvelope env = convex_envelope(pot);

  BoundReport report;
  report.eps = eps;
  report.a = a;
  report.b = b;
  report.sigma_max = sigma_max;
  report.samples = samples;
  report.min_margin = std::numeric_limits<double>::infinity();

  const double sigma_min = sigma_max * 1e-8;
  const double ratio =
      std::pow(sigma_max / sigma_min, 1.0 / static_cast<double>(samples - 2));
  double sigma = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double margin = env.value(sigma) - a * sigma + b;
    if (margin < report.min_margin) {
      report.min_margin = margin;
      report.argmin_sigma = sigma;
    }
    sigma = (i == 0) ? sigma_min : sigma * ratio;
  }
  const double s = report.argmin_sigma;
  report.region = s <= b ? 1 : s <= case_edge ? 2 : s <= tail_edge ? 3 : 4;
  report.pass = report.min_margin >= 0.0;
  return report;
}

Eps1Report find_eps1(double a, double b) {
  Eps1Report report;
  report.a = a;
  report.b = b;
  const double ratio = std::pow(2.0, -0.25);
  constexpr double kFloor = 1e-6;
  for (double eps = ratio; eps >= kFloor; eps *= ratio) {
    const ScalarPotential pot(eps);
    const double sigma_max =
        4.0 * std::max({1.0 / (eps * pot.log_eps_abs),
                        std::sqrt(std::numbers::e * std::numbers::e - 1.0),
                        2.0 / eps, 1.0});
    const auto probe = lower_bound_margin(eps, a, b, sigma_max, 10000);
    report.tested.push_back({eps, probe.pass, probe.min_margin});
  }
  // Largest grid value such that every tested eps at or below it passes.
  report.found = false;
  for (std::size_t i = report.tested.size(); i-- > 0;) {
    if (!report.tested[i].pass) break;
    report.found = true;
    report.eps1 = report.tested[i].eps;
  }
  return report;
}

double limsup_coeff(double eps) {
  if (!(eps > 0.0) || !(eps < 1.0)) {
    throw std::domain_error("eps must lie strictly in (0,1)");
  }
  const double l = std::fabs(std::log(eps));
  return 0.5 * (std::log1p(4.0 / (eps * eps)) / (2.0 * l) + 1.0);
}

JumpProfile linear_ramp_profile(double jump, double half_width,
                                int resolution) {
  if (!(jump > 0.0) || !(half_width > 0.0) || resolution < 2) {
    throw std::domain_error("jump profile needs jump > 0, half_width > 0");
  }
  JumpProfile p;
  p.jump = jump;
  p.half_width = half_width;
  p.resolution = resolution;
  p.shape = [jump, half_width](double y) {
    return std::clamp(jump / (2.0 * half_width) * y, -0.5 * jump, 0.5 * jump);
  };
  return p;
}

double jump_cost(const JumpProfile& profile, double eps) {
  if (!profile.shape || !(profile.jump > 0.0) || !(profile.half_width > 0.0) ||
      profile.resolution < 2) {
    throw std::domain_error("invalid jump profile");
  }
  const ScalarPotential pot(eps);
  const double dy = 1.0 / static_cast<double>(profile.resolution);
  if (!(eps * (profile.half_width + 2.0 * dy) < 1.0)) {
    throw ConfigError({"eps (rescaled support does not fit in (-1,1))"});
  }
  // Energy of shape(x/eps) on (-1,1) computed in profile coordinates: the
  // grid x = eps y has spacing eps dy, and the flat tails contribute nothing.
  const int half_cells = static_cast<int>(std::ceil(profile.half_width / dy)) + 1;
  double e = 0.0;
  for (int i = -half_cells; i < half_cells; ++i) {
    const double y0 = i * dy;
    const double grad = (profile.shape(y0 + dy) - profile.shape(y0)) / (eps * dy);
    e += eps * dy * pot.value(std::fabs(grad));
  }
  return e;
}

EtaOptimum optimal_eta(double jump) {
  if (!(jump > 0.0)) {
    throw std::domain_error("jump height must be positive");
  }
  return {0.25 * jump, jump};
}

double h_alpha(std::span<const double> jumps, double alpha) {
  if (!(alpha >= 0.0) || !(alpha <= 1.0)) {
    throw std::domain_error("alpha must lie in [0,1]");
  }
  double sum = 0.0;
  for (double j : jumps) {
    if (j == 0.0 || !std::isfinite(j)) {
      throw std::domain_error("jump heights must be nonzero");
    }
    sum += alpha == 0.0 ? std::log(std::fabs(j)) : std::pow(std::fabs(j), alpha);
  }
  return sum;
}

CompactnessReport compactness_bound(const Field& u, double eps) {
  const ConvexEnvelope env = convex_envelope(ScalarPotential(eps));
  CompactnessReport report{};
  report.lhs = energy(u, EnergyKind::kConvexified, nullptr, &env);
  report.rhs = 0.5 * energy(u, EnergyKind::kTotalVariation) -
               0.5 * u.domain_measure();
  report.pass = report.lhs >= report.rhs;
  return report;
}

}  // namespace pmtv
