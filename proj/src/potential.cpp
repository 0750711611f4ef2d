#include "pmtv/potential.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <string>

namespace pmtv {

namespace {

void require_finite(double sigma) {
  if (!std::isfinite(sigma)) {
    throw std::domain_error("potential argument must be finite, got " +
                            std::to_string(sigma));
  }
}

// Bisection for an increasing function f on [lo, hi] with f(lo) <= 0 <= f(hi).
double bisect_increasing(const std::function<double(double)>& f, double lo,
                         double hi) {
  for (int i = 0; i < 200 && (hi - lo) > 1e-16 * (1.0 + hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) <= 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

ScalarPotential::ScalarPotential(double eps_in) : eps(eps_in) {
  if (!(eps_in > 0.0) || !(eps_in < 1.0)) {
    throw std::domain_error("eps must lie strictly in (0,1), got " +
                            std::to_string(eps_in));
  }
  log_eps_abs = std::fabs(std::log(eps_in));
}

double ScalarPotential::value(double sigma) const {
  require_finite(sigma);
  const double s2 = sigma * sigma;
  return 0.5 / (eps * log_eps_abs) * std::log1p(s2) + 0.25 * eps * s2;
}

double ScalarPotential::deriv(double sigma) const {
  require_finite(sigma);
  return sigma / (eps * log_eps_abs * (1.0 + sigma * sigma)) +
         0.5 * eps * sigma;
}

double ScalarPotential::second_deriv(double sigma) const {
  require_finite(sigma);
  const double s2 = sigma * sigma;
  const double d = 1.0 + s2;
  return (1.0 - s2) / (eps * log_eps_abs * d * d) + 0.5 * eps;
}

double ScalarPotential::curvature_at_zero() const {
  return 1.0 / (eps * log_eps_abs) + 0.5 * eps;
}

std::pair<double, double> ScalarPotential::inflection_points() const {
  // second_deriv vanishes where (s - 1)/(1 + s)^2 = eps^2 |ln eps| / 2 with
  // s = sigma^2; a quadratic in s with two roots straddling s = 3 because
  // eps^2 |ln eps| peaks at 1/(2e) < 1/4 on (0,1).
  const double c = 0.5 * eps * eps * log_eps_abs;
  const double disc = 1.0 - 8.0 * c;
  if (!(disc > 0.0)) {
    throw StructuralError("concave well vanished: eps^2 |ln eps| >= 1/4");
  }
  const double root = std::sqrt(disc);
  const double s_lo = ((1.0 - 2.0 * c) - root) / (2.0 * c);
  const double s_hi = ((1.0 - 2.0 * c) + root) / (2.0 * c);
  return {std::sqrt(s_lo), std::sqrt(s_hi)};
}

double ConvexEnvelope::value(double sigma) const {
  const double s = std::fabs(sigma);
  if (s <= sigma1 || s >= sigma2) {
    return source.value(s);
  }
  return slope_m * s + offset_q;
}

double ConvexEnvelope::deriv(double sigma) const {
  const double s = std::fabs(sigma);
  const double d = (s <= sigma1 || s >= sigma2) ? source.deriv(s) : slope_m;
  return sigma < 0.0 ? -d : d;
}

ConvexEnvelope::Eval ConvexEnvelope::eval(double sigma) const {
  return {value(sigma), deriv(sigma)};
}

double ConvexEnvelope::flux_coefficient(double sigma) const {
  const double s = std::fabs(sigma);
  if (s <= sigma1 || s >= sigma2) {
    // deriv(s)/s in closed form; finite at s == 0.
    return 1.0 / (source.eps * source.log_eps_abs * (1.0 + s * s)) +
           0.5 * source.eps;
  }
  return slope_m / s;
}

ConvexEnvelope convex_envelope(const ScalarPotential& pot, double tol) {
  if (!(tol > 0.0)) {
    throw std::domain_error("envelope tolerance must be positive");
  }
  const auto [sig_lo, sig_hi] = pot.inflection_points();
  const double slope_at_hi = pot.deriv(sig_hi);
  const double slope_at_lo = pot.deriv(sig_lo);
  if (!(slope_at_hi < slope_at_lo)) {
    throw StructuralError("derivative is not decreasing across the well");
  }

  // sigma2(m): unique point of the last convex branch with deriv == m.
  auto match_on_tail = [&](double m) {
    double hi = sig_hi;
    double span = std::max(sig_hi, 1.0);
    while (pot.deriv(hi) < m) {
      hi += span;
      span *= 2.0;
    }
    return bisect_increasing([&](double s) { return pot.deriv(s) - m; },
                             sig_hi, hi);
  };

  // Gap between the potential at sigma2(m) and the tangent line drawn from
  // sigma1; positive when the tangent from sigma1 passes below, negative when
  // above. Decreasing across the outer bracket.
  auto tangent_gap = [&](double s1) {
    const double m = pot.deriv(s1);
    const double s2 = match_on_tail(m);
    return pot.value(s2) - (pot.value(s1) + m * (s2 - s1));
  };

  // Outer bracket: [point of the first branch matching the well's minimal
  // slope, first inflection].
  const double s1_lo =
      bisect_increasing([&](double s) { return pot.deriv(s) - slope_at_hi; },
                        0.0, sig_lo);
  double lo = s1_lo;
  double hi = sig_lo;
  if (!(tangent_gap(lo) > 0.0) || !(tangent_gap(hi) < 0.0)) {
    throw StructuralError("bitangent bracket lost; potential looks convex");
  }
  for (int i = 0; i < 200 && (hi - lo) > 1e-16 * (1.0 + hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    if (tangent_gap(mid) >= 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }

  ConvexEnvelope env{pot, 0.0, 0.0, 0.0, 0.0};
  env.sigma1 = 0.5 * (lo + hi);
  env.slope_m = pot.deriv(env.sigma1);
  env.sigma2 = match_on_tail(env.slope_m);
  env.offset_q = pot.value(env.sigma1) - env.slope_m * env.sigma1;

  const double scale = std::max(1.0, env.slope_m);
  const double r_deriv = std::fabs(pot.deriv(env.sigma2) - env.slope_m);
  const double chord =
      (pot.value(env.sigma2) - pot.value(env.sigma1)) / (env.sigma2 - env.sigma1);
  const double r_chord = std::fabs(chord - env.slope_m);
  if (r_deriv > tol * scale || r_chord > tol * scale) {
    throw ConvergenceError("bitangent residual above tolerance",
                           std::max(r_deriv, r_chord));
  }
  return env;
}

}  // namespace pmtv
