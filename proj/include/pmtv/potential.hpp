#pragma once

#include <utility>

#include "pmtv/common.hpp"

namespace pmtv {

/// Rescaled diffusion potential: a logarithmic well weighted by
/// 1/(2 eps |ln eps|) plus a quadratic tail (eps/4) sigma^2. Even in sigma,
/// zero at the origin, nonconvex for every eps in (0,1).
struct ScalarPotential {
  double eps;
  double log_eps_abs;  // |ln eps|, cached

  explicit ScalarPotential(double eps_in);

  double value(double sigma) const;
  double deriv(double sigma) const;  // odd in sigma
  double second_deriv(double sigma) const;
  double curvature_at_zero() const;  // 1/(eps |ln eps|) + eps/2

  /// Inflection points 0 < lo < sqrt(3) < hi bounding the concave well
  /// (closed form; exists for every eps in (0,1)).
  std::pair<double, double> inflection_points() const;
};

/// Convex envelope of a ScalarPotential. Equal to the potential outside
/// [sigma1, sigma2]; the affine segment slope_m * sigma + offset_q bridges
/// the concave well. Immutable after construction.
struct ConvexEnvelope {
  ScalarPotential source;
  double sigma1;
  double sigma2;
  double slope_m;
  double offset_q;

  struct Eval {
    double value;
    double deriv;
  };

  double value(double sigma) const;
  /// Odd, continuous, nondecreasing in |sigma|, zero at the origin.
  double deriv(double sigma) const;
  Eval eval(double sigma) const;

  /// deriv(sigma)/sigma extended continuously across sigma == 0 by the
  /// curvature of the potential at zero. This is the diffusion coefficient
  /// of the degenerate flux.
  double flux_coefficient(double sigma) const;
};

/// Bitangent construction: nested bisection, outer on sigma1 in the first
/// convex branch, inner on sigma2 in the last. Residuals of the two matching
/// equations (equal derivatives, chord slope equal to tangent slope) are
/// certified below tol in relative terms.
ConvexEnvelope convex_envelope(const ScalarPotential& pot, double tol = 1e-10);

}  // namespace pmtv
