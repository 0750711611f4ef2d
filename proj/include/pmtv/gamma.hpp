#pragma once

#include <functional>
#include <span>
#include <vector>

#include "pmtv/field.hpp"

namespace pmtv {

/// Margin of the linear lower bound: min over a sigma grid of
/// envelope(sigma) - a sigma + b, with the proof region (1..4) of the argmin.
struct BoundReport {
  double eps = 0.0;
  double a = 0.0;
  double b = 0.0;
  double sigma_max = 0.0;
  int samples = 0;
  double min_margin = 0.0;
  double argmin_sigma = 0.0;
  int region = 0;
  bool pass = false;
};

/// Evaluates envelope(sigma) - a sigma + b on a geometric grid (plus sigma=0).
/// The grid must cover all four case regions: past 1/(eps |ln eps|).
BoundReport lower_bound_margin(double eps, double a, double b, double sigma_max,
                               int samples);

struct Eps1Probe {
  double eps;
  bool pass;
  double min_margin;
};

struct Eps1Report {
  double a = 0.0;
  double b = 0.0;
  bool found = false;
  double eps1 = 0.0;
  std::vector<Eps1Probe> tested;  // descending eps
};

/// Largest eps on a log grid (ratio 2^(1/4), floor 1e-6) below which every
/// tested eps satisfies the linear lower bound.
Eps1Report find_eps1(double a, double b);

/// Coefficient of the chord through the origin and sigma = 2/eps:
/// (ln(1 + 4 eps^-2)/(2 |ln eps|) + 1)/2. Greater than 1, decreasing to 1.
double limsup_coeff(double eps);

/// Monotone transition profile of height `jump` over [-half_width, half_width],
/// sampled at `resolution` points per unit.
struct JumpProfile {
  double jump = 1.0;
  double half_width = 0.25;
  int resolution = 10000;
  std::function<double(double)> shape;
};

JumpProfile linear_ramp_profile(double jump, double half_width, int resolution);

/// Discrete nonconvex energy of the profile compressed by eps on (-1,1).
/// For the linear ramp this approaches 2 half_width + jump^2/(8 half_width)
/// from above as eps decreases.
double jump_cost(const JumpProfile& profile, double eps);

struct EtaOptimum {
  double eta_star;
  double min_value;
};

/// Minimizer and minimum of 2 eta + jump^2 / (8 eta): (jump/4, jump).
EtaOptimum optimal_eta(double jump);

/// Jump energies of piecewise constant profiles: sum |J|^alpha for
/// alpha in (0,1], sum ln |J| for alpha = 0.
double h_alpha(std::span<const double> jumps, double alpha);

struct CompactnessReport {
  double lhs;
  double rhs;
  bool pass;
};

/// Discrete instance of the uniform bound: convexified energy of u against
/// TV(u)/2 - |domain|/2.
CompactnessReport compactness_bound(const Field& u, double eps);

}  // namespace pmtv
