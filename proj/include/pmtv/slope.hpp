#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pmtv/flow.hpp"

namespace pmtv {

/// A functional over Fields with the L2 metric. The proximal-map and
/// closed-form slope evaluators are optional; checkers that need one throw
/// when it is missing.
struct SampledFunctional {
  std::string name;
  std::function<double(const Field&)> value;
  std::function<Field(const Field&, double)> prox;
  std::function<double(const Field&)> slope_closed_form;
};

SampledFunctional make_convexified_functional(const ConvexEnvelope& env,
                                              double inner_tol);
SampledFunctional make_tv_functional(double inner_tol);

/// Per-step difference quotients ||u_{k+1} - u_k|| / (t_{k+1} - t_k).
/// Computed from the stored fields when present, from the recorded step
/// norms otherwise.
std::vector<double> metric_derivative(const FlowTrace& trace);

struct SlopeEstimate {
  double estimate = 0.0;
  std::vector<double> taus;
  std::vector<double> quotients;  // ||x - prox_tau(x)|| / tau per tau
};

/// Proximal-quotient slope estimator with a final Richardson extrapolation
/// (2 q(tau/2) - q(tau) at the smallest tau of the sequence).
SlopeEstimate slope_prox(const SampledFunctional& F, const Field& x,
                         std::vector<double> tau_seq);

struct EdiReport {
  long pairs_checked = 0;
  /// min over index pairs of the dissipation residual divided by (t - s).
  double worst_residual = 0.0;
  double tolerance_used = 0.0;
  bool pass = true;
};

/// Energy dissipation inequality over all index pairs s < t of the trace:
///   energies[s] - energies[t] >= 1/2 sum tau md^2 + 1/2 sum tau slope^2
/// up to tol per unit time. Indices in `excluded` are skipped as endpoints.
EdiReport check_edi(const FlowTrace& trace, double tol,
                    const std::vector<int>& excluded = {});

struct ConeViolation {
  int center;
  int probe;
  double margin;
};

struct SlopeConeReport {
  long pairs_checked = 0;
  double worst_margin = 0.0;
  std::vector<ConeViolation> violations;
  bool pass = true;
};

/// Verifies F(y) >= F(x) - |grad F|(x) d(x, y) over centers x probes. The
/// slope comes from the closed form when available, from the proximal
/// quotient otherwise. Margins below -tol count as violations.
SlopeConeReport check_slope_cone(const SampledFunctional& F,
                                 const std::vector<Field>& centers,
                                 const std::vector<Field>& probes,
                                 double tol = 1e-9);

/// Same cone inequality over the snapshots of a computed trace, using the
/// recorded energies and slope estimates.
SlopeConeReport check_trace_slope_cone(const std::vector<Field>& points,
                                       const std::vector<double>& values,
                                       const std::vector<double>& slopes,
                                       double tol);

struct LimitHypothesisReport {
  bool engaged = true;  // false when the bounded-premise side fails
  std::vector<double> energies;
  std::vector<double> slopes;
  double limit_energy = 0.0;
  double limit_slope = 0.0;
  bool energy_converges = false;
  bool slope_liminf_ok = false;
  bool conclusion_holds = false;
};

/// Numeric check of the energy/slope limit implication for a sequence of
/// functionals evaluated along approximations of x: F_n(x_n) must approach
/// F_lim(x) and the slopes must not drop below the limit slope.
LimitHypothesisReport check_limit_hypothesis(
    const std::vector<SampledFunctional>& F_seq, const SampledFunctional& F_lim,
    const Field& x, const std::vector<Field>& approx_seq, double tol_energy,
    double tol_slope, double premise_bound = 1e12);

}  // namespace pmtv
