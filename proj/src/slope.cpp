#include "pmtv/slope.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pmtv {

SampledFunctional make_convexified_functional(const ConvexEnvelope& env,
                                              double inner_tol) {
  SampledFunctional f;
  f.name = "convexified_energy(eps=" + std::to_string(env.source.eps) + ")";
  f.value = [env](const Field& u) {
    return energy(u, EnergyKind::kConvexified, nullptr, &env);
  };
  f.prox = [env, inner_tol](const Field& u, double tau) {
    return mm_step(u, tau, env, inner_tol);
  };
  f.slope_closed_form = [env](const Field& u) {
    return slope_field(u, env).l2_norm();
  };
  return f;
}

SampledFunctional make_tv_functional(double inner_tol) {
  SampledFunctional f;
  f.name = "total_variation";
  f.value = [](const Field& u) {
    return energy(u, EnergyKind::kTotalVariation);
  };
  f.prox = [inner_tol](const Field& u, double tau) {
    return prox_tv(u, tau, inner_tol);
  };
  return f;
}

std::vector<double> metric_derivative(const FlowTrace& trace) {
  if (trace.times.size() < 2) {
    throw std::invalid_argument("metric_derivative needs at least two times");
  }
  const std::size_t steps = trace.times.size() - 1;
  std::vector<double> md(steps, 0.0);
  const bool have_fields = trace.fields.size() == trace.times.size();
  for (std::size_t k = 0; k < steps; ++k) {
    const double dt = trace.times[k + 1] - trace.times[k];
    const double dist = have_fields
                            ? l2_distance(trace.fields[k + 1], trace.fields[k])
                            : trace.step_norms.at(k);
    md[k] = dist / dt;
  }
  return md;
}

SlopeEstimate slope_prox(const SampledFunctional& F, const Field& x,
                         std::vector<double> tau_seq) {
  if (!F.prox) {
    throw std::invalid_argument("slope_prox: functional has no prox evaluator");
  }
  if (tau_seq.empty()) {
    throw std::invalid_argument("slope_prox: empty tau sequence");
  }
  for (std::size_t i = 1; i < tau_seq.size(); ++i) {
    if (!(tau_seq[i] < tau_seq[i - 1])) {
      throw std::invalid_argument("slope_prox: tau sequence must decrease");
    }
  }
  SlopeEstimate out;
  auto quotient = [&](double tau) {
    return l2_distance(x, F.prox(x, tau)) / tau;
  };
  for (double tau : tau_seq) {
    out.taus.push_back(tau);
    out.quotients.push_back(quotient(tau));
  }
  // First-order bias in tau; one Richardson combination at the smallest tau.
  const double tau_min = tau_seq.back();
  out.estimate = 2.0 * quotient(0.5 * tau_min) - out.quotients.back();
  return out;
}

EdiReport check_edi(const FlowTrace& trace, double tol,
                    const std::vector<int>& excluded) {
  EdiReport report;
  report.tolerance_used = tol;
  const std::size_t n = trace.times.size();
  if (n < 2 || trace.energies.size() != n || trace.slopes.size() != n) {
    throw std::invalid_argument("check_edi: inconsistent trace arrays");
  }
  const auto md = metric_derivative(trace);
  // Prefix sums of the two dissipation integrals; slopes enter at the right
  // endpoint of each step, matching the implicit scheme's optimality.
  std::vector<double> acc_md(n, 0.0), acc_slope(n, 0.0);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double dt = trace.times[k + 1] - trace.times[k];
    acc_md[k + 1] = acc_md[k] + dt * md[k] * md[k];
    acc_slope[k + 1] =
        acc_slope[k] + dt * trace.slopes[k + 1] * trace.slopes[k + 1];
  }
  std::vector<bool> skip(n, false);
  for (int idx : excluded) {
    if (idx >= 0 && static_cast<std::size_t>(idx) < n) skip[idx] = true;
  }
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < n; ++s) {
    if (skip[s]) continue;
    for (std::size_t t = s + 1; t < n; ++t) {
      if (skip[t]) continue;
      const double drop = trace.energies[s] - trace.energies[t];
      const double dissipation = 0.5 * (acc_md[t] - acc_md[s]) +
                                 0.5 * (acc_slope[t] - acc_slope[s]);
      const double residual =
          (drop - dissipation) / (trace.times[t] - trace.times[s]);
      worst = std::min(worst, residual);
      ++report.pairs_checked;
    }
  }
  report.worst_residual = report.pairs_checked > 0 ? worst : 0.0;
  report.pass = report.worst_residual >= -tol;
  return report;
}

namespace {

double slope_at(const SampledFunctional& F, const Field& x) {
  if (F.slope_closed_form) {
    return F.slope_closed_form(x);
  }
  // Default quotient scales: small relative to unit-size problems.
  return slope_prox(F, x, {1e-2, 1e-3}).estimate;
}

}  // namespace

SlopeConeReport check_slope_cone(const SampledFunctional& F,
                                 const std::vector<Field>& centers,
                                 const std::vector<Field>& probes,
                                 double tol) {
  SlopeConeReport report;
  report.worst_margin = std::numeric_limits<double>::infinity();
  for (std::size_t ci = 0; ci < centers.size(); ++ci) {
    const double fx = F.value(centers[ci]);
    if (!std::isfinite(fx)) continue;
    const double sx = slope_at(F, centers[ci]);
    if (!std::isfinite(sx)) continue;
    for (std::size_t pi = 0; pi < probes.size(); ++pi) {
      const double fy = F.value(probes[pi]);
      const double margin = fy - fx + sx * l2_distance(centers[ci], probes[pi]);
      report.worst_margin = std::min(report.worst_margin, margin);
      if (margin < -tol) {
        report.violations.push_back(
            {static_cast<int>(ci), static_cast<int>(pi), margin});
      }
      ++report.pairs_checked;
    }
  }
  if (report.pairs_checked == 0) report.worst_margin = 0.0;
  report.pass = report.violations.empty();
  return report;
}

SlopeConeReport check_trace_slope_cone(const std::vector<Field>& points,
                                       const std::vector<double>& values,
                                       const std::vector<double>& slopes,
                                       double tol) {
  if (points.size() != values.size() || points.size() != slopes.size()) {
    throw std::invalid_argument("trace slope cone: array sizes differ");
  }
  SlopeConeReport report;
  report.worst_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!std::isfinite(values[i]) || !std::isfinite(slopes[i])) continue;
    for (std::size_t j = 0; j < points.size(); ++j) {
      if (i == j) continue;
      const double margin =
          values[j] - values[i] + slopes[i] * l2_distance(points[i], points[j]);
      report.worst_margin = std::min(report.worst_margin, margin);
      if (margin < -tol) {
        report.violations.push_back(
            {static_cast<int>(i), static_cast<int>(j), margin});
      }
      ++report.pairs_checked;
    }
  }
  if (report.pairs_checked == 0) report.worst_margin = 0.0;
  report.pass = report.violations.empty();
  return report;
}

LimitHypothesisReport check_limit_hypothesis(
    const std::vector<SampledFunctional>& F_seq, const SampledFunctional& F_lim,
    const Field& x, const std::vector<Field>& approx_seq, double tol_energy,
    double tol_slope, double premise_bound) {
  if (F_seq.size() != approx_seq.size() || F_seq.empty()) {
    throw std::invalid_argument(
        "check_limit_hypothesis: functional and point sequences must match");
  }
  LimitHypothesisReport report;
  for (std::size_t k = 0; k < F_seq.size(); ++k) {
    report.energies.push_back(F_seq[k].value(approx_seq[k]));
    report.slopes.push_back(slope_at(F_seq[k], approx_seq[k]));
  }
  for (std::size_t k = 0; k < F_seq.size(); ++k) {
    if (!std::isfinite(report.energies[k]) || !std::isfinite(report.slopes[k]) ||
        std::fabs(report.energies[k]) > premise_bound ||
        report.slopes[k] > premise_bound) {
      report.engaged = false;  // hypothesis not engaged, nothing to conclude
      return report;
    }
  }
  report.limit_energy = F_lim.value(x);
  report.limit_slope = slope_at(F_lim, x);
  report.energy_converges =
      std::fabs(report.energies.back() - report.limit_energy) <= tol_energy;
  // liminf proxy over the tail of the finite sequence.
  const std::size_t tail = (F_seq.size() + 1) / 2;
  double liminf = std::numeric_limits<double>::infinity();
  for (std::size_t k = F_seq.size() - tail; k < F_seq.size(); ++k) {
    liminf = std::min(liminf, report.slopes[k]);
  }
  report.slope_liminf_ok = liminf >= report.limit_slope - tol_slope;
  report.conclusion_holds = report.energy_converges && report.slope_liminf_ok;
  return report;
}

}  // namespace pmtv
