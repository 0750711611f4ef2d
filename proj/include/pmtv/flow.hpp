#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pmtv/field.hpp"

namespace pmtv {

enum class FlowModel { kPeronaMalik, kTotalVariation };

std::string to_string(FlowModel m);
FlowModel flow_model_from_string(const std::string& s);

/// Slow-time rescaling bridge: the regularization weight delta and the time
/// speed-up factor that turn the delta-problem into the eps-problem.
struct TimeRescale {
  double delta;        // eps^2 |ln eps| / 4
  double time_factor;  // 1 / (eps |ln eps|)
};
TimeRescale delta_of_eps(double eps);

struct GridSpec {
  int dims = 1;
  std::array<int, 2> shape = {0, 0};
  double spacing = 0.0;
};

struct InitSpec {
  std::string kind = "step";  // step | ramp | sine | random | file
  double jump = 1.0;          // step
  int wavenumber = 1;         // sine
  std::uint64_t seed = 1;     // random
  double amplitude = 1.0;     // random
  std::string path;           // file
};

struct ExperimentConfig {
  FlowModel model = FlowModel::kTotalVariation;
  double eps = 0.1;  // used when model == kPeronaMalik
  GridSpec grid;
  InitSpec init;
  double tau = 1e-3;
  double t_end = 0.5;
  double inner_tol = 1e-8;
  int snapshot_stride = 1;
  std::string out_dir;

  /// Names of every offending field; empty when well formed.
  std::vector<std::string> validate() const;
};

Field make_initial_field(const GridSpec& grid, const InitSpec& init);

/// Discrete evolution record. Energies are the gradient-flow energy of the
/// model (convexified energy for PM, total variation for TV). slopes[k] is
/// the slope estimate at fields[k]; slopes[0] is a one-sided estimate and is
/// never used by the dissipation checks.
struct FlowTrace {
  FlowModel model = FlowModel::kTotalVariation;
  double eps = 0.0;
  double tau = 0.0;
  double inner_tol = 0.0;
  std::vector<double> times;
  std::vector<double> energies;
  std::vector<double> step_norms;  // one per step
  std::vector<double> slopes;      // one per time
  std::vector<Field> fields;       // may be empty for traces loaded from disk
};

/// One implicit step of the convexified flow: approximate minimizer v of
/// energy(v) + ||v - u||^2/(2 tau) with ||(v - u)/tau + slope_field(v)||_2
/// certified <= inner_tol. Throws ConvergenceError past the iteration cap.
Field mm_step(const Field& u, double tau, const ConvexEnvelope& env,
              double inner_tol);

/// Proximal map of the total variation, solved through the dual formulation:
/// ascent over per-cell unit-ball vector fields with zero boundary flux,
/// terminated when the primal-dual gap is <= inner_tol.
Field prox_tv(const Field& u, double tau, double inner_tol);

class FlowStepError : public std::runtime_error {
 public:
  FlowStepError(const std::string& what, int step_index, double time)
      : std::runtime_error(what), step_index_(step_index), time_(time) {}
  int step_index() const { return step_index_; }
  double time() const { return time_; }

 private:
  int step_index_;
  double time_;
};

FlowTrace evolve(const ExperimentConfig& cfg);

/// Discrete mean of the initial datum: the long-time limit of every trace.
double steady_mean(const Field& u0);

namespace detail {
Field mm_step_impl(const Field& u, double tau, const ConvexEnvelope& env,
                   double target_residual, const Field* hint,
                   double* achieved = nullptr);
Field prox_tv_impl(const Field& u, double tau, double gap_target,
                   VectorField* warm, double* achieved = nullptr);
}  // namespace detail

}  // namespace pmtv
