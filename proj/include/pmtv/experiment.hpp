#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pmtv/flow.hpp"
#include "pmtv/slope.hpp"

namespace pmtv {

// Config JSON carries a versioned schema; unknown keys are rejected.
ExperimentConfig config_from_json_string(const std::string& text);
std::string config_to_json_string(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::string& path);
std::uint64_t config_hash(const ExperimentConfig& cfg);

struct TraceSnapshot {
  int index;
  double time;
  std::string path;  // relative to the trace file
};

std::string trace_to_json_string(const FlowTrace& trace,
                                 const std::vector<TraceSnapshot>& snapshots);

struct LoadedTrace {
  FlowTrace trace;  // fields left empty
  std::vector<TraceSnapshot> snapshots;
};
LoadedTrace load_trace(const std::string& path);

struct MonotoneReport {
  bool energy_nonincreasing = true;
  bool l2_nonincreasing = true;
  bool linf_nonincreasing = true;
  double mean_drift = 0.0;
  bool mean_conserved = true;
  bool pass = true;
};
MonotoneReport check_monotone(const FlowTrace& trace);

struct RunArtifacts {
  bool ok = false;
  std::string status;  // ok | check_failed | solver_error
  std::string error;
  std::string trace_path;
  std::string report_path;
  std::string manifest_path;
  std::vector<std::string> snapshot_paths;
  EdiReport edi;
  MonotoneReport monotone;
};

/// Runs one evolution, verifies dissipation and monotonicity, and writes
/// trace.json, snapshot CSVs, report.json and manifest.json under
/// cfg.out_dir. Solver failures are recorded in the manifest with a
/// non-ok status instead of escaping.
RunArtifacts run_experiment(const ExperimentConfig& cfg);

struct CompareResult {
  std::vector<double> eps_list;    // strictly decreasing
  std::vector<double> sup_errors;  // sup over sampled times of the L2 distance
  std::vector<double> runtimes_s;
  ExperimentConfig base;
};

/// Runs the TV reference once, then one PM trace per eps on the identical
/// time grid, and records the sup of the L2 distance over sampled times.
/// With t_end past the TV extinction time this sup controls all times.
CompareResult compare_convergence(const ExperimentConfig& base_cfg,
                                  std::vector<double> eps_list, double t_end,
                                  int sample_stride);

std::string compare_to_csv(const CompareResult& result);

}  // namespace pmtv
