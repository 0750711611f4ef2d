#include "pmtv/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace pmtv {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& j, const std::string& scope,
                         std::initializer_list<const char*> known,
                         std::vector<std::string>& bad) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) {
      if (it.key() == k) {
        ok = true;
        break;
      }
    }
    if (!ok) bad.push_back(scope + it.key() + " (unknown key)");
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open: " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write: " + path);
  }
  out << text;
}

}  // namespace

ExperimentConfig config_from_json_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError({std::string("json: ") + e.what()});
  }
  std::vector<std::string> bad;
  reject_unknown_keys(j, "",
                      {"schema_version", "model", "eps", "grid", "init", "tau",
                       "t_end", "inner_tol", "snapshot_stride", "out_dir"},
                      bad);
  if (!j.contains("schema_version") || !j["schema_version"].is_number_integer() ||
      j["schema_version"].get<int>() != 1) {
    bad.push_back("schema_version");
  }
  ExperimentConfig cfg;
  try {
    if (j.contains("model")) {
      cfg.model = flow_model_from_string(j["model"].get<std::string>());
    }
  } catch (const std::exception&) {
    bad.push_back("model");
  }
  auto get_double = [&](const json& node, const char* key, double& out,
                        const std::string& scope) {
    if (!node.contains(key)) return;
    if (!node[key].is_number()) {
      bad.push_back(scope + key);
      return;
    }
    out = node[key].get<double>();
  };
  get_double(j, "eps", cfg.eps, "");
  get_double(j, "tau", cfg.tau, "");
  get_double(j, "t_end", cfg.t_end, "");
  get_double(j, "inner_tol", cfg.inner_tol, "");
  if (j.contains("snapshot_stride")) {
    if (j["snapshot_stride"].is_number_integer()) {
      cfg.snapshot_stride = j["snapshot_stride"].get<int>();
    } else {
      bad.push_back("snapshot_stride");
    }
  }
  if (j.contains("out_dir")) {
    if (j["out_dir"].is_string()) {
      cfg.out_dir = j["out_dir"].get<std::string>();
    } else {
      bad.push_back("out_dir");
    }
  }
  if (j.contains("grid")) {
    const json& g = j["grid"];
    reject_unknown_keys(g, "grid.", {"dims", "shape", "spacing"}, bad);
    if (g.contains("dims") && g["dims"].is_number_integer()) {
      cfg.grid.dims = g["dims"].get<int>();
    }
    if (g.contains("shape") && g["shape"].is_array()) {
      const auto shape = g["shape"].get<std::vector<int>>();
      for (std::size_t a = 0; a < shape.size() && a < 2; ++a) {
        cfg.grid.shape[a] = shape[a];
      }
    }
    get_double(g, "spacing", cfg.grid.spacing, "grid.");
  }
  if (j.contains("init")) {
    const json& g = j["init"];
    reject_unknown_keys(
        g, "init.", {"kind", "jump", "wavenumber", "seed", "amplitude", "path"},
        bad);
    if (g.contains("kind") && g["kind"].is_string()) {
      cfg.init.kind = g["kind"].get<std::string>();
    }
    get_double(g, "jump", cfg.init.jump, "init.");
    get_double(g, "amplitude", cfg.init.amplitude, "init.");
    if (g.contains("wavenumber") && g["wavenumber"].is_number_integer()) {
      cfg.init.wavenumber = g["wavenumber"].get<int>();
    }
    if (g.contains("seed") && g["seed"].is_number_unsigned()) {
      cfg.init.seed = g["seed"].get<std::uint64_t>();
    }
    if (g.contains("path") && g["path"].is_string()) {
      cfg.init.path = g["path"].get<std::string>();
    }
  }
  for (const auto& f : cfg.validate()) bad.push_back(f);
  if (!bad.empty()) {
    throw ConfigError(bad);
  }
  return cfg;
}

std::string config_to_json_string(const ExperimentConfig& cfg) {
  json j;
  j["schema_version"] = 1;
  j["model"] = to_string(cfg.model);
  if (cfg.model == FlowModel::kPeronaMalik) j["eps"] = cfg.eps;
  j["grid"]["dims"] = cfg.grid.dims;
  j["grid"]["shape"] = std::vector<int>(cfg.grid.shape.begin(),
                                        cfg.grid.shape.begin() + cfg.grid.dims);
  j["grid"]["spacing"] = cfg.grid.spacing;
  j["init"]["kind"] = cfg.init.kind;
  if (cfg.init.kind == "step") j["init"]["jump"] = cfg.init.jump;
  if (cfg.init.kind == "sine") j["init"]["wavenumber"] = cfg.init.wavenumber;
  if (cfg.init.kind == "random") {
    j["init"]["seed"] = cfg.init.seed;
    j["init"]["amplitude"] = cfg.init.amplitude;
  }
  if (cfg.init.kind == "file") j["init"]["path"] = cfg.init.path;
  j["tau"] = cfg.tau;
  j["t_end"] = cfg.t_end;
  j["inner_tol"] = cfg.inner_tol;
  j["snapshot_stride"] = cfg.snapshot_stride;
  return j.dump(2);
}

ExperimentConfig load_config(const std::string& path) {
  return config_from_json_string(read_file(path));
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  // FNV-1a over the canonical serialization.
  const std::string text = config_to_json_string(cfg);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string trace_to_json_string(const FlowTrace& trace,
                                 const std::vector<TraceSnapshot>& snapshots) {
  json j;
  j["schema_version"] = 1;
  j["model"] = to_string(trace.model);
  if (trace.model == FlowModel::kPeronaMalik) j["eps"] = trace.eps;
  j["tau"] = trace.tau;
  j["inner_tol"] = trace.inner_tol;
  j["times"] = trace.times;
  j["energies"] = trace.energies;
  j["step_norms"] = trace.step_norms;
  j["slopes"] = trace.slopes;
  json snaps = json::array();
  for (const auto& s : snapshots) {
    snaps.push_back({{"index", s.index}, {"time", s.time}, {"path", s.path}});
  }
  j["snapshots"] = snaps;
  return j.dump(2);
}

LoadedTrace load_trace(const std::string& path) {
  const json j = json::parse(read_file(path));
  LoadedTrace out;
  out.trace.model = flow_model_from_string(j.at("model").get<std::string>());
  out.trace.eps = j.contains("eps") ? j["eps"].get<double>()
                                    : std::numeric_limits<double>::quiet_NaN();
  out.trace.tau = j.at("tau").get<double>();
  out.trace.inner_tol = j.at("inner_tol").get<double>();
  out.trace.times = j.at("times").get<std::vector<double>>();
  out.trace.energies = j.at("energies").get<std::vector<double>>();
  out.trace.step_norms = j.at("step_norms").get<std::vector<double>>();
  out.trace.slopes = j.at("slopes").get<std::vector<double>>();
  for (const auto& s : j.at("snapshots")) {
    out.snapshots.push_back({s.at("index").get<int>(),
                             s.at("time").get<double>(),
                             s.at("path").get<std::string>()});
  }
  return out;
}

MonotoneReport check_monotone(const FlowTrace& trace) {
  MonotoneReport report;
  const double slack = trace.inner_tol * trace.tau;
  const double mean0 = trace.fields.front().mean();
  double prev_l2 = trace.fields.front().l2_norm();
  double prev_linf = trace.fields.front().linf_norm();
  for (std::size_t k = 1; k < trace.fields.size(); ++k) {
    if (trace.energies[k] > trace.energies[k - 1] + slack) {
      report.energy_nonincreasing = false;
    }
    const double l2 = trace.fields[k].l2_norm();
    const double linf = trace.fields[k].linf_norm();
    if (l2 > prev_l2 + slack) report.l2_nonincreasing = false;
    if (linf > prev_linf + slack) report.linf_nonincreasing = false;
    prev_l2 = l2;
    prev_linf = linf;
    report.mean_drift = std::max(
        report.mean_drift, std::fabs(trace.fields[k].mean() - mean0));
  }
  report.mean_conserved =
      report.mean_drift <= 1e-10 * std::max(1.0, std::fabs(mean0));
  report.pass = report.energy_nonincreasing && report.l2_nonincreasing &&
                report.linf_nonincreasing && report.mean_conserved;
  return report;
}

RunArtifacts run_experiment(const ExperimentConfig& cfg) {
  if (auto bad = cfg.validate(); !bad.empty()) {
    throw ConfigError(bad);
  }
  if (cfg.out_dir.empty()) {
    throw ConfigError({"out_dir"});
  }
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);

  RunArtifacts art;
  art.manifest_path = (fs::path(cfg.out_dir) / "manifest.json").string();

  json manifest;
  manifest["schema_version"] = 1;
  manifest["version"] = kVersion;
  manifest["config"] = json::parse(config_to_json_string(cfg));
  {
    std::ostringstream hex;
    hex << std::hex << config_hash(cfg);
    manifest["config_hash"] = hex.str();
  }

  FlowTrace trace;
  try {
    trace = evolve(cfg);
  } catch (const FlowStepError& e) {
    art.status = "solver_error";
    art.error = e.what();
    manifest["status"] = art.status;
    manifest["error"] = art.error;
    manifest["failed_step"] = e.step_index();
    write_file(art.manifest_path, manifest.dump(2) + "\n");
    return art;
  }

  std::vector<TraceSnapshot> snapshots;
  const int last = static_cast<int>(trace.fields.size()) - 1;
  for (int k = 0; k <= last; ++k) {
    if (k % cfg.snapshot_stride != 0 && k != last) continue;
    char name[32];
    std::snprintf(name, sizeof(name), "field_%06d.csv", k);
    const std::string path = (fs::path(cfg.out_dir) / name).string();
    save_field(trace.fields[k], path);
    snapshots.push_back({k, trace.times[k], name});
    art.snapshot_paths.push_back(path);
  }

  art.trace_path = (fs::path(cfg.out_dir) / "trace.json").string();
  write_file(art.trace_path, trace_to_json_string(trace, snapshots) + "\n");

  art.edi = check_edi(trace, 10.0 * cfg.inner_tol);
  art.monotone = check_monotone(trace);

  json report;
  report["edi"] = {{"pass", art.edi.pass},
                   {"worst_residual", art.edi.worst_residual},
                   {"tolerance_used", art.edi.tolerance_used},
                   {"pairs_checked", art.edi.pairs_checked}};
  report["monotone"] = {{"energy", art.monotone.energy_nonincreasing},
                        {"l2", art.monotone.l2_nonincreasing},
                        {"linf", art.monotone.linf_nonincreasing},
                        {"mean_drift", art.monotone.mean_drift},
                        {"mean_conserved", art.monotone.mean_conserved}};
  const bool checks_pass = art.edi.pass && art.monotone.pass;
  report["pass"] = checks_pass;
  art.report_path = (fs::path(cfg.out_dir) / "report.json").string();
  write_file(art.report_path, report.dump(2) + "\n");

  art.ok = checks_pass;
  art.status = checks_pass ? "ok" : "check_failed";
  manifest["status"] = art.status;
  manifest["outputs"] = {fs::path(art.trace_path).filename().string(),
                         fs::path(art.report_path).filename().string()};
  write_file(art.manifest_path, manifest.dump(2) + "\n");
  return art;
}

CompareResult compare_convergence(const ExperimentConfig& base_cfg,
                                  std::vector<double> eps_list, double t_end,
                                  int sample_stride) {
  std::vector<std::string> bad;
  if (eps_list.empty()) bad.push_back("eps_list");
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    if (!(eps_list[i] > 0.0) || !(eps_list[i] < 1.0) ||
        (i > 0 && !(eps_list[i] < eps_list[i - 1]))) {
      bad.push_back("eps_list (strictly decreasing in (0,1))");
      break;
    }
  }
  if (sample_stride < 1) bad.push_back("sample_stride");
  if (!(t_end >= base_cfg.tau)) bad.push_back("t_end");
  if (!bad.empty()) throw ConfigError(bad);

  CompareResult result;
  result.eps_list = eps_list;
  result.base = base_cfg;
  result.base.t_end = t_end;

  ExperimentConfig tv_cfg = result.base;
  tv_cfg.model = FlowModel::kTotalVariation;
  const FlowTrace reference = evolve(tv_cfg);

  auto run_one = [&](double eps) {
    const auto start = std::chrono::steady_clock::now();
    ExperimentConfig pm_cfg = result.base;
    pm_cfg.model = FlowModel::kPeronaMalik;
    pm_cfg.eps = eps;
    const FlowTrace pm = evolve(pm_cfg);
    if (pm.times.size() != reference.times.size()) {
      throw ConfigError({"tau (time grids differ across runs)"});
    }
    double sup = 0.0;
    const int last = static_cast<int>(pm.fields.size()) - 1;
    for (int k = 0; k <= last; ++k) {
      if (k % sample_stride != 0 && k != last) continue;
      sup = std::max(sup, l2_distance(pm.fields[k], reference.fields[k]));
    }
    const auto stop = std::chrono::steady_clock::now();
    return std::pair<double, double>(
        sup, std::chrono::duration<double>(stop - start).count());
  };

  // Independent runs; results assembled in eps_list order.
  std::vector<std::future<std::pair<double, double>>> tasks;
  tasks.reserve(eps_list.size());
  for (double eps : eps_list) {
    tasks.push_back(std::async(std::launch::async, run_one, eps));
  }
  for (auto& task : tasks) {
    const auto [sup, secs] = task.get();
    result.sup_errors.push_back(sup);
    result.runtimes_s.push_back(secs);
  }
  return result;
}

std::string compare_to_csv(const CompareResult& result) {
  std::ostringstream out;
  out.precision(12);
  out << "eps,sup_error,runtime_s\n";
  for (std::size_t i = 0; i < result.eps_list.size(); ++i) {
    out << result.eps_list[i] << "," << result.sup_errors[i] << ","
        << result.runtimes_s[i] << "\n";
  }
  return out.str();
}

}  // namespace pmtv
