#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pmtv/experiment.hpp"
#include "pmtv/gamma.hpp"

namespace {

using nlohmann::json;

int exit_config_error(const pmtv::ConfigError& e, bool quiet) {
  if (!quiet) {
    std::cerr << "config error:\n";
    for (const auto& f : e.fields()) {
      std::cerr << "  - " << f << "\n";
    }
  }
  return 2;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  const std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::filesystem::create_directories(p.parent_path());
  }
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write: " + path);
  }
  out << text;
}

// "name:key=value,key=value" initial-datum spec.
pmtv::InitSpec parse_init_spec(const std::string& spec) {
  pmtv::InitSpec init;
  const auto colon = spec.find(':');
  init.kind = spec.substr(0, colon);
  if (colon == std::string::npos) return init;
  std::istringstream rest(spec.substr(colon + 1));
  std::string item;
  while (std::getline(rest, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw pmtv::ConfigError({"init (expected key=value, got '" + item + "')"});
    }
    const std::string key = item.substr(0, eq);
    const std::string val = item.substr(eq + 1);
    if (key == "jump") {
      init.jump = std::stod(val);
    } else if (key == "wavenumber") {
      init.wavenumber = std::stoi(val);
    } else if (key == "seed") {
      init.seed = std::stoull(val);
    } else if (key == "amplitude") {
      init.amplitude = std::stod(val);
    } else if (key == "path") {
      init.path = val;
    } else {
      throw pmtv::ConfigError({"init." + key + " (unknown key)"});
    }
  }
  return init;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gradient-flow laboratory: regularized diffusion vs total "
               "variation flow"};
  app.set_help_flag("--help", "print help and exit");  // frees --h for spacing
  app.fallthrough();  // global flags may follow the subcommand
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::uint64_t seed = 1;
  bool quiet = false;
  app.add_option("--config", config_path, "experiment config JSON");
  app.add_option("--out", out_path, "output directory or file");
  app.add_option("--seed", seed, "seed for random initial data");
  app.add_flag("--quiet", quiet, "suppress progress output");

  // envelope
  auto* cmd_env = app.add_subcommand("envelope", "tabulate a potential and its convex envelope");
  double env_eps = 0.1, env_sigma_max = 10.0;
  int env_samples = 1000;
  cmd_env->add_option("--eps", env_eps)->required();
  cmd_env->add_option("--sigma-max", env_sigma_max)->required();
  cmd_env->add_option("--samples", env_samples)->required();

  // evolve
  auto* cmd_evolve = app.add_subcommand("evolve", "run one gradient-flow evolution");
  std::string model = "tv", init_spec = "step:jump=1";
  double ev_eps = 0.1, ev_h = 0.005, ev_tau = 1e-3, ev_tend = 0.5,
         ev_tol = 1e-8;
  int ev_dims = 1, ev_n = 400, ev_stride = 1;
  cmd_evolve->add_option("--model", model, "pm | tv");
  cmd_evolve->add_option("--eps", ev_eps);
  cmd_evolve->add_option("--dims", ev_dims);
  cmd_evolve->add_option("--n", ev_n, "cells per axis");
  cmd_evolve->add_option("--h", ev_h, "grid spacing");
  cmd_evolve->add_option("--init", init_spec, "step|ramp|sine|random|file spec");
  cmd_evolve->add_option("--tau", ev_tau);
  cmd_evolve->add_option("--t-end", ev_tend);
  cmd_evolve->add_option("--inner-tol", ev_tol);
  cmd_evolve->add_option("--stride", ev_stride, "snapshot stride");

  // verify
  auto* cmd_verify = app.add_subcommand("verify", "check a recorded trace");
  std::string trace_path, check = "edi";
  double verify_tol = -1.0;
  cmd_verify->add_option("--trace", trace_path)->required();
  cmd_verify->add_option("--check", check, "edi | slope-match | scp");
  cmd_verify->add_option("--tol", verify_tol, "tolerance (default per check)");

  // gamma
  auto* cmd_gamma = app.add_subcommand("gamma", "asymptotic bound checks");
  std::string gamma_check = "lower-bound";
  double g_eps = 1e-3, g_a = 0.5, g_b = 0.5, g_sigma_max = -1.0, g_jump = 1.0,
         g_eta = 0.25, g_alpha = 1.0;
  int g_samples = 10000, g_resolution = 20000;
  std::string g_field_path;
  cmd_gamma->add_option("--check", gamma_check,
                        "lower-bound | eps1 | limsup | jump-cost | compactness");
  cmd_gamma->add_option("--eps", g_eps);
  cmd_gamma->add_option("--a", g_a);
  cmd_gamma->add_option("--b", g_b);
  cmd_gamma->add_option("--sigma-max", g_sigma_max);
  cmd_gamma->add_option("--samples", g_samples);
  cmd_gamma->add_option("--jump", g_jump);
  cmd_gamma->add_option("--eta", g_eta);
  cmd_gamma->add_option("--resolution", g_resolution);
  cmd_gamma->add_option("--alpha", g_alpha);
  cmd_gamma->add_option("--field", g_field_path, "field file for compactness");

  // compare
  auto* cmd_compare = app.add_subcommand("compare", "eps sweep against the TV reference");
  std::string eps_list_str = "0.3,0.2,0.1,0.05";
  double cmp_tend = -1.0;
  int cmp_stride = 1;
  cmd_compare->add_option("--eps-list", eps_list_str, "decreasing eps values");
  cmd_compare->add_option("--t-end", cmp_tend, "default 1.5x step extinction");
  cmd_compare->add_option("--stride", cmp_stride, "error sampling stride");
  std::string cmp_init = "step:jump=1";
  double cmp_h = 0.005, cmp_tau = 1e-3, cmp_tol = 1e-8;
  int cmp_dims = 1, cmp_n = 400;
  cmd_compare->add_option("--dims", cmp_dims);
  cmd_compare->add_option("--n", cmp_n);
  cmd_compare->add_option("--h", cmp_h);
  cmd_compare->add_option("--init", cmp_init);
  cmd_compare->add_option("--tau", cmp_tau);
  cmd_compare->add_option("--inner-tol", cmp_tol);

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_env->parsed()) {
      const pmtv::ScalarPotential pot(env_eps);
      const pmtv::ConvexEnvelope env = pmtv::convex_envelope(pot);
      std::ostringstream csv;
      csv.precision(12);
      csv << "sigma,phi,phi_env,phi_env_deriv\n";
      for (int i = 0; i < env_samples; ++i) {
        const double s = env_sigma_max * i / (env_samples - 1.0);
        const auto [value, deriv] = env.eval(s);
        csv << s << "," << pot.value(s) << "," << value << "," << deriv << "\n";
      }
      write_text(out_path, csv.str());
      if (!quiet) {
        std::cerr << "envelope eps=" << env_eps << " sigma1=" << env.sigma1
                  << " sigma2=" << env.sigma2 << " slope=" << env.slope_m
                  << "\n";
      }
      return 0;
    }

    if (cmd_evolve->parsed()) {
      pmtv::ExperimentConfig cfg;
      if (!config_path.empty()) {
        cfg = pmtv::load_config(config_path);
      } else {
        cfg.model = pmtv::flow_model_from_string(model);
        cfg.eps = ev_eps;
        cfg.grid.dims = ev_dims;
        cfg.grid.shape = {ev_n, ev_n};
        cfg.grid.spacing = ev_h;
        cfg.init = parse_init_spec(init_spec);
        if (cfg.init.kind == "random" && cmd_evolve->count("--init") &&
            init_spec.find("seed") == std::string::npos) {
          cfg.init.seed = seed;
        }
        cfg.tau = ev_tau;
        cfg.t_end = ev_tend;
        cfg.inner_tol = ev_tol;
        cfg.snapshot_stride = ev_stride;
      }
      if (!out_path.empty()) cfg.out_dir = out_path;
      if (cfg.out_dir.empty()) cfg.out_dir = "out";
      const auto art = pmtv::run_experiment(cfg);
      if (!quiet) {
        std::cerr << "status: " << art.status << "\n";
        if (!art.error.empty()) std::cerr << art.error << "\n";
        std::cerr << "trace: " << art.trace_path << "\n";
      }
      return art.ok ? 0 : (art.status == "solver_error" ? 3 : 4);
    }

    if (cmd_verify->parsed()) {
      const auto loaded = pmtv::load_trace(trace_path);
      const auto& trace = loaded.trace;
      json report;
      report["check"] = check;
      bool pass = false;
      if (check == "edi") {
        const double tol =
            verify_tol > 0.0 ? verify_tol : 10.0 * trace.inner_tol;
        const auto edi = pmtv::check_edi(trace, tol);
        pass = edi.pass;
        report["pass"] = edi.pass;
        report["worst_residual"] = edi.worst_residual;
        report["tolerance_used"] = edi.tolerance_used;
        report["pairs_checked"] = edi.pairs_checked;
      } else if (check == "slope-match") {
        const double tol = verify_tol > 0.0
                               ? verify_tol
                               : 2.0 * trace.inner_tol / trace.tau;
        const auto md = pmtv::metric_derivative(trace);
        double worst = 0.0;
        for (std::size_t k = 0; k < md.size(); ++k) {
          worst = std::max(worst, std::fabs(md[k] - trace.slopes[k + 1]));
        }
        pass = worst <= tol;
        report["pass"] = pass;
        report["worst_mismatch"] = worst;
        report["tolerance_used"] = tol;
        report["pairs_checked"] = md.size();
      } else if (check == "scp") {
        const auto dir = std::filesystem::path(trace_path).parent_path();
        std::vector<pmtv::Field> points;
        std::vector<double> values, slopes;
        for (const auto& snap : loaded.snapshots) {
          points.push_back(pmtv::load_field((dir / snap.path).string()));
          values.push_back(trace.energies.at(snap.index));
          slopes.push_back(trace.slopes.at(snap.index));
        }
        const double tol = verify_tol > 0.0 ? verify_tol : 1e-6;
        const auto cone = pmtv::check_trace_slope_cone(points, values, slopes, tol);
        pass = cone.pass;
        report["pass"] = cone.pass;
        report["worst_margin"] = cone.worst_margin;
        report["violations"] = cone.violations.size();
        report["pairs_checked"] = cone.pairs_checked;
      } else {
        throw pmtv::ConfigError({"check (edi | slope-match | scp)"});
      }
      write_text(out_path, report.dump(2) + "\n");
      return pass ? 0 : 4;
    }

    if (cmd_gamma->parsed()) {
      json report;
      report["check"] = gamma_check;
      if (gamma_check == "lower-bound") {
        if (g_sigma_max <= 0.0) {
          const pmtv::ScalarPotential pot(g_eps);
          g_sigma_max = 4.0 * std::max(2.0 / g_eps,
                                       1.0 / (g_eps * pot.log_eps_abs));
        }
        const auto r =
            pmtv::lower_bound_margin(g_eps, g_a, g_b, g_sigma_max, g_samples);
        report["eps"] = r.eps;
        report["a"] = r.a;
        report["b"] = r.b;
        report["min_margin"] = r.min_margin;
        report["argmin_sigma"] = r.argmin_sigma;
        report["region"] = r.region;
        report["pass"] = r.pass;
        write_text(out_path, report.dump(2) + "\n");
        return r.pass ? 0 : 4;
      }
      if (gamma_check == "eps1") {
        const auto r = pmtv::find_eps1(g_a, g_b);
        // CSV sweep when asked for a .csv path, JSON report otherwise.
        if (out_path.size() > 4 &&
            out_path.substr(out_path.size() - 4) == ".csv") {
          std::ostringstream csv;
          csv.precision(12);
          csv << "eps,pass,min_margin\n";
          for (const auto& p : r.tested) {
            csv << p.eps << "," << (p.pass ? 1 : 0) << "," << p.min_margin
                << "\n";
          }
          write_text(out_path, csv.str());
          return r.found ? 0 : 4;
        }
        report["a"] = r.a;
        report["b"] = r.b;
        report["found"] = r.found;
        report["eps1"] = r.eps1;
        json tested = json::array();
        for (const auto& p : r.tested) {
          tested.push_back({{"eps", p.eps},
                            {"pass", p.pass},
                            {"min_margin", p.min_margin}});
        }
        report["tested"] = tested;
        write_text(out_path, report.dump(2) + "\n");
        return r.found ? 0 : 4;
      }
      if (gamma_check == "limsup") {
        report["eps"] = g_eps;
        report["coeff"] = pmtv::limsup_coeff(g_eps);
        write_text(out_path, report.dump(2) + "\n");
        return 0;
      }
      if (gamma_check == "jump-cost") {
        const auto profile =
            pmtv::linear_ramp_profile(g_jump, g_eta, g_resolution);
        report["jump"] = g_jump;
        report["eta"] = g_eta;
        report["eps"] = g_eps;
        report["cost"] = pmtv::jump_cost(profile, g_eps);
        const auto opt = pmtv::optimal_eta(g_jump);
        report["eta_star"] = opt.eta_star;
        report["limit_at_eta_star"] = opt.min_value;
        write_text(out_path, report.dump(2) + "\n");
        return 0;
      }
      if (gamma_check == "compactness") {
        if (g_field_path.empty()) {
          throw pmtv::ConfigError({"field (path required for compactness)"});
        }
        const auto u = pmtv::load_field(g_field_path);
        const auto r = pmtv::compactness_bound(u, g_eps);
        report["lhs"] = r.lhs;
        report["rhs"] = r.rhs;
        report["pass"] = r.pass;
        write_text(out_path, report.dump(2) + "\n");
        return r.pass ? 0 : 4;
      }
      throw pmtv::ConfigError({"check (lower-bound | eps1 | limsup | jump-cost | compactness)"});
    }

    if (cmd_compare->parsed()) {
      pmtv::ExperimentConfig base;
      if (!config_path.empty()) {
        base = pmtv::load_config(config_path);
      } else {
        base.grid.dims = cmp_dims;
        base.grid.shape = {cmp_n, cmp_n};
        base.grid.spacing = cmp_h;
        base.init = parse_init_spec(cmp_init);
        base.tau = cmp_tau;
        base.inner_tol = cmp_tol;
      }
      std::vector<double> eps_list;
      std::istringstream items(eps_list_str);
      std::string item;
      while (std::getline(items, item, ',')) {
        eps_list.push_back(std::stod(item));
      }
      if (cmp_tend <= 0.0) {
        // 1.5x the extinction time of the step datum.
        cmp_tend = 1.5 * 0.5 * base.init.jump;
      }
      const auto result =
          pmtv::compare_convergence(base, eps_list, cmp_tend, cmp_stride);
      write_text(out_path.empty() ? "-" : out_path + "/compare.csv",
                 pmtv::compare_to_csv(result));
      return 0;
    }
  } catch (const pmtv::ConfigError& e) {
    return exit_config_error(e, quiet);
  } catch (const pmtv::ConvergenceError& e) {
    if (!quiet) std::cerr << "solver error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    if (!quiet) std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
