#include <cstdlib>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "smpec/experiment.hpp"

namespace {

// "key=value" pairs from repeated --param flags
std::map<std::string, double> parse_params(const std::vector<std::string>& raw) {
  std::map<std::string, double> params;
  for (const std::string& item : raw) {
    const auto pos = item.find('=');
    if (pos == std::string::npos)
      throw CLI::ValidationError("--param", "expected key=value, got '" + item + "'");
    params[item.substr(0, pos)] = std::stod(item.substr(pos + 1));
  }
  return params;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"smpec — zeroth-order solvers for stochastic MPECs"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML configuration file; command-line flags win");
  app.get_config_formatter_base()->valueSeparator('=');

  // shared experiment options, bound into every subcommand
  smpec::ExperimentSpec spec;
  std::string lower = "exact";
  std::vector<std::string> raw_params;
  long iters = spec.schedule.K;
  double alpha = -1, alpha0 = -1;
  bool no_step_bound = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--problem", spec.problem_id, "problem id (cournot2s, cournot1s, bard, p1..p5, hd1, hd2)");
    sub->add_option("--param", raw_params, "problem parameter override, key=value (repeatable)");
    sub->add_option("--solver", spec.solver_id, "zsol-convex | zsol-nonconvex | zsol-acc | saa");
    sub->add_option("--lower", lower, "lower-level mode: exact | inexact");
    sub->add_option("--runs", spec.runs, "number of seeded replicate runs");
    sub->add_option("--seed", spec.base_seed, "base seed; run i uses seed + i");
    sub->add_option("--iters", iters, "upper-level iteration count K");
    sub->add_option("--gamma0", spec.schedule.gamma0, "step-size scale: gamma_k = gamma0/(k+1)^a");
    sub->add_option("--eta0", spec.schedule.eta0, "smoothing scale: eta_k = eta0/(k+1)^b");
    sub->add_option("--a", spec.schedule.a, "step-size decay exponent");
    sub->add_option("--b", spec.schedule.b, "smoothing decay exponent");
    sub->add_option("--r", spec.schedule.r, "averaging weight exponent (x̄ weights gamma_k^r)");
    sub->add_option("--tau", spec.schedule.tau, "VR-SA inner schedule t_k = ceil(tau ln(k+1))");
    sub->add_option("--rho", spec.schedule.rho, "VR-SA batch growth ratio (M_t ~ rho^{-t})");
    sub->add_option("--m0", spec.schedule.m0, "VR-SA base batch scale");
    sub->add_option("--lambda", spec.schedule.lambda, "nonconvex tail fraction for the random index R");
    sub->add_option("--delta", spec.schedule.delta, "batch growth exponent: N_k = floor((k+1)^(1+delta))");
    sub->add_option("--alpha", alpha, "lower-level constant step size (default: mu/(2L^2))");
    sub->add_option("--alpha0", alpha0, "diminishing-SA initial step (default: 1/mu)");
    sub->add_flag("--no-step-bound", no_step_bound, "relax the VR-SA step bound to the stability limit");
    sub->add_option("--validation-samples", spec.validation_samples, "held-out sample size for gap estimates");
    sub->add_option("--saa-samples", spec.saa_samples, "SAA sample size");
    sub->add_option("--jobs", spec.jobs, "worker pool size for replicate runs");
    sub->add_option("--out", spec.out_path, "output CSV path (default: stdout)");
  };

  CLI::App* run = app.add_subcommand("run", "execute seeded replicate runs and emit per-run CSV rows");
  add_common(run);

  long log_every = 10;
  CLI::App* traj = app.add_subcommand("trajectory", "emit a gap-vs-iteration series for one run");
  add_common(traj);
  traj->add_option("--log-every", log_every, "downsampling stride");

  std::string table_name, table_scale = "desk";
  CLI::App* table = app.add_subcommand("table", "regenerate a results table (CSV + aligned text)");
  table->add_option("--name", table_name, "time | time2 | time3 | p0 | ci")->required();
  table->add_option("--scale", table_scale, "full | desk");
  table->add_option("--jobs", spec.jobs, "worker pool size");
  table->add_option("--out", spec.out_path, "output path (default: stdout)");

  int resolution = 2000;
  long mc_samples = 20000;
  CLI::App* oracle = app.add_subcommand("oracle", "estimate a problem's optimum by refined grid search");
  oracle->add_option("--problem", spec.problem_id, "problem id");
  oracle->add_option("--param", raw_params, "problem parameter override, key=value (repeatable)");
  oracle->add_option("--resolution", resolution, "grid points per refinement pass");
  oracle->add_option("--samples", mc_samples, "Monte-Carlo samples per grid point");
  oracle->add_option("--out", spec.out_path, "output path (default: stdout)");

  try {
    app.parse(argc, argv);
    spec.problem_params = parse_params(raw_params);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  }

  if (const char* env_seed = std::getenv("SMPEC_SEED")) {
    try {
      spec.base_seed = std::stoull(env_seed);
    } catch (const std::exception&) {
      std::cerr << "configuration error: SMPEC_SEED must be an integer\n";
      return 2;
    }
  }

  spec.schedule.K = iters;
  spec.schedule.alpha = alpha;
  spec.schedule.alpha0 = alpha0;
  spec.schedule.enforce_lower_step_bound = !no_step_bound;
  if (lower == "exact") {
    spec.lower_mode = smpec::LowerMode::exact;
  } else if (lower == "inexact") {
    spec.lower_mode = smpec::LowerMode::inexact;
  } else {
    std::cerr << "configuration error: --lower must be 'exact' or 'inexact'\n";
    return 2;
  }

  if (run->parsed()) return smpec::cmd_run(spec);
  if (traj->parsed()) return smpec::cmd_trajectory(spec, log_every);
  if (table->parsed()) return smpec::cmd_table(table_name, table_scale, spec.out_path, spec.jobs);
  return smpec::cmd_oracle(spec.problem_id, spec.problem_params, resolution, mc_samples, spec.out_path);
}
