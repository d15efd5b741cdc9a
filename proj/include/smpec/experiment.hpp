#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "smpec/baselines.hpp"
#include "smpec/zsol.hpp"

namespace smpec {

// One benchmark configuration: a problem, a solver, schedules, and the
// replication / evaluation protocol. Gaps are always estimated on a fixed
// held-out validation sample shared between the candidate point and the
// reference optimum, so Monte-Carlo noise largely cancels.
struct ExperimentSpec {
  std::string problem_id = "cournot2s";
  std::map<std::string, double> problem_params;
  std::string solver_id = "zsol-convex";  // zsol-convex|zsol-nonconvex|zsol-acc|saa
  Schedule schedule;
  LowerMode lower_mode = LowerMode::exact;
  int runs = 1;
  std::uint64_t base_seed = 0;
  long validation_samples = 100000;
  std::uint64_t validation_seed = 777;
  long saa_samples = 1000;
  bool compute_residual = false;  // stationarity residual per run (costly)
  int jobs = 1;
  std::string out_path;  // empty writes to stdout

  void validate() const;
};

struct RunRow {
  std::uint64_t seed = 0;
  Vec x;
  double value = 0;     // validation estimate of the implicit objective
  double gap = 0;       // value - f* estimate (NaN without a reference)
  double residual = 0;  // NaN unless requested
  long upper_projections = 0;
  long upper_samples = 0;
  long lower_solves = 0;
  long lower_projections = 0;
  long lower_samples = 0;
  double wall_time = 0;
};

struct ExperimentResult {
  std::vector<RunRow> rows;
  double f_star_estimate;  // NaN without a reference optimum
  ConfidenceInterval gap_ci{0, 0};
  ConfidenceInterval value_ci{0, 0};
};

std::vector<double> validation_draws(long count, std::uint64_t seed);

// Validation-sample mean of the implicit objective at x (minimization
// convention; uses the problem's O(1) value hook when available).
double estimate_value(const SmpecProblem& problem, const Vec& x,
                      const std::vector<double>& omegas);

// Paired gap estimate f(x) - f(x_ref) on a shared sample, with the standard
// error of the paired differences.
struct PairedGap {
  double gap;
  double stderr_of_gap;
};
PairedGap estimate_gap(const SmpecProblem& problem, const Vec& x,
                       const Vec& x_ref, const std::vector<double>& omegas);

ExperimentResult run_experiment(const ExperimentSpec& spec);

// CLI entry points; return process exit codes (0 ok, 1 solver failure,
// 2 invalid configuration).
int cmd_run(const ExperimentSpec& spec);
int cmd_trajectory(const ExperimentSpec& spec, long log_every);
int cmd_table(const std::string& name, const std::string& scale,
              const std::string& out_path, int jobs);
int cmd_oracle(const std::string& problem_id,
               const std::map<std::string, double>& params, int resolution,
               long mc_samples, const std::string& out_path);

// RFC-4180 field quoting (quotes only when the field needs it).
std::string csv_field(const std::string& raw);

}  // namespace smpec
