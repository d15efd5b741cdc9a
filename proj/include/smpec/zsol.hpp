#pragma once

#include <cstdint>
#include <vector>

#include "smpec/problems.hpp"
#include "smpec/rng.hpp"

namespace smpec {

enum class LowerMode { exact, inexact };

// Parameter schedules shared by all drivers:
//   gamma_k = gamma0 / (k+1)^a      step size
//   eta_k   = eta0   / (k+1)^b      smoothing radius
//   t_k     = ceil(tau * ln(k+1))   inner iterations (variance-reduced /
//                                   deterministic lower solvers)
//   M_t     = max(1, ceil(m0 * rho^{-t}))  inner batch sizes
// Weighted averaging uses weights gamma_k^r. Nonconvex drivers use constant
// gamma0/eta0, batch N_k = k+1, and return a tail iterate x_R with R uniform
// on {ceil(lambda*K) .. K}. The accelerated driver uses batch
// N_k = floor((k+1)^{1+delta}).
struct Schedule {
  double gamma0 = 1.0;
  double a = 0.5;
  double eta0 = 1.0;
  double b = 0.5;
  double r = 0.0;
  double tau = 5.0;
  double rho = 1.0 / 1.5;
  double m0 = 1e-4;
  double lambda = 0.5;
  double delta = 0.01;
  long K = 1000;
  // lower-level step sizes; alpha < 0 means "use the theoretical default"
  // (mu/(2L^2) for the variance-reduced solver, mu/L^2 for the
  // deterministic one)
  double alpha = -1.0;
  double alpha0 = -1.0;  // first step of the diminishing-step solver
  double alpha_shift = 0.01;
  bool enforce_lower_step_bound = true;

  void validate() const;
};

struct ScheduleEval {
  double gamma_k;
  double eta_k;
  long t_k;
};
ScheduleEval schedule_eval(const Schedule& s, long k);

// S_{k+1} = S_k + gamma_{k+1}^r, xbar_{k+1} = xbar_k + (gamma_{k+1}^r /
// S_{k+1}) (x_{k+1} - xbar_k)
struct AveragingState {
  double S = 0;
  Vec xbar;
  void init(const Vec& x0, double gamma0, double r);
  void update(const Vec& x_next, double gamma_next, double r);
};

struct RunTrace {
  Vec result;
  std::vector<Vec> iterates;  // filled only when requested
  long upper_projections = 0;
  long upper_samples = 0;   // upper-level omega draws
  long lower_solves = 0;    // lower-level solve calls (exact or inexact)
  long lower_projections = 0;
  long lower_samples = 0;   // stochastic map samples inside inexact solves
  long random_index = -1;   // R for the nonconvex drivers
  double wall_time = 0;
  std::uint64_t seed = 0;
};

struct RunOptions {
  bool store_iterates = false;
};

// Weighted-averaging driver for convex problems (single- or two-stage,
// chosen by the problem's staging). Returns xbar_K.
RunTrace run_convex(const SmpecProblem& problem, const Schedule& sched,
                    LowerMode mode, std::uint64_t seed,
                    const RunOptions& opts = {});

// Randomized-iterate driver for nonconvex problems with growing batches
// N_k = k+1. Returns x_R.
RunTrace run_nonconvex(const SmpecProblem& problem, const Schedule& sched,
                       LowerMode mode, std::uint64_t seed,
                       const RunOptions& opts = {});

// Accelerated (momentum) driver; requires exact lower-level solves.
// Returns z_K.
RunTrace run_accelerated(const SmpecProblem& problem, const Schedule& sched,
                         std::uint64_t seed, const RunOptions& opts = {});

// Monte-Carlo estimate of || beta (x - Pi_X[x - grad f_eta(x)/beta]) ||
// using `batch` exact-lower zeroth-order gradient samples.
struct ResidualEstimate {
  double value;
  double stderr_of_value;
};
ResidualEstimate residual_norm(const SmpecProblem& problem, const Vec& x,
                               double eta, double beta, long batch,
                               std::uint64_t seed);

}  // namespace smpec
