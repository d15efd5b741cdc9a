#pragma once

#include <cstdint>
#include <vector>

#include "smpec/problems.hpp"

namespace smpec {

// Sample-average-approximation baseline: fix an empirical measure of
// k_samples omega-draws, then minimize the empirical-average implicit
// objective over X by projected gradient with Armijo backtracking. The
// implicit gradient is either the problem's analytic hook (when present and
// enabled) or a central finite difference with exact per-sample lower-level
// solves.
struct SaaConfig {
  long k_samples = 1000;
  long max_outer = 500;
  double tol = 1e-9;     // on the projected-gradient step norm
  double step0 = 1.0;    // initial trial step, halved by backtracking
  double armijo = 1e-4;
  bool use_analytic_gradient = true;

  void validate() const;
};

struct SaaResult {
  Vec x_hat;
  double objective;  // empirical objective at x_hat
  long outer_iters = 0;
  long lower_solves = 0;
  double wall_time = 0;
};

SaaResult saa_solve(const SmpecProblem& problem, const SaaConfig& cfg,
                    std::uint64_t seed);

// Two-sided 95% Student-t interval: mean +- t_{0.975, n-1} s / sqrt(n).
struct ConfidenceInterval {
  double mean;
  double half_width_95;
};

ConfidenceInterval confidence_interval(const std::vector<double>& values);

}  // namespace smpec
