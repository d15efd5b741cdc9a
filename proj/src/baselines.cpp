#include "smpec/baselines.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "smpec/rng.hpp"

namespace smpec {

void SaaConfig::validate() const {
  if (k_samples < 1) throw std::invalid_argument("SaaConfig: k_samples >= 1 required");
  if (max_outer < 1 || tol <= 0 || step0 <= 0 || armijo <= 0)
    throw std::invalid_argument("SaaConfig: positive outer-loop settings required");
}

SaaResult saa_solve(const SmpecProblem& problem, const SaaConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (!problem.exact_lower)
    throw std::invalid_argument("saa_solve: problem has no exact lower-level solver");
  const auto t0 = std::chrono::steady_clock::now();

  std::vector<double> omegas(cfg.k_samples);
  {
    Rng rng(seed);
    for (double& w : omegas) w = rng.uniform();
  }

  SaaResult res;
  auto objective = [&](const Vec& x) {
    double sum = 0;
    for (double w : omegas) {
      sum += problem.upper_value(x, problem.exact_lower(x, w), w);
      ++res.lower_solves;
    }
    return sum / double(cfg.k_samples);
  };

  const bool analytic = cfg.use_analytic_gradient && problem.saa_gradient;
  auto gradient = [&](const Vec& x) -> Vec {
    if (analytic) {
      res.lower_solves += cfg.k_samples;
      return problem.saa_gradient(x, omegas);
    }
    const double h = 1e-6 * (1.0 + x.norm());
    Vec g(problem.dim_x);
    for (int i = 0; i < problem.dim_x; ++i) {
      Vec xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      g[i] = (objective(xp) - objective(xm)) / (2 * h);
    }
    return g;
  };

  Vec x = problem.x0;
  double fx = objective(x);
  int stalled = 0;
  for (long it = 0; it < cfg.max_outer; ++it) {
    ++res.outer_iters;
    const Vec g = gradient(x);
    double step = cfg.step0;
    bool accepted = false;
    while (step > 1e-14) {
      const Vec cand = project(problem.X, x - step * g);
      const double fc = objective(cand);
      const double decrease = (cfg.armijo / step) * (cand - x).squaredNorm();
      if (fc <= fx - decrease) {
        const double move = (cand - x).norm();
        x = cand;
        fx = fc;
        accepted = true;
        if (move <= cfg.tol) it = cfg.max_outer;  // converged
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // distinguish stationarity from a genuine stall
      if ((x - project(problem.X, x - g)).norm() <= 1e-7 * (1.0 + x.norm())) break;
      if (++stalled >= 50)
        throw NumericalError("saa_solve: 50 consecutive non-decreasing steps", fx);
    } else {
      stalled = 0;
    }
  }

  res.x_hat = x;
  res.objective = fx;
  res.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

ConfidenceInterval confidence_interval(const std::vector<double>& values) {
  const std::size_t n = values.size();
  if (n < 2) throw std::invalid_argument("confidence_interval: need at least 2 values");
  double mean = 0;
  for (double v : values) mean += v;
  mean /= double(n);
  double ss = 0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / double(n - 1));
  const boost::math::students_t dist(double(n - 1));
  const double q = boost::math::quantile(dist, 0.975);
  return {mean, q * sd / std::sqrt(double(n))};
}

}  // namespace smpec
