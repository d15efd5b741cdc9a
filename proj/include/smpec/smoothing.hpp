#pragma once

#include <functional>
#include <optional>

#include "smpec/geometry.hpp"
#include "smpec/rng.hpp"

namespace smpec {

// Evaluates the implicit objective: f(x, y(x[, omega]), omega) where the
// lower-level solution y is produced internally by a bound solver, exactly
// or to the tolerance the solver currently guarantees. Omega tokens are
// opaque uniform scalars in [0,1); problems map them to their own sample
// spaces.
struct ImplicitValueOracle {
  std::function<Vec(const Vec& x, double omega)> solve_lower;
  std::function<double(const Vec& x, const Vec& y, double omega)> value;

  double eval(const Vec& x, double omega) const {
    return value(x, solve_lower(x, omega), omega);
  }
};

struct ZoGradientEstimator {
  int n;          // dimension of x
  double eta;     // smoothing radius, > 0
  long batch = 1; // mini-batch size N

  void validate() const {
    if (n < 1) throw std::invalid_argument("ZoGradientEstimator: n >= 1");
    if (eta <= 0) throw std::invalid_argument("ZoGradientEstimator: eta > 0");
    if (batch < 1) throw std::invalid_argument("ZoGradientEstimator: batch >= 1");
  }
};

// Single-sample smoothed-gradient estimate
//   (n / eta) * (f(x + v, y(x + v), w) - f(x, y(x), w)) * v / |v|,
// with the SAME omega used in both evaluations. Exactly two oracle
// evaluations per call.
Vec zo_gradient_sample(const ZoGradientEstimator& est,
                       const ImplicitValueOracle& oracle, const Vec& x,
                       const Vec& v, double omega);

// Variant sharing a precomputed base solution y(x): only the perturbed side
// is solved. Used where an algorithm prescribes one shared y(x_k) per outer
// iteration.
Vec zo_gradient_sample_with_base(const ZoGradientEstimator& est,
                                 const ImplicitValueOracle& oracle,
                                 const Vec& x, const Vec& y_base, const Vec& v,
                                 double omega);

// Mean of `est.batch` independent single-sample estimates with fresh
// (v_j, omega_j) pairs drawn from the sampler's stream, v first then omega.
// When `y_base` is supplied the base evaluation is shared across the batch.
Vec zo_gradient_minibatch(const ZoGradientEstimator& est,
                          const ImplicitValueOracle& oracle, const Vec& x,
                          SphereSampler& sampler,
                          const std::optional<Vec>& y_base = std::nullopt);

struct McValue {
  double mean;
  double stderr_of_mean;
};

// Monte-Carlo estimate of the ball-smoothed value
// h_eta(x) = E_{u in B}[h(x + eta u)], with its empirical standard error.
McValue smoothed_value_mc(const std::function<double(const Vec&)>& h,
                          const Vec& x, double eta, long m,
                          SphereSampler& sampler);

}  // namespace smpec
