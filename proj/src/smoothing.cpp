#include "smpec/smoothing.hpp"

#include <cmath>

namespace smpec {

Vec zo_gradient_sample(const ZoGradientEstimator& est,
                       const ImplicitValueOracle& oracle, const Vec& x,
                       const Vec& v, double omega) {
  est.validate();
  const double f_pert = oracle.eval(x + v, omega);
  const double f_base = oracle.eval(x, omega);
  const double scale =
      (static_cast<double>(est.n) / est.eta) * (f_pert - f_base) / v.norm();
  return scale * v;
}

Vec zo_gradient_sample_with_base(const ZoGradientEstimator& est,
                                 const ImplicitValueOracle& oracle,
                                 const Vec& x, const Vec& y_base, const Vec& v,
                                 double omega) {
  est.validate();
  const double f_pert = oracle.eval(x + v, omega);
  const double f_base = oracle.value(x, y_base, omega);
  const double scale =
      (static_cast<double>(est.n) / est.eta) * (f_pert - f_base) / v.norm();
  return scale * v;
}

Vec zo_gradient_minibatch(const ZoGradientEstimator& est,
                          const ImplicitValueOracle& oracle, const Vec& x,
                          SphereSampler& sampler,
                          const std::optional<Vec>& y_base) {
  est.validate();
  Vec sum = Vec::Zero(est.n);
  for (long j = 0; j < est.batch; ++j) {
    const Vec v = sampler.sample_sphere(est.eta);
    const double omega = sampler.rng().uniform();
    if (y_base) {
      sum += zo_gradient_sample_with_base(est, oracle, x, *y_base, v, omega);
    } else {
      sum += zo_gradient_sample(est, oracle, x, v, omega);
    }
  }
  return sum / static_cast<double>(est.batch);
}

McValue smoothed_value_mc(const std::function<double(const Vec&)>& h,
                          const Vec& x, double eta, long m,
                          SphereSampler& sampler) {
  if (m < 1) throw std::invalid_argument("smoothed_value_mc: m >= 1");
  double sum = 0.0, sum_sq = 0.0;
  for (long i = 0; i < m; ++i) {
    const double value = h(x + sampler.sample_ball(eta));
    sum += value;
    sum_sq += value * value;
  }
  const double mean = sum / static_cast<double>(m);
  double se = 0.0;
  if (m > 1) {
    const double var =
        std::max(0.0, (sum_sq - static_cast<double>(m) * mean * mean) /
                          static_cast<double>(m - 1));
    se = std::sqrt(var / static_cast<double>(m));
  }
  return {mean, se};
}

}  // namespace smpec
