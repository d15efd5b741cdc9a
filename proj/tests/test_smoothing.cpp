#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "smpec/smoothing.hpp"

using namespace smpec;

namespace {

// trivial oracle: y(x) = x, f(x, y, w) = h(x) for some deterministic h, so
// the smoothing identities can be checked against closed forms
ImplicitValueOracle direct_oracle(std::function<double(const Vec&)> h) {
  return ImplicitValueOracle{
      [](const Vec& x, double) { return x; },
      [h](const Vec& x, const Vec&, double) { return h(x); },
  };
}

}  // namespace

TEST_CASE("smoothing leaves constants unchanged") {
  auto oracle = direct_oracle([](const Vec&) { return 3.75; });
  SphereSampler sampler(3, 11);
  McValue v = smoothed_value_mc([&](const Vec& x) { return oracle.eval(x, 0.0); },
                                Vec::Ones(3), 0.5, 2000, sampler);
  CHECK(v.mean == doctest::Approx(3.75).epsilon(1e-14));
  CHECK(v.stderr_of_mean < 1e-14);
}

TEST_CASE("smoothing leaves affine functions unchanged in expectation") {
  // E[u] = 0 over the ball, so f_eta = f exactly for affine f; the MC mean
  // must agree within a few standard errors
  Vec c(4);
  c << 1.0, -2.0, 0.5, 3.0;
  auto h = [c](const Vec& x) { return c.dot(x) + 7.0; };
  Vec x0 = Vec::Constant(4, 0.3);
  SphereSampler sampler(4, 17);
  McValue v = smoothed_value_mc(h, x0, 0.8, 40000, sampler);
  CHECK(std::abs(v.mean - h(x0)) < 4.0 * v.stderr_of_mean + 1e-12);
}

TEST_CASE("quadratic smoothed value matches the closed form") {
  // for h(x) = |x|^2, E[|x + eta u|^2] = |x|^2 + eta^2 E|u|^2 and
  // E|u|^2 = n/(n+2) for u uniform in the unit n-ball
  const int n = 3;
  const double eta = 0.7;
  auto h = [](const Vec& x) { return x.squaredNorm(); };
  Vec x0(n);
  x0 << 1.0, -0.5, 0.25;
  SphereSampler sampler(n, 4242);
  McValue v = smoothed_value_mc(h, x0, eta, 60000, sampler);
  const double closed = x0.squaredNorm() + eta * eta * double(n) / double(n + 2);
  CHECK(std::abs(v.mean - closed) < 4.0 * v.stderr_of_mean);
}

TEST_CASE("zo gradient estimator is unbiased for the smoothed gradient (3 sigma)") {
  // h(x) = |x|^2: grad h_eta(x) = 2x exactly (smoothing a quadratic shifts
  // the value, not the gradient)
  const int n = 3;
  const double eta = 0.5;
  auto oracle = direct_oracle([](const Vec& x) { return x.squaredNorm(); });
  ZoGradientEstimator est{n, eta, 1};
  Vec x0(n);
  x0 << 0.6, -0.2, 1.1;

  SphereSampler sampler(n, 314159);
  const long m = 200000;
  Vec mean = Vec::Zero(n);
  Mat sq = Mat::Zero(n, 1);
  for (long i = 0; i < m; ++i) {
    const Vec v = sampler.sample_sphere(eta);
    const Vec g = zo_gradient_sample(est, oracle, x0, v, sampler.rng().uniform());
    mean += g;
    sq.col(0) += g.cwiseProduct(g);
  }
  mean /= double(m);
  for (int j = 0; j < n; ++j) {
    const double var = sq(j, 0) / double(m) - mean[j] * mean[j];
    const double se = std::sqrt(var / double(m));
    CHECK(std::abs(mean[j] - 2.0 * x0[j]) < 3.0 * se);
  }
}

TEST_CASE("samplewise gradient norm respects the n L0 bound") {
  // h Lipschitz with constant L0 implies |g| <= n L0 pathwise
  const int n = 4;
  const double L0 = 2.0;  // |grad| of c.x with |c| = 2
  Vec c = Vec::Zero(n);
  c[0] = 2.0;
  auto oracle = direct_oracle([c](const Vec& x) { return c.dot(x); });
  ZoGradientEstimator est{n, 0.3, 1};
  SphereSampler sampler(n, 8);
  Vec x0 = Vec::Zero(n);
  for (int i = 0; i < 5000; ++i) {
    const Vec v = sampler.sample_sphere(est.eta);
    const Vec g = zo_gradient_sample(est, oracle, x0, v, 0.0);
    CHECK(g.norm() <= double(n) * L0 + 1e-9);
  }
}

TEST_CASE("smoothed value sandwich |f_eta - f| <= L0 eta") {
  const double L0 = 3.0;
  auto h = [](const Vec& x) { return 3.0 * std::abs(x[0]); };  // L0 = 3
  SphereSampler sampler(2, 21);
  Rng probe(22);
  for (int trial = 0; trial < 20; ++trial) {
    Vec x0(2);
    x0 << probe.uniform(-2, 2), probe.uniform(-2, 2);
    const double eta = probe.uniform(0.05, 1.0);
    McValue v = smoothed_value_mc(h, x0, eta, 20000, sampler);
    CHECK(std::abs(v.mean - h(x0)) <= L0 * eta + 4.0 * v.stderr_of_mean);
  }
}

TEST_CASE("the same omega is used on both sides of the difference") {
  // f(x, y, w) = w: the difference cancels exactly iff omega is shared, so
  // every single-sample estimate must be identically zero
  ImplicitValueOracle oracle{
      [](const Vec& x, double) { return x; },
      [](const Vec&, const Vec&, double w) { return 100.0 * w; },
  };
  ZoGradientEstimator est{3, 0.2, 1};
  SphereSampler sampler(3, 5);
  Vec x0 = Vec::Ones(3);
  for (int i = 0; i < 200; ++i) {
    const Vec v = sampler.sample_sphere(est.eta);
    const Vec g = zo_gradient_sample(est, oracle, x0, v, sampler.rng().uniform());
    CHECK(g.norm() == 0.0);
  }
}

TEST_CASE("minibatch mean equals the mean of replayed single samples") {
  auto oracle = direct_oracle([](const Vec& x) { return x.squaredNorm() + x[0]; });
  ZoGradientEstimator est{2, 0.4, 16};
  Vec x0(2);
  x0 << 0.5, -1.0;

  SphereSampler s1(2, 909);
  const Vec batch = zo_gradient_minibatch(est, oracle, x0, s1);

  // replay the identical stream manually: per sample, v is drawn first,
  // then omega
  SphereSampler s2(2, 909);
  Vec manual = Vec::Zero(2);
  for (long j = 0; j < est.batch; ++j) {
    const Vec v = s2.sample_sphere(est.eta);
    const double w = s2.rng().uniform();
    manual += zo_gradient_sample(est, oracle, x0, v, w);
  }
  manual /= double(est.batch);
  CHECK((batch - manual).norm() < 1e-12);
}

TEST_CASE("shared-base minibatch solves the base point once") {
  long lower_calls = 0;
  ImplicitValueOracle oracle{
      [&lower_calls](const Vec& x, double) {
        ++lower_calls;
        return x;
      },
      [](const Vec& x, const Vec& y, double) { return x.dot(y); },
  };
  ZoGradientEstimator est{2, 0.3, 8};
  SphereSampler sampler(2, 33);
  const Vec x0 = Vec::Ones(2);
  const Vec y_base = x0;
  lower_calls = 0;
  zo_gradient_minibatch(est, oracle, x0, sampler, y_base);
  CHECK(lower_calls == est.batch);  // only the perturbed sides
}

TEST_CASE("estimator configuration is validated") {
  CHECK_THROWS_AS((ZoGradientEstimator{0, 1.0, 1}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((ZoGradientEstimator{2, 0.0, 1}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((ZoGradientEstimator{2, 1.0, 0}.validate()), std::invalid_argument);
}
