#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "smpec/zsol.hpp"

using namespace smpec;

namespace {

SmpecProblem small_cournot() { return make_problem("cournot2s", {{"N", 3}}); }

}  // namespace

TEST_CASE("schedule evaluation follows the closed forms") {
  Schedule s;  // gamma0 = eta0 = 1, a = b = 0.5, tau = 5
  ScheduleEval e0 = schedule_eval(s, 0);
  CHECK(e0.gamma_k == 1.0);
  CHECK(e0.eta_k == 1.0);
  CHECK(e0.t_k == 1);  // ceil(5 ln 1) floored at one inner step

  ScheduleEval e3 = schedule_eval(s, 3);
  CHECK(e3.gamma_k == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(e3.eta_k == doctest::Approx(0.5).epsilon(1e-15));

  // t_k = ceil(tau ln(k+1)): tau = 5, k = 9 -> ceil(11.51) = 12
  CHECK(schedule_eval(s, 9).t_k == 12);
}

TEST_CASE("accelerated batch schedule N_k = floor((k+1)^{1+delta})") {
  // delta = 0.01, k = 99 -> floor(100^{1.01}) = floor(104.71) = 104
  CHECK(long(std::floor(std::pow(100.0, 1.01))) == 104);
  // verify through the driver's counters below
}

TEST_CASE("weighted averaging matches the direct weighted mean to 1e-12") {
  Rng rng(5);
  for (double r : {0.0, 0.5, 1.0, -1.0}) {
    Schedule s;
    s.r = r;
    std::vector<Vec> xs;
    std::vector<double> ws;
    AveragingState avg;
    Vec x0(2);
    x0 << rng.gaussian(), rng.gaussian();
    xs.push_back(x0);
    ws.push_back(std::pow(schedule_eval(s, 0).gamma_k, r));
    avg.init(x0, schedule_eval(s, 0).gamma_k, r);
    for (long k = 1; k <= 50; ++k) {
      Vec x(2);
      x << rng.gaussian(), rng.gaussian();
      xs.push_back(x);
      ws.push_back(std::pow(schedule_eval(s, k).gamma_k, r));
      avg.update(x, schedule_eval(s, k).gamma_k, r);
    }
    Vec direct = Vec::Zero(2);
    double wsum = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
      direct += ws[i] * xs[i];
      wsum += ws[i];
    }
    direct /= wsum;
    CHECK((avg.xbar - direct).norm() < 1e-12);
  }
}

TEST_CASE("K = 0 returns the starting point untouched") {
  SmpecProblem p = small_cournot();
  Schedule s;
  s.K = 0;
  RunTrace trace = run_convex(p, s, LowerMode::exact, 1);
  CHECK((trace.result - p.x0).norm() == 0.0);
  CHECK(trace.upper_projections == 0);
  CHECK(trace.lower_solves == 0);
  CHECK(trace.upper_samples == 0);
}

TEST_CASE("convex driver counters: 2K lower solves, K projections, K samples") {
  SmpecProblem p = small_cournot();
  Schedule s;
  s.K = 137;
  RunTrace trace = run_convex(p, s, LowerMode::exact, 3);
  CHECK(trace.lower_solves == 2 * 137);
  CHECK(trace.upper_projections == 137);
  CHECK(trace.upper_samples == 137);
}

TEST_CASE("nonconvex driver counters: sum over k of (1 + N_k) lower solves") {
  // a two-stage problem solves a base/perturbed pair per inner sample
  SmpecProblem p = make_problem("cournot2s", {{"N", 3}});
  Schedule s;
  s.K = 25;
  s.gamma0 = 1e-3;
  s.eta0 = 1e-2;
  RunTrace trace = run_nonconvex(p, s, LowerMode::exact, 3);
  long solves = 0, samples = 0;
  for (long k = 0; k < s.K; ++k) {
    solves += 2 * (k + 1);
    samples += k + 1;
  }
  CHECK(trace.lower_solves == solves);
  CHECK(trace.upper_samples == samples);
  CHECK(trace.upper_projections == s.K);
  // R lands in the prescribed tail
  const long k_lo = long(std::ceil(s.lambda * double(s.K)));
  CHECK(trace.random_index >= k_lo);
  CHECK(trace.random_index <= s.K);
}

TEST_CASE("single-stage nonconvex driver shares one base solve per iteration") {
  SmpecProblem p = make_problem("bard");
  Schedule s;
  s.K = 20;
  s.gamma0 = 1e-3;
  s.eta0 = 1e-2;
  RunTrace trace = run_nonconvex(p, s, LowerMode::exact, 3);
  long solves = 0;
  for (long k = 0; k < s.K; ++k) solves += 1 + (k + 1);
  CHECK(trace.lower_solves == solves);
}

TEST_CASE("accelerated driver counters match N_k = floor((k+1)^{1.01})") {
  SmpecProblem p = small_cournot();
  Schedule s;
  s.K = 30;
  s.delta = 0.01;
  RunTrace trace = run_accelerated(p, s, 3);
  long samples = 0;
  for (long k = 0; k < s.K; ++k) samples += long(std::floor(std::pow(double(k + 1), 1.01)));
  CHECK(trace.upper_samples == samples);
  CHECK(trace.lower_solves == 2 * samples);
  CHECK(trace.upper_projections == s.K);
}

TEST_CASE("identical seeds give bit-identical results") {
  SmpecProblem p = small_cournot();
  Schedule s;
  s.K = 60;
  RunTrace a = run_convex(p, s, LowerMode::exact, 42);
  RunTrace b = run_convex(p, s, LowerMode::exact, 42);
  CHECK(a.result == b.result);  // exact binary equality
  RunTrace c = run_convex(p, s, LowerMode::exact, 43);
  CHECK(a.result != c.result);

  Schedule ns;
  ns.K = 15;
  ns.gamma0 = 1e-3;
  ns.eta0 = 1e-2;
  SmpecProblem bard = make_problem("bard");
  RunTrace n1 = run_nonconvex(bard, ns, LowerMode::exact, 7);
  RunTrace n2 = run_nonconvex(bard, ns, LowerMode::exact, 7);
  CHECK(n1.result == n2.result);
  CHECK(n1.random_index == n2.random_index);
}

TEST_CASE("momentum coefficients follow the Nesterov recursion") {
  // lambda_0 = 1, lambda_{k+1} = (1 + sqrt(1 + 4 lambda_k^2)) / 2:
  // lambda_1 = (1 + sqrt 5)/2 = 1.618..., lambda_2 = (1 + sqrt(1 + 4
  // lambda_1^2))/2 = 2.193527...
  double lam = 1.0;
  lam = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * lam * lam));
  CHECK(lam == doctest::Approx(1.6180339887).epsilon(1e-9));
  lam = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * lam * lam));
  CHECK(lam == doctest::Approx(2.1935270853).epsilon(1e-8));
  // growth property lambda_k >= (k + 2) / 2
  lam = 1.0;
  for (int k = 0; k < 200; ++k) {
    lam = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * lam * lam));
    CHECK(lam >= double(k + 1 + 2) / 2.0);
  }
}

TEST_CASE("convex driver converges on the two-stage Cournot game") {
  SmpecProblem p = make_problem("cournot2s");
  Schedule s;
  s.K = 2000;
  RunTrace trace = run_convex(p, s, LowerMode::exact, 11);
  REQUIRE(p.optimum.has_value());
  CHECK((trace.result - p.optimum->x_star).norm() < 0.15);
}

TEST_CASE("inexact lower mode accumulates inner-solver counters") {
  SmpecProblem p = make_problem("cournot1s", {{"N", 3}});
  Schedule s;
  s.K = 40;
  RunTrace trace = run_convex(p, s, LowerMode::inexact, 9);
  CHECK(trace.lower_projections > 0);
  CHECK(trace.lower_samples > 0);
  CHECK(trace.lower_samples >= trace.lower_projections);
}

TEST_CASE("accelerated driver requires exact lower solves") {
  SmpecProblem p = small_cournot();
  p.exact_lower = nullptr;
  Schedule s;
  s.K = 5;
  CHECK_THROWS_AS(run_accelerated(p, s, 1), std::invalid_argument);
}

TEST_CASE("nonconvex step-size precondition gamma < eta / (n L0)") {
  SmpecProblem p = make_problem("bard");
  p.L0 = 100.0;
  Schedule s;
  s.K = 5;
  s.eta0 = 1e-2;
  s.gamma0 = 1.0;  // violates gamma < eta / (n L0)
  CHECK_THROWS_AS(run_nonconvex(p, s, LowerMode::exact, 1), std::invalid_argument);
  s.gamma0 = 1e-7;
  CHECK_NOTHROW(run_nonconvex(p, s, LowerMode::exact, 1));
}

TEST_CASE("schedule validation rejects bad parameters") {
  Schedule s;
  s.K = -1;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = Schedule{};
  s.gamma0 = 0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = Schedule{};
  s.eta0 = -1;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = Schedule{};
  s.lambda = 1.5;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = Schedule{};
  s.rho = 1.0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("residual norm is small at the optimum and larger away from it") {
  SmpecProblem p = make_problem("cournot2s");
  REQUIRE(p.optimum.has_value());
  ResidualEstimate at_opt = residual_norm(p, p.optimum->x_star, 1e-3, 1.0, 4000, 5);
  Vec far = p.optimum->x_star;
  far[0] += 30.0;
  ResidualEstimate away = residual_norm(p, far, 1e-3, 1.0, 4000, 5);
  CHECK(at_opt.value < 0.05);
  CHECK(away.value > 10.0 * at_opt.value);
}
