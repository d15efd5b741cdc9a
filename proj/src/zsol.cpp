#include "smpec/zsol.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "smpec/smoothing.hpp"

namespace smpec {

void Schedule::validate() const {
  if (gamma0 <= 0 || eta0 <= 0) throw std::invalid_argument("Schedule: gamma0 and eta0 must be positive");
  if (a < 0 || b < 0 || r < 0) throw std::invalid_argument("Schedule: exponents a, b, r must be nonnegative");
  if (tau <= 0) throw std::invalid_argument("Schedule: tau must be positive");
  if (rho <= 0 || rho >= 1) throw std::invalid_argument("Schedule: rho must lie in (0,1)");
  if (m0 <= 0) throw std::invalid_argument("Schedule: m0 must be positive");
  if (lambda <= 0 || lambda > 1) throw std::invalid_argument("Schedule: lambda must lie in (0,1]");
  if (delta <= 0) throw std::invalid_argument("Schedule: delta must be positive");
  if (K < 0) throw std::invalid_argument("Schedule: K must be nonnegative");
}

ScheduleEval schedule_eval(const Schedule& s, long k) {
  ScheduleEval e;
  e.gamma_k = s.gamma0 / std::pow(double(k + 1), s.a);
  e.eta_k = s.eta0 / std::pow(double(k + 1), s.b);
  e.t_k = static_cast<long>(std::ceil(s.tau * std::log(double(k + 1))));
  if (e.t_k < 1) e.t_k = 1;
  return e;
}

void AveragingState::init(const Vec& x0, double gamma0, double r) {
  S = std::pow(gamma0, r);
  xbar = x0;
}

void AveragingState::update(const Vec& x_next, double gamma_next, double r) {
  const double w = std::pow(gamma_next, r);
  S += w;
  xbar += (w / S) * (x_next - xbar);
}

namespace {

class Timer {
 public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

// Dispatches lower-level solves for one driver run and accumulates effort
// counters into the trace. For inexact single-stage solves, `convex_style`
// selects the variance-reduced solver (true) or the diminishing-step one
// (false).
class LowerBinding {
 public:
  LowerBinding(const SmpecProblem& p, const Schedule& s, LowerMode mode, bool convex_style, Rng& rng, RunTrace& trace)
      : p_(p), sched_(s), mode_(mode), convex_style_(convex_style), rng_(rng), trace_(trace) {
    if (mode_ == LowerMode::exact && !p_.exact_lower)
      throw std::invalid_argument("LowerBinding: problem has no exact lower-level solver");
    double mu = p_.mu_F, L = p_.L_F;
    alpha_vr_ = sched_.alpha > 0 ? sched_.alpha : mu / (2 * L * L);
    alpha_det_ = sched_.alpha > 0 ? sched_.alpha : mu / (L * L);
    alpha0_ = sched_.alpha0 > 0 ? sched_.alpha0 : 1.0 / mu;  // > 1/(2 mu)
  }

  // Marks the next solves as a paired base/perturbed evaluation: they reuse
  // one inner sample path (common random numbers), so the additive part of
  // the map noise cancels in the zeroth-order difference while each solve's
  // marginal law is unchanged.
  void begin_pair() { pair_seed_ = rng_.next_u64(); }

  // Single-stage: y approximating the solution of the mean map VI at x.
  Vec solve_mean(const Vec& x, long k) {
    ++trace_.lower_solves;
    if (mode_ == LowerMode::exact) return p_.exact_lower(x, 0.0);
    const ConvexSet set = p_.lower_set(x, 0.0);
    ViProblem vi{p_.lower_map, set, p_.mu_F, p_.L_F};
    ViSolveReport rep;
    if (convex_style_) {
      VrSaConfig cfg{alpha_vr_, sched_.rho, sched_.m0, sched_.tau, std::nullopt,
                     sched_.enforce_lower_step_bound};
      if (pair_seed_) {
        Rng pair_rng(*pair_seed_);
        rep = vr_sa_solve(vi, x, k, cfg, pair_rng);
      } else {
        rep = vr_sa_solve(vi, x, k, cfg, rng_);
      }
    } else {
      DiminishingSaConfig cfg{alpha0_, alpha_vr_, sched_.alpha_shift};
      rep = sa_solve_diminishing(vi, x, k + 1, cfg, rng_);
    }
    trace_.lower_projections += rep.projections;
    trace_.lower_samples += rep.samples;
    return rep.y;
  }

  // Two-stage: y approximating the solution of the fixed-omega VI at x.
  Vec solve_sample(const Vec& x, double omega, long k) {
    ++trace_.lower_solves;
    if (mode_ == LowerMode::exact) return p_.exact_lower(x, omega);
    const ConvexSet set = p_.lower_set(x, omega);
    ViProblem vi{p_.lower_map, set, p_.mu_F, p_.L_F};
    ProjectionSolveConfig cfg{alpha_det_, sched_.tau};
    ViSolveReport rep = deterministic_projection_solve(vi, x, omega, k, cfg);
    trace_.lower_projections += rep.projections;
    trace_.lower_samples += rep.samples;
    return rep.y;
  }

  Vec solve(const Vec& x, double omega, long k) {
    return p_.staging == Staging::single_stage ? solve_mean(x, k) : solve_sample(x, omega, k);
  }

 private:
  const SmpecProblem& p_;
  const Schedule& sched_;
  LowerMode mode_;
  bool convex_style_;
  Rng& rng_;
  RunTrace& trace_;
  double alpha_vr_ = 0;
  double alpha_det_ = 0;
  double alpha0_ = 0;
  std::optional<std::uint64_t> pair_seed_;
};

}  // namespace

RunTrace run_convex(const SmpecProblem& problem, const Schedule& sched, LowerMode mode, std::uint64_t seed,
                    const RunOptions& opts) {
  sched.validate();
  Timer timer;
  RunTrace trace;
  trace.seed = seed;
  SphereSampler sampler(problem.dim_x, seed);
  LowerBinding lower(problem, sched, mode, /*convex_style=*/true, sampler.rng(), trace);

  Vec x = problem.x0;
  AveragingState avg;
  avg.init(x, schedule_eval(sched, 0).gamma_k, sched.r);
  if (opts.store_iterates) trace.iterates.push_back(avg.xbar);

  const int n = problem.dim_x;
  for (long k = 0; k < sched.K; ++k) {
    const ScheduleEval e = schedule_eval(sched, k);
    const Vec v = sampler.sample_sphere(e.eta_k);
    const double omega = sampler.rng().uniform();
    lower.begin_pair();
    const Vec y_base = lower.solve(x, omega, k);
    const Vec y_pert = lower.solve(x + v, omega, k);
    const double diff = problem.upper_value(x + v, y_pert, omega) - problem.upper_value(x, y_base, omega);
    trace.upper_samples += 1;
    const Vec g = (double(n) / e.eta_k) * diff * (v / v.norm());
    x = project(problem.X, x - e.gamma_k * g);
    ++trace.upper_projections;
    avg.update(x, schedule_eval(sched, k + 1).gamma_k, sched.r);
    if (opts.store_iterates) trace.iterates.push_back(avg.xbar);
  }
  trace.result = avg.xbar;
  trace.wall_time = timer.seconds();
  return trace;
}

RunTrace run_nonconvex(const SmpecProblem& problem, const Schedule& sched, LowerMode mode, std::uint64_t seed,
                       const RunOptions& opts) {
  sched.validate();
  Timer timer;
  RunTrace trace;
  trace.seed = seed;
  SphereSampler sampler(problem.dim_x, seed);
  LowerBinding lower(problem, sched, mode, /*convex_style=*/false, sampler.rng(), trace);

  Vec x = problem.x0;
  const int n = problem.dim_x;
  const double gamma = sched.gamma0;
  const double eta = sched.eta0;
  if (problem.L0 && gamma >= eta / (double(n) * *problem.L0))
    throw std::invalid_argument("run_nonconvex: gamma must satisfy gamma < eta / (n * L0)");
  const long k_lo = static_cast<long>(std::ceil(sched.lambda * double(sched.K)));
  std::vector<Vec> tail;
  if (k_lo <= sched.K) tail.reserve(sched.K - k_lo + 1);

  const bool single = problem.staging == Staging::single_stage;
  for (long k = 0; k < sched.K; ++k) {
    // iterate index k here corresponds to producing x_{k+1}
    const long N_k = k + 1;
    // single-stage reuses one base solution y(x_k) across the batch
    Vec y_base;
    if (single) y_base = lower.solve_mean(x, k);
    Vec g = Vec::Zero(n);
    for (long j = 0; j < N_k; ++j) {
      const Vec v = sampler.sample_sphere(eta);
      const double omega = sampler.rng().uniform();
      if (!single) y_base = lower.solve_sample(x, omega, k);
      const Vec y_pert = single ? lower.solve_mean(x + v, k) : lower.solve_sample(x + v, omega, k);
      const double diff = problem.upper_value(x + v, y_pert, omega) - problem.upper_value(x, y_base, omega);
      g += (double(n) / eta) * diff * (v / v.norm());
    }
    trace.upper_samples += N_k;
    g /= double(N_k);
    x = project(problem.X, x - gamma * g);
    ++trace.upper_projections;
    if (k + 1 >= k_lo) tail.push_back(x);
    if (opts.store_iterates) trace.iterates.push_back(x);
  }
  if (sched.K == 0) {
    trace.result = x;
    trace.wall_time = timer.seconds();
    return trace;
  }
  // R uniform on {ceil(lambda K), ..., K}
  const long span = static_cast<long>(tail.size());
  long idx = static_cast<long>(sampler.rng().uniform() * double(span));
  if (idx >= span) idx = span - 1;
  trace.random_index = k_lo + idx;
  trace.result = tail[idx];
  trace.wall_time = timer.seconds();
  return trace;
}

RunTrace run_accelerated(const SmpecProblem& problem, const Schedule& sched, std::uint64_t seed,
                         const RunOptions& opts) {
  sched.validate();
  if (!problem.exact_lower)
    throw std::invalid_argument("run_accelerated: requires an exact lower-level solver");
  Timer timer;
  RunTrace trace;
  trace.seed = seed;
  SphereSampler sampler(problem.dim_x, seed);
  LowerBinding lower(problem, sched, LowerMode::exact, /*convex_style=*/true, sampler.rng(), trace);

  const int n = problem.dim_x;
  Vec x = problem.x0;
  Vec z = x;
  double lam = 1.0;
  for (long k = 0; k < sched.K; ++k) {
    const ScheduleEval e = schedule_eval(sched, k);
    const long N_k = static_cast<long>(std::floor(std::pow(double(k + 1), 1.0 + sched.delta)));
    Vec g = Vec::Zero(n);
    for (long j = 0; j < N_k; ++j) {
      const Vec v = sampler.sample_sphere(e.eta_k);
      const double omega = sampler.rng().uniform();
      const Vec y_base = lower.solve(x, omega, k);
      const Vec y_pert = lower.solve(x + v, omega, k);
      const double diff = problem.upper_value(x + v, y_pert, omega) - problem.upper_value(x, y_base, omega);
      g += (double(n) / e.eta_k) * diff * (v / v.norm());
    }
    trace.upper_samples += N_k;
    g /= double(N_k);
    const Vec z_next = project(problem.X, x - e.gamma_k * g);
    ++trace.upper_projections;
    const double lam_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * lam * lam));
    x = z_next + ((lam - 1.0) / lam_next) * (z_next - z);
    z = z_next;
    lam = lam_next;
    if (opts.store_iterates) trace.iterates.push_back(z);
  }
  trace.result = z;
  trace.wall_time = timer.seconds();
  return trace;
}

ResidualEstimate residual_norm(const SmpecProblem& problem, const Vec& x, double eta, double beta, long batch,
                               std::uint64_t seed) {
  if (!problem.exact_lower)
    throw std::invalid_argument("residual_norm: requires an exact lower-level solver");
  if (batch < 2) throw std::invalid_argument("residual_norm: batch must be at least 2");
  SphereSampler sampler(problem.dim_x, seed);
  const int n = problem.dim_x;
  Vec mean = Vec::Zero(n);
  Vec m2 = Vec::Zero(n);
  for (long j = 0; j < batch; ++j) {
    const Vec v = sampler.sample_sphere(eta);
    const double omega = sampler.rng().uniform();
    const Vec y_base = problem.exact_lower(x, omega);
    const Vec y_pert = problem.exact_lower(x + v, omega);
    const double diff = problem.upper_value(x + v, y_pert, omega) - problem.upper_value(x, y_base, omega);
    const Vec g = (double(n) / eta) * diff * (v / v.norm());
    const Vec d = g - mean;
    mean += d / double(j + 1);
    m2 += d.cwiseProduct(g - mean);
  }
  const Vec G = beta * (x - project(problem.X, x - mean / beta));
  ResidualEstimate est;
  est.value = G.norm();
  // the composed map z -> beta (x - Pi(x - z/beta)) is 1-Lipschitz in z, so
  // the standard error of the gradient mean bounds the residual's
  est.stderr_of_value = std::sqrt(m2.sum() / double(batch - 1) / double(batch));
  return est;
}

}  // namespace smpec
