#pragma once

#include <functional>
#include <optional>

#include "smpec/geometry.hpp"
#include "smpec/rng.hpp"

namespace smpec {

// A parametrized strongly monotone variational inequality: find y in `set`
// with (z - y)' F(xhat, y) >= 0 for all z in `set`. `map` evaluates either
// the mean map F(xhat, y) (omega absent) or a stochastic sample
// G(xhat, y, omega).
struct ViProblem {
  std::function<Vec(const Vec& xhat, const Vec& y,
                    const std::optional<double>& omega)>
      map;
  ConvexSet set;
  double mu;   // strong-monotonicity modulus, > 0
  double lip;  // Lipschitz constant, >= mu

  void validate() const {
    if (mu <= 0) throw std::invalid_argument("ViProblem: mu must be positive");
    if (lip < mu) throw std::invalid_argument("ViProblem: lip must be >= mu");
  }
};

struct ViSolveReport {
  Vec y;
  long projections = 0;
  long samples = 0;
  long steps = 0;
};

// Variance-reduced SA: t_k = ceil(tau * ln(k+1)) projected steps, step t
// averaging M_t = max(1, ceil(m0 * rho^-t)) fresh map samples.
struct VrSaConfig {
  double alpha;  // <= mu / (2 lip^2)
  double rho;    // in (0, 1)
  double m0;     // batch scale; theoretical floor applies only when nu_y known
  double tau;
  std::optional<double> nu_y;  // when set, enforces m0 >= 2 nu_y^2 / lip^2
  // The theoretical bound alpha <= mu/(2 lip^2) is enforced by default. Some
  // published experiment settings exceed it while staying inside the
  // stability region alpha < 2 mu / lip^2; setting this false permits those.
  bool enforce_step_bound = true;
};

long vr_sa_batch_size(double m0, double rho, long t);

// y0 empty means "start from default_start(vi.set)".
ViSolveReport vr_sa_solve(const ViProblem& vi, const Vec& xhat, long k,
                          const VrSaConfig& cfg, Rng& rng,
                          const Vec& y0 = Vec());

// Diminishing-step SA: t_k = k + 1 single-sample projected steps with
// alpha_0 given and alpha_{t+1} = alpha / (t + shift).
struct DiminishingSaConfig {
  double alpha0;  // > 1 / (2 mu)
  double alpha;
  double shift;  // the paper-style shift may be < 1; a warning flag is set
};

ViSolveReport sa_solve_diminishing(const ViProblem& vi, const Vec& xhat,
                                   long k, const DiminishingSaConfig& cfg,
                                   Rng& rng, const Vec& y0 = Vec());

// Fixed-omega deterministic projection method: t_k = ceil(tau * ln(k+1))
// steps of y <- proj(y - alpha G(xhat, y, omega)).
struct ProjectionSolveConfig {
  double alpha;  // <= mu / lip^2
  double tau;
};

ViSolveReport deterministic_projection_solve(const ViProblem& vi,
                                             const Vec& xhat, double omega,
                                             long k,
                                             const ProjectionSolveConfig& cfg,
                                             const Vec& y0 = Vec());

// High-precision solver for affine VIs y -> A y + b over a convex set:
// projected gradient with the optimal constant step until the natural
// residual drops below 1e-12. Requires (A + A') / 2 positive definite.
Vec affine_vi_exact(const Mat& A, const Vec& b, const ConvexSet& set);

// Solves min 0.5 y'Qy + c'y  s.t.  A y <= b by enumerating KKT active sets.
// Intended for small instances (rows(A) <= ~10); Q must be positive
// definite. Serves as the exact lower-level path for polyhedral problems
// and as an independent oracle for projection tests.
Vec qp_kkt_enumeration(const Mat& Q, const Vec& c, const Mat& A, const Vec& b);

// Exact solution of the box-constrained affine VI y -> A y + b (A not
// necessarily symmetric) by enumerating per-coordinate states
// {at lower, free, at upper}. Intended for small n (3^n cases).
Vec affine_vi_box_exact(const Mat& A, const Vec& b, const Box& box);

}  // namespace smpec
