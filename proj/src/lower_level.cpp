#include "smpec/lower_level.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace smpec {

namespace {

long schedule_tk(double tau, long k) {
  const double v = tau * std::log(static_cast<double>(k + 1));
  return static_cast<long>(std::ceil(v));
}

Vec resolve_start(const ConvexSet& set, const Vec& y0) {
  return y0.size() == 0 ? default_start(set) : y0;
}

}  // namespace

long vr_sa_batch_size(double m0, double rho, long t) {
  const double raw = m0 * std::pow(rho, -static_cast<double>(t));
  return std::max<long>(1, static_cast<long>(std::ceil(raw)));
}

ViSolveReport vr_sa_solve(const ViProblem& vi, const Vec& xhat, long k,
                          const VrSaConfig& cfg, Rng& rng, const Vec& y0) {
  vi.validate();
  if (cfg.rho <= 0 || cfg.rho >= 1) {
    throw std::invalid_argument("vr_sa_solve: rho must be in (0,1)");
  }
  const double theory_bound = vi.mu / (2.0 * vi.lip * vi.lip);
  const double stability_bound = 2.0 * vi.mu / (vi.lip * vi.lip);
  if (cfg.alpha <= 0 ||
      cfg.alpha > (cfg.enforce_step_bound ? theory_bound : stability_bound) + 1e-12) {
    throw std::invalid_argument("vr_sa_solve: alpha must be in (0, mu/(2 L^2)]");
  }
  if (cfg.tau <= 0 || cfg.m0 <= 0) {
    throw std::invalid_argument("vr_sa_solve: tau and m0 must be positive");
  }
  if (cfg.nu_y && cfg.m0 < 2.0 * (*cfg.nu_y) * (*cfg.nu_y) / (vi.lip * vi.lip)) {
    throw std::invalid_argument("vr_sa_solve: m0 below 2 nu_y^2 / L^2");
  }

  ViSolveReport report;
  report.y = resolve_start(vi.set, y0);
  const long tk = schedule_tk(cfg.tau, k);
  for (long t = 0; t < tk; ++t) {
    const long mt = vr_sa_batch_size(cfg.m0, cfg.rho, t);
    Vec mean = Vec::Zero(report.y.size());
    for (long ell = 0; ell < mt; ++ell) {
      mean += vi.map(xhat, report.y, rng.uniform());
    }
    mean /= static_cast<double>(mt);
    report.y = project(vi.set, report.y - cfg.alpha * mean);
    report.samples += mt;
    ++report.projections;
    ++report.steps;
  }
  return report;
}

ViSolveReport sa_solve_diminishing(const ViProblem& vi, const Vec& xhat,
                                   long k, const DiminishingSaConfig& cfg,
                                   Rng& rng, const Vec& y0) {
  vi.validate();
  if (cfg.alpha0 <= 1.0 / (2.0 * vi.mu)) {
    throw std::invalid_argument(
        "sa_solve_diminishing: alpha0 must exceed 1/(2 mu)");
  }
  if (cfg.alpha <= 0 || cfg.shift <= 0) {
    throw std::invalid_argument(
        "sa_solve_diminishing: alpha and shift must be positive");
  }

  ViSolveReport report;
  report.y = resolve_start(vi.set, y0);
  const long tk = k + 1;
  double step = cfg.alpha0;
  for (long t = 0; t < tk; ++t) {
    const Vec g = vi.map(xhat, report.y, rng.uniform());
    report.y = project(vi.set, report.y - step * g);
    step = cfg.alpha / (static_cast<double>(t) + cfg.shift);
    ++report.samples;
    ++report.projections;
    ++report.steps;
  }
  return report;
}

ViSolveReport deterministic_projection_solve(const ViProblem& vi,
                                             const Vec& xhat, double omega,
                                             long k,
                                             const ProjectionSolveConfig& cfg,
                                             const Vec& y0) {
  vi.validate();
  if (cfg.alpha <= 0 || cfg.alpha > vi.mu / (vi.lip * vi.lip) + 1e-12) {
    throw std::invalid_argument(
        "deterministic_projection_solve: alpha must be in (0, mu/L^2]");
  }
  if (cfg.tau <= 0) {
    throw std::invalid_argument(
        "deterministic_projection_solve: tau must be positive");
  }

  ViSolveReport report;
  report.y = resolve_start(vi.set, y0);
  const long tk = schedule_tk(cfg.tau, k);
  for (long t = 0; t < tk; ++t) {
    const Vec g = vi.map(xhat, report.y, omega);
    report.y = project(vi.set, report.y - cfg.alpha * g);
    ++report.projections;
    ++report.steps;
  }
  return report;
}

Vec affine_vi_exact(const Mat& A, const Vec& b, const ConvexSet& set) {
  const Mat sym = 0.5 * (A + A.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> eig(sym);
  const double mu = eig.eigenvalues().minCoeff();
  if (mu <= 0) {
    throw std::invalid_argument("affine_vi_exact: map is not strongly monotone");
  }
  const double lip = A.operatorNorm();
  const double alpha = mu / (lip * lip);

  Vec y = project(set, Vec::Zero(b.size()));
  constexpr long kCap = 2000000;
  constexpr double kTol = 1e-12;
  double residual = kInf;
  for (long it = 0; it < kCap; ++it) {
    const Vec next = project(set, y - alpha * (A * y + b));
    residual = (next - y).norm();
    y = next;
    if (residual <= kTol) return y;
  }
  throw NumericalError("affine_vi_exact: residual tolerance not reached",
                       residual);
}

Vec qp_kkt_enumeration(const Mat& Q, const Vec& c, const Mat& A,
                       const Vec& b) {
  const int m = static_cast<int>(A.rows());
  const int n = static_cast<int>(Q.rows());
  if (m > 20) {
    throw std::invalid_argument("qp_kkt_enumeration: too many constraints");
  }
  const Eigen::LDLT<Mat> qinv(Q);

  double best_value = kInf;
  Vec best;
  constexpr double kFeasTol = 1e-9;
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    std::vector<int> active;
    for (int i = 0; i < m; ++i) {
      if (mask & (1u << i)) active.push_back(i);
    }
    const int na = static_cast<int>(active.size());
    if (na > n) continue;

    Vec y;
    Vec lambda;
    if (na == 0) {
      y = qinv.solve(-c);
    } else {
      // Solve the equality-constrained KKT system for the active rows.
      Mat Aa(na, n);
      Vec ba(na);
      for (int i = 0; i < na; ++i) {
        Aa.row(i) = A.row(active[i]);
        ba[i] = b[active[i]];
      }
      const Mat QiAt = qinv.solve(Aa.transpose());
      const Mat S = Aa * QiAt;
      const Vec y_free = qinv.solve(-c);
      Eigen::FullPivLU<Mat> lu(S);
      if (!lu.isInvertible()) continue;
      lambda = lu.solve(Aa * y_free - ba);
      y = y_free - QiAt * lambda;
      if ((lambda.array() < -kFeasTol).any()) continue;
    }
    if (((A * y - b).array() > kFeasTol).any()) continue;

    const double value = 0.5 * y.dot(Q * y) + c.dot(y);
    if (value < best_value - 1e-12) {
      best_value = value;
      best = y;
    }
  }
  if (best.size() == 0) {
    throw NumericalError("qp_kkt_enumeration: no KKT point found", kInf);
  }
  return best;
}

Vec affine_vi_box_exact(const Mat& A, const Vec& b, const Box& box) {
  const int n = static_cast<int>(A.rows());
  if (n > 8) {
    throw std::invalid_argument("affine_vi_box_exact: dimension too large");
  }
  constexpr double kTol = 1e-9;
  long combos = 1;
  for (int i = 0; i < n; ++i) combos *= 3;
  // state per coordinate: 0 = at lower (needs F_i >= 0), 1 = free
  // (F_i = 0), 2 = at upper (needs F_i <= 0)
  std::vector<int> state(n);
  for (long code = 0; code < combos; ++code) {
    long c = code;
    bool valid = true;
    for (int i = 0; i < n; ++i, c /= 3) {
      state[i] = static_cast<int>(c % 3);
      if (state[i] == 0 && !std::isfinite(box.lower[i])) valid = false;
      if (state[i] == 2 && !std::isfinite(box.upper[i])) valid = false;
    }
    if (!valid) continue;

    std::vector<int> free_idx;
    Vec y(n);
    for (int i = 0; i < n; ++i) {
      if (state[i] == 1) {
        free_idx.push_back(i);
      } else {
        y[i] = state[i] == 0 ? box.lower[i] : box.upper[i];
      }
    }
    const int nf = static_cast<int>(free_idx.size());
    if (nf > 0) {
      Mat Aff(nf, nf);
      Vec rhs(nf);
      for (int r = 0; r < nf; ++r) {
        double fixed = b[free_idx[r]];
        for (int i = 0; i < n; ++i) {
          if (state[i] != 1) fixed += A(free_idx[r], i) * y[i];
        }
        rhs[r] = -fixed;
        for (int s = 0; s < nf; ++s) Aff(r, s) = A(free_idx[r], free_idx[s]);
      }
      Eigen::FullPivLU<Mat> lu(Aff);
      if (!lu.isInvertible()) continue;
      const Vec yf = lu.solve(rhs);
      for (int r = 0; r < nf; ++r) y[free_idx[r]] = yf[r];
    }

    bool ok = true;
    const Vec F = A * y + b;
    for (int i = 0; i < n && ok; ++i) {
      switch (state[i]) {
        case 0:
          ok = F[i] >= -kTol;
          break;
        case 1:
          ok = y[i] >= box.lower[i] - kTol && y[i] <= box.upper[i] + kTol;
          break;
        default:
          ok = F[i] <= kTol;
      }
    }
    if (ok) return y;
  }
  throw NumericalError("affine_vi_box_exact: no complementary solution", kInf);
}

}  // namespace smpec
