#include "smpec/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace smpec {

namespace {

void check_dim(int expected, const Vec& point, const char* what) {
  if (point.size() != expected) {
    throw std::invalid_argument(std::string(what) +
                                ": point dimension does not match set");
  }
}

Vec project_box(const Box& s, const Vec& p) {
  check_dim(static_cast<int>(s.lower.size()), p, "project(Box)");
  Vec out = p;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (std::isfinite(s.lower[i])) out[i] = std::max(out[i], s.lower[i]);
    if (std::isfinite(s.upper[i])) out[i] = std::min(out[i], s.upper[i]);
  }
  return out;
}

Vec project_ball(const Ball& s, const Vec& p) {
  check_dim(static_cast<int>(s.center.size()), p, "project(Ball)");
  const Vec d = p - s.center;
  const double norm = d.norm();
  if (norm <= s.radius) return p;
  return s.center + (s.radius / norm) * d;
}

Vec project_halfspace(const Halfspace& s, const Vec& p) {
  check_dim(static_cast<int>(s.normal.size()), p, "project(Halfspace)");
  const double viol = s.normal.dot(p) - s.offset;
  if (viol <= 0) return p;
  return p - (viol / s.normal.squaredNorm()) * s.normal;
}

Vec project_interval(const Interval& s, const Vec& p) {
  check_dim(1, p, "project(Interval)");
  Vec out(1);
  out[0] = std::clamp(p[0], s.lower, s.upper);
  return out;
}

// Projection onto {x : sum d_i x_i^2 + b.x <= bound}. With multiplier
// lam >= 0 the projection of z solves x_i = (z_i - lam b_i) / (1 + 2 lam d_i);
// the constraint value is strictly decreasing in lam, so bisection on lam
// is safe.
Vec project_quad(const QuadSublevel& s, const Vec& p) {
  check_dim(static_cast<int>(s.diag.size()), p, "project(QuadSublevel)");
  auto value = [&](const Vec& x) {
    return (s.diag.array() * x.array().square()).sum() + s.linear.dot(x);
  };
  if (value(p) <= s.bound) return p;
  auto point_at = [&](double lam) {
    Vec x(p.size());
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      x[i] = (p[i] - lam * s.linear[i]) / (1.0 + 2.0 * lam * s.diag[i]);
    }
    return x;
  };
  double lo = 0.0, hi = 1.0;
  while (value(point_at(hi)) > s.bound) {
    hi *= 2.0;
    if (hi > 1e18) {
      throw NumericalError("project(QuadSublevel): multiplier bracket failed",
                           value(point_at(hi)) - s.bound);
    }
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (value(point_at(mid)) > s.bound) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return point_at(hi);
}

// Dykstra's alternating projections over a list of projector closures.
Vec dykstra(const std::vector<std::function<Vec(const Vec&)>>& projectors,
            const Vec& p) {
  const std::size_t m = projectors.size();
  if (m == 1) return projectors[0](p);
  Vec x = p;
  std::vector<Vec> corrections(m, Vec::Zero(p.size()));
  constexpr int kMaxSweeps = 100000;
  constexpr double kTol = 1e-10;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    // the iterate alone can stall for several sweeps while the corrections
    // still evolve, so convergence is measured on the corrections
    // (Birgin-Raydan criterion), plus the iterate for good measure
    const Vec x_prev = x;
    double correction_change2 = 0;
    for (std::size_t i = 0; i < m; ++i) {
      const Vec z = x + corrections[i];
      x = projectors[i](z);
      correction_change2 += (z - x - corrections[i]).squaredNorm();
      corrections[i] = z - x;
    }
    if (correction_change2 <= kTol * kTol && (x - x_prev).norm() <= kTol)
      return x;
  }
  throw NumericalError("project: Dykstra did not converge",
                       (x - p).norm());
}

Vec project_polyhedron(const Polyhedron& s, const Vec& p) {
  std::vector<std::function<Vec(const Vec&)>> projectors;
  projectors.reserve(s.halfspaces.size() + 1);
  if (s.box) {
    const Box& b = *s.box;
    projectors.push_back([&b](const Vec& z) { return project_box(b, z); });
  }
  for (const Halfspace& h : s.halfspaces) {
    check_dim(static_cast<int>(h.normal.size()), p, "project(Polyhedron)");
    projectors.push_back(
        [&h](const Vec& z) { return project_halfspace(h, z); });
  }
  if (projectors.empty()) return p;
  return dykstra(projectors, p);
}

Vec project_intersection(const Intersection& s, const Vec& p) {
  if (s.parts.empty()) return p;
  std::vector<std::function<Vec(const Vec&)>> projectors;
  projectors.reserve(s.parts.size());
  for (const ConvexSet& part : s.parts) {
    projectors.push_back([&part](const Vec& z) { return project(part, z); });
  }
  return dykstra(projectors, p);
}

}  // namespace

ConvexSet::ConvexSet(Box s) {
  if ((s.lower.array() > s.upper.array()).any()) {
    throw std::invalid_argument("Box: lower > upper");
  }
  v_ = std::make_shared<const Variant>(std::move(s));
}

ConvexSet::ConvexSet(Ball s) {
  if (s.radius < 0) throw std::invalid_argument("Ball: negative radius");
  v_ = std::make_shared<const Variant>(std::move(s));
}

ConvexSet::ConvexSet(Halfspace s) {
  if (s.normal.norm() == 0) {
    throw std::invalid_argument("Halfspace: zero normal");
  }
  v_ = std::make_shared<const Variant>(std::move(s));
}

ConvexSet::ConvexSet(Polyhedron s) {
  v_ = std::make_shared<const Variant>(std::move(s));
}

ConvexSet::ConvexSet(Interval s) {
  if (s.lower > s.upper) throw std::invalid_argument("Interval: lower > upper");
  v_ = std::make_shared<const Variant>(std::move(s));
}

ConvexSet::ConvexSet(QuadSublevel s) {
  if ((s.diag.array() < 0).any()) {
    throw std::invalid_argument("QuadSublevel: diag must be nonnegative");
  }
  v_ = std::make_shared<const Variant>(std::move(s));
}

ConvexSet::ConvexSet(Intersection s) {
  if (s.parts.empty()) throw std::invalid_argument("Intersection: empty");
  v_ = std::make_shared<const Variant>(std::move(s));
}

int ConvexSet::dim() const {
  return std::visit(
      [](const auto& s) -> int {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Box>) {
          return static_cast<int>(s.lower.size());
        } else if constexpr (std::is_same_v<T, Ball>) {
          return static_cast<int>(s.center.size());
        } else if constexpr (std::is_same_v<T, Halfspace>) {
          return static_cast<int>(s.normal.size());
        } else if constexpr (std::is_same_v<T, Polyhedron>) {
          if (s.box) return static_cast<int>(s.box->lower.size());
          return s.halfspaces.empty()
                     ? 0
                     : static_cast<int>(s.halfspaces.front().normal.size());
        } else if constexpr (std::is_same_v<T, Interval>) {
          return 1;
        } else if constexpr (std::is_same_v<T, QuadSublevel>) {
          return static_cast<int>(s.diag.size());
        } else {
          return s.parts.front().dim();
        }
      },
      *v_);
}

bool ConvexSet::contains(const Vec& point, double tol) const {
  return std::visit(
      [&](const auto& s) -> bool {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Box>) {
          for (Eigen::Index i = 0; i < point.size(); ++i) {
            if (point[i] < s.lower[i] - tol || point[i] > s.upper[i] + tol) {
              return false;
            }
          }
          return true;
        } else if constexpr (std::is_same_v<T, Ball>) {
          return (point - s.center).norm() <= s.radius + tol;
        } else if constexpr (std::is_same_v<T, Halfspace>) {
          return s.normal.dot(point) <= s.offset + tol;
        } else if constexpr (std::is_same_v<T, Polyhedron>) {
          if (s.box && !ConvexSet(*s.box).contains(point, tol)) return false;
          for (const Halfspace& h : s.halfspaces) {
            if (h.normal.dot(point) > h.offset + tol) return false;
          }
          return true;
        } else if constexpr (std::is_same_v<T, Interval>) {
          return point[0] >= s.lower - tol && point[0] <= s.upper + tol;
        } else if constexpr (std::is_same_v<T, QuadSublevel>) {
          return (s.diag.array() * point.array().square()).sum() +
                     s.linear.dot(point) <=
                 s.bound + tol;
        } else {
          for (const ConvexSet& part : s.parts) {
            if (!part.contains(point, tol)) return false;
          }
          return true;
        }
      },
      *v_);
}

Vec project(const ConvexSet& set, const Vec& point) {
  return std::visit(
      [&](const auto& s) -> Vec {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Box>) {
          return project_box(s, point);
        } else if constexpr (std::is_same_v<T, Ball>) {
          return project_ball(s, point);
        } else if constexpr (std::is_same_v<T, Halfspace>) {
          return project_halfspace(s, point);
        } else if constexpr (std::is_same_v<T, Polyhedron>) {
          return project_polyhedron(s, point);
        } else if constexpr (std::is_same_v<T, Interval>) {
          return project_interval(s, point);
        } else if constexpr (std::is_same_v<T, QuadSublevel>) {
          return project_quad(s, point);
        } else {
          return project_intersection(s, point);
        }
      },
      set.variant());
}

namespace {

// Coordinate-wise bounds of a conservative bounding box; unbounded
// directions stay infinite.
void bounding_box_accum(const ConvexSet& set, Vec& lo, Vec& hi) {
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Box>) {
          lo = lo.cwiseMax(s.lower);
          hi = hi.cwiseMin(s.upper);
        } else if constexpr (std::is_same_v<T, Ball>) {
          lo = lo.cwiseMax((s.center.array() - s.radius).matrix());
          hi = hi.cwiseMin((s.center.array() + s.radius).matrix());
        } else if constexpr (std::is_same_v<T, Interval>) {
          lo[0] = std::max(lo[0], s.lower);
          hi[0] = std::min(hi[0], s.upper);
        } else if constexpr (std::is_same_v<T, Polyhedron>) {
          if (s.box) {
            lo = lo.cwiseMax(s.box->lower);
            hi = hi.cwiseMin(s.box->upper);
          }
        } else if constexpr (std::is_same_v<T, Intersection>) {
          for (const ConvexSet& part : s.parts) bounding_box_accum(part, lo, hi);
        }
        // Halfspace and QuadSublevel contribute no box information.
      },
      set.variant());
}

}  // namespace

Box bounding_box(const ConvexSet& set) {
  const int n = set.dim();
  Box bb{Vec::Constant(n, -kInf), Vec::Constant(n, kInf)};
  bounding_box_accum(set, bb.lower, bb.upper);
  return bb;
}

Vec default_start(const ConvexSet& set) {
  const int n = set.dim();
  const Box bb = bounding_box(set);
  const Vec& lo = bb.lower;
  const Vec& hi = bb.upper;
  Vec center(n);
  for (int i = 0; i < n; ++i) {
    if (std::isfinite(lo[i]) && std::isfinite(hi[i])) {
      center[i] = 0.5 * (lo[i] + hi[i]);
    } else if (std::isfinite(lo[i])) {
      center[i] = lo[i];
    } else if (std::isfinite(hi[i])) {
      center[i] = hi[i];
    } else {
      center[i] = 0.0;
    }
  }
  return project(set, center);
}

Vec SphereSampler::sample_sphere(double radius) {
  if (radius <= 0) {
    throw std::invalid_argument("sample_sphere: radius must be positive");
  }
  Vec v(dim_);
  double norm = 0.0;
  do {
    for (int i = 0; i < dim_; ++i) v[i] = rng_.gaussian();
    norm = v.norm();
  } while (norm == 0.0);
  return (radius / norm) * v;
}

Vec SphereSampler::sample_ball(double radius) {
  if (radius <= 0) {
    throw std::invalid_argument("sample_ball: radius must be positive");
  }
  const Vec surface = sample_sphere(radius);
  const double u = rng_.uniform();
  return std::pow(u, 1.0 / dim_) * surface;
}

}  // namespace smpec
