#pragma once

#include <Eigen/Core>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <variant>
#include <vector>

#include "smpec/rng.hpp"

namespace smpec {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Thrown when an iterative routine fails to reach its tolerance within its
// iteration cap. Carries the last residual so callers can report it.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Box {
  Vec lower;  // entries may be -inf
  Vec upper;  // entries may be +inf
};

struct Ball {
  Vec center;
  double radius;  // >= 0
};

// normal . y <= offset
struct Halfspace {
  Vec normal;
  double offset;
};

struct Polyhedron {
  std::vector<Halfspace> halfspaces;
  std::optional<Box> box;
};

// 1-D convenience set
struct Interval {
  double lower;
  double upper;
};

// Sublevel set of a convex quadratic: sum_i d_i x_i^2 + b . x <= c with
// d >= 0. Projection reduces to a monotone 1-D root-find in the KKT
// multiplier.
struct QuadSublevel {
  Vec diag;    // d, componentwise >= 0
  Vec linear;  // b
  double bound;
};

class ConvexSet;

// Intersection of convex sets, projected by Dykstra's alternating scheme.
struct Intersection {
  std::vector<ConvexSet> parts;
};

class ConvexSet {
 public:
  using Variant =
      std::variant<Box, Ball, Halfspace, Polyhedron, Interval, QuadSublevel,
                   Intersection>;

  ConvexSet(Box s);
  ConvexSet(Ball s);
  ConvexSet(Halfspace s);
  ConvexSet(Polyhedron s);
  ConvexSet(Interval s);
  ConvexSet(QuadSublevel s);
  ConvexSet(Intersection s);

  int dim() const;
  const Variant& variant() const { return *v_; }
  bool contains(const Vec& point, double tol = 1e-9) const;

 private:
  std::shared_ptr<const Variant> v_;
};

// Euclidean projection onto the set. Box/Ball/Halfspace/Interval/
// QuadSublevel are exact; Polyhedron and Intersection run Dykstra's
// alternating projections (tolerance 1e-10 on the successive-iterate
// change, cap 1e5 sweeps) and throw NumericalError on non-convergence.
Vec project(const ConvexSet& set, const Vec& point);

// Conservative coordinate-wise bounding box; unbounded directions are
// reported as +-inf.
Box bounding_box(const ConvexSet& set);

// Feasible default starting point: the center of the set's bounding box
// (infinite sides fall back to the finite one, or to 0), projected onto the
// set.
Vec default_start(const ConvexSet& set);

// Uniform sampling on spheres and balls of a given radius. Sphere samples
// normalize a standard Gaussian vector; ball samples scale a sphere sample
// by U^{1/n}. The sampler owns its stream; parallel runs construct their
// own from distinct seeds.
class SphereSampler {
 public:
  SphereSampler(int dim, std::uint64_t seed) : dim_(dim), rng_(seed) {
    if (dim < 1) throw std::invalid_argument("SphereSampler: dim must be >= 1");
  }

  int dim() const { return dim_; }
  Rng& rng() { return rng_; }

  Vec sample_sphere(double radius);
  Vec sample_ball(double radius);

 private:
  int dim_;
  Rng rng_;
};

}  // namespace smpec
