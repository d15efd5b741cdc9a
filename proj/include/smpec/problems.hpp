#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "smpec/geometry.hpp"
#include "smpec/lower_level.hpp"

namespace smpec {

enum class Staging { single_stage, two_stage };

struct AnalyticOptimum {
  Vec x_star;
  double f_star;  // in the toolkit's minimization convention
  enum class Provenance { closed_form, grid_oracle, literature } provenance;
};

// An implicit stochastic MPEC. Omega tokens are uniform scalars in [0,1);
// each problem maps them to its own sample space. Objectives are stored in
// minimization convention; `sign_flip` records that the source formulation
// maximizes, so reports can convert back.
struct SmpecProblem {
  std::string id;
  int dim_x = 0;
  int dim_y = 0;
  Staging staging = Staging::two_stage;
  ConvexSet X;

  // lower level: feasible set (possibly (x, omega)-dependent) and map.
  // `lower_map` with omega present evaluates the stochastic sample
  // G(x, y, omega); with omega absent it evaluates the mean map F(x, y).
  std::function<ConvexSet(const Vec& x, double omega)> lower_set;
  std::function<Vec(const Vec& x, const Vec& y,
                    const std::optional<double>& omega)>
      lower_map;
  double mu_F = 0;
  double L_F = 0;

  // upper objective sample f(x, y, omega), minimization convention
  std::function<double(const Vec& x, const Vec& y, double omega)> upper_value;

  // exact lower-level solution: y(x) for single-stage (omega ignored),
  // y(x, omega) for two-stage
  std::function<Vec(const Vec& x, double omega)> exact_lower;

  // optional O(1) analytic sample of the implicit objective, used by the
  // value-estimation fast path when present
  std::function<double(const Vec& x, double omega)> implicit_value;

  // optional analytic gradient of the empirical-average implicit objective
  // over a fixed omega set (SAA fast path)
  std::function<Vec(const Vec& x, const std::vector<double>& omegas)>
      saa_gradient;

  std::optional<double> L0;  // Lipschitz constant of the implicit objective
  std::optional<AnalyticOptimum> optimum;
  Vec x0;  // default start, feasible in X
  bool sign_flip = false;

  ViProblem vi_at(const Vec& x, double omega) const {
    return ViProblem{lower_map, lower_set(x, omega), mu_F, L_F};
  }
};

// --- factories -----------------------------------------------------------

struct UniformDist {
  double lo, hi;
  double operator()(double omega) const { return lo + (hi - lo) * omega; }
  double mean() const { return 0.5 * (lo + hi); }
};

// Stackelberg-Nash-Cournot game, two-stage: N identical followers with
// quadratic costs facing inverse demand a(omega) - b * total quantity; the
// leader picks capacity x in [0, x_u]. The follower equilibrium is the LCP
// with matrix (c + b) I + b 11' and has a symmetric closed form.
SmpecProblem cournot_two_stage(int N, double b, double c, double d,
                               UniformDist a_dist, double x_u);

// Single-stage variant: the follower map is expectation-valued.
SmpecProblem cournot_single_stage(int N, double b, double c, double d,
                                  UniformDist a_dist, double x_u);

// Bard-style nonconvex bilevel problem with stochastic lower-level linear
// term xi(omega) ~ U(4,6).
SmpecProblem bard_bilevel(double a_coef, double b_coef, double c_coef,
                          double d_coef, UniformDist xi_dist);

// Literature test problems and their high-dimensional stochastic
// counterparts.
SmpecProblem problem1(double L, double gamma_exp);
SmpecProblem problem2();
SmpecProblem problem3();
SmpecProblem problem4();
SmpecProblem problem5(int objective_variant);  // 1, 2, or 3; best-effort
SmpecProblem problem1_hd(int N, double L);     // gamma(omega) ~ U(0.9,1.1)
SmpecProblem problem2_hd(int N);               // omega ~ U(-0.5,0.5)

// Registry addressable by string id: cournot2s, cournot1s, bard, p1..p5,
// hd1, hd2. Unknown keys in `params` raise an argument error.
SmpecProblem make_problem(const std::string& id,
                          const std::map<std::string, double>& params = {});
std::vector<std::string> problem_ids();

// Brute-force oracle for dim_x <= 2: grid the feasible region, solve the
// lower level exactly per node, average the upper value over a fixed
// validation sample set, then refine around the best node.
AnalyticOptimum grid_oracle(const SmpecProblem& problem, int resolution,
                            long mc_samples, std::uint64_t seed = 777);

}  // namespace smpec
