#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "flatcore/mesh.hpp"
#include "flatcore/plap.hpp"
#include "flatcore/spectral.hpp"

namespace flatcore {

// The main problem -eps lap_p u = u^{q-1} f(a(x)-u), u = 0 on the boundary,
// with affine a(x) = a0 + slope.x (constant a in degenerate mode).
struct ProblemSpec {
  const Mesh* mesh = nullptr;
  ScalarField a;
  double a0 = 1.0;
  Vec2 slope{0.1, 0.0};
  Exponents exps;
  Nonlinearity f;
  double eps = 1e-3;
  bool degenerate = false;            // constant-a mode; lifts the |slope|>0 requirement
  std::optional<double> eps_a;        // cached existence threshold for p=q sweeps

  void validate() const;  // (A1) min a > 0, (A3) |slope|>0 unless degenerate, exponents
};

ProblemSpec make_problem(const Mesh& m, double a0, Vec2 slope, const Exponents& exps,
                         double f_scale, double eps, bool degenerate = false);

struct SolveConfig {
  double newton_tol = 1e-8;   // on the mass-scaled residual max-norm
  int max_outer = 2000;       // auxiliary-problem descent budget
  double picard_shift = -1.0; // fixed lambda-hat; < 0 selects the Lipschitz bound
  std::vector<std::pair<double, double>> schedule;  // (sigma, mu) continuation; empty = default per exponents
  int picard_steps = 8;       // monotone descent steps from u = a before Newton takes over
  int max_inner_newton = 60;  // Newton budget per continuation stage (and per inner solve)
  bool verbose = false;

  void validate() const;
  // default continuation: sigma in {1e-2 ... 1e-5, 0} for theta < 1, a single
  // unsmoothed stage otherwise; mu per p.
  std::vector<std::pair<double, double>> effective_schedule(const Exponents& exps) const;
};

enum class SolveStatus { converged, max_iterations, line_search_failure, no_solution_regime };

const char* to_string(SolveStatus s);

struct SolveReport {
  SolveStatus status = SolveStatus::converged;
  int outer_iterations = 0;
  int linear_solves = 0;
  double residual_max = 0.0;           // mass-scaled, unsmoothed
  double shift_used = 0.0;             // last Picard shift
  std::vector<double> energy_history;  // J per accepted step (minimization solves only)
  double monotone_violation = 0.0;     // worst pointwise increase between Picard iterates
  bool monotone_ok = true;
  double wall_seconds = 0.0;
  std::string message;

  std::string to_log() const;  // line-oriented serialization
};

// Monotone (shifted Picard) iteration from the supersolution u=a downward,
// with smoothing continuation and an unsmoothed Newton polish. Returns the
// maximal discrete solution.
std::pair<ScalarField, SolveReport> solve_main(const ProblemSpec& spec, const SolveConfig& cfg);

// Auxiliary problem on the scaled disk: minimizes the discrete J with
// boundary value delta (damped Newton with line search on J itself).
std::pair<ScalarField, SolveReport> solve_auxiliary(const AuxiliarySpec& spec,
                                                    const ScalarField& a_tilde,
                                                    const SolveConfig& cfg);

// (a(x0)-delta) * z((x-x0)/(K eps^{1/p})) inside the ball B(x0, K eps^{1/p}),
// zero outside; z resampled from the unit-disk eigenpair. The ball must fit
// inside the domain.
ScalarField build_eigen_subsolution(const ProblemSpec& spec, Vec2 x0, double K, double delta,
                                    const EigenResult& unit_disk_pair);

// Smallest admissible K of the subsolution construction,
// K^p > lambda1 ||a||_inf^{p-q} / f(delta/2).
double subsolution_K(const ProblemSpec& spec, double delta, double lambda1_unit_disk);

struct SideCheckReport {
  double worst = 0.0;       // most violating signed residual (mass-scaled)
  double tol = 0.0;
  bool boundary_ok = true;  // sign condition on the boundary values
  bool pass = false;
};

// Weak differential inequalities against nonnegative hat tests:
// supersolution needs residual >= -tol, subsolution <= +tol (mass-scaled),
// plus the boundary sign condition (u >= 0 resp. u <= 0 on the boundary).
SideCheckReport check_supersolution(const ScalarField& u, const ProblemSpec& spec, double tol = 1e-10);
SideCheckReport check_subsolution(const ScalarField& u, const ProblemSpec& spec, double tol = 1e-10);

enum class ComparisonOutcome { ordered, not_ordered, inconclusive };

const char* to_string(ComparisonOutcome o);

// Comparison for -eps div Phi_p(grad ., grad a) + g(.): certifies the
// hypotheses (g nondecreasing on the sampled range, boundary ordering,
// residual ordering R(u) <= R(v) + cert_tol) and then checks
// u <= v + 1e-8 at every vertex. Certification failure -> inconclusive.
ComparisonOutcome comparison_check(const ScalarField& u, const ScalarField& v,
                                   const std::function<double(double)>& g, const ScalarField& a,
                                   double eps, double p, double cert_tol = 1e-9);

// tau_c = max(1e-6 ||a||_inf, 10 newton_tol)
double coincidence_tolerance(double a_sup_norm, double newton_tol);

// Picard shift dominating the negative slope of s -> s^{q-1} f_sigma(a - s)
// over 0 <= s <= a_max (the monotone-iteration Lipschitz constant, with a 5%
// margin). The maximum of f_sigma' sits near gap ~ sigma, hence sampled on a
// log grid.
double picard_shift_bound(double a_max, double q, const Nonlinearity& f, double sigma);

}  // namespace flatcore
