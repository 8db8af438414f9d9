#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "flatcore/mesh.hpp"
#include "flatcore/plap.hpp"
#include "flatcore/solver.hpp"

namespace flatcore {

// High-resolution finite-difference reference problem on [0, ell]:
//   -eps (|u'|^{p-2} u')' = u^{q-1} f(a(x) - u),  u(0) = u(ell) = 0,
// with affine a(x) = a0 + b x. Same smoothing/continuation strategy as the
// 2D solver, two orders of magnitude finer in resolution, so deviations in
// cross-checks isolate mesh resolution.
struct Oracle1DSpec {
  double ell = 1.0;
  double a0 = 1.0;
  double b = 0.0;
  Exponents exps;
  double f_scale = 1.0;
  double eps = 1e-3;
  int n = 20001;  // grid points including endpoints

  void validate() const;
};

struct Oracle1DResult {
  std::vector<double> x, u, a;
  std::optional<std::pair<double, double>> flat_core;  // maximal interval with a-u <= tau_c
  bool single_interval = true;  // false if the sub-tolerance set splits
  double tau_c = 0.0;
  double residual_max = 0.0;    // mass-scaled unsmoothed residual
  int iterations = 0;
  double layer_width() const;   // distance from the nearer endpoint to the core; ell/2 if no core
};

Oracle1DResult solve_1d(const Oracle1DSpec& spec, const SolveConfig& cfg = {});

// piecewise-linear sample of the oracle solution
double oracle_value(const Oracle1DResult& r, double x);

// Mid-line trace of a thin-strip 2D solve against the oracle on matching
// data, compared over the central fraction of the strip (away from the short
// sides, whose Dirichlet walls the 1D problem does not see).
struct CrossCheckReport {
  double max_deviation = 0.0;
  bool core_agreement = true;
  int n_samples = 0;
  double central_fraction = 0.5;
};

CrossCheckReport cross_check_2d(const ScalarField& u2d, const Oracle1DSpec& spec1d,
                                const Oracle1DResult& oracle, double central_fraction = 0.5,
                                int n_samples = 201);

}  // namespace flatcore
