#pragma once

#include <string>
#include <utility>
#include <vector>

#include "flatcore/mesh.hpp"
#include "flatcore/plap.hpp"
#include "flatcore/solver.hpp"

namespace flatcore {

// Coincidence set O = {a - u <= tau_c} of a solve, with its lumped measure
// and the boundary-layer width (deepest interior distance still outside O).
struct CoincidenceReport {
  double tau_c = 0.0;
  std::vector<char> mask;        // per vertex, 1 inside O
  double measure = 0.0;          // sum of lumped masses over the mask
  double layer_width = 0.0;      // sup{dist(x, boundary) : x not in O}
  double min_interior_gap = 0.0; // min of a-u over non-boundary vertices
};

CoincidenceReport detect_coincidence(const ScalarField& u, const ScalarField& a, double tau_c);

// Exponent bookkeeping for the flat-core propositions. The degenerate flavor
// (constant coefficient, general p) reduces to the non-degenerate one at
// p = 2, where p_star = 2 as well.
struct ExponentPack {
  double theta = 0.0;
  int N = 0;
  double p = 2.0;       // meaningful in degenerate mode (2 otherwise)
  double p_star = 2.0;  // p/(p-1)
  double gamma = 0.0;
  double tau = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  bool degenerate = false;
};

ExponentPack exponents_nondegenerate(double theta, int N);
ExponentPack exponents_degenerate(double theta, int N, double p);

// Energy profiles over concentric balls B_rho of the unit disk:
//   E_D(rho) = int_{B_rho} Phi_p(grad w, grad a_tilde) . grad w
//   E_A(rho) = int_{B_rho} |w|^{1+theta}
//   E_T = E_D + Lambda E_A
// A triangle belongs to B_rho when its barycenter does.
struct EnergyProfile {
  std::vector<double> rho;
  std::vector<double> E_D, E_A, E_T;
};

EnergyProfile energy_profile(const ScalarField& w, const ScalarField& a_tilde,
                             const AuxiliarySpec& spec, int n_rho);

// Empirical dead-core radius in scaled coordinates: the largest rho with
// E_T(rho) <= tol, or the largest ball on which w stays <= tol. Returns 0
// when there is no core.
double deadcore_radius(const EnergyProfile& profile, double tol);
double deadcore_radius(const ScalarField& w, double tol);

// (1 - M delta^{(1+theta) gamma})^{1/tau}; requires M delta^{(1+theta) gamma} < 1.
double predicted_radius(double delta, double M, double theta, double gamma, double tau);

// Log-log least squares of layer width against eps. Only resolved samples
// (W > 2 mesh spacings) enter the fit; at least 4 of them spanning 1.5
// decades of eps are required.
struct ScalingFit {
  std::vector<std::pair<double, double>> samples;  // the resolved subset
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

ScalingFit fit_scaling(const std::vector<std::pair<double, double>>& samples, double mesh_h);

// One theta-row of the flat-core dichotomy table.
struct DichotomyRow {
  double theta = 0.0;
  double measure = 0.0;
  double min_interior_gap = 0.0;  // over Omega_{0.1 diam}
  bool empty = false;             // |O| = 0 and min gap above tau_c
  bool failed = false;
  std::string message;
};

// Runs solve_main per theta on the template's data (a, p, q, eps fixed) and
// classifies the coincidence set per row. Solver failures mark the row
// failed instead of aborting the table.
struct DichotomySetup {
  const Mesh* mesh = nullptr;
  double a0 = 1.0;
  Vec2 slope{0.0, 0.0};
  double p = 2.0, q = 2.0;
  double f_scale = 1.0;
  bool degenerate = false;
};

std::vector<DichotomyRow> dichotomy_experiment(const DichotomySetup& setup,
                                               const std::vector<double>& theta_list, double eps,
                                               const SolveConfig& cfg);

// Consequence of the weak Harnack inequality: v = a - u stays strictly
// positive on interior compacts Omega_kappa in the no-core regime.
struct HarnackReport {
  double min_interior = 0.0;
  double kappa = 0.0;
  bool pass = false;
};

HarnackReport harnack_positivity_check(const ScalarField& v, double kappa, double tau_c);

}  // namespace flatcore
