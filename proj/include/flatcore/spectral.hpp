#pragma once

#include <vector>

#include "flatcore/mesh.hpp"

namespace flatcore {

struct EigenResult {
  double lambda1 = 0.0;
  ScalarField z;                         // >= 0, ||z||_inf = 1
  std::vector<double> rayleigh_history;  // quotient per accepted step
};

// First Dirichlet eigenpair of the p-Laplacian: minimizes the Rayleigh
// quotient int |grad z|^p / int |z|^p by preconditioned gradient descent
// (p=2 stiffness + mass preconditioner, factorized once), with periodic L^p
// renormalization; ||z||_inf = 1 applied after convergence. Throws on
// convergence failure.
EigenResult first_eigenpair(const Mesh& m, double p, double tol = 1e-9, int max_iter = 2000);

// inf of int |grad z|^p / int weight |z|^p; weight must be positive.
double weighted_first_eigenvalue(const Mesh& m, double p, const ScalarField& weight,
                                 double tol = 1e-9, int max_iter = 2000);

// eps_a: infinity for p > q, 1/lambda_fa for p = q; p < q is outside the
// paper's assumptions.
double eps_threshold(double p, double q, double lambda_fa);

}  // namespace flatcore
