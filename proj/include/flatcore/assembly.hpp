#pragma once

#include <array>
#include <vector>

#include <Eigen/Sparse>

#include "flatcore/mesh.hpp"

namespace flatcore {

using SpMat = Eigen::SparseMatrix<double>;

// Symmetric 2x2 diffusion tensor per triangle (SPD for the energies we build).
struct TriTensor {
  double a11 = 0.0, a12 = 0.0, a22 = 0.0;
};

// Map from full vertex numbering to the free (non-Dirichlet) subset.
struct DofMap {
  std::vector<int> full_to_free;  // -1 for fixed vertices
  std::vector<int> free_to_full;
  int n_free = 0;

  DofMap() = default;
  DofMap(const Mesh& m, const std::vector<char>& fixed);

  Eigen::VectorXd gather(const Eigen::VectorXd& full) const;
  void scatter_add(const Eigen::VectorXd& free, Eigen::VectorXd& full) const;
  void scatter_set(const Eigen::VectorXd& free, Eigen::VectorXd& full) const;
};

// Free-DOF system matrix
//   sum_T area (W_T grad phi_j) . grad phi_i  +  sum_T (area/3) sum_midpoints c_m phi_i phi_j
// with W_T from `tensors` (pass empty to skip) and c_m the per-triangle
// midpoint coefficients (pass empty to skip). Entries touching fixed
// vertices are dropped (our Dirichlet solves work on homogenized unknowns).
// The sparsity pattern covers all free vertex adjacencies regardless of the
// coefficient values, so a factorization's analyzePattern can be reused.
SpMat assemble_free(const Mesh& m, const DofMap& dofs, const std::vector<TriTensor>& tensors,
                    const std::vector<std::array<double, 3>>& midpoint_coeff,
                    double lumped_diagonal_coeff = 0.0);

// Scalar-weight convenience: W_T = w_T * I.
std::vector<TriTensor> scalar_tensors(const std::vector<double>& w);

}  // namespace flatcore
