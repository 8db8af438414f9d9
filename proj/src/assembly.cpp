#include "flatcore/assembly.hpp"

#include <stdexcept>

namespace flatcore {

DofMap::DofMap(const Mesh& m, const std::vector<char>& fixed) {
  if (static_cast<int>(fixed.size()) != m.n_vertices())
    throw std::invalid_argument("DofMap: fixed mask size mismatch");
  full_to_free.assign(m.n_vertices(), -1);
  for (int v = 0; v < m.n_vertices(); ++v)
    if (!fixed[v]) {
      full_to_free[v] = n_free++;
      free_to_full.push_back(v);
    }
}

Eigen::VectorXd DofMap::gather(const Eigen::VectorXd& full) const {
  Eigen::VectorXd out(n_free);
  for (int k = 0; k < n_free; ++k) out[k] = full[free_to_full[k]];
  return out;
}

void DofMap::scatter_add(const Eigen::VectorXd& free, Eigen::VectorXd& full) const {
  for (int k = 0; k < n_free; ++k) full[free_to_full[k]] += free[k];
}

void DofMap::scatter_set(const Eigen::VectorXd& free, Eigen::VectorXd& full) const {
  for (int k = 0; k < n_free; ++k) full[free_to_full[k]] = free[k];
}

SpMat assemble_free(const Mesh& m, const DofMap& dofs, const std::vector<TriTensor>& tensors,
                    const std::vector<std::array<double, 3>>& midpoint_coeff,
                    double lumped_diagonal_coeff) {
  const bool with_stiff = !tensors.empty();
  const bool with_mass = !midpoint_coeff.empty();
  if (with_stiff && static_cast<int>(tensors.size()) != m.n_triangles())
    throw std::invalid_argument("assemble_free: tensor count mismatch");
  if (with_mass && static_cast<int>(midpoint_coeff.size()) != m.n_triangles())
    throw std::invalid_argument("assemble_free: midpoint coefficient count mismatch");

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(m.n_triangles()) * 21 + dofs.n_free);

  for (int t = 0; t < m.n_triangles(); ++t) {
    const auto& tri = m.triangles[t];
    const double A = m.tri_area[t];
    int idx[3];
    for (int k = 0; k < 3; ++k) idx[k] = dofs.full_to_free[tri[k]];

    if (with_stiff) {
      const TriTensor& W = tensors[t];
      for (int i = 0; i < 3; ++i) {
        if (idx[i] < 0) continue;
        const Vec2 gi = m.grad_hat[t][i];
        for (int j = 0; j < 3; ++j) {
          if (idx[j] < 0) continue;
          const Vec2 gj = m.grad_hat[t][j];
          const Vec2 Wgj{W.a11 * gj.x + W.a12 * gj.y, W.a12 * gj.x + W.a22 * gj.y};
          trip.emplace_back(idx[i], idx[j], A * dot(gi, Wgj));
        }
      }
    }
    if (with_mass) {
      // midpoint e lies on edge (e, e+1); phi values there are 1/2, 1/2
      for (int e = 0; e < 3; ++e) {
        const double c = midpoint_coeff[t][e] * A / 3.0 * 0.25;
        if (c == 0.0) continue;
        const int i = idx[e], j = idx[(e + 1) % 3];
        if (i >= 0) trip.emplace_back(i, i, c);
        if (j >= 0) trip.emplace_back(j, j, c);
        if (i >= 0 && j >= 0) {
          trip.emplace_back(i, j, c);
          trip.emplace_back(j, i, c);
        }
      }
    }
  }
  if (lumped_diagonal_coeff != 0.0)
    for (int k = 0; k < dofs.n_free; ++k)
      trip.emplace_back(k, k, lumped_diagonal_coeff * m.lumped_mass[dofs.free_to_full[k]]);

  // keep the pattern independent of coefficient values so factorizations can
  // reuse their symbolic analysis
  for (int t = 0; t < m.n_triangles(); ++t) {
    const auto& tri = m.triangles[t];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const int a = dofs.full_to_free[tri[i]], b = dofs.full_to_free[tri[j]];
        if (a >= 0 && b >= 0) trip.emplace_back(a, b, 0.0);
      }
  }

  SpMat K(dofs.n_free, dofs.n_free);
  K.setFromTriplets(trip.begin(), trip.end());
  return K;
}

std::vector<TriTensor> scalar_tensors(const std::vector<double>& w) {
  std::vector<TriTensor> out(w.size());
  for (size_t t = 0; t < w.size(); ++t) out[t] = {w[t], 0.0, w[t]};
  return out;
}

}  // namespace flatcore
