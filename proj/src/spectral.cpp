#include "flatcore/spectral.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/SparseCholesky>

#include "flatcore/assembly.hpp"
#include "flatcore/csv.hpp"

namespace flatcore {

namespace {

// numerator N(z) = sum_T A |grad z|^p and its gradient (free dofs, full-size vector)
double p_dirichlet(const Mesh& m, const ScalarField& z, double p, Eigen::VectorXd* grad) {
  double N = 0.0;
  if (grad) grad->setZero(m.n_vertices());
  for (int t = 0; t < m.n_triangles(); ++t) {
    const Vec2 g = field_gradient(z, t);
    const double gn = norm(g);
    const double A = m.tri_area[t];
    N += A * std::pow(gn, p);
    if (grad && gn > 0.0) {
      const Vec2 flux = p * std::pow(gn, p - 2.0) * g;
      const auto& tri = m.triangles[t];
      for (int k = 0; k < 3; ++k) (*grad)[tri[k]] += A * dot(flux, m.grad_hat[t][k]);
    }
  }
  return N;
}

// denominator D(z) = <weight |z|^p> (midpoint rule) and gradient
double weighted_lp(const Mesh& m, const ScalarField& z, double p, const ScalarField* weight,
                   Eigen::VectorXd* grad) {
  double D = 0.0;
  if (grad) grad->setZero(m.n_vertices());
  for (int t = 0; t < m.n_triangles(); ++t) {
    const auto& tri = m.triangles[t];
    const double A = m.tri_area[t];
    for (int e = 0; e < 3; ++e) {
      const int i = tri[e], j = tri[(e + 1) % 3];
      const double zm = 0.5 * (z.v[i] + z.v[j]);
      double wm = 1.0;
      if (weight) wm = 0.5 * (weight->v[i] + weight->v[j]);
      D += A / 3.0 * wm * std::pow(std::abs(zm), p);
      if (grad && zm != 0.0) {
        const double d = A / 3.0 * wm * p * std::pow(std::abs(zm), p - 2.0) * zm * 0.5;
        (*grad)[i] += d;
        (*grad)[j] += d;
      }
    }
  }
  return D;
}

// curvature tensors of the mu-regularized p-Dirichlet energy
std::vector<TriTensor> dirichlet_tensors(const Mesh& m, const ScalarField& z, double p, double mu) {
  std::vector<TriTensor> W(m.n_triangles());
  for (int t = 0; t < m.n_triangles(); ++t) {
    const Vec2 g = field_gradient(z, t);
    const double s = norm2(g) + mu * mu;
    const double w0 = std::pow(s, 0.5 * (p - 2.0));
    const double w1 = (p - 2.0) * std::pow(s, 0.5 * p - 2.0);
    W[t] = {w0 + w1 * g.x * g.x, w1 * g.x * g.y, w0 + w1 * g.y * g.y};
  }
  return W;
}

EigenResult eigen_flow(const Mesh& m, double p, const ScalarField* weight, double tol, int max_iter) {
  if (!(p > 1.0)) throw std::invalid_argument("first_eigenpair: p must be > 1");
  if (weight) {
    if (weight->mesh != &m) throw std::invalid_argument("weighted eigenvalue: weight on wrong mesh");
    for (int i = 0; i < m.n_vertices(); ++i)
      if (!(weight->v[i] > 0.0)) throw std::invalid_argument("weighted eigenvalue: weight must be positive");
  }

  std::vector<char> fixed(m.is_boundary.begin(), m.is_boundary.end());
  const DofMap dofs(m, fixed);
  const double mu = p < 2.0 ? 1e-9 : 1e-12;

  // p = 2 stiffness: the exact inverse-step matrix for p = 2 and the
  // fallback preconditioner otherwise; factorized once
  std::vector<double> ones(m.n_triangles(), 1.0);
  SpMat K2 = assemble_free(m, dofs, scalar_tensors(ones), {}, 0.0);
  Eigen::SimplicialLDLT<SpMat> chol;
  chol.compute(K2);
  if (chol.info() != Eigen::Success)
    throw std::runtime_error("first_eigenpair: stiffness factorization failed");
  Eigen::SimplicialLDLT<SpMat> chol_newton;  // pattern shared with K2's
  bool newton_pattern = false;

  // positive start: distance-to-boundary bump
  EigenResult res;
  res.z = make_field(m, 0.0);
  for (int i = 0; i < m.n_vertices(); ++i) res.z.v[i] = m.boundary_dist[i];

  auto lp_normalize = [&](ScalarField& z) {
    const double D = weighted_lp(m, z, p, weight, nullptr);
    z.v /= std::pow(D, 1.0 / p);
  };
  lp_normalize(res.z);

  // One descent step of the normalized flow: the implicit (inverse-problem)
  // direction v - z with v = argmin (1/p) int |grad v|^p - lambda <w |z|^{p-2} z, v>,
  // followed by a quotient line search. For p = 2 the inner problem is one
  // back-substitution; otherwise a few damped Newton steps warm-started at z.
  auto inverse_step = [&](const ScalarField& z, double lambda, const Eigen::VectorXd& gD) {
    // linear functional: lambda/p * gD (gD already carries the factor p)
    const Eigen::VectorXd b = (lambda / p) * gD;
    ScalarField v = z;
    if (p == 2.0) {
      const Eigen::VectorXd x = chol.solve(dofs.gather(b));
      v.v.setZero();
      dofs.scatter_set(x, v.v);
      return v;
    }
    auto energy = [&](const ScalarField& f) {
      double E = p_dirichlet(m, f, p, nullptr) / p;
      for (int i = 0; i < m.n_vertices(); ++i)
        if (!m.is_boundary[i]) E -= b[i] * f.v[i];
      return E;
    };
    for (int it = 0; it < 40; ++it) {
      Eigen::VectorXd g;
      p_dirichlet(m, v, p, &g);
      g /= p;
      g -= b;
      for (int i = 0; i < m.n_vertices(); ++i)
        if (m.is_boundary[i]) g[i] = 0.0;
      const double gn = dofs.gather(g).norm();
      if (gn <= 1e-12 * (dofs.gather(b).norm() + 1.0)) break;
      SpMat H = assemble_free(m, dofs, dirichlet_tensors(m, v, p, mu), {}, 0.0);
      if (!newton_pattern) {
        chol_newton.analyzePattern(H);
        newton_pattern = true;
      }
      chol_newton.factorize(H);
      if (chol_newton.info() != Eigen::Success)
        throw std::runtime_error("first_eigenpair: inner factorization failed");
      const Eigen::VectorXd d = chol_newton.solve(-dofs.gather(g));
      const double E0 = energy(v);
      const double slope = dofs.gather(g).dot(d);
      double t = 1.0;
      bool ok = false;
      for (int ls = 0; ls < 40; ++ls) {
        ScalarField trial = v;
        Eigen::VectorXd vf = dofs.gather(v.v) + t * d;
        dofs.scatter_set(vf, trial.v);
        if (energy(trial) <= E0 + 1e-4 * t * slope) {
          v = trial;
          ok = true;
          break;
        }
        t *= 0.5;
      }
      if (!ok) break;
    }
    return v;
  };

  Eigen::VectorXd gN, gD;
  double lambda = std::numeric_limits<double>::infinity();
  bool converged = false;
  for (int it = 0; it < max_iter; ++it) {
    const double N = p_dirichlet(m, res.z, p, &gN);
    const double D = weighted_lp(m, res.z, p, weight, &gD);
    lambda = N / D;
    res.rayleigh_history.push_back(lambda);

    // Euler-Lagrange residual of the quotient: gN - lambda gD on free vertices
    const Eigen::VectorXd r = dofs.gather(gN) - lambda * dofs.gather(gD);
    const double rel = r.norm() / (lambda * dofs.gather(gD).norm() + 1e-300);
    if (rel <= tol) {
      converged = true;
      break;
    }

    const ScalarField v = inverse_step(res.z, lambda, gD);
    double t = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      ScalarField trial = res.z;
      trial.v = (1.0 - t) * res.z.v + t * v.v;
      const double Nt = p_dirichlet(m, trial, p, nullptr);
      const double Dt = weighted_lp(m, trial, p, weight, nullptr);
      if (Dt > 0.0 && Nt / Dt < lambda) {
        res.z = trial;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      // quotient is at a numerical stationary point finer than the line
      // search can resolve; accept if the residual is within a laxer bound
      if (rel <= 1e3 * tol) {
        converged = true;
        break;
      }
      throw std::runtime_error("first_eigenpair: line search stalled at relative residual " +
                               fmt_g17(rel) + " after " + std::to_string(it) + " iterations");
    }
    if (res.z.v.minCoeff() < 0.0)
      for (int i = 0; i < m.n_vertices(); ++i) res.z.v[i] = std::abs(res.z.v[i]);
    lp_normalize(res.z);
  }
  if (!converged)
    throw std::runtime_error("first_eigenpair: no convergence in " + std::to_string(max_iter) +
                             " iterations (" + std::to_string(res.rayleigh_history.size()) + " steps recorded)");

  res.lambda1 = lambda;
  const double zmax = res.z.v.cwiseAbs().maxCoeff();
  res.z.v /= zmax;  // ||z||_inf = 1
  return res;
}

}  // namespace

EigenResult first_eigenpair(const Mesh& m, double p, double tol, int max_iter) {
  return eigen_flow(m, p, nullptr, tol, max_iter);
}

double weighted_first_eigenvalue(const Mesh& m, double p, const ScalarField& weight, double tol,
                                 int max_iter) {
  return eigen_flow(m, p, &weight, tol, max_iter).lambda1;
}

double eps_threshold(double p, double q, double lambda_fa) {
  if (p < q - 1e-12) throw std::invalid_argument("eps_threshold: requires p >= q");
  if (p > q + 1e-12) return std::numeric_limits<double>::infinity();
  if (!(lambda_fa > 0.0)) throw std::invalid_argument("eps_threshold: lambda_fa must be positive");
  return 1.0 / lambda_fa;
}

}  // namespace flatcore
