#include "flatcore/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "flatcore/assembly.hpp"

namespace flatcore {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// |g|^{p-2} g with zero-base convention
Vec2 p_vec(const Vec2& g, double p) {
  const double n = norm(g);
  if (n == 0.0) return {0.0, 0.0};
  return std::pow(n, p - 2.0) * g;
}

// action of the p-stiffness operator: out_i = sum_T A |grad u|^{p-2} grad u . grad phi_i
Eigen::VectorXd p_stiffness_action(const Mesh& m, const ScalarField& u, double p) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(m.n_vertices());
  for (int t = 0; t < m.n_triangles(); ++t) {
    const Vec2 flux = p_vec(field_gradient(u, t), p);
    const auto& tri = m.triangles[t];
    for (int k = 0; k < 3; ++k) out[tri[k]] += m.tri_area[t] * dot(flux, m.grad_hat[t][k]);
  }
  return out;
}

// reaction vector <u^{q-1} f_sigma(a-u), phi_i>, lumped vertex quadrature.
// Lumping keeps the shifted Picard map componentwise monotone (the reaction
// couples only the diagonal), which is what makes the descent from u = a an
// honest discrete monotone iteration; a midpoint rule would introduce
// negative off-diagonal couplings and break it.
Eigen::VectorXd reaction_vector(const Mesh& m, const Eigen::VectorXd& u, const Eigen::VectorXd& a,
                                double q, const Nonlinearity& f, double sigma) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(m.n_vertices());
  for (int i = 0; i < m.n_vertices(); ++i) {
    if (u[i] <= 0.0) continue;
    out[i] = m.lumped_mass[i] * std::pow(u[i], q - 1.0) * f.smoothed(a[i] - u[i], sigma);
  }
  return out;
}

// mass-scaled max norm over free vertices
double scaled_max(const Mesh& m, const Eigen::VectorXd& r) {
  double worst = 0.0;
  for (int i = 0; i < m.n_vertices(); ++i) {
    if (m.is_boundary[i]) continue;
    worst = std::max(worst, std::abs(r[i]) / m.lumped_mass[i]);
  }
  return worst;
}


std::vector<TriTensor> regularized_tensors(const Mesh& m, const ScalarField& u,
                                           const ScalarField* shift_field, double p, double mu) {
  std::vector<TriTensor> W(m.n_triangles());
  for (int t = 0; t < m.n_triangles(); ++t) {
    Vec2 g = field_gradient(u, t);
    if (shift_field) g = g - field_gradient(*shift_field, t);
    const double s = norm2(g) + mu * mu;
    if (s == 0.0) {  // p < 2 with mu = 0 never reaches here in practice (mu > 0 defaults)
      W[t] = {0.0, 0.0, 0.0};
      continue;
    }
    const double w0 = std::pow(s, 0.5 * (p - 2.0));
    const double w1 = (p - 2.0) * std::pow(s, 0.5 * p - 2.0);
    W[t] = {w0 + w1 * g.x * g.x, w1 * g.x * g.y, w0 + w1 * g.y * g.y};
  }
  return W;
}

// Solves one shifted-Picard step: minimize
//   (eps/p) int (|grad u|^2 + mu^2)^{p/2} + (shift/2) <u,u>_lumped - <b, u>
// over free vertices, u = 0 on the boundary. p = 2 is a single linear solve
// with a matrix that is constant per (shift, eps), so the factorization is
// cached by the caller.
struct InnerSolver {
  const Mesh& m;
  const DofMap& dofs;
  double eps, p, mu, shift;
  Eigen::SimplicialLDLT<SpMat> chol;
  bool factorized = false;
  bool pattern_ready = false;
  int linear_solves = 0;

  InnerSolver(const Mesh& m_, const DofMap& d_, double eps_, double p_, double mu_, double shift_)
      : m(m_), dofs(d_), eps(eps_), p(p_), mu(mu_), shift(shift_) {}

  void factorize(const SpMat& K) {
    if (!pattern_ready) {
      chol.analyzePattern(K);
      pattern_ready = true;
    }
    chol.factorize(K);
    if (chol.info() != Eigen::Success) throw std::runtime_error("inner solver: factorization failed");
  }

  double energy(const ScalarField& u, const Eigen::VectorXd& b) const {
    double E = 0.0;
    for (int t = 0; t < m.n_triangles(); ++t)
      E += m.tri_area[t] * std::pow(norm2(field_gradient(u, t)) + mu * mu, 0.5 * p);
    E *= eps / p;
    for (int i = 0; i < m.n_vertices(); ++i) {
      if (m.is_boundary[i]) continue;
      E += 0.5 * shift * m.lumped_mass[i] * u.v[i] * u.v[i] - b[i] * u.v[i];
    }
    return E;
  }

  // full-size gradient of the inner energy (free rows meaningful)
  Eigen::VectorXd gradient(const ScalarField& u, const Eigen::VectorXd& b) const {
    Eigen::VectorXd g = eps * p_stiffness_action_mu(u);
    for (int i = 0; i < m.n_vertices(); ++i) g[i] += shift * m.lumped_mass[i] * u.v[i] - b[i];
    return g;
  }

  Eigen::VectorXd p_stiffness_action_mu(const ScalarField& u) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(m.n_vertices());
    for (int t = 0; t < m.n_triangles(); ++t) {
      const Vec2 g = field_gradient(u, t);
      const Vec2 flux = std::pow(norm2(g) + mu * mu, 0.5 * (p - 2.0)) * g;
      const auto& tri = m.triangles[t];
      for (int k = 0; k < 3; ++k) out[tri[k]] += m.tri_area[t] * dot(flux, m.grad_hat[t][k]);
    }
    return out;
  }

  // warm started at u (modified in place); returns false on line-search failure
  bool solve(ScalarField& u, const Eigen::VectorXd& b, double grad_tol, int max_newton) {
    for (int i = 0; i < m.n_vertices(); ++i)
      if (m.is_boundary[i]) u.v[i] = 0.0;
    if (p == 2.0) {
      if (!factorized) {
        std::vector<double> ones(m.n_triangles(), 1.0);
        SpMat K = assemble_free(m, dofs, scalar_tensors(ones), {}, 0.0);
        K = eps * K;
        SpMat M = assemble_free(m, dofs, {}, {}, 1.0);
        K += shift * M;
        factorize(K);
        factorized = true;
      }
      const Eigen::VectorXd x = chol.solve(dofs.gather(b));
      ++linear_solves;
      u.v.setZero();
      dofs.scatter_set(x, u.v);
      return true;
    }
    for (int it = 0; it < max_newton; ++it) {
      const Eigen::VectorXd g = gradient(u, b);
      if (scaled_max(m, g) <= grad_tol) return true;
      SpMat H = assemble_free(m, dofs, regularized_tensors(m, u, nullptr, p, mu), {}, 0.0);
      H = eps * H;
      SpMat M = assemble_free(m, dofs, {}, {}, 1.0);
      H += shift * M;
      factorize(H);
      const Eigen::VectorXd d = chol.solve(-dofs.gather(g));
      ++linear_solves;
      const double E0 = energy(u, b);
      const double slope = dofs.gather(g).dot(d);  // < 0
      double t = 1.0;
      bool ok = false;
      for (int ls = 0; ls < 40; ++ls) {
        ScalarField trial = u;
        Eigen::VectorXd uf = dofs.gather(u.v) + t * d;
        dofs.scatter_set(uf, trial.v);
        if (energy(trial, b) <= E0 + 1e-4 * t * slope) {
          u = trial;
          ok = true;
          break;
        }
        t *= 0.5;
      }
      // energy comparisons bottom out in roundoff near the minimum; accept
      // the iterate if the gradient is at least small
      if (!ok) return scaled_max(m, gradient(u, b)) <= 100.0 * grad_tol;
    }
    return scaled_max(m, gradient(u, b)) <= 100.0 * grad_tol;
  }
};

}  // namespace

double picard_shift_bound(double a_max, double q, const Nonlinearity& f, double sigma) {
  // The shift must dominate both sup f' (contraction) and sup f(v)/v (so the
  // shifted right-hand side is still monotone at v = 0, which is what keeps
  // the iterates below a). For theta < 1 the secant sup exceeds the slope sup.
  double max_rate = 0.0;
  const double lo = 1e-14, hi = std::max(a_max, 1e-12);
  const int n = 400;
  for (int k = 0; k <= n; ++k) {
    const double v = lo * std::pow(hi / lo, static_cast<double>(k) / n);
    double fp;
    if (sigma == 0.0 && f.theta < 1.0)
      fp = f.C * f.theta * std::pow(v, f.theta - 1.0);  // unbounded as v->0; caller keeps sigma>0 then
    else
      fp = f.smoothed_deriv(v, sigma);
    max_rate = std::max({max_rate, fp, f.smoothed(v, sigma) / v});
  }
  return 1.05 * std::pow(a_max, q - 1.0) * max_rate + 1e-12;
}

namespace {

// One nonlinear relaxation sweep: each free row residual, as a function of
// its own vertex value with neighbors frozen, changes sign on [0, a_i] when
// a root exists there; bisection finds it exactly. Used as a fallback when
// the Newton direction stalls -- pointwise Newton on the singular reaction
// v^theta stops contracting as theta -> 1/2, while bisection does not care.
void nonlinear_gs_sweep(const Mesh& m, const std::vector<std::vector<int>>& v2t, ScalarField& u,
                        const ProblemSpec& spec, double sigma) {
  const double p = spec.exps.p, q = spec.exps.q;
  for (int i = 0; i < m.n_vertices(); ++i) {
    if (m.is_boundary[i]) continue;
    const auto row = [&](double ui) {
      u.v[i] = ui;
      double r = 0.0;
      for (const int t : v2t[i]) {
        const auto& tri = m.triangles[t];
        const int k = tri[0] == i ? 0 : tri[1] == i ? 1 : 2;
        r += m.tri_area[t] * dot(p_vec(field_gradient(u, t), p), m.grad_hat[t][k]);
      }
      r *= spec.eps;
      if (ui > 0.0)
        r -= m.lumped_mass[i] * std::pow(ui, q - 1.0) * spec.f.smoothed(spec.a.v[i] - ui, sigma);
      return r;
    };
    double lo = 0.0, hi = spec.a.v[i];
    if (row(lo) >= 0.0) {
      u.v[i] = 0.0;
      continue;
    }
    if (row(hi) <= 0.0) {
      u.v[i] = hi;
      continue;
    }
    for (int b = 0; b < 64; ++b) {
      const double mid = 0.5 * (lo + hi);
      if (row(mid) <= 0.0)
        lo = mid;
      else
        hi = mid;
    }
    u.v[i] = 0.5 * (lo + hi);
  }
}

}  // namespace

void ProblemSpec::validate() const {
  if (!mesh) throw std::invalid_argument("problem spec: missing mesh");
  exps.validate();
  if (!(eps > 0.0)) throw std::invalid_argument("problem spec: eps must be > 0");
  if (a.mesh != mesh) throw std::invalid_argument("problem spec: coefficient field on wrong mesh");
  if (a.v.minCoeff() <= 0.0) throw std::invalid_argument("problem spec: (A1) requires min a > 0");
  if (!degenerate && norm(slope) == 0.0)
    throw std::invalid_argument("problem spec: (A3) requires |grad a| > 0 outside degenerate mode");
  if (degenerate && norm(slope) != 0.0)
    throw std::invalid_argument("problem spec: degenerate mode requires constant a");
}

ProblemSpec make_problem(const Mesh& m, double a0, Vec2 slope, const Exponents& exps,
                         double f_scale, double eps, bool degenerate) {
  ProblemSpec spec;
  spec.mesh = &m;
  spec.a0 = a0;
  spec.slope = slope;
  spec.a = make_field(m, [&](Vec2 x) { return a0 + dot(slope, x); });
  spec.exps = exps;
  spec.f = Nonlinearity{exps.theta, f_scale};
  spec.eps = eps;
  spec.degenerate = degenerate;
  spec.validate();
  return spec;
}

void SolveConfig::validate() const {
  if (!(newton_tol > 0.0)) throw std::invalid_argument("solve config: tolerance must be > 0");
  if (max_outer < 1) throw std::invalid_argument("solve config: max_outer must be >= 1");
  for (size_t k = 1; k < schedule.size(); ++k)
    if (schedule[k].first > schedule[k - 1].first)
      throw std::invalid_argument("solve config: continuation schedule must have nonincreasing sigma");
}

std::vector<std::pair<double, double>> SolveConfig::effective_schedule(const Exponents& exps) const {
  if (!schedule.empty()) return schedule;
  const double mu = exps.p < 2.0 ? 1e-6 : 1e-8;
  if (exps.theta < 1.0) {
    // decreasing smoothing, ending on the exact (unsmoothed) equation
    return {{1e-2, mu}, {1e-3, mu}, {1e-4, mu}, {1e-5, mu}, {0.0, mu}};
  }
  return {{0.0, mu}};
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iterations: return "max-iterations";
    case SolveStatus::line_search_failure: return "line-search-failure";
    case SolveStatus::no_solution_regime: return "no-solution-regime";
  }
  return "unknown";
}

std::string SolveReport::to_log() const {
  std::ostringstream os;
  os << "status=" << to_string(status) << " outer=" << outer_iterations
     << " linear_solves=" << linear_solves << " residual=" << residual_max
     << " shift=" << shift_used << " monotone_ok=" << (monotone_ok ? 1 : 0)
     << " monotone_violation=" << monotone_violation << " wall_s=" << wall_seconds;
  if (!message.empty()) os << " message=\"" << message << "\"";
  return os.str();
}

std::pair<ScalarField, SolveReport> solve_main(const ProblemSpec& spec, const SolveConfig& cfg) {
  const auto t0 = Clock::now();
  spec.validate();
  cfg.validate();
  const Mesh& m = *spec.mesh;
  const double a_max = spec.a.v.maxCoeff();
  const double p = spec.exps.p, q = spec.exps.q;

  SolveReport rep;

  // existence threshold guard for p = q (5% band below eps_a)
  if (std::abs(p - q) < 1e-12) {
    double ea;
    if (spec.eps_a) {
      ea = *spec.eps_a;
    } else {
      ScalarField fa = make_field(m, 0.0);
      for (int i = 0; i < m.n_vertices(); ++i) fa.v[i] = spec.f(spec.a.v[i]);
      const double lfa = weighted_first_eigenvalue(m, p, fa);
      ea = eps_threshold(p, q, lfa);
    }
    if (spec.eps >= 0.95 * ea) {
      rep.status = SolveStatus::no_solution_regime;
      std::ostringstream os;
      os << "eps=" << spec.eps << " is not below 0.95*eps_a (eps_a=" << ea << "); no solution regime";
      rep.message = os.str();
      rep.wall_seconds = seconds_since(t0);
      return {make_field(m, 0.0), rep};
    }
  }

  std::vector<char> fixed(m.is_boundary.begin(), m.is_boundary.end());
  const DofMap dofs(m, fixed);

  ScalarField u = spec.a;  // supersolution start
  for (int i = 0; i < m.n_vertices(); ++i)
    if (m.is_boundary[i]) u.v[i] = 0.0;
  const auto schedule = cfg.effective_schedule(spec.exps);
  const double f_scale = spec.f.C * std::pow(a_max, q - 1.0);
  const double v_floor = 1e-13 * a_max;

  auto residual_sigma = [&](const ScalarField& uu, double sigma) {
    return Eigen::VectorXd(spec.eps * p_stiffness_action(m, uu, p) -
                           reaction_vector(m, uu.v, spec.a.v, q, spec.f, sigma));
  };
  // Residual rows counted in the box-constrained sense: at a vertex pinned to
  // a bound only the infeasible sign matters -- at u_i = a_i a nonpositive row
  // is the contact multiplier, not an error. (For p != 2 the unconstrained P1
  // system can demand u > a at core-interface rows by a mesh-dependent amount,
  // so the plain equality residual there vanishes only under mesh refinement,
  // never with iteration.)
  auto counted_row = [&](const ScalarField& uu, const Eigen::VectorXd& r, int i) {
    if (uu.v[i] >= spec.a.v[i]) return std::max(r[i], 0.0);
    if (uu.v[i] <= 0.0) return std::min(r[i], 0.0);
    return r[i];
  };
  auto scaled_res_max = [&](const ScalarField& uu, const Eigen::VectorXd& r) {
    double worst = 0.0;
    for (int i = 0; i < m.n_vertices(); ++i)
      if (!m.is_boundary[i])
        worst = std::max(worst, std::abs(counted_row(uu, r, i)) / m.lumped_mass[i]);
    return worst;
  };
  auto scaled_res_two_norm = [&](const ScalarField& uu, const Eigen::VectorXd& r) {
    double s = 0.0;
    for (int i = 0; i < m.n_vertices(); ++i)
      if (!m.is_boundary[i]) {
        const double x = counted_row(uu, r, i) / m.lumped_mass[i];
        s += x * x;
      }
    return std::sqrt(s);
  };
  auto clamp_box = [&](ScalarField& f) {
    for (int i = 0; i < m.n_vertices(); ++i) {
      if (m.is_boundary[i])
        f.v[i] = 0.0;
      else
        f.v[i] = std::min(std::max(f.v[i], 0.0), spec.a.v[i]);
    }
  };

  bool line_search_failed = false;
  std::string failure_note;
  Eigen::SparseLU<SpMat> newton_lu;
  bool newton_pattern = false;
  int stage_index = 0;
  std::vector<std::vector<int>> v2t;  // vertex -> adjacent triangles, built on first stall

  for (const auto& [sigma, mu] : schedule) {
    const bool final_stage = sigma == 0.0;
    // no point converging a stage far below its own smoothing bias
    const double stage_tol =
        final_stage ? cfg.newton_tol
                    : std::max(cfg.newton_tol, 0.05 * f_scale * std::pow(sigma, spec.f.theta));

    // ---- monotone Picard descent from the supersolution (first stage) ----
    // Later stages are warm-started refinements without an ordering claim;
    // they go straight to Newton.
    const bool shiftable = sigma > 0.0 || spec.f.theta >= 1.0;
    if (stage_index == 0 && shiftable && cfg.picard_steps > 0) {
      const double shift =
          cfg.picard_shift > 0.0 ? cfg.picard_shift : picard_shift_bound(a_max, q, spec.f, sigma);
      rep.shift_used = shift;
      InnerSolver inner(m, dofs, spec.eps, p, mu, shift);
      for (int k = 0; k < cfg.picard_steps; ++k) {
        ++rep.outer_iterations;
        Eigen::VectorXd b = reaction_vector(m, u.v, spec.a.v, q, spec.f, sigma);
        for (int i = 0; i < m.n_vertices(); ++i) b[i] += shift * m.lumped_mass[i] * u.v[i];
        ScalarField u_new = u;
        if (!inner.solve(u_new, b, 0.1 * stage_tol, cfg.max_inner_newton)) {
          // the safeguard phase could not tighten further; Newton takes over
          if (cfg.verbose) std::cerr << "  [picard sigma=" << sigma << "] k=" << k << " stalled\n";
          break;
        }
        const double inc = (u_new.v - u.v).maxCoeff();
        rep.monotone_violation = std::max(rep.monotone_violation, inc);
        u = u_new;
        const double res_k = scaled_res_max(u, residual_sigma(u, sigma));
        if (cfg.verbose)
          std::cerr << "  [picard sigma=" << sigma << "] k=" << k << " res=" << res_k
                    << " inc=" << inc << "\n";
        if (res_k <= stage_tol) break;
      }
      rep.linear_solves += inner.linear_solves;
      if (line_search_failed) break;
    }

    // ---- semismooth Newton on the stage equation ----
    // Zeroth-order coefficient c = d/du [-u^{q-1} f_sigma(a-u)]. It is
    // negative away from the core (logistic-type linearization), so the
    // Jacobian is symmetric indefinite and goes through sparse LU. In the
    // unsmoothed stage f' blows up as the gap vanishes (theta < 1); |gap| is
    // floored there, which only stiffens the diagonal and pins contact
    // vertices. A Levenberg shift beta escalates on stalls.
    double beta = 0.0;
    for (int it = 0; it < cfg.max_inner_newton; ++it) {
      const Eigen::VectorXd r = residual_sigma(u, sigma);
      const double res_it = scaled_res_max(u, r);
      if (cfg.verbose)
        std::cerr << "  [newton sigma=" << sigma << "] it=" << it << " res=" << res_it
                  << " beta=" << beta << "\n";
      if (res_it <= stage_tol) break;
      ++rep.outer_iterations;

      Eigen::VectorXd cdiag = Eigen::VectorXd::Zero(m.n_vertices());
      for (int i = 0; i < m.n_vertices(); ++i) {
        if (m.is_boundary[i] || u.v[i] <= 0.0) continue;
        const double v = spec.a.v[i] - u.v[i];
        const double fv = spec.f.smoothed(v, sigma);
        double fpv;
        if (sigma == 0.0 && spec.f.theta < 1.0)
          fpv = spec.f.C * spec.f.theta *
                std::pow(std::max(std::abs(v), v_floor), spec.f.theta - 1.0);
        else
          fpv = spec.f.smoothed_deriv(v, sigma);
        cdiag[i] = -(q - 1.0) * std::pow(u.v[i], q - 2.0) * fv + std::pow(u.v[i], q - 1.0) * fpv;
      }
      SpMat H = spec.eps *
                assemble_free(m, dofs, regularized_tensors(m, u, nullptr, p, mu), {}, 0.0);
      for (int k = 0; k < dofs.n_free; ++k) {
        const int i = dofs.free_to_full[k];
        H.coeffRef(k, k) += m.lumped_mass[i] * (cdiag[i] + beta);
      }
      if (!newton_pattern) {
        newton_lu.analyzePattern(H);
        newton_pattern = true;
      }
      newton_lu.factorize(H);
      if (newton_lu.info() != Eigen::Success) {
        // singular at this beta; bump the shift and retry on the next sweep
        beta = beta == 0.0 ? 1e-2 * f_scale / a_max : beta * 10.0;
        continue;
      }
      const Eigen::VectorXd rf = dofs.gather(r);
      const Eigen::VectorXd d = newton_lu.solve(-rf);
      ++rep.linear_solves;

      // directional derivative of the counted residual norm along d, using
      // J d = H d - beta M d = -r - beta M d; with large beta the step (and
      // the decrease the line search may demand) shrinks accordingly
      const double phi0 = scaled_res_two_norm(u, r);
      double slope = 0.0;
      for (int k = 0; k < dofs.n_free; ++k) {
        const int i = dofs.free_to_full[k];
        const double jd = -rf[k] - beta * m.lumped_mass[i] * d[k];
        slope += counted_row(u, r, i) * jd / (m.lumped_mass[i] * m.lumped_mass[i]);
      }
      slope /= std::max(phi0, 1e-300);

      double t_ls = 1.0;
      bool ok = false;
      for (int ls = 0; ls < 30; ++ls) {
        ScalarField trial = u;
        Eigen::VectorXd uf = dofs.gather(u.v) + t_ls * d;
        dofs.scatter_set(uf, trial.v);
        clamp_box(trial);
        if (scaled_res_two_norm(trial, residual_sigma(trial, sigma)) <=
            phi0 + 1e-4 * t_ls * slope) {
          u = trial;
          ok = true;
          break;
        }
        t_ls *= 0.5;
      }
      if (ok) {
        beta *= 0.3;
        if (beta < 1e-14) beta = 0.0;
        continue;
      }
      // Newton stalled: try one exact row-wise relaxation sweep before
      // escalating the Levenberg shift
      if (v2t.empty()) {
        v2t.resize(m.n_vertices());
        for (int t = 0; t < m.n_triangles(); ++t)
          for (int k = 0; k < 3; ++k) v2t[m.triangles[t][k]].push_back(t);
      }
      ScalarField sweep = u;
      nonlinear_gs_sweep(m, v2t, sweep, spec, sigma);
      if (scaled_res_two_norm(sweep, residual_sigma(sweep, sigma)) < phi0) {
        if (cfg.verbose) std::cerr << "  [newton sigma=" << sigma << "] relaxation sweep\n";
        u = sweep;
        beta *= 0.3;
        if (beta < 1e-14) beta = 0.0;
        continue;
      }
      beta = beta == 0.0 ? 1e-2 * f_scale / a_max : beta * 10.0;
      if (beta > 1e8 * std::max(1.0, f_scale / a_max)) {
        line_search_failed = true;
        failure_note = "stage Newton line search failed (sigma=" + std::to_string(sigma) + ")";
        break;
      }
    }
    if (line_search_failed) break;
    ++stage_index;
  }

  rep.monotone_ok =
      rep.monotone_violation <= 1e-8 * a_max && u.v.minCoeff() >= -1e-10 * a_max;

  // exact-contact cleanup: snap vertices with negligible gap onto a, kept
  // only if the recomputed residual stays within tolerance
  {
    rep.residual_max = scaled_res_max(u, residual_sigma(u, 0.0));
    ScalarField snapped = u;
    bool any = false;
    for (int i = 0; i < m.n_vertices(); ++i)
      if (!m.is_boundary[i] && spec.a.v[i] - u.v[i] <= 1e-12 * a_max && u.v[i] != spec.a.v[i]) {
        snapped.v[i] = spec.a.v[i];
        any = true;
      }
    if (any) {
      const double rs = scaled_res_max(snapped, residual_sigma(snapped, 0.0));
      if (rs <= std::max(rep.residual_max, cfg.newton_tol)) {
        u = snapped;
        rep.residual_max = rs;
      }
    }
  }

  if (rep.residual_max <= cfg.newton_tol) {
    rep.status = SolveStatus::converged;
  } else if (line_search_failed) {
    rep.status = SolveStatus::line_search_failure;
    rep.message = failure_note + " at residual " + std::to_string(rep.residual_max);
  } else {
    rep.status = SolveStatus::max_iterations;
    rep.message = "residual " + std::to_string(rep.residual_max) + " after iteration budget";
  }
  rep.wall_seconds = seconds_since(t0);
  return {u, rep};
}

std::pair<ScalarField, SolveReport> solve_auxiliary(const AuxiliarySpec& spec,
                                                    const ScalarField& a_tilde,
                                                    const SolveConfig& cfg) {
  const auto t0 = Clock::now();
  spec.validate();
  cfg.validate();
  const Mesh& m = *a_tilde.mesh;
  SolveReport rep;

  std::vector<char> fixed(m.is_boundary.begin(), m.is_boundary.end());
  const DofMap dofs(m, fixed);

  const double p = spec.exps.p, th = spec.exps.theta;
  // continuation down to the spec's sigma (J is evaluated with exactly that
  // smoothing; theta >= 1 needs none)
  std::vector<double> sigmas;
  if (th < 1.0) {
    for (double s : {1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8})
      if (s > spec.sigma * (1.0 + 1e-12)) sigmas.push_back(s);
  }
  sigmas.push_back(spec.sigma);
  if (th < 1.0 && spec.sigma <= 0.0)
    throw std::invalid_argument("solve_auxiliary: sigma > 0 required for theta < 1");

  ScalarField w = make_field(m, spec.delta);  // boundary value everywhere, feasible start
  const double eps_aux = 1.0;  // (eq:lcftw) carries no eps after scaling; J is evaluated at eps=1
  Nonlinearity habs{th, 1.0}; // curvature helper for the absorption term

  Eigen::SimplicialLDLT<SpMat> chol;
  bool pattern_ready = false;

  for (double sigma : sigmas) {
    AuxiliarySpec stage = spec;
    stage.sigma = sigma;
    const bool final_stage = sigma == spec.sigma;
    const double stage_tol = final_stage ? cfg.newton_tol : std::max(cfg.newton_tol, 1e-2 * spec.Lambda * std::pow(sigma, th));

    for (int it = 0; it < cfg.max_outer; ++it) {
      const Eigen::VectorXd g = grad_J(w, a_tilde, stage, eps_aux).v;
      const double gnorm = scaled_max(m, g);
      if (final_stage) rep.residual_max = gnorm;
      if (gnorm <= stage_tol) break;
      ++rep.outer_iterations;

      std::vector<std::array<double, 3>> c(m.n_triangles());
      for (int t = 0; t < m.n_triangles(); ++t) {
        const auto& tri = m.triangles[t];
        for (int e = 0; e < 3; ++e) {
          const double wm = 0.5 * (w.v[tri[e]] + w.v[tri[(e + 1) % 3]]);
          double cc;
          if (sigma > 0.0) {
            cc = (1.0 + th) * habs.smoothed_deriv(wm, sigma);
          } else {
            cc = wm == 0.0 ? 0.0 : (1.0 + th) * th * std::pow(std::abs(wm), th - 1.0);
          }
          c[t][e] = spec.Lambda * cc;
        }
      }
      SpMat Kw = assemble_free(m, dofs, regularized_tensors(m, w, &a_tilde, p, spec.mu), {}, 0.0);
      SpMat Mc = assemble_free(m, dofs, {}, c, 0.0);
      SpMat H = eps_aux * Kw + Mc;
      if (!pattern_ready) {
        chol.analyzePattern(H);
        pattern_ready = true;
      }
      chol.factorize(H);
      if (chol.info() != Eigen::Success)
        throw std::runtime_error("solve_auxiliary: Hessian factorization failed");
      const Eigen::VectorXd d = chol.solve(-dofs.gather(g));
      ++rep.linear_solves;

      const double J0 = energy_J(w, a_tilde, stage, eps_aux);
      if (final_stage) rep.energy_history.push_back(J0);
      const double slope = dofs.gather(g).dot(d);
      double t = 1.0;
      bool ok = false;
      for (int ls = 0; ls < 50; ++ls) {
        ScalarField trial = w;
        Eigen::VectorXd wf = dofs.gather(w.v) + t * d;
        dofs.scatter_set(wf, trial.v);
        if (energy_J(trial, a_tilde, stage, eps_aux) <= J0 + 1e-4 * t * slope) {
          w = trial;
          ok = true;
          break;
        }
        t *= 0.5;
      }
      if (!ok) {
        rep.status = SolveStatus::line_search_failure;
        rep.message = "auxiliary line search failed at |grad J| = " + std::to_string(gnorm);
        rep.wall_seconds = seconds_since(t0);
        return {w, rep};
      }
    }
  }
  rep.energy_history.push_back(energy_J(w, a_tilde, spec, eps_aux));

  rep.status = rep.residual_max <= cfg.newton_tol ? SolveStatus::converged : SolveStatus::max_iterations;
  if (rep.status == SolveStatus::max_iterations)
    rep.message = "first-order optimality " + std::to_string(rep.residual_max) + " above tolerance";
  rep.wall_seconds = seconds_since(t0);
  return {w, rep};
}

ScalarField build_eigen_subsolution(const ProblemSpec& spec, Vec2 x0, double K, double delta,
                                    const EigenResult& unit_disk_pair) {
  spec.validate();
  const Mesh& m = *spec.mesh;
  const double R = K * std::pow(spec.eps, 1.0 / spec.exps.p);

  // ball must sit inside the domain
  double d0 = std::numeric_limits<double>::infinity();
  for (const auto& e : m.boundary_edges)
    d0 = std::min(d0, dist_point_segment(x0, m.vertices[e[0]], m.vertices[e[1]]));
  if (R > d0) throw std::invalid_argument("build_eigen_subsolution: ball B(x0, K eps^{1/p}) not inside the domain");

  const double a_x0 = spec.a0 + dot(spec.slope, x0);
  if (!(delta < a_x0)) throw std::invalid_argument("build_eigen_subsolution: requires delta < a(x0)");

  ScalarField out = make_field(m, 0.0);
  for (int i = 0; i < m.n_vertices(); ++i) {
    const Vec2 y = (m.vertices[i] - x0) * (1.0 / R);
    if (norm(y) >= 1.0 - 1e-9) continue;
    out.v[i] = (a_x0 - delta) * eval_at(unit_disk_pair.z, y);
  }
  return out;
}

double subsolution_K(const ProblemSpec& spec, double delta, double lambda1_unit_disk) {
  if (!(delta > 0.0)) throw std::invalid_argument("subsolution_K: delta must be > 0");
  const double a_max = spec.a.v.maxCoeff();
  const double sigma_f = spec.f(0.5 * delta);
  return std::pow(lambda1_unit_disk * std::pow(a_max, spec.exps.p - spec.exps.q) / sigma_f,
                  1.0 / spec.exps.p);
}

namespace {

SideCheckReport side_check(const ScalarField& u, const ProblemSpec& spec, double tol, bool super) {
  const Mesh& m = *spec.mesh;
  ScalarField r = residual_main(u, spec.a, spec.exps, spec.f, spec.eps);
  SideCheckReport rep;
  rep.tol = tol;
  double worst = 0.0;  // most violating signed value
  for (int i = 0; i < m.n_vertices(); ++i) {
    if (m.is_boundary[i]) continue;
    const double s = r.v[i] / m.lumped_mass[i];
    if (super)
      worst = std::min(worst, s);  // need s >= -tol
    else
      worst = std::max(worst, s);  // need s <= +tol
  }
  rep.worst = worst;
  for (int i = 0; i < m.n_vertices(); ++i)
    if (m.is_boundary[i]) {
      if (super && u.v[i] < -1e-14) rep.boundary_ok = false;
      if (!super && u.v[i] > 1e-14) rep.boundary_ok = false;
    }
  rep.pass = rep.boundary_ok && (super ? worst >= -tol : worst <= tol);
  return rep;
}

}  // namespace

SideCheckReport check_supersolution(const ScalarField& u, const ProblemSpec& spec, double tol) {
  return side_check(u, spec, tol, true);
}

SideCheckReport check_subsolution(const ScalarField& u, const ProblemSpec& spec, double tol) {
  return side_check(u, spec, tol, false);
}

const char* to_string(ComparisonOutcome o) {
  switch (o) {
    case ComparisonOutcome::ordered: return "ordered";
    case ComparisonOutcome::not_ordered: return "not-ordered";
    case ComparisonOutcome::inconclusive: return "inconclusive";
  }
  return "unknown";
}

ComparisonOutcome comparison_check(const ScalarField& u, const ScalarField& v,
                                   const std::function<double(double)>& g, const ScalarField& a,
                                   double eps, double p, double cert_tol) {
  if (u.mesh != v.mesh || u.mesh != a.mesh)
    throw std::invalid_argument("comparison_check: fields on different meshes");
  const Mesh& m = *u.mesh;

  // hypothesis: g nondecreasing over the sampled value range
  {
    const double lo = std::min(u.v.minCoeff(), v.v.minCoeff());
    const double hi = std::max(u.v.maxCoeff(), v.v.maxCoeff());
    const int n = 2048;
    double prev = g(lo);
    for (int k = 1; k <= n; ++k) {
      const double cur = g(lo + (hi - lo) * k / n);
      if (cur < prev - 1e-12 * (std::abs(cur) + std::abs(prev) + 1.0))
        return ComparisonOutcome::inconclusive;
      prev = cur;
    }
  }

  // hypothesis: boundary ordering
  for (int i = 0; i < m.n_vertices(); ++i)
    if (m.is_boundary[i] && u.v[i] > v.v[i] + cert_tol) return ComparisonOutcome::inconclusive;

  // hypothesis: weak residual ordering, R(u) <= R(v) + tol (mass-scaled)
  auto weak_residual = [&](const ScalarField& f) {
    Eigen::VectorXd r = Eigen::VectorXd::Zero(m.n_vertices());
    for (int t = 0; t < m.n_triangles(); ++t) {
      const Vec2 flux = eps * phi_p(field_gradient(f, t), field_gradient(a, t), p);
      const auto& tri = m.triangles[t];
      for (int k = 0; k < 3; ++k) r[tri[k]] += m.tri_area[t] * dot(flux, m.grad_hat[t][k]);
      for (int e = 0; e < 3; ++e) {
        const int i = tri[e], j = tri[(e + 1) % 3];
        const double fm = 0.5 * (f.v[i] + f.v[j]);
        const double wq = m.tri_area[t] / 3.0 * g(fm) * 0.5;
        r[i] += wq;
        r[j] += wq;
      }
    }
    return r;
  };
  const Eigen::VectorXd ru = weak_residual(u), rv = weak_residual(v);
  for (int i = 0; i < m.n_vertices(); ++i) {
    if (m.is_boundary[i]) continue;
    if (ru[i] > rv[i] + cert_tol * m.lumped_mass[i]) return ComparisonOutcome::inconclusive;
  }

  // conclusion
  for (int i = 0; i < m.n_vertices(); ++i)
    if (u.v[i] > v.v[i] + 1e-8) return ComparisonOutcome::not_ordered;
  return ComparisonOutcome::ordered;
}

double coincidence_tolerance(double a_sup_norm, double newton_tol) {
  return std::max(1e-6 * a_sup_norm, 10.0 * newton_tol);
}

}  // namespace flatcore
