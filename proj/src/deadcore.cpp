#include "flatcore/deadcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace flatcore {

CoincidenceReport detect_coincidence(const ScalarField& u, const ScalarField& a, double tau_c) {
  if (u.mesh != a.mesh) throw std::invalid_argument("detect_coincidence: fields on different meshes");
  const Mesh& m = *u.mesh;
  CoincidenceReport rep;
  rep.tau_c = tau_c;
  rep.mask.assign(m.n_vertices(), 0);
  rep.min_interior_gap = std::numeric_limits<double>::infinity();
  bool any_interior = false;
  for (int i = 0; i < m.n_vertices(); ++i) {
    const double gap = a.v[i] - u.v[i];
    if (gap <= tau_c) {
      rep.mask[i] = 1;
      rep.measure += m.lumped_mass[i];
    } else {
      rep.layer_width = std::max(rep.layer_width, m.boundary_dist[i]);
    }
    if (!m.is_boundary[i]) {
      rep.min_interior_gap = std::min(rep.min_interior_gap, gap);
      any_interior = true;
    }
  }
  if (!any_interior) rep.min_interior_gap = 0.0;
  return rep;
}

namespace {

ExponentPack pack_from(double theta, int N, double p, double s, bool degenerate) {
  ExponentPack e;
  e.theta = theta;
  e.N = N;
  e.p = p;
  e.p_star = p / (p - 1.0);
  e.degenerate = degenerate;
  const double d = N * s + 1.0;
  e.gamma = s / d;
  e.alpha = d;
  e.beta = (N * s + 1.0 / p) / d;
  e.tau = e.p_star * N * s + e.p_star;
  // the propositions' bookkeeping identities; they hold by construction and
  // guard against formula drift
  const double id1 = e.tau - (1.0 + e.p_star * e.alpha * e.beta);
  const double id2 = e.gamma - e.p_star * (1.0 - e.beta) * s;
  if (std::abs(id1) > 1e-12 || std::abs(id2) > 1e-12)
    throw std::logic_error("exponent identities violated");
  return e;
}

}  // namespace

ExponentPack exponents_nondegenerate(double theta, int N) {
  if (!(theta > 0.0) || theta >= 1.0)
    throw std::domain_error("exponents_nondegenerate: requires 0 < theta < 1");
  if (N < 2) throw std::domain_error("exponents_nondegenerate: requires N >= 2");
  const double s = 1.0 / (1.0 + theta) - 0.5;
  return pack_from(theta, N, 2.0, s, false);
}

ExponentPack exponents_degenerate(double theta, int N, double p) {
  if (!(p > 1.0)) throw std::domain_error("exponents_degenerate: requires p > 1");
  if (!(theta > 0.0) || theta >= p - 1.0)
    throw std::domain_error("exponents_degenerate: requires 0 < theta < p-1");
  if (N < 2) throw std::domain_error("exponents_degenerate: requires N >= 2");
  const double s = 1.0 / (1.0 + theta) - 1.0 / p;
  return pack_from(theta, N, p, s, true);
}

EnergyProfile energy_profile(const ScalarField& w, const ScalarField& a_tilde,
                             const AuxiliarySpec& spec, int n_rho) {
  if (w.mesh != a_tilde.mesh)
    throw std::invalid_argument("energy_profile: fields on different meshes");
  if (n_rho < 1) throw std::invalid_argument("energy_profile: n_rho must be >= 1");
  const Mesh& m = *w.mesh;
  const double p = spec.exps.p, th = spec.exps.theta;

  EnergyProfile prof;
  prof.rho.resize(n_rho);
  for (int k = 0; k < n_rho; ++k) prof.rho[k] = static_cast<double>(k + 1) / n_rho;
  prof.E_D.assign(n_rho, 0.0);
  prof.E_A.assign(n_rho, 0.0);
  prof.E_T.assign(n_rho, 0.0);

  for (int t = 0; t < m.n_triangles(); ++t) {
    const auto& tri = m.triangles[t];
    const Vec2 bary = (m.vertices[tri[0]] + m.vertices[tri[1]] + m.vertices[tri[2]]) * (1.0 / 3.0);
    const double r = norm(bary);
    // first grid radius containing this triangle
    int k0 = static_cast<int>(std::ceil(r * n_rho)) - 1;
    if (k0 < 0) k0 = 0;
    if (k0 >= n_rho) continue;

    const Vec2 gw = field_gradient(w, t);
    const Vec2 ga = field_gradient(a_tilde, t);
    const double ed = m.tri_area[t] * dot(phi_p(gw, ga, p), gw);
    double ea = 0.0;
    for (int e = 0; e < 3; ++e) {
      const double wm = 0.5 * (w.v[tri[e]] + w.v[tri[(e + 1) % 3]]);
      ea += m.tri_area[t] / 3.0 * std::pow(std::abs(wm), 1.0 + th);
    }
    prof.E_D[k0] += ed;
    prof.E_A[k0] += ea;
  }
  // prefix sums turn per-shell contributions into profiles over B_rho
  for (int k = 1; k < n_rho; ++k) {
    prof.E_D[k] += prof.E_D[k - 1];
    prof.E_A[k] += prof.E_A[k - 1];
  }
  for (int k = 0; k < n_rho; ++k) prof.E_T[k] = prof.E_D[k] + spec.Lambda * prof.E_A[k];
  return prof;
}

double deadcore_radius(const EnergyProfile& profile, double tol) {
  double r = 0.0;
  for (size_t k = 0; k < profile.rho.size(); ++k)
    if (profile.E_T[k] <= tol) r = std::max(r, profile.rho[k]);
  return r;
}

double deadcore_radius(const ScalarField& w, double tol) {
  const Mesh& m = *w.mesh;
  double r = 1.0;
  for (int i = 0; i < m.n_vertices(); ++i)
    if (w.v[i] > tol) r = std::min(r, norm(m.vertices[i]));
  return std::min(r, 1.0);
}

double predicted_radius(double delta, double M, double theta, double gamma, double tau) {
  const double x = M * std::pow(delta, (1.0 + theta) * gamma);
  if (!(x < 1.0))
    throw std::domain_error("predicted_radius: requires M delta^{(1+theta)gamma} < 1");
  return std::pow(1.0 - x, 1.0 / tau);
}

ScalingFit fit_scaling(const std::vector<std::pair<double, double>>& samples, double mesh_h) {
  ScalingFit fit;
  for (const auto& s : samples) {
    if (!(s.first > 0.0)) throw std::invalid_argument("fit_scaling: eps must be > 0");
    if (s.second > 2.0 * mesh_h) fit.samples.push_back(s);
  }
  if (fit.samples.size() < 4) throw std::runtime_error("fit_scaling: insufficient data (need >= 4 resolved samples)");
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& s : fit.samples) {
    lo = std::min(lo, s.first);
    hi = std::max(hi, s.first);
  }
  if (std::log10(hi / lo) < 1.5)
    throw std::runtime_error("fit_scaling: insufficient data (eps span below 1.5 decades)");

  const double n = static_cast<double>(fit.samples.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (const auto& s : fit.samples) {
    const double x = std::log(s.first), y = std::log(s.second);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
  }
  const double den = n * sxx - sx * sx;
  fit.slope = (n * sxy - sx * sy) / den;
  fit.intercept = (sy - fit.slope * sx) / n;
  const double ss_res = syy - sy * sy / n - fit.slope * (sxy - sx * sy / n);
  const double ss_tot = syy - sy * sy / n;
  fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

std::vector<DichotomyRow> dichotomy_experiment(const DichotomySetup& setup,
                                               const std::vector<double>& theta_list, double eps,
                                               const SolveConfig& cfg) {
  if (!setup.mesh) throw std::invalid_argument("dichotomy_experiment: missing mesh");
  const Mesh& m = *setup.mesh;

  // interior compact for the empty-set classification
  double diam = 0.0;
  for (const auto& e : m.boundary_edges)
    for (const auto& f : m.boundary_edges)
      diam = std::max(diam, norm(m.vertices[e[0]] - m.vertices[f[0]]));
  const double kappa = 0.1 * diam;

  std::vector<DichotomyRow> rows;
  for (double theta : theta_list) {
    DichotomyRow row;
    row.theta = theta;
    try {
      Exponents exps{setup.p, setup.q, theta};
      ProblemSpec spec = make_problem(m, setup.a0, setup.slope, exps, setup.f_scale, eps,
                                      setup.degenerate);
      auto [u, rep] = solve_main(spec, cfg);
      if (rep.status != SolveStatus::converged) {
        row.failed = true;
        row.message = rep.to_log();
        rows.push_back(row);
        continue;
      }
      const double tau_c = coincidence_tolerance(spec.a.v.maxCoeff(), cfg.newton_tol);
      const CoincidenceReport cr = detect_coincidence(u, spec.a, tau_c);
      row.measure = cr.measure;
      ScalarField gap = spec.a;
      gap.v = spec.a.v - u.v;
      const HarnackReport hr = harnack_positivity_check(gap, kappa, tau_c);
      row.min_interior_gap = hr.min_interior;
      row.empty = cr.measure == 0.0 && hr.pass;
    } catch (const std::exception& ex) {
      row.failed = true;
      row.message = ex.what();
    }
    rows.push_back(row);
  }
  return rows;
}

HarnackReport harnack_positivity_check(const ScalarField& v, double kappa, double tau_c) {
  const Mesh& m = *v.mesh;
  HarnackReport rep;
  rep.kappa = kappa;
  rep.min_interior = std::numeric_limits<double>::infinity();
  const std::vector<char> inner = interior_mask(m, kappa);
  bool any = false;
  for (int i = 0; i < m.n_vertices(); ++i)
    if (inner[i]) {
      rep.min_interior = std::min(rep.min_interior, v.v[i]);
      any = true;
    }
  if (!any) throw std::invalid_argument("harnack_positivity_check: Omega_kappa contains no vertex");
  rep.pass = rep.min_interior > tau_c;
  return rep;
}

}  // namespace flatcore
