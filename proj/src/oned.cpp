#include "flatcore/oned.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>

namespace flatcore {

void Oracle1DSpec::validate() const {
  exps.validate();
  if (!(ell > 0.0)) throw std::invalid_argument("oracle spec: ell must be > 0");
  if (!(a0 > 0.0)) throw std::invalid_argument("oracle spec: a0 must be > 0");
  if (!(a0 + b * ell > 0.0)) throw std::invalid_argument("oracle spec: a must stay positive on [0, ell]");
  if (!(eps > 0.0)) throw std::invalid_argument("oracle spec: eps must be > 0");
  if (n < 10000) throw std::invalid_argument("oracle spec: n must be >= 10^4");
}

namespace {

double phi_scalar(double d, double p, double mu) {
  const double s = d * d + mu * mu;
  if (s == 0.0) return 0.0;
  return std::pow(s, 0.5 * (p - 2.0)) * d;
}

double phi_scalar_deriv(double d, double p, double mu) {
  const double s = d * d + mu * mu;
  if (s == 0.0) return 0.0;
  return std::pow(s, 0.5 * (p - 2.0)) + (p - 2.0) * std::pow(s, 0.5 * p - 2.0) * d * d;
}

// in-place Thomas solve of the symmetric tridiagonal (diag, off) system
void thomas(std::vector<double>& diag, std::vector<double>& off, std::vector<double>& rhs) {
  const int n = static_cast<int>(diag.size());
  for (int i = 1; i < n; ++i) {
    const double w = off[i - 1] / diag[i - 1];
    diag[i] -= w * off[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  rhs[n - 1] /= diag[n - 1];
  for (int i = n - 2; i >= 0; --i) rhs[i] = (rhs[i] - off[i] * rhs[i + 1]) / diag[i];
}

struct Grid1D {
  const Oracle1DSpec& spec;
  double h;
  std::vector<double> x, a;

  explicit Grid1D(const Oracle1DSpec& s) : spec(s), h(s.ell / (s.n - 1)), x(s.n), a(s.n) {
    for (int j = 0; j < s.n; ++j) {
      x[j] = j * h;
      a[j] = s.a0 + s.b * x[j];
    }
  }

  // energy of the shifted inner problem (free nodes 1..n-2)
  double inner_energy(const std::vector<double>& u, const std::vector<double>& b, double shift,
                      double mu) const {
    const double p = spec.exps.p;
    double E = 0.0;
    for (int j = 0; j + 1 < spec.n; ++j) {
      const double d = (u[j + 1] - u[j]) / h;
      E += h * spec.eps / p * std::pow(d * d + mu * mu, 0.5 * p);
    }
    for (int j = 1; j + 1 < spec.n; ++j) E += h * (0.5 * shift * u[j] * u[j]) - b[j] * u[j];
    return E;
  }

  std::vector<double> inner_gradient(const std::vector<double>& u, const std::vector<double>& b,
                                     double shift, double mu) const {
    const double p = spec.exps.p;
    std::vector<double> g(spec.n, 0.0);
    for (int j = 1; j + 1 < spec.n; ++j) {
      const double dl = (u[j] - u[j - 1]) / h, dr = (u[j + 1] - u[j]) / h;
      g[j] = spec.eps * (phi_scalar(dl, p, mu) - phi_scalar(dr, p, mu)) + h * shift * u[j] - b[j];
    }
    return g;
  }

  // unsmoothed residual, node-mass h per entry
  std::vector<double> residual(const std::vector<double>& u, const Nonlinearity& f,
                               double sigma) const {
    const double p = spec.exps.p, q = spec.exps.q;
    std::vector<double> r(spec.n, 0.0);
    for (int j = 1; j + 1 < spec.n; ++j) {
      const double dl = (u[j] - u[j - 1]) / h, dr = (u[j + 1] - u[j]) / h;
      double reac = 0.0;
      if (u[j] > 0.0) reac = std::pow(u[j], q - 1.0) * f.smoothed(a[j] - u[j], sigma);
      r[j] = spec.eps * (phi_scalar(dl, p, 0.0) - phi_scalar(dr, p, 0.0)) - h * reac;
    }
    return r;
  }
};

double scaled_max_interior(const std::vector<double>& r, double h) {
  double worst = 0.0;
  for (size_t j = 1; j + 1 < r.size(); ++j) worst = std::max(worst, std::abs(r[j]) / h);
  return worst;
}

// Residual rows in the box-constrained sense (see the 2D solver): at a node
// pinned to a bound only the infeasible sign counts.
double counted_row_1d(const Grid1D& g, const std::vector<double>& u, const std::vector<double>& r,
                      int j) {
  if (u[j] >= g.a[j]) return std::max(r[j], 0.0);
  if (u[j] <= 0.0) return std::min(r[j], 0.0);
  return r[j];
}

double counted_max_1d(const Grid1D& g, const std::vector<double>& u,
                      const std::vector<double>& r) {
  double worst = 0.0;
  for (int j = 1; j + 1 < g.spec.n; ++j)
    worst = std::max(worst, std::abs(counted_row_1d(g, u, r, j)) / g.h);
  return worst;
}

double counted_two_norm_1d(const Grid1D& g, const std::vector<double>& u,
                           const std::vector<double>& r) {
  double s = 0.0;
  for (int j = 1; j + 1 < g.spec.n; ++j) {
    const double x = counted_row_1d(g, u, r, j) / g.h;
    s += x * x;
  }
  return std::sqrt(s);
}

// Newton descent for the inner problem; p = 2 terminates in one step.
bool inner_solve(const Grid1D& g, std::vector<double>& u, const std::vector<double>& b,
                 double shift, double mu, double grad_tol, int max_newton) {
  const int n = g.spec.n;
  const double p = g.spec.exps.p;
  u[0] = u[n - 1] = 0.0;
  for (int it = 0; it < max_newton; ++it) {
    const std::vector<double> gr = g.inner_gradient(u, b, shift, mu);
    if (scaled_max_interior(gr, g.h) <= grad_tol) return true;
    // tridiagonal Hessian on free nodes 1..n-2
    std::vector<double> diag(n - 2), off(n - 3 >= 0 ? n - 3 : 0), rhs(n - 2);
    std::vector<double> w(n - 1);
    for (int j = 0; j + 1 < n; ++j) w[j] = phi_scalar_deriv((u[j + 1] - u[j]) / g.h, p, mu);
    for (int j = 1; j + 1 < n; ++j) {
      diag[j - 1] = g.spec.eps * (w[j - 1] + w[j]) / g.h + g.h * shift;
      if (j + 2 < n) off[j - 1] = -g.spec.eps * w[j] / g.h;
      rhs[j - 1] = -gr[j];
    }
    thomas(diag, off, rhs);
    double slope = 0.0;
    for (int j = 1; j + 1 < n; ++j) slope += gr[j] * rhs[j - 1];
    const double E0 = g.inner_energy(u, b, shift, mu);
    double t = 1.0;
    bool ok = false;
    for (int ls = 0; ls < 40; ++ls) {
      std::vector<double> trial = u;
      for (int j = 1; j + 1 < n; ++j) trial[j] = u[j] + t * rhs[j - 1];
      if (g.inner_energy(trial, b, shift, mu) <= E0 + 1e-4 * t * slope) {
        u = std::move(trial);
        ok = true;
        break;
      }
      t *= 0.5;
    }
    // energy comparisons bottom out in roundoff near the minimum; accept if
    // the gradient is at least small
    if (!ok) return scaled_max_interior(g.inner_gradient(u, b, shift, mu), g.h) <= 100.0 * grad_tol;
  }
  return scaled_max_interior(g.inner_gradient(u, b, shift, mu), g.h) <= 100.0 * grad_tol;
}

// One nonlinear relaxation sweep (see the 2D solver): solve each row
// equation exactly by bisection with neighbors frozen; fallback for stalls
// of Newton on the singular reaction.
void gs_sweep_1d(const Grid1D& g, std::vector<double>& u, const Nonlinearity& f, double sigma) {
  const double p = g.spec.exps.p, q = g.spec.exps.q;
  const int n = g.spec.n;
  for (int j = 1; j + 1 < n; ++j) {
    const auto row = [&](double s) {
      const double dl = (s - u[j - 1]) / g.h, dr = (u[j + 1] - s) / g.h;
      double r = g.spec.eps * (phi_scalar(dl, p, 0.0) - phi_scalar(dr, p, 0.0));
      if (s > 0.0) r -= g.h * std::pow(s, q - 1.0) * f.smoothed(g.a[j] - s, sigma);
      return r;
    };
    double lo = 0.0, hi = g.a[j];
    if (row(lo) >= 0.0) {
      u[j] = 0.0;
      continue;
    }
    if (row(hi) <= 0.0) {
      u[j] = hi;
      continue;
    }
    for (int b = 0; b < 64; ++b) {
      const double mid = 0.5 * (lo + hi);
      if (row(mid) <= 0.0)
        lo = mid;
      else
        hi = mid;
    }
    u[j] = 0.5 * (lo + hi);
  }
}

// Mass-scaled residual change caused by one representable step of u_j: no row
// can be resolved below this in doubles. For p < 2 the flux slope |d|^{p-2}
// blows up at critical points of u, and the fine grid's eps/h^2 amplifies the
// jump past any fixed tolerance, so row acceptance is floor-aware.
double row_roundoff_floor(const Grid1D& g, const std::vector<double>& u, int j) {
  const double p = g.spec.exps.p;
  const double step =
      std::numeric_limits<double>::epsilon() * std::max(std::abs(u[j]), g.a[j]) / g.h;
  const double dl = (u[j] - u[j - 1]) / g.h, dr = (u[j + 1] - u[j]) / g.h;
  const double jl = std::abs(phi_scalar(dl + step, p, 0.0) - phi_scalar(dl, p, 0.0));
  const double jr = std::abs(phi_scalar(dr - step, p, 0.0) - phi_scalar(dr, p, 0.0));
  return g.spec.eps * (jl + jr) / g.h;
}

}  // namespace

double Oracle1DResult::layer_width() const {
  const double ell = x.back();
  double w = 0.0;
  for (size_t j = 0; j < x.size(); ++j)
    if (a[j] - u[j] > tau_c) w = std::max(w, std::min(x[j], ell - x[j]));
  return w;
}

Oracle1DResult solve_1d(const Oracle1DSpec& spec, const SolveConfig& cfg) {
  spec.validate();
  cfg.validate();
  const Grid1D g(spec);
  const int n = spec.n;
  const double q = spec.exps.q, th = spec.exps.theta;
  const Nonlinearity f{th, spec.f_scale};
  const double a_max = *std::max_element(g.a.begin(), g.a.end());
  const double f_scale = f.C * std::pow(a_max, q - 1.0);

  Oracle1DResult res;
  res.x = g.x;
  res.a = g.a;
  res.u = g.a;  // supersolution start
  res.u[0] = res.u[n - 1] = 0.0;

  const auto schedule = cfg.effective_schedule(spec.exps);
  const double v_floor = 1e-13 * a_max;
  const auto within_tol = [&](const std::vector<double>& u, const std::vector<double>& r,
                              double tol) {
    for (int j = 1; j + 1 < n; ++j) {
      const double cr = std::abs(counted_row_1d(g, u, r, j)) / g.h;
      if (cr > tol && cr > tol + row_roundoff_floor(g, u, j)) return false;
    }
    return true;
  };
  int stage_index = 0;
  for (const auto& [sigma, mu] : schedule) {
    const bool final_stage = sigma == 0.0;
    const double stage_tol =
        final_stage ? cfg.newton_tol
                    : std::max(cfg.newton_tol, 0.05 * f_scale * std::pow(sigma, th));

    // monotone Picard descent from the supersolution on the first stage only;
    // later stages restart Newton from the previous stage's solution
    const bool shiftable = sigma > 0.0 || th >= 1.0;
    if (stage_index == 0 && shiftable && cfg.picard_steps > 0) {
      const double shift =
          cfg.picard_shift > 0.0 ? cfg.picard_shift : picard_shift_bound(a_max, q, f, sigma);
      for (int k = 0; k < cfg.picard_steps; ++k) {
        ++res.iterations;
        std::vector<double> b(n, 0.0);
        for (int j = 1; j + 1 < n; ++j) {
          double reac = 0.0;
          if (res.u[j] > 0.0)
            reac = std::pow(res.u[j], q - 1.0) * f.smoothed(g.a[j] - res.u[j], sigma);
          b[j] = g.h * (shift * res.u[j] + reac);
        }
        if (!inner_solve(g, res.u, b, shift, mu, 0.1 * stage_tol, cfg.max_inner_newton))
          break;  // safeguard phase stalled; Newton takes over
        if (within_tol(res.u, g.residual(res.u, f, sigma), stage_tol)) break;
      }
    }

    // semismooth Newton on the stage equation; |gap| is floored in the
    // unsmoothed linearization (theta < 1) where f' blows up at contact
    double beta = 0.0;
    for (int it = 0; it < cfg.max_inner_newton; ++it) {
      const std::vector<double> r = g.residual(res.u, f, sigma);
      if (cfg.verbose) {
        int jmax = 1, jblk = -1;
        double rmax = 0.0, excess = 0.0;
        for (int j = 1; j + 1 < n; ++j) {
          const double cr = std::abs(counted_row_1d(g, res.u, r, j)) / g.h;
          if (cr > rmax) {
            rmax = cr;
            jmax = j;
          }
          if (cr > stage_tol) {
            const double e = cr - (stage_tol + row_roundoff_floor(g, res.u, j));
            if (e > excess) {
              excess = e;
              jblk = j;
            }
          }
        }
        std::cerr << "  [1d newton sigma=" << sigma << "] it=" << it
                  << " res=" << counted_max_1d(g, res.u, r) << " beta=" << beta << " argmax j="
                  << jmax << " x=" << g.x[jmax] << " gap=" << g.a[jmax] - res.u[jmax]
                  << " floor=" << row_roundoff_floor(g, res.u, jmax);
        if (jblk >= 0)
          std::cerr << " | blocker j=" << jblk << " x=" << g.x[jblk]
                    << " gap=" << g.a[jblk] - res.u[jblk]
                    << " du=" << (res.u[jblk + 1] - res.u[jblk]) / g.h
                    << " excess=" << excess
                    << " floor=" << row_roundoff_floor(g, res.u, jblk);
        std::cerr << "\n";
      }
      if (within_tol(res.u, r, stage_tol)) break;
      ++res.iterations;

      std::vector<double> diag(n - 2), off(n - 3), rhs(n - 2);
      std::vector<double> w(n - 1);
      for (int j = 0; j + 1 < n; ++j)
        w[j] = phi_scalar_deriv((res.u[j + 1] - res.u[j]) / g.h, spec.exps.p, mu);
      for (int j = 1; j + 1 < n; ++j) {
        double c = 0.0;
        if (res.u[j] > 0.0) {
          const double v = g.a[j] - res.u[j];
          const double fv = f.smoothed(v, sigma);
          double fpv;
          if (sigma == 0.0 && th < 1.0)
            fpv = f.C * th * std::pow(std::max(std::abs(v), v_floor), th - 1.0);
          else
            fpv = f.smoothed_deriv(v, sigma);
          c = -(q - 1.0) * std::pow(res.u[j], q - 2.0) * fv + std::pow(res.u[j], q - 1.0) * fpv;
        }
        diag[j - 1] = spec.eps * (w[j - 1] + w[j]) / g.h + g.h * (c + beta);
        if (j + 2 < n) off[j - 1] = -spec.eps * w[j] / g.h;
        rhs[j - 1] = -r[j];
      }
      thomas(diag, off, rhs);
      // directional derivative of the counted residual norm along the step,
      // via J d = -r - beta h d (the Levenberg shift shrinks both the step
      // and the decrease the line search is entitled to demand)
      const double phi0 = counted_two_norm_1d(g, res.u, r);
      double slope = 0.0;
      for (int j = 1; j + 1 < n; ++j)
        slope += counted_row_1d(g, res.u, r, j) * (-r[j] - beta * g.h * rhs[j - 1]) / (g.h * g.h);
      slope /= std::max(phi0, 1e-300);
      double t = 1.0;
      bool ok = false;
      for (int ls = 0; ls < 30; ++ls) {
        std::vector<double> trial = res.u;
        for (int j = 1; j + 1 < n; ++j)
          trial[j] = std::min(std::max(res.u[j] + t * rhs[j - 1], 0.0), g.a[j]);
        if (counted_two_norm_1d(g, trial, g.residual(trial, f, sigma)) <=
            phi0 + 1e-4 * t * slope) {
          res.u = std::move(trial);
          ok = true;
          break;
        }
        t *= 0.5;
      }
      if (ok) {
        if (t < 1.0) {
          // truncated steps crawl arithmetically when a row sits on the
          // |u'|^{p-2} curvature spike; the exact row-wise relaxation jumps
          // past it and is kept whenever it descends
          std::vector<double> sweep = res.u;
          gs_sweep_1d(g, sweep, f, sigma);
          if (counted_two_norm_1d(g, sweep, g.residual(sweep, f, sigma)) <
              counted_two_norm_1d(g, res.u, g.residual(res.u, f, sigma)))
            res.u = std::move(sweep);
        }
        beta *= 0.3;
        if (beta < 1e-14) beta = 0.0;
        continue;
      }
      // Newton stalled: exact row-wise relaxation before escalating the shift
      std::vector<double> sweep = res.u;
      gs_sweep_1d(g, sweep, f, sigma);
      if (counted_two_norm_1d(g, sweep, g.residual(sweep, f, sigma)) < phi0) {
        res.u = std::move(sweep);
        beta *= 0.3;
        if (beta < 1e-14) beta = 0.0;
        continue;
      }
      beta = beta == 0.0 ? 1e-2 * f_scale / a_max : beta * 10.0;
      if (beta > 1e8 * std::max(1.0, f_scale / a_max))
        throw std::runtime_error("solve_1d: stage line search failed (sigma=" +
                                 std::to_string(sigma) + ")");
    }
    ++stage_index;
  }
  res.residual_max = counted_max_1d(g, res.u, g.residual(res.u, f, 0.0));
  {
    // exact-contact snap, kept only when it does not hurt the residual
    std::vector<double> snapped = res.u;
    bool any = false;
    for (int j = 1; j + 1 < n; ++j)
      if (g.a[j] - res.u[j] <= 1e-12 * a_max && res.u[j] != g.a[j]) {
        snapped[j] = g.a[j];
        any = true;
      }
    if (any) {
      const double rs = counted_max_1d(g, snapped, g.residual(snapped, f, 0.0));
      if (rs <= std::max(res.residual_max, cfg.newton_tol)) {
        res.u = std::move(snapped);
        res.residual_max = rs;
      }
    }
  }
  if (!within_tol(res.u, g.residual(res.u, f, 0.0), cfg.newton_tol))
    throw std::runtime_error("solve_1d: did not converge, residual " +
                             std::to_string(res.residual_max));

  // flat-core interval
  res.tau_c = coincidence_tolerance(a_max, cfg.newton_tol);
  int first = -1, last = -1;
  for (int j = 1; j + 1 < n; ++j)
    if (g.a[j] - res.u[j] <= res.tau_c) {
      if (first < 0) first = j;
      last = j;
    }
  if (first >= 0) {
    res.flat_core = std::make_pair(g.x[first], g.x[last]);
    for (int j = first; j <= last; ++j)
      if (g.a[j] - res.u[j] > res.tau_c) res.single_interval = false;
  }
  return res;
}

double oracle_value(const Oracle1DResult& r, double x) {
  const double h = r.x[1] - r.x[0];
  if (x <= r.x.front()) return r.u.front();
  if (x >= r.x.back()) return r.u.back();
  const int j = std::min(static_cast<int>(x / h), static_cast<int>(r.x.size()) - 2);
  const double t = (x - r.x[j]) / h;
  return (1.0 - t) * r.u[j] + t * r.u[j + 1];
}

CrossCheckReport cross_check_2d(const ScalarField& u2d, const Oracle1DSpec& spec1d,
                                const Oracle1DResult& oracle, double central_fraction,
                                int n_samples) {
  const Mesh& m = *u2d.mesh;
  if (m.kind != DomainKind::rectangle)
    throw std::invalid_argument("cross_check_2d: 2D field must live on a rectangle");
  double lx = 0.0, ly = 0.0;
  for (const auto& v : m.vertices) {
    lx = std::max(lx, v.x);
    ly = std::max(ly, v.y);
  }
  if (std::abs(lx - spec1d.ell) > 1e-12 * spec1d.ell)
    throw std::invalid_argument("cross_check_2d: strip length does not match the oracle interval");

  CrossCheckReport rep;
  rep.central_fraction = central_fraction;
  rep.n_samples = n_samples;
  const double x0 = 0.5 * (1.0 - central_fraction) * lx;
  const double x1 = lx - x0;
  for (int k = 0; k < n_samples; ++k) {
    const double x = x0 + (x1 - x0) * k / (n_samples - 1);
    const double v2 = eval_at(u2d, {x, 0.5 * ly});
    const double v1 = oracle_value(oracle, x);
    rep.max_deviation = std::max(rep.max_deviation, std::abs(v2 - v1));
    const double a_here = spec1d.a0 + spec1d.b * x;
    const bool core2 = a_here - v2 <= oracle.tau_c;
    const bool core1 = a_here - v1 <= oracle.tau_c;
    if (core2 != core1) rep.core_agreement = false;
  }
  return rep;
}

}  // namespace flatcore
