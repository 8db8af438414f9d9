#include "flatcore/plap.hpp"

#include <cmath>
#include <stdexcept>

namespace flatcore {

namespace {

// |v|^{p-2} v with the zero-base convention (0 for v=0, any p>1)
Vec2 p_vec(const Vec2& v, double p) {
  const double n = norm(v);
  if (n == 0.0) return {0.0, 0.0};
  return std::pow(n, p - 2.0) * v;
}

Vec2 p_vec_reg(const Vec2& v, double p, double mu) {
  if (mu == 0.0) return p_vec(v, p);
  return std::pow(norm2(v) + mu * mu, 0.5 * (p - 2.0)) * v;
}

// smoothed absolute value sqrt(s^2 + sigma^2) - sigma
double sabs(double s, double sigma) {
  if (sigma == 0.0) return std::abs(s);
  return std::sqrt(s * s + sigma * sigma) - sigma;
}

}  // namespace

void Exponents::validate() const {
  if (!(p > 1.0)) throw std::invalid_argument("exponents: p must be > 1");
  if (!(q > 1.0) || !(q <= p)) throw std::invalid_argument("exponents: need 1 < q <= p");
  if (!(theta > 0.0)) throw std::invalid_argument("exponents: theta must be > 0");
}

double Nonlinearity::operator()(double s) const {
  if (s == 0.0) return 0.0;
  return C * std::pow(std::abs(s), theta - 1.0) * s;
}

double Nonlinearity::smoothed(double s, double sigma) const {
  if (sigma == 0.0) return (*this)(s);
  const double r = std::sqrt(s * s + sigma * sigma);
  return C * std::pow(r - sigma, theta) * (s / r);
}

double Nonlinearity::smoothed_deriv(double s, double sigma) const {
  if (sigma == 0.0) {
    if (s == 0.0) {
      if (theta < 1.0) throw std::invalid_argument("f'(0) undefined for theta < 1 without smoothing");
      return theta == 1.0 ? C : 0.0;
    }
    return C * theta * std::pow(std::abs(s), theta - 1.0);
  }
  const double r = std::sqrt(s * s + sigma * sigma);
  const double h = r - sigma;  // >= 0, = 0 only at s = 0
  const double sr = s / r;
  double term1 = 0.0;
  if (h > 0.0) term1 = theta * std::pow(h, theta - 1.0) * sr * sr;
  // at s=0 the first term has limit 0 for theta<1 only through sr^2 ~ s^2; h^{theta-1}
  // diverges, but h ~ s^2/(2 sigma) so h^{theta-1} sr^2 ~ s^{2 theta} -> 0 for theta > 0
  const double term2 = std::pow(h, theta) * (sigma * sigma) / (r * r * r);
  return C * (term1 + term2);
}

void AuxiliarySpec::validate() const {
  if (!(delta > 0.0) || !(delta < 1.0)) throw std::invalid_argument("auxiliary spec: delta must be in (0,1)");
  if (!(Lambda > 0.0)) throw std::invalid_argument("auxiliary spec: Lambda must be > 0");
  if (sigma < 0.0 || mu < 0.0) throw std::invalid_argument("auxiliary spec: sigma, mu must be >= 0");
  if (!(exps.p > 1.0)) throw std::invalid_argument("auxiliary spec: p must be > 1");
  if (!(exps.theta > 0.0)) throw std::invalid_argument("auxiliary spec: theta must be > 0");
}

Vec2 phi_p(const Vec2& eta, const Vec2& xi, double p) {
  return p_vec(eta - xi, p) + p_vec(xi, p);
}

Vec2 phi_p_regularized(const Vec2& eta, const Vec2& xi, double p, double mu) {
  return p_vec_reg(eta - xi, p, mu) + p_vec_reg(xi, p, mu);
}

LemmaOrderReport check_lemma_order(const Vec2& eta, const Vec2& eta_prime, const Vec2& xi,
                                   double p, double rel_slack) {
  const double cmin = std::min(p - 1.0, std::pow(2.0, 2.0 - p));
  const double cmax = std::max(p - 1.0, std::pow(2.0, 2.0 - p));

  auto check_lower = [rel_slack](double lhs, double rhs) {  // lhs >= rhs
    return lhs - rhs >= -rel_slack * std::max({std::abs(lhs), std::abs(rhs), 1e-300});
  };
  auto check_upper = [rel_slack](double lhs, double rhs) {  // lhs <= rhs
    return rhs - lhs >= -rel_slack * std::max({std::abs(lhs), std::abs(rhs), 1e-300});
  };

  LemmaOrderReport rep;
  const Vec2 phi = phi_p(eta, xi, p);
  const double base1 = norm(eta - xi) + norm(xi);
  if (base1 > 0.0) {
    rep.ge.lhs = dot(phi, eta);
    rep.ge.rhs = cmin * std::pow(base1, p - 2.0) * norm2(eta);
    rep.ge.pass = check_lower(rep.ge.lhs, rep.ge.rhs);
    rep.le.lhs = norm(phi);
    rep.le.rhs = cmax * std::pow(base1, p - 2.0) * norm(eta);
    rep.le.pass = check_upper(rep.le.lhs, rep.le.rhs);
  } else {
    rep.ge.guard_ok = rep.le.guard_ok = false;
  }

  const Vec2 dphi = phi - phi_p(eta_prime, xi, p);
  const Vec2 de = eta - eta_prime;
  const double base2 = norm(eta - xi) + norm(eta_prime - xi);
  if (base2 > 0.0) {
    rep.sage.lhs = dot(dphi, de);
    rep.sage.rhs = cmin * std::pow(base2, p - 2.0) * norm2(de);
    rep.sage.pass = check_lower(rep.sage.lhs, rep.sage.rhs);
    rep.sale.lhs = norm(dphi);
    rep.sale.rhs = cmax * std::pow(base2, p - 2.0) * norm(de);
    rep.sale.pass = check_upper(rep.sale.lhs, rep.sale.rhs);
  } else {
    rep.sage.guard_ok = rep.sale.guard_ok = false;
  }

  rep.pass = rep.ge.pass && rep.le.pass && rep.sage.pass && rep.sale.pass;
  return rep;
}

double energy_J(const ScalarField& w, const ScalarField& a, const AuxiliarySpec& spec, double eps) {
  if (w.mesh != a.mesh) throw std::invalid_argument("energy_J: fields on different meshes");
  spec.validate();
  const Mesh& m = *w.mesh;
  const double p = spec.exps.p, th = spec.exps.theta, sg = spec.sigma;

  double dirichlet = 0.0, linear = 0.0, absorption = 0.0;
  for (int t = 0; t < m.n_triangles(); ++t) {
    const Vec2 gw = field_gradient(w, t), ga = field_gradient(a, t);
    const double A = m.tri_area[t];
    dirichlet += A * std::pow(norm(gw - ga), p);
    linear += A * dot(p_vec(ga, p), gw);
    const auto& tri = m.triangles[t];
    const double w0 = w.v[tri[0]], w1 = w.v[tri[1]], w2 = w.v[tri[2]];
    const double mids[3] = {0.5 * (w0 + w1), 0.5 * (w1 + w2), 0.5 * (w2 + w0)};
    for (double wm : mids) absorption += A / 3.0 * std::pow(sabs(wm, sg), 1.0 + th);
  }
  return eps / p * dirichlet + eps * linear + spec.Lambda * absorption;
}

ScalarField grad_J(const ScalarField& w, const ScalarField& a, const AuxiliarySpec& spec, double eps) {
  if (w.mesh != a.mesh) throw std::invalid_argument("grad_J: fields on different meshes");
  spec.validate();
  if (spec.exps.theta < 1.0 && spec.sigma <= 0.0)
    throw std::invalid_argument("grad_J: sigma > 0 required for theta < 1");
  const Mesh& m = *w.mesh;
  const double p = spec.exps.p, th = spec.exps.theta, sg = spec.sigma;

  ScalarField g = make_field(m, 0.0);
  for (int t = 0; t < m.n_triangles(); ++t) {
    const Vec2 gw = field_gradient(w, t), ga = field_gradient(a, t);
    const Vec2 flux = eps * (p_vec(gw - ga, p) + p_vec(ga, p));  // d/d(grad w) of the two gradient terms
    const double A = m.tri_area[t];
    const auto& tri = m.triangles[t];
    for (int k = 0; k < 3; ++k) g.v[tri[k]] += A * dot(flux, m.grad_hat[t][k]);

    // absorption: d/dw_i of sum over edge midpoints of (A/3) H(w_mid),
    // H(s) = Lambda * (sqrt(s^2+sig^2)-sig)^{1+theta}
    for (int e = 0; e < 3; ++e) {
      const int i = tri[e], j = tri[(e + 1) % 3];
      const double wm = 0.5 * (w.v[i] + w.v[j]);
      double hprime = 0.0;
      if (sg > 0.0) {
        const double r = std::sqrt(wm * wm + sg * sg);
        hprime = (1.0 + th) * std::pow(r - sg, th) * (wm / r);
      } else if (wm != 0.0) {
        hprime = (1.0 + th) * std::pow(std::abs(wm), th) * (wm >= 0.0 ? 1.0 : -1.0);
      }
      const double contrib = spec.Lambda * A / 3.0 * hprime * 0.5;
      g.v[i] += contrib;
      g.v[j] += contrib;
    }
  }
  for (int i = 0; i < m.n_vertices(); ++i)
    if (m.is_boundary[i]) g.v[i] = 0.0;
  return g;
}

ScalarField residual_main(const ScalarField& u, const ScalarField& a, const Exponents& exps,
                          const Nonlinearity& f, double eps) {
  if (u.mesh != a.mesh) throw std::invalid_argument("residual_main: fields on different meshes");
  exps.validate();
  const Mesh& m = *u.mesh;
  ScalarField r = make_field(m, 0.0);
  for (int t = 0; t < m.n_triangles(); ++t) {
    const Vec2 gu = field_gradient(u, t);
    const Vec2 flux = eps * p_vec(gu, exps.p);
    const double A = m.tri_area[t];
    const auto& tri = m.triangles[t];
    for (int k = 0; k < 3; ++k) r.v[tri[k]] += A * dot(flux, m.grad_hat[t][k]);
    for (int e = 0; e < 3; ++e) {
      const int i = tri[e], j = tri[(e + 1) % 3];
      const double um = 0.5 * (u.v[i] + u.v[j]);
      const double am = 0.5 * (a.v[i] + a.v[j]);
      const double upow = um > 0.0 ? std::pow(um, exps.q - 1.0) : 0.0;
      const double reaction = A / 3.0 * upow * f(am - um) * 0.5;  // phi_i = 1/2 at adjacent midpoints
      r.v[i] -= reaction;
      r.v[j] -= reaction;
    }
  }
  for (int i = 0; i < m.n_vertices(); ++i)
    if (m.is_boundary[i]) r.v[i] = 0.0;
  return r;
}

double lambda1_lower_rhs(double d, double C, double q) {
  if (!(d > 0.0) || !(C > 0.0) || !(q > 1.0))
    throw std::invalid_argument("lambda1_lower_rhs: need d > 0, C > 0, q > 1");
  return std::pow(d, q - 1.0) * C;
}

}  // namespace flatcore
