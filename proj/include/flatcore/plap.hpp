#pragma once

#include "flatcore/geometry.hpp"
#include "flatcore/mesh.hpp"

namespace flatcore {

struct Exponents {
  double p = 2.0;
  double q = 2.0;
  double theta = 0.5;

  // enforces p > 1, 1 < q <= p, theta > 0
  void validate() const;
};

// f(s) = C |s|^{theta-1} s  (odd, strictly increasing, f(0) = 0)
struct Nonlinearity {
  double theta = 0.5;
  double C = 1.0;

  double operator()(double s) const;
  // smoothing that keeps f odd and C^1 at 0:
  //   f_sigma(s) = C (sqrt(s^2+sig^2)-sig)^theta * s / sqrt(s^2+sig^2)
  // (the derivative of the smoothed potential used in energy_J, up to the
  // (1+theta) factor); sigma = 0 reproduces f exactly.
  double smoothed(double s, double sigma) const;
  double smoothed_deriv(double s, double sigma) const;
};

// Parameters of the auxiliary absorption problem
//   -eps div Phi_p(grad w, grad a) + Lambda |w|^{theta-1} w = 0, w = delta on the boundary.
struct AuxiliarySpec {
  double delta = 1e-3;    // boundary value, in (0,1)
  double Lambda = 1.0;    // absorption strength
  Exponents exps;         // only p and theta participate
  double sigma = 1e-6;    // absorption smoothing
  double mu = 1e-8;       // gradient regularization for solver Hessians

  void validate() const;
};

// Phi_p(eta, xi) = |eta-xi|^{p-2}(eta-xi) + |xi|^{p-2} xi, with the
// convention |v|^{p-2} v = 0 at v = 0 for every p > 1.
Vec2 phi_p(const Vec2& eta, const Vec2& xi, double p);

// Powers |.|^{p-2} replaced by (|.|^2 + mu^2)^{(p-2)/2}; mu = 0 gives phi_p.
Vec2 phi_p_regularized(const Vec2& eta, const Vec2& xi, double p, double mu);

// One inequality of the order lemma: lhs >= rhs (or <= for the upper ones).
struct LemmaIneq {
  double lhs = 0.0;
  double rhs = 0.0;
  bool guard_ok = true;  // nondegeneracy guard of the lemma held
  bool pass = true;      // inequality holds within slack (vacuously if !guard_ok)
};

struct LemmaOrderReport {
  LemmaIneq ge;    // Phi.eta        >= min{p-1,2^{2-p}} (|eta-xi|+|xi|)^{p-2} |eta|^2
  LemmaIneq le;    // |Phi|          <= max{p-1,2^{2-p}} (|eta-xi|+|xi|)^{p-2} |eta|
  LemmaIneq sage;  // (dPhi).(de)    >= min{...} (|eta-xi|+|eta'-xi|)^{p-2} |eta-eta'|^2
  LemmaIneq sale;  // |dPhi|         <= max{...} (|eta-xi|+|eta'-xi|)^{p-2} |eta-eta'|
  bool pass = true;
};

LemmaOrderReport check_lemma_order(const Vec2& eta, const Vec2& eta_prime, const Vec2& xi,
                                   double p, double rel_slack = 1e-10);

// J(w) = (eps/p) int |grad w - grad a|^p + eps int grad_p a . grad w
//        + Lambda int |w|^{1+theta},
// with |w| -> sqrt(w^2+sigma^2)-sigma in the absorption term when sigma > 0.
double energy_J(const ScalarField& w, const ScalarField& a, const AuxiliarySpec& spec, double eps);

// Exact gradient of the discretized (smoothed) J; zero at boundary vertices.
// Requires sigma > 0 when theta < 1 (J is not C^1 at w=0 otherwise).
ScalarField grad_J(const ScalarField& w, const ScalarField& a, const AuxiliarySpec& spec, double eps);

// Weak residual of the main problem at interior vertices (hat tests):
//   r_i = eps <grad_p u, grad phi_i> - <u^{q-1} f(a-u), phi_i>;
// boundary entries are 0.
ScalarField residual_main(const ScalarField& u, const ScalarField& a, const Exponents& exps,
                          const Nonlinearity& f, double eps);

// Lambda_1 = d^{q-1} C with d = inf a / 2 (lower bound coefficient of the
// absorption comparison in the flat-core proof).
double lambda1_lower_rhs(double d, double C, double q);

}  // namespace flatcore
