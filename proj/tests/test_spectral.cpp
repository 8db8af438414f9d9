#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "flatcore/mesh.hpp"
#include "flatcore/spectral.hpp"

using namespace flatcore;

// Reference values: the unit square has lambda_1(-Delta) = 2 pi^2 and the
// unit disk has lambda_1(-Delta) = j_{0,1}^2, the squared first Bessel zero.
namespace {
constexpr double kSquareLambda = 19.739208802178716;  // 2 pi^2
constexpr double kDiskLambda = 5.783185962946783;     // j_{0,1}^2
}  // namespace

TEST_CASE("p=2 eigenvalue of the unit square approaches 2 pi^2") {
  const Mesh m = build_rect_mesh(1.0, 1.0, 48, 48);
  const EigenResult r = first_eigenpair(m, 2.0, 1e-10);
  // P1 Rayleigh quotients overshoot; refinement tightens from above
  CHECK(r.lambda1 > kSquareLambda - 1e-6);
  CHECK(std::abs(r.lambda1 - kSquareLambda) / kSquareLambda < 0.02);

  const Mesh coarse = build_rect_mesh(1.0, 1.0, 24, 24);
  const EigenResult rc = first_eigenpair(coarse, 2.0, 1e-10);
  CHECK(r.lambda1 < rc.lambda1);  // monotone under refinement
}

TEST_CASE("p=2 eigenvalue of the unit disk approaches the Bessel value") {
  const Mesh m = build_disk_mesh(24, 96);
  const EigenResult r = first_eigenpair(m, 2.0, 1e-10);
  // inscribed polygon sits inside the disk, so its eigenvalue overshoots too
  CHECK(std::abs(r.lambda1 - kDiskLambda) / kDiskLambda < 0.02);
}

TEST_CASE("eigenfunction normalization and sign") {
  const Mesh m = build_rect_mesh(1.0, 1.0, 32, 32);
  const EigenResult r = first_eigenpair(m, 2.0);
  double zmax = 0.0;
  for (int i = 0; i < m.n_vertices(); ++i) {
    CHECK(r.z.v[i] >= 0.0);
    zmax = std::max(zmax, r.z.v[i]);
    if (m.is_boundary[i]) CHECK(r.z.v[i] == 0.0);
  }
  CHECK(zmax == doctest::Approx(1.0).epsilon(1e-12));
  // the last accepted Rayleigh quotient is the reported eigenvalue
  REQUIRE(!r.rayleigh_history.empty());
  CHECK(r.rayleigh_history.back() == doctest::Approx(r.lambda1).epsilon(1e-12));
  // history is non-increasing up to solver tolerance
  for (size_t k = 1; k < r.rayleigh_history.size(); ++k)
    CHECK(r.rayleigh_history[k] <= r.rayleigh_history[k - 1] + 1e-8);
}

TEST_CASE("reported eigenvalue equals the Rayleigh quotient of z") {
  const Mesh m = build_rect_mesh(1.0, 1.0, 24, 24);
  for (double p : {1.5, 2.0, 3.0}) {
    const EigenResult r = first_eigenpair(m, p);
    double num = 0.0;
    for (int t = 0; t < m.n_triangles(); ++t)
      num += m.tri_area[t] * std::pow(norm(field_gradient(r.z, t)), p);
    const double den = integrate(r.z, p);
    CHECK(r.lambda1 == doctest::Approx(num / den).epsilon(1e-8));
  }
}

TEST_CASE("p-eigenvalue dilation law on the disk") {
  // lambda_1(R Omega) = R^{-p} lambda_1(Omega) for the p-Laplacian
  const Mesh unit = build_disk_mesh(16, 64);
  const Mesh twice = scale_mesh(unit, 2.0);
  const double p = 3.0;
  const EigenResult a = first_eigenpair(unit, p);
  const EigenResult b = first_eigenpair(twice, p);
  CHECK(b.lambda1 == doctest::Approx(a.lambda1 / std::pow(2.0, p)).epsilon(1e-6));
}

TEST_CASE("domain monotonicity of the first eigenvalue") {
  // a subdomain has a larger first Dirichlet eigenvalue
  const Mesh big = build_rect_mesh(1.0, 1.0, 32, 32);
  const Mesh small = build_rect_mesh(0.6, 0.8, 20, 26);
  for (double p : {1.5, 2.0}) {
    const EigenResult rb = first_eigenpair(big, p, 1e-9);
    const EigenResult rs = first_eigenpair(small, p, 1e-9);
    CHECK(rs.lambda1 > rb.lambda1);
  }
}

TEST_CASE("weighted eigenvalue: unit weight and constant scaling") {
  const Mesh m = build_rect_mesh(1.0, 1.0, 24, 24);
  const double p = 2.0;
  const EigenResult plain = first_eigenpair(m, p, 1e-10);
  const ScalarField one = make_field(m, 1.0);
  const double w1 = weighted_first_eigenvalue(m, p, one, 1e-10);
  CHECK(w1 == doctest::Approx(plain.lambda1).epsilon(1e-8));

  const ScalarField four = make_field(m, 4.0);
  const double w4 = weighted_first_eigenvalue(m, p, four, 1e-10);
  CHECK(w4 == doctest::Approx(plain.lambda1 / 4.0).epsilon(1e-8));
}

TEST_CASE("weighted eigenvalue brackets by the weight range") {
  // lambda_1 / max(weight) <= lambda_w <= lambda_1 / min(weight)
  const Mesh m = build_rect_mesh(1.0, 1.0, 24, 24);
  const double p = 2.0;
  const ScalarField w = make_field(m, [](Vec2 v) { return 1.0 + 0.5 * v.x; });
  const EigenResult plain = first_eigenpair(m, p, 1e-10);
  const double lw = weighted_first_eigenvalue(m, p, w, 1e-10);
  CHECK(lw <= plain.lambda1 / 1.0 + 1e-8);
  CHECK(lw >= plain.lambda1 / 1.5 - 1e-8);

  ScalarField bad = make_field(m, 1.0);
  bad.v[0] = 0.0;
  CHECK_THROWS_AS(weighted_first_eigenvalue(m, p, bad), std::invalid_argument);
}
