#include "doctest.h"

#include <random>

#include <Eigen/Geometry>

#include "nodal/harmonic.hpp"
#include "nodal/types.hpp"

using namespace nodal;
using Complex = std::complex<double>;

TEST_CASE("eval_with_gradient of Re z^3 at (1,1)") {
  const auto p = HarmonicPolynomial2d::monomial(3);
  const auto vg = p.eval_with_gradient(Vec2(1, 1));
  CHECK(vg.value == doctest::Approx(-2));
  CHECK(vg.gradient.x() == doctest::Approx(0).epsilon(1e-14));
  CHECK(vg.gradient.y() == doctest::Approx(-6));
}

TEST_CASE("y has constant gradient (0,1)") {
  const auto y = HarmonicPolynomial2d::monomial(1, Complex(0, -1));
  for (const Vec2 p : {Vec2(0.3, -0.7), Vec2(2, 5), Vec2::Zero().eval()}) {
    CHECK(y(p) == doctest::Approx(p.y()));
    CHECK(y.gradient(p).isApprox(Vec2(0, 1)));
  }
}

TEST_CASE("Re z^N vanishes with its gradient at the origin") {
  for (int n = 2; n <= 6; ++n) {
    const auto vg = HarmonicPolynomial2d::monomial(n).eval_with_gradient(Vec2::Zero());
    CHECK(vg.value == 0);
    CHECK(vg.gradient.norm() == 0);
  }
}

TEST_CASE("harmonic conjugate examples") {
  const auto y = HarmonicPolynomial2d::monomial(1, Complex(0, -1));
  const auto ybar = harmonic_conjugate(y);
  CHECK(ybar(Vec2(0.4, 0.9)) == doctest::Approx(-0.4));

  // Im z^2 = 2xy -> y^2 - x^2, checked against symbolic derivatives
  const auto u = homogeneous_basis(2).second;
  const auto ubar = harmonic_conjugate(u);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> d(-1, 1);
  for (int i = 0; i < 20; ++i) {
    const Vec2 p(d(rng), d(rng));
    CHECK(ubar(p) == doctest::Approx(p.y() * p.y() - p.x() * p.x()).epsilon(1e-13));
    const Vec2 gu(2 * p.y(), 2 * p.x());
    const Vec2 gb = ubar.gradient(p);
    CHECK(gb.x() == doctest::Approx(-gu.y()));
    CHECK(gb.y() == doctest::Approx(gu.x()));
  }
}

TEST_CASE("conjugate of Re z^k is Im z^k") {
  for (int k = 1; k <= 5; ++k) {
    const auto [re, im] = homogeneous_basis(k);
    CHECK(harmonic_conjugate(re) == im);
  }
}

TEST_CASE("conjugate involution and Cauchy-Riemann orthogonality") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> d(-1, 1);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Complex> c(6);
    for (auto& x : c) x = Complex(d(rng), d(rng));
    const HarmonicPolynomial2d u(c);
    const auto ubar = harmonic_conjugate(u);
    const auto back = harmonic_conjugate(ubar);
    const auto sum = back + u;
    CHECK(sum.degree() == 0);
    CHECK(ubar(Vec2::Zero()) == doctest::Approx(0).epsilon(1e-15));
    for (int i = 0; i < 10; ++i) {
      const Vec2 p(d(rng), d(rng));
      const Vec2 g = u.gradient(p), gb = ubar.gradient(p);
      CHECK(std::abs(g.dot(gb)) < 1e-12 * (1 + g.squaredNorm()));
      CHECK(g.norm() == doctest::Approx(gb.norm()));
    }
  }
}

TEST_CASE("homogeneous basis") {
  CHECK_THROWS_AS(homogeneous_basis(0), Error);
  const Vec2 p(0.7, -0.3);
  const double x = p.x(), y = p.y();
  auto [r1, i1] = homogeneous_basis(1);
  CHECK(r1(p) == doctest::Approx(x));
  CHECK(i1(p) == doctest::Approx(y));
  auto [r2, i2] = homogeneous_basis(2);
  CHECK(r2(p) == doctest::Approx(x * x - y * y));
  CHECK(i2(p) == doctest::Approx(2 * x * y));
  auto [r3, i3] = homogeneous_basis(3);
  CHECK(r3(p) == doctest::Approx(x * x * x - 3 * x * y * y));
  CHECK(i3(p) == doctest::Approx(3 * x * x * y - y * y * y));
}

TEST_CASE("sampled Laplacian vanishes") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> d(-1, 1);
  std::vector<Complex> c(8);
  for (auto& x : c) x = Complex(d(rng), d(rng));
  const HarmonicPolynomial2d u(c);
  for (int i = 0; i < 10; ++i) {
    const Vec2 p(d(rng), d(rng));
    // stencil truncation h^2 u_xxxx / 6 for degree 7
    CHECK(std::abs(stencil_laplacian(u, p, 1e-3)) < 1e-3);
    const auto [uxx, uxy] = u.second_derivatives(p);
    (void)uxy;
    const double h = 1e-4;
    const double fd = (u(Vec2(p + Vec2(h, 0))) - 2 * u(p) + u(Vec2(p - Vec2(h, 0)))) / (h * h);
    CHECK(uxx == doctest::Approx(fd).epsilon(1e-4));
  }
}

TEST_CASE("transformations act on coefficients") {
  const auto u = parse_polynomial("re(z^2) + 0.5*im(z^3) - 2*y + 1");
  const Vec2 p(0.3, 0.8);
  CHECK(u.scaled(0.5)(p) == doctest::Approx(u(Vec2(0.5 * p))));
  const double th = 0.7;
  const Eigen::Rotation2Dd R(-th);
  CHECK(u.rotated(th)(p) == doctest::Approx(u(Vec2(R * p))));
  const Vec2 s(0.2, -0.4);
  CHECK(u.translated(s)(p) == doctest::Approx(u(Vec2(p + s))));
}

TEST_CASE("polynomial parsing") {
  const auto u = parse_polynomial("re(z^2) + 0.5*im(z^3)");
  const Vec2 p(0.6, -0.2);
  const double x = p.x(), y = p.y();
  CHECK(u(p) == doctest::Approx(x * x - y * y + 0.5 * (3 * x * x * y - y * y * y)));
  CHECK(parse_polynomial(format_polynomial(u)) == u);
  CHECK(parse_polynomial("x - 3*y")(p) == doctest::Approx(x - 3 * y));
  CHECK_THROWS_AS(parse_polynomial("re(z^2"), Error);
  CHECK_THROWS_AS(parse_polynomial("x*y"), Error);
}
