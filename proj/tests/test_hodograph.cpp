#include "doctest.h"

#include <cmath>
#include <random>

#include "nodal/error.hpp"
#include "nodal/hodograph.hpp"

using namespace nodal;
using Complex = std::complex<double>;

namespace {

HarmonicPolynomial2d im(int n) { return HarmonicPolynomial2d::monomial(n, Complex(0, -1)); }
HarmonicPolynomial2d re(int n) { return HarmonicPolynomial2d::monomial(n); }
std::shared_ptr<const Mesh2D> half(int level, double r) {
  return std::make_shared<const Mesh2D>(half_disc_mesh(level, r));
}

bool kind_of(const std::function<void()>& f, ErrorKind kind) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind() == kind;
  }
  return false;
}

}  // namespace

TEST_CASE("map of y is a reflection") {
  const HodographMap map(im(1), identity_field(), Vec2(0, 0.5));
  CHECK(map.sign() == 1);
  for (const Vec2 p : {Vec2(0.3, 0.2), Vec2(-0.5, 0.1), Vec2(0.1, 0.7)}) {
    const Vec2 st = map(p);
    CHECK(st.x() == doctest::Approx(-p.x()).epsilon(1e-14));
    CHECK(st.y() == doctest::Approx(p.y()).epsilon(1e-14));
  }
  const HodographMap lower(im(1), identity_field(), Vec2(0, -0.5));
  CHECK(lower.sign() == -1);
  CHECK(lower(Vec2(0.2, -0.3)).y() == doctest::Approx(0.3));
}

TEST_CASE("map of Im z^2 on the first quadrant") {
  const HodographMap map(im(2), identity_field(), Vec2(0.5, 0.5));
  const Vec2 p(0.4, 0.3);
  const Vec2 st = map(p);
  CHECK(st.x() == doctest::Approx(p.y() * p.y() - p.x() * p.x()).epsilon(1e-13));
  CHECK(st.y() == doctest::Approx(2 * p.x() * p.y()).epsilon(1e-13));
  CHECK(map.image_radius() > 0.95);
  CHECK(map.inverse(Vec2::Zero()).norm() == 0);

  std::mt19937 rng(7);
  std::uniform_real_distribution<double> U(0, 1);
  for (int i = 0; i < 200; ++i) {
    const double r = 0.9 * std::sqrt(U(rng)), th = kPi * U(rng);
    const Vec2 q(r * std::cos(th), r * std::sin(th));
    const Vec2 x = map.inverse(q);
    CHECK(x.x() >= -1e-12);
    CHECK(x.y() >= -1e-12);
    CHECK((map(x) - q).norm() < 1e-10);
  }
}

TEST_CASE("sector boundary of Re z^3 maps to t = 0") {
  const HodographMap map(re(3), identity_field(), Vec2(0.5, 0));
  for (double r : {0.1, 0.4, 0.8}) {
    const double th = kPi / 6;
    CHECK(std::abs(map(Vec2(r * std::cos(th), r * std::sin(th))).y()) < 1e-14);
    CHECK(std::abs(map(Vec2(r * std::cos(th), -r * std::sin(th))).y()) < 1e-14);
  }
  CHECK(map.in_component(Vec2(0.3, 0.1)));
  CHECK_FALSE(map.in_component(Vec2(0, 0.3)));
}

TEST_CASE("conformal for the identity") {
  const HodographMap map(re(4) + 0.3 * im(3), identity_field(), Vec2(0.6, 0.05));
  for (const Vec2 p : {Vec2(0.3, 0.05), Vec2(0.5, -0.1)}) {
    const Mat2 D = map.jacobian(p);
    CHECK(std::abs(D.row(0).dot(D.row(1))) < 1e-12);
    CHECK(D.row(0).norm() == doctest::Approx(D.row(1).norm()).epsilon(1e-12));
  }
}

TEST_CASE("straightened matrix is diag(det A, 1)") {
  struct Case {
    CoefficientField A;
    double det;
  };
  for (const auto& c : {Case{identity_field(), 1}, Case{constant_field(2, 0, 0.5), 1}, Case{scaled_identity(2), 4}}) {
    const HodographMap map(im(2), c.A, Vec2(0.5, 0.5));
    CHECK(map.determinant() == doctest::Approx(c.det));
    for (const Vec2 st : {Vec2(0.2, 0.1), Vec2(-0.3, 0.4), Vec2(0.05, 0.6)}) {
      const Vec2 x = map.inverse(st);
      CHECK((map(x) - st).norm() < 1e-10);
      const Mat2 B = straightened_matrix(map, st);
      CHECK(B(0, 0) == doctest::Approx(c.det).epsilon(1e-10));
      CHECK(std::abs(B(0, 1)) < 1e-10);
      CHECK(std::abs(B(1, 0)) < 1e-10);
      CHECK(B(1, 1) == doctest::Approx(1).epsilon(1e-10));
    }
    const auto Bf = straightened_field(map);
    CHECK(Bf(Vec2(0.1, 0.2))(0, 0) == doctest::Approx(c.det));
  }
}

TEST_CASE("varying determinant and non A-harmonic data are rejected") {
  CHECK(kind_of([] { HodographMap(im(2), radial_bump(0.5, 0.5), Vec2(0.5, 0.5)); }, ErrorKind::NonConstantDeterminant));
  CHECK(kind_of([] { HodographMap(im(2), constant_field(2, 0.5, 1), Vec2(0.5, 0.5)); }, ErrorKind::InvalidArgument));
  CHECK(kind_of([] { HodographMap(im(2), identity_field(), Vec2(0.5, 0)); }, ErrorKind::InvalidArgument));
}

TEST_CASE("pushforward of 2 Re z^2 is linear") {
  const HodographMap map(im(2), identity_field(), Vec2(0.5, 0.5));
  const auto w = 2.0 * re(2);
  const auto pf = pushforward(Field(w), map, 2, half(4, 0.8));
  CHECK(pf.failed_vertices == 0);
  const Mesh2D& m = pf.wbar.mesh();
  for (int v = 0; v < m.num_vertices(); ++v) CHECK(pf.wbar.values()(v) == doctest::Approx(-2 * m.vertices[v].x()).epsilon(1e-9));
  CHECK(pf.residual <= 1e-6);

  const auto pc = pushforward(Field(HarmonicPolynomial2d::constant(3.0)), map, 2, half(3, 0.8));
  CHECK(pc.residual <= 1e-12);
}

TEST_CASE("discrete map inverts the interpolated field") {
  auto disc = std::make_shared<const Mesh2D>(disc_mesh(5));
  const auto uh = interpolate(disc, [](const Vec2& p) { return 2 * p.x() * p.y(); });
  const HodographMap map(Field(uh), identity_field(), Vec2(0.5, 0.5));
  for (const Vec2 st : {Vec2(0.2, 0.3), Vec2(-0.4, 0.2), Vec2(0.1, 0.05)}) {
    Vec2 x;
    REQUIRE(map.try_inverse(st, x));
    CHECK(x.x() > -1e-2);
    CHECK(x.y() > -1e-2);
    CHECK(std::abs(uh.value(x) - st.y()) < 1e-10);
    CHECK(std::abs(x.y() * x.y() - x.x() * x.x() - st.x()) < 2e-2);
  }
  const auto wh = interpolate(disc, [](const Vec2& p) { return 2 * (p.x() * p.x() - p.y() * p.y()); });
  const auto pf = pushforward(Field(wh), map, 2, half(3, 0.6));
  const Mesh2D& m = pf.wbar.mesh();
  double err = 0;
  int checked = 0;
  for (int v = 0; v < m.num_vertices(); ++v) {
    if (!pf.wbar.vertex_active(v)) continue;
    err = std::max(err, std::abs(pf.wbar.values()(v) + 2 * m.vertices[v].x()));
    ++checked;
  }
  CHECK(checked > 0.9 * m.num_vertices());
  CHECK(err < 0.05);
}

TEST_CASE("L_a-harmonic basis matches the coefficient recurrence") {
  for (double a : {-0.5, 0.0, 0.7, 2.0}) {
    const auto B = la_harmonic_basis(a, 6);
    REQUIRE(B.basis.size() == 7);
    for (int m = 0; m <= 6; ++m) {
      const auto& P = B.basis[m];
      CHECK(P.degree == m);
      REQUIRE(P.coeffs.size() == static_cast<std::size_t>(m / 2 + 1));
      double c = 1;
      for (int j = 0; j <= m / 2; ++j) {
        if (j > 0) c *= -(m - 2 * j + 2.0) * (m - 2 * j + 1.0) / (2.0 * j * (2.0 * j - 1 + a));
        CHECK(P.coeffs[j] == doctest::Approx(c).epsilon(1e-12));
      }
      // L_a P = 0 by central differences
      const double s = 0.4, t = 0.3, h = 1e-4;
      const double lap = (P(s + h, t) + P(s - h, t) + P(s, t + h) + P(s, t - h) - 4 * P(s, t)) / (h * h);
      CHECK(std::abs(lap + a / t * P.gradient(s, t).y()) < 1e-5);
      CHECK(P(s, -t) == doctest::Approx(P(s, t)));
    }
  }
  CHECK(kind_of([] { la_harmonic_basis(-1, 2); }, ErrorKind::InvalidArgument));
  CHECK(kind_of([] { la_harmonic_basis(0, -1); }, ErrorKind::InvalidArgument));
}

TEST_CASE("sample_disc weights integrate polynomials") {
  const auto d = sample_disc([](const Vec2& p) { return p.squaredNorm(); }, 0.5);
  double area = 0, m2 = 0;
  for (std::size_t i = 0; i < d.points.size(); ++i) area += d.weights[i], m2 += d.weights[i] * d.values[i];
  CHECK(area == doctest::Approx(kPi * 0.25).epsilon(1e-12));
  CHECK(m2 == doctest::Approx(kPi * std::pow(0.5, 4) / 2).epsilon(1e-12));
}

TEST_CASE("Liouville fits") {
  std::vector<DiscSamples> discs;
  const auto w = 2.0 * re(2);
  for (double R : {0.25, 0.5, 1.0}) discs.push_back(sample_disc([&](const Vec2& p) { return w(p); }, R));
  const auto fit = liouville_fit(discs, im(2), 2, 2);
  CHECK(fit.success);
  REQUIRE(fit.coefficients.size() == 2);
  CHECK(std::abs(fit.coefficients[0]) < 1e-10);
  CHECK(fit.coefficients[1] == doctest::Approx(-2).epsilon(1e-10));
  for (double r : fit.residuals) CHECK(r <= 1e-8);

  std::vector<DiscSamples> d0;
  for (double R : {0.5, 1.0}) d0.push_back(sample_disc([](const Vec2& p) { return p.x() * p.x() - p.y() * p.y(); }, R));
  const auto f0 = liouville_fit(d0, im(1), 0, 2);
  CHECK(f0.success);
  REQUIRE(f0.coefficients.size() == 3);
  CHECK(f0.coefficients[2] == doctest::Approx(1).epsilon(1e-10));

  std::vector<DiscSamples> bad;
  for (double R : {0.5, 1.0})
    bad.push_back(sample_disc([](const Vec2& p) { return p.y() == 0 ? 0 : p.y() * std::pow(std::abs(p.y()), -0.5); }, R));
  const auto fb = liouville_fit(bad, im(1), 0.5, 2);
  CHECK_FALSE(fb.success);
  for (double r : fb.residuals) CHECK(r >= 1e-2);
  CHECK_FALSE(fb.harmonic_only);

  std::vector<DiscSamples> degenerate{sample_disc([](const Vec2&) { return 1.0; }, 0.0)};
  CHECK(kind_of([&] { liouville_fit(degenerate, im(1), 0, 2); }, ErrorKind::RankDeficientDictionary));
}
