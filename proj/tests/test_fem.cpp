#include "doctest.h"

#include <cmath>

#include "nodal/fem.hpp"

using namespace nodal;
using Complex = std::complex<double>;

namespace {

std::shared_ptr<const Mesh2D> disc(int level, double radius = 1.0) {
  return std::make_shared<const Mesh2D>(disc_mesh(level, radius));
}

HarmonicPolynomial2d y_poly() { return HarmonicPolynomial2d::monomial(1, Complex(0, -1)); }
HarmonicPolynomial2d xy2() { return HarmonicPolynomial2d::monomial(2, Complex(0, -1)); }  // 2xy

double slope(const std::vector<double>& h, const std::vector<double>& e) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int n = static_cast<int>(h.size());
  for (int i = 0; i < n; ++i) {
    const double x = std::log(h[i]), y = std::log(e[i]);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("solve_elliptic reproduces harmonic and constant data") {
  const auto re2 = HarmonicPolynomial2d::monomial(2);
  std::vector<double> hs, errs;
  for (int level : {3, 4, 5}) {
    auto m = disc(level);
    const auto w = solve_elliptic(identity_field(), [&](const Vec2& p) { return re2(p); }, m);
    hs.push_back(m->h_max());
    errs.push_back(l2_error(w, [&](const Vec2& p) { return re2(p); }));
  }
  CHECK(slope(hs, errs) >= 1.8);

  const auto one = solve_elliptic(identity_field(), [](const Vec2&) { return 1.0; }, disc(3));
  CHECK((one.values().array() - 1).abs().maxCoeff() < 1e-12);

  const auto A = constant_field(2, 0, 0.5);
  const auto x = solve_elliptic(A, [](const Vec2& p) { return p.x(); }, disc(3));
  for (int v = 0; v < x.mesh().num_vertices(); ++v) CHECK(x[v] == doctest::Approx(x.mesh().vertices[v].x()).epsilon(1e-11));
}

TEST_CASE("discrete maximum principle up to quadrature error") {
  const auto A = rotation_perturbed(0.3, 0.5, 0.0);
  const auto w = solve_elliptic(A, [](const Vec2& p) { return std::sin(3 * p.x()) + p.y(); }, disc(4));
  double lo = 1e9, hi = -1e9;
  for (int v = 0; v < w.mesh().num_vertices(); ++v)
    if (w.mesh().on_outer_boundary(v)) lo = std::min(lo, w[v]), hi = std::max(hi, w[v]);
  CHECK(w.values().maxCoeff() <= hi + 1e-2);
  CHECK(w.values().minCoeff() >= lo - 1e-2);
}

TEST_CASE("degenerate solve with u = y, a = 2 keeps w = 2x") {
  WeightSpec ws{2.0, y_poly(), 0};
  auto m = disc(4);
  const auto w = solve_degenerate(ws, identity_field(), [](const Vec2& p) { return 2 * p.x(); }, m);
  for (int v = 0; v < m->num_vertices(); ++v) CHECK(w[v] == doctest::Approx(2 * m->vertices[v].x()).epsilon(1e-10));
  CHECK(weak_residual(w, ws, identity_field()) < 1e-8);
}

TEST_CASE("degenerate solve with u = 2xy, a = 2 converges to 2(x^2 - y^2)") {
  WeightSpec ws{2.0, xy2(), 0};
  auto exact = [](const Vec2& p) { return 2 * (p.x() * p.x() - p.y() * p.y()); };
  std::vector<double> hs, errs;
  for (int level : {3, 4, 5}) {
    auto m = disc(level);
    const auto w = solve_degenerate(ws, identity_field(), exact, m);
    CHECK(weak_residual(w, ws, identity_field()) < 1e-8);
    hs.push_back(m->h_max());
    errs.push_back(l2_error(w, exact));
  }
  CHECK(slope(hs, errs) >= 1.8);
}

TEST_CASE("a = 0 reduces to the elliptic solve") {
  WeightSpec ws{0.0, xy2(), 0};
  auto m = disc(4);
  auto g = [](const Vec2& p) { return std::exp(p.x()) * std::cos(p.y()) + p.x() * p.y() * p.y(); };
  const auto w0 = solve_degenerate(ws, identity_field(), g, m);
  const auto w1 = solve_elliptic(identity_field(), g, m);
  CHECK((w0.values() - w1.values()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("exponent threshold") {
  WeightSpec ws{-1.0, xy2(), 0};  // a_S = 1
  CHECK_THROWS_AS(solve_degenerate(ws, identity_field(), [](const Vec2&) { return 0.0; }, disc(2)), Error);
  try {
    ws.validate();
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ExponentBelowThreshold);
  }
  WeightSpec cubic{-0.7, HarmonicPolynomial2d::monomial(3), 0};  // a_S = 2/3
  CHECK_THROWS_AS(cubic.validate(), Error);
  cubic.a = -0.6;
  CHECK_NOTHROW(cubic.validate());
}

TEST_CASE("negative exponents integrate the singular weight") {
  // int over the unit disc of |y|^a = 2 int_0^1 int_0^pi r^(1+a) |sin t|^a
  for (double a : {-0.5, -0.3, 0.5, 1.5}) {
    CAPTURE(a);
    WeightSpec ws{a, y_poly(), 0};
    auto m = std::make_shared<const Mesh2D>(disc_mesh(5, 1.0));
    WeightedSystem sys(m, identity_field(), &ws);
    double total = 0;
    for (int t = 0; t < m->num_triangles(); ++t) total += sys.element_weights()[t](0, 0);
    const double angular = std::sqrt(kPi) * std::exp(std::lgamma((a + 1) / 2) - std::lgamma(a / 2 + 1));
    const double exact = 2 * angular / (2 + a);
    // the polygonal domain misses O(h^2) of the area
    CHECK(total == doctest::Approx(exact).epsilon(5e-3));
  }
}

TEST_CASE("weak residual of an interpolated pair decays, a non-solution does not") {
  WeightSpec ws{2.0, xy2(), 0};
  auto exact = [](const Vec2& p) { return 2 * (p.x() * p.x() - p.y() * p.y()); };
  std::vector<double> hs, res;
  for (int level : {3, 4, 5}) {
    auto m = disc(level);
    hs.push_back(m->h_max());
    res.push_back(weak_residual(interpolate(m, exact), ws, identity_field()));
  }
  CHECK(res[2] < res[0]);

  WeightSpec wy{2.0, y_poly(), 0};
  std::vector<double> bad;
  for (int level : {3, 4, 5}) bad.push_back(weak_residual_lumped(interpolate(disc(level), [](const Vec2& p) { return p.y(); }), wy, identity_field()));
  CHECK(bad[2] > 0.5 * bad[0]);
  CHECK(bad[2] > 0.1);
}

TEST_CASE("energy comparability") {
  const auto A = rotation_perturbed(0.3, 0.5, 0.0);
  WeightSpec ws{2.0, xy2(), 0};
  auto m = disc(3);
  WeightedSystem sys(m, A, &ws);
  WeightedSystem iso(m, identity_field(), &ws);
  Eigen::VectorXd phi(m->num_vertices());
  for (int v = 0; v < phi.size(); ++v) phi(v) = std::sin(2 * m->vertices[v].x() + 3 * m->vertices[v].y() * m->vertices[v].y());
  const double form = phi.dot(sys.matrix() * phi);
  const double ref = phi.dot(iso.matrix() * phi);
  CHECK(form >= A.lambda * ref * (1 - 1e-6));
  CHECK(form <= A.Lambda * ref * (1 + 1e-6));
}

TEST_CASE("per-component solves are independent of data elsewhere") {
  WeightSpec ws{0.5, xy2(), 2};
  auto m = std::make_shared<const Mesh2D>(nodal_aligned_mesh(xy2(), 4));
  SolveOptions opt;
  opt.mode = SolveMode::PerComponent;
  opt.seed = Vec2(0.3, 0.4);
  auto g1 = [](const Vec2& p) { return p.x() + p.y(); };
  auto g2 = [&](const Vec2& p) { return (p.x() > -1e-12 && p.y() > -1e-12) ? g1(p) : 5.0 + p.x(); };
  const auto w1 = solve_degenerate(ws, identity_field(), g1, m, opt);
  const auto w2 = solve_degenerate(ws, identity_field(), g2, m, opt);
  int active = 0;
  for (int v = 0; v < m->num_vertices(); ++v) {
    const Vec2& p = m->vertices[v];
    if (p.x() > 1e-12 && p.y() > 1e-12) {
      ++active;
      CHECK(w1[v] == doctest::Approx(w2[v]).epsilon(1e-12));
    }
  }
  CHECK(active > 0);
}

TEST_CASE("half-plane L_a solver reproduces x^2 - y^2/(1+a)") {
  for (double a : {-0.5, 0.0, 1.0, 2.0}) {
    CAPTURE(a);
    auto P = [a](const Vec2& p) { return p.x() * p.x() - p.y() * p.y() / (1 + a); };
    std::vector<double> hs, errs;
    for (int level : {3, 4, 5}) {
      auto m = std::make_shared<const Mesh2D>(half_disc_mesh(level, 1.0));
      const auto w = solve_halfplane_la(a, P, m);
      hs.push_back(m->h_max());
      errs.push_back(l2_error(w, P));
    }
    CHECK(slope(hs, errs) >= 1.8);
  }
  auto m = std::make_shared<const Mesh2D>(half_disc_mesh(3, 1.0));
  const auto c = solve_halfplane_la(0.5, [](const Vec2&) { return 3.0; }, m);
  CHECK((c.values().array() - 3).abs().maxCoeff() < 1e-12);
}

TEST_CASE("A-harmonic conjugate of discrete solutions") {
  std::vector<double> errs;
  for (int level : {3, 4, 5}) {
    auto m = disc(level);
    const auto u = interpolate(m, [](const Vec2& p) { return p.y(); });
    const auto ubar = a_harmonic_conjugate(u, identity_field());
    double e = 0;
    for (int v = 0; v < m->num_vertices(); ++v) e = std::max(e, std::abs(ubar[v] + m->vertices[v].x()));
    CHECK(e < 1e-12);
    const auto re2 = HarmonicPolynomial2d::monomial(2);
    const auto im2 = harmonic_conjugate(re2);
    const auto u2 = solve_elliptic(identity_field(), [&](const Vec2& p) { return re2(p); }, m);
    errs.push_back(l2_error(a_harmonic_conjugate(u2, identity_field()), [&](const Vec2& p) { return im2(p); }));
  }
  CHECK(errs[2] < errs[0] / 8);

  const auto A = constant_field(2, 0, 0.5);
  auto m = disc(5);
  const auto u = solve_elliptic(A, [](const Vec2& p) { return p.x() + p.x() * p.y(); }, m);
  double defect = 0;
  const auto ubar = a_harmonic_conjugate(u, A, 2e-2, &defect);
  // grad ubar = (-u_y / 2, 2 u_x) checked at interior vertices via recovered gradients
  double worst = 0;
  for (int v = 0; v < m->num_vertices(); ++v) {
    if (m->vertices[v].norm() > 0.7) continue;
    const Vec2 gu = u.recovered_gradients()[v], gb = ubar.recovered_gradients()[v];
    worst = std::max(worst, (gb - Vec2(-0.5 * gu.y(), 2 * gu.x())).norm());
  }
  CHECK(worst < 0.05);
}

TEST_CASE("loop defect detection") {
  auto m = disc(4);
  // x y^2 is not harmonic: its rotated gradient field has curl
  const auto u = interpolate(m, [](const Vec2& p) { return p.x() * p.y() * p.y() * 5; });
  CHECK_THROWS_AS(a_harmonic_conjugate(u, identity_field()), Error);
}
