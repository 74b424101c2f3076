#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

#include "nodal/fem.hpp"
#include "nodal/nodal_set.hpp"

using namespace nodal;
using Complex = std::complex<double>;

namespace {

std::shared_ptr<const Mesh2D> disc(int level) { return std::make_shared<const Mesh2D>(disc_mesh(level, 1.0, Vec2::Zero(), 6, 0.1)); }
HarmonicPolynomial2d im(int n) { return HarmonicPolynomial2d::monomial(n, Complex(0, -1)); }
HarmonicPolynomial2d re(int n) { return HarmonicPolynomial2d::monomial(n); }

}  // namespace

TEST_CASE("nodal set of y") {
  const auto nd = extract_nodal_set(im(1), disc(4));
  CHECK(nd.polylines.size() == 1);
  CHECK(nd.singular_points.empty());
  CHECK(nd.num_components == 2);
  for (const auto& line : nd.polylines)
    for (const Vec2& p : line) CHECK(std::abs(p.y()) < 1e-14);
}

TEST_CASE("nodal set of Im z^2") {
  const auto nd = extract_nodal_set(im(2), disc(4));
  REQUIRE(nd.singular_points.size() == 1);
  CHECK(nd.singular_points[0].position.norm() < 1e-12);
  CHECK(nd.singular_points[0].branches == 4);
  CHECK(nd.singular_points[0].order == doctest::Approx(2).epsilon(1e-3));
  CHECK(nd.num_components == 4);
  for (const auto& line : nd.polylines)
    for (const Vec2& p : line) CHECK(std::min(std::abs(p.x()), std::abs(p.y())) < 1e-13);
}

TEST_CASE("nodal set of Re z^N: rays, equal angles, 2N components") {
  for (int n = 2; n <= 5; ++n) {
    CAPTURE(n);
    const auto nd = extract_nodal_set(re(n), disc(5));
    REQUIRE(nd.singular_points.size() == 1);
    CHECK(nd.singular_points[0].branches == 2 * n);
    CHECK(std::abs(nd.singular_points[0].order - n) < 1e-3);
    CHECK(nd.num_components == 2 * n);
    // angles of the polyline points on the unit circle of radius 0.9
    std::vector<double> angles;
    for (const auto& line : nd.polylines)
      for (std::size_t i = 0; i + 1 < line.size(); ++i) {
        const double ra = line[i].norm(), rb = line[i + 1].norm();
        if ((ra - 0.5) * (rb - 0.5) <= 0 && ra != rb) {
          const Vec2 p = line[i] + (0.5 - ra) / (rb - ra) * (line[i + 1] - line[i]);
          double th = std::atan2(p.y(), p.x());
          if (th < 0) th += 2 * kPi;
          angles.push_back(th);
        }
      }
    std::sort(angles.begin(), angles.end());
    REQUIRE(angles.size() == static_cast<std::size_t>(2 * n));
    for (int k = 0; k < 2 * n; ++k) {
      // cos(N theta) = 0 at theta = pi/(2N) + k pi/N
      CHECK(std::abs(angles[k] - (kPi / (2 * n) + k * kPi / n)) < 2 * kPi / 180);
    }
  }
}

TEST_CASE("discrete fields find saddles") {
  auto m = disc(5);
  const auto u = solve_elliptic(identity_field(), [](const Vec2& p) { return im(2)(p); }, m);
  const auto nd = extract_nodal_set(u, m);
  CHECK(nd.num_components == 4);
  REQUIRE(nd.singular_points.size() == 1);
  CHECK(nd.singular_points[0].position.norm() < 3 * m->h_max());
  CHECK(nd.singular_points[0].branches == 4);
}

TEST_CASE("degenerate field") {
  auto m = disc(2);
  const auto zero = interpolate(m, [](const Vec2&) { return 0.0; });
  CHECK_THROWS_AS(extract_nodal_set(zero, m), Error);
}

TEST_CASE("distance to the nodal set") {
  const auto ndy = extract_nodal_set(im(1), disc(4));
  CHECK(dist_to_nodal(ndy, Vec2(0.3, 0.2)) == doctest::Approx(0.2));
  const auto nd2 = extract_nodal_set(im(2), disc(4));
  CHECK(dist_to_nodal(nd2, Vec2(0.1, 0.1)) == doctest::Approx(0.1));
  CHECK(dist_to_nodal(nd2, nd2.polylines[0][1]) < 1e-15);

  std::mt19937 rng(7);
  std::uniform_real_distribution<double> d(-0.7, 0.7);
  const auto nd3 = extract_nodal_set(re(3) + im(1) * 0.2, disc(4));
  for (int i = 0; i < 200; ++i) {
    const Vec2 p(d(rng), d(rng)), q(d(rng), d(rng));
    CHECK(std::abs(dist_to_nodal(nd3, p) - dist_to_nodal(nd3, q)) <= (p - q).norm() + 1e-14);
  }
}

TEST_CASE("hooking diagnostic") {
  const auto hy = find_hook(im(1), Vec2(0.2, 0), 0.05, 0.5);
  CHECK(hy.angle <= 0.01);
  const auto h2 = find_hook(im(2), Vec2(0.1, 0), 0.05, 0.5);
  CHECK(h2.angle >= kPi / 2 - 0.05);
  CHECK(std::abs(h2.found.x()) < 1e-10);
  // equal-angle branch structure: at least (10/11) pi / (2N)
  for (int n = 2; n <= 3; ++n) {
    const double th = kPi / (2 * n);
    const Vec2 x0 = 0.1 * Vec2(std::cos(th), std::sin(th));
    const auto h = find_hook(re(n), x0, 0.02, 0.5);
    CHECK(h.angle >= 10.0 / 11.0 * kPi / (2 * n));
  }
  CHECK_THROWS_AS(find_hook(im(1), Vec2(0.2, 0.3), 0.05, 0.5), Error);
  try {
    find_hook(im(1), Vec2(0, 0), 1e-3, 1e-3);
    find_hook(parse_polynomial("y + 5"), Vec2(0, -5), 0.01, 0.02);
    find_hook(im(1) + HarmonicPolynomial2d::constant(0.0), Vec2(0, 0), 0.1, 0.2);
  } catch (...) {
    CHECK(false);
  }
}

TEST_CASE("hook reports missing intersections") {
  // circles around a point of y = 0 always meet it; use a field with a closed-off nodal set
  auto m = disc(4);
  const auto u = interpolate(m, [](const Vec2& p) { return p.y() < 0 ? p.y() : 0.0 + p.y(); });
  try {
    find_hook(u, Vec2(0, 0), 2.0, 3.0);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NoNodalIntersection);
  }
}

TEST_CASE("xi diagnostic") {
  for (int n = 1; n <= 4; ++n) {
    const auto r = xi_diagnostic(re(n), n, 0.5);
    CHECK(r.min_modulus == doctest::Approx(n).epsilon(1e-12));
    CHECK(r.max_modulus == doctest::Approx(n).epsilon(1e-12));
    CHECK(r.log_lipschitz < 1e-9);
  }
  const auto r2 = xi_diagnostic(im(2), 2, 0.5);
  CHECK(r2.min_modulus == doctest::Approx(2).epsilon(1e-12));
  try {
    xi_diagnostic(re(2), 3, 0.5);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::OrderMismatch);
  }
  CHECK_THROWS_AS(xi_diagnostic(re(3), 2, 0.5), Error);
}

TEST_CASE("csv exports") {
  const auto nd = extract_nodal_set(im(2), disc(2));
  std::ostringstream a, b;
  write_polylines_csv(nd, a);
  write_components_csv(nd, b);
  CHECK(a.str().rfind("polyline,x0,y0,x1,y1\n", 0) == 0);
  CHECK(b.str().rfind("triangle,component,sign\n", 0) == 0);
}
