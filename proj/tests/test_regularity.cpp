#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

#include "nodal/error.hpp"
#include "nodal/regularity.hpp"

using namespace nodal;
using Complex = std::complex<double>;

namespace {

HarmonicPolynomial2d im(int n) { return HarmonicPolynomial2d::monomial(n, Complex(0, -1)); }
std::shared_ptr<const Mesh2D> disc(int level) { return std::make_shared<const Mesh2D>(disc_mesh(level)); }

double brute_force(const std::vector<Vec2>& p, const std::vector<double>& f, double alpha, double sep) {
  double best = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = i + 1; j < p.size(); ++j) {
      const double d = (p[i] - p[j]).norm();
      if (d >= sep) best = std::max(best, std::abs(f[i] - f[j]) / std::pow(d, alpha));
    }
  return best;
}

}  // namespace

TEST_CASE("pruned pair scan equals brute force") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int trial = 0; trial < 6; ++trial) {
    std::vector<Vec2> p;
    std::vector<double> f;
    for (int i = 0; i < 700; ++i) {
      p.emplace_back(U(rng), U(rng));
      f.push_back(trial % 2 ? std::sin(3 * p.back().x()) * p.back().y() : U(rng));
    }
    for (double alpha : {0.25, 0.5, 1.0}) {
      const double sep = 0.02 + 0.05 * trial;
      const HolderReport r = holder_seminorm(p, f, alpha, sep);
      CHECK(r.seminorm == doctest::Approx(brute_force(p, f, alpha, sep)).epsilon(1e-14));
      CHECK((r.x - r.y).norm() >= sep);
    }
  }
  CHECK_THROWS_AS(holder_seminorm(std::vector<Vec2>{Vec2(0, 0)}, std::vector<double>{1.0}, 0, 0.1), Error);
}

TEST_CASE("vector pair scan equals brute force") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> U(-1, 1);
  std::vector<Vec2> p, g;
  for (int i = 0; i < 600; ++i) p.emplace_back(U(rng), U(rng)), g.emplace_back(U(rng), std::cos(4 * p.back().x()));
  double best = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = i + 1; j < p.size(); ++j) {
      const double d = (p[i] - p[j]).norm();
      if (d >= 0.05) best = std::max(best, (g[i] - g[j]).norm() / std::pow(d, 0.5));
    }
  CHECK(holder_seminorm(p, g, 0.5, 0.05).seminorm == doctest::Approx(best).epsilon(1e-14));
}

TEST_CASE("seminorms of elementary functions") {
  const auto m = disc(5);
  const double sep = 4 * m->h_max();
  const Ball half{};

  const auto lin = interpolate(m, [](const Vec2& p) { return 2 * p.x(); });
  CHECK(gradient_holder_seminorm(lin, 0.5, sep).seminorm < 1e-10);
  CHECK(holder_seminorm(lin, 1.0, sep).seminorm == doctest::Approx(2).epsilon(1e-12));

  const auto q = interpolate(m, [](const Vec2& p) { return 2 * (p.x() * p.x() - p.y() * p.y()); });
  std::vector<Vec2> pts;
  for (int v = 0; v < m->num_vertices(); ++v)
    if (half.contains(m->vertices[v])) pts.push_back(m->vertices[v]);
  // |grad f(x) - grad f(y)| = 4 |x - y| for f = 2(x^2 - y^2)
  double oracle = 0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      const double d = (pts[i] - pts[j]).norm();
      if (d >= sep) oracle = std::max(oracle, 4 * std::sqrt(d));
    }
  CHECK(gradient_holder_seminorm(q, 0.5, sep, half).seminorm == doctest::Approx(oracle).epsilon(2e-2));
  CHECK(oracle == doctest::Approx(4 * std::sqrt(1.0)).epsilon(1e-6));  // antipodal pair on B_1/2

  const auto kink = interpolate(m, [](const Vec2& p) { return std::abs(p.x()); });
  CHECK(holder_seminorm(kink, 1.0, sep).seminorm <= 1 + 1e-12);
  CHECK(gradient_holder_seminorm(kink, 1.0, sep).seminorm == doctest::Approx(2 / sep).epsilon(0.5));
}

TEST_CASE("seminorms scale linearly") {
  const auto m = disc(4);
  const auto f = interpolate(m, [](const Vec2& p) { return std::exp(p.x()) * std::cos(2 * p.y()); });
  const auto g = interpolate(m, [](const Vec2& p) { return 3.5 * std::exp(p.x()) * std::cos(2 * p.y()); });
  const double sep = 4 * m->h_max();
  CHECK(holder_seminorm(g, 0.5, sep).seminorm == doctest::Approx(3.5 * holder_seminorm(f, 0.5, sep).seminorm).epsilon(1e-12));
  CHECK(gradient_holder_seminorm(g, 0.5, sep).seminorm ==
        doctest::Approx(3.5 * gradient_holder_seminorm(f, 0.5, sep).seminorm).epsilon(1e-12));
}

TEST_CASE("ratio on shared nodal sets") {
  const auto m = disc(5);
  SUBCASE("u = y, v = 2xy") {
    const auto v = interpolate(m, [](const Vec2& p) { return 2 * p.x() * p.y(); });
    const auto w = ratio(v, im(1));
    double err = 0;
    for (int i = 0; i < m->num_vertices(); ++i) {
      const Vec2& p = m->vertices[i];
      if (std::abs(p.y()) > 0.05) CHECK(w[i] == doctest::Approx(2 * p.x()).epsilon(1e-12));
      err = std::max(err, std::abs(w[i] - 2 * p.x()));
    }
    // only the data at (+-1, 0) comes from one-sided gradients
    CHECK(err < 2e-3);
  }
  SUBCASE("u = 2xy, v = Im z^4") {
    const auto v = interpolate(m, [](const Vec2& p) { return im(4)(p); });
    const auto w = ratio(v, im(2));
    const double err = l2_error(w, [](const Vec2& p) { return 2 * (p.x() * p.x() - p.y() * p.y()); });
    CHECK(err < 2e-2);
  }
  SUBCASE("v = u") {
    const auto v = interpolate(m, [](const Vec2& p) { return im(3)(p); });
    const auto w = ratio(v, im(3));
    for (int i = 0; i < m->num_vertices(); ++i) CHECK(w[i] == doctest::Approx(1).epsilon(1e-10));
  }
  SUBCASE("inclusion violated") {
    const auto v = interpolate(m, [](const Vec2& p) { return 1 + p.x(); });
    try {
      ratio(v, im(1));
      FAIL("expected NodalInclusionViolated");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::NodalInclusionViolated);
    }
  }
}

TEST_CASE("ratio agrees with the degenerate solve") {
  const auto m = disc(5);
  const auto v = interpolate(m, [](const Vec2& p) { return im(4)(p); });
  const auto w = ratio(v, im(2));
  WeightSpec ws;
  ws.a = 2;
  ws.u = im(2);
  const auto s = solve_degenerate(ws, identity_field(), [](const Vec2& p) { return 2 * (p.x() * p.x() - p.y() * p.y()); }, m);
  double diff = 0;
  for (int i = 0; i < m->num_vertices(); ++i)
    if (m->vertices[i].norm() <= 0.5) diff = std::max(diff, std::abs(w[i] - s[i]));
  CHECK(diff < 1e-2);
}

TEST_CASE("boundary conditions of the degenerate problem") {
  const auto m = disc(5);
  const auto nd = extract_nodal_set(im(2), m);
  const auto w = interpolate(m, [](const Vec2& p) { return 2 * (p.x() * p.x() - p.y() * p.y()); });
  const auto r = boundary_conditions_check(w, im(2), identity_field(), nd);
  CHECK(r.samples > 0);
  CHECK(r.conormal_defect < 1e-10);
  CHECK(r.singular_gradient < 1e-10);

  const auto ndy = extract_nodal_set(im(1), m);
  const auto w2x = interpolate(m, [](const Vec2& p) { return 2 * p.x(); });
  CHECK(boundary_conditions_check(w2x, im(1), identity_field(), ndy).conormal_defect < 1e-12);
  const auto wy = interpolate(m, [](const Vec2& p) { return p.y(); });
  CHECK(boundary_conditions_check(wy, im(1), identity_field(), ndy).conormal_defect == doctest::Approx(1).epsilon(1e-10));
}

TEST_CASE("sweep: rotation equivariance") {
  SweepOptions o;
  o.levels = {4};
  const auto g = [](const Vec2& p) { return 1 + p.x() + 0.5 * p.y() * p.y(); };
  const auto t = uniformity_sweep(rotation_family(im(2), {0.0, 0.3, 1.1}, g), o);
  REQUIRE(t.rows.size() == 3);
  for (const auto& r : t.rows) {
    CHECK(r.c0alpha == doctest::Approx(t.rows[0].c0alpha).epsilon(1e-8));
    CHECK(r.c1alpha == doctest::Approx(t.rows[0].c1alpha).epsilon(1e-8));
  }
}

TEST_CASE("sweep: powers are finite and mesh stable") {
  SweepOptions o;
  o.levels = {5, 6};
  const auto t = uniformity_sweep(power_family(4, [](const Vec2& p) { return 1 + p.x() + 0.5 * p.y() * p.y(); }), o);
  REQUIRE(t.rows.size() == 8);
  for (std::size_t i = 0; i < t.rows.size(); i += 2) {
    CHECK(std::isfinite(t.rows[i].c1alpha));
    CHECK(std::abs(t.rows[i + 1].c1alpha - t.rows[i].c1alpha) < 0.1 * t.rows[i + 1].c1alpha);
    CHECK(std::abs(t.rows[i + 1].c0alpha - t.rows[i].c0alpha) < 0.1 * t.rows[i + 1].c0alpha);
  }
  CHECK(t.max_c1alpha >= t.rows[0].c1alpha);
}

TEST_CASE("sweep with a = 0 is the plain elliptic solve") {
  SweepOptions o;
  o.a = 0;
  o.levels = {4};
  const auto g = [](const Vec2& p) { return p.x() * p.x() + p.y(); };
  const auto t = uniformity_sweep(power_family(2, g), o);
  const auto mesh = std::make_shared<const Mesh2D>(nodal_aligned_mesh(im(2), 4));
  const auto w = solve_elliptic(identity_field(), g, mesh);
  double sup = 0;
  for (int i = 0; i < mesh->num_vertices(); ++i) sup = std::max(sup, std::abs(w[i]));
  const double sep = 4 * mesh->h_max();
  CHECK(t.rows[1].c1alpha == doctest::Approx(gradient_holder_seminorm(w, 0.5, sep, Ball{}).seminorm / sup).epsilon(1e-12));
}

TEST_CASE("sweep csv header") {
  std::ostringstream out;
  write_sweep_csv({}, out);
  CHECK(out.str() == "case,level,alpha,a,sup_norm,c0alpha,c1alpha,conormal_defect,singular_gradient\n");
}
