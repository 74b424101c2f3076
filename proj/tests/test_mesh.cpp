#include "doctest.h"

#include <cmath>
#include <map>
#include <sstream>

#include "nodal/mesh.hpp"

using namespace nodal;

namespace {

double total_area(const Mesh2D& m) {
  double a = 0;
  for (int t = 0; t < m.num_triangles(); ++t) a += m.area(t);
  return a;
}

// every interior edge borders two triangles, boundary edges one, and the
// boundary list covers exactly the latter
void check_conforming(const Mesh2D& m) {
  std::map<std::pair<int, int>, int> count;
  for (const auto& t : m.triangles)
    for (int k = 0; k < 3; ++k) {
      int a = t[k], b = t[(k + 1) % 3];
      if (a > b) std::swap(a, b);
      ++count[{a, b}];
    }
  int single = 0;
  for (const auto& [e, c] : count) {
    CHECK(c <= 2);
    single += c == 1;
  }
  CHECK(single == static_cast<int>(m.boundary.size()));
  for (const auto& e : m.boundary) {
    auto key = std::minmax(e.a, e.b);
    CHECK(count[{key.first, key.second}] == 1);
  }
}

}  // namespace

TEST_CASE("disc meshes are conforming, oriented and shape regular") {
  for (int level : {0, 2, 4}) {
    Mesh2D m = disc_mesh(level, 1.0);
    CAPTURE(level);
    for (int t = 0; t < m.num_triangles(); ++t) CHECK(m.area(t) > 0);
    check_conforming(m);
    CHECK(m.min_angle_deg() >= 20);
    const double polygon = 0.5 * 6 * std::sin(kPi / 3);
    CHECK(total_area(m) >= polygon - 1e-12);
    CHECK(total_area(m) < kPi);
  }
  CHECK(total_area(disc_mesh(6, 1.0)) == doctest::Approx(kPi).epsilon(1e-3));
}

TEST_CASE("half disc carries a symmetry line") {
  Mesh2D m = half_disc_mesh(4, 1.0);
  check_conforming(m);
  int sym = 0;
  for (const auto& e : m.boundary)
    if (e.marker == BoundaryMarker::Symmetry) {
      ++sym;
      CHECK(std::abs(m.vertices[e.a].y()) < 1e-14);
      CHECK(std::abs(m.vertices[e.b].y()) < 1e-14);
    }
  CHECK(sym > 0);
  CHECK(total_area(m) == doctest::Approx(kPi / 2).epsilon(1e-2));
}

TEST_CASE("nodal aligned mesh contains the nodal rays") {
  for (int n = 1; n <= 4; ++n) {
    const auto u = HarmonicPolynomial2d::monomial(n, {0, -1});
    Mesh2D m = nodal_aligned_mesh(u, 3);
    check_conforming(m);
    int on_set = 0;
    for (const auto& v : m.vertices)
      if (std::abs(u(v)) < 1e-12) ++on_set;
    // 2n rays with 2^3 lattice steps each plus the center
    CHECK(on_set >= 2 * n * 8 + 1);
  }
}

TEST_CASE("graded refinement stays conforming and shrinks h near the center") {
  Mesh2D base = disc_mesh(3, 0.5);
  Mesh2D g = graded_mesh(base, Vec2::Zero(), 3, 0.2);
  check_conforming(g);
  CHECK(g.min_angle_deg() >= 20);
  CHECK(g.local_h(g.nearest_vertex(Vec2::Zero())) < base.local_h(base.nearest_vertex(Vec2::Zero())) / 4);
  CHECK(total_area(g) >= total_area(base) - 1e-12);
}

TEST_CASE("locate and barycentric coordinates") {
  Mesh2D m = disc_mesh(3, 1.0);
  for (const Vec2 p : {Vec2(0.1, 0.2), Vec2(-0.5, 0.3), Vec2(0.0, -0.9)}) {
    const int t = m.locate(p, false);
    REQUIRE(t >= 0);
    const auto b = m.barycentric(t, p);
    CHECK(b.minCoeff() >= -1e-12);
    CHECK(b.sum() == doctest::Approx(1));
  }
  CHECK(m.locate(Vec2(3, 3), false) == -1);
}

TEST_CASE("mesh text format round trip") {
  Mesh2D m = half_disc_mesh(2, 0.8, Vec2(0.1, 0.0));
  std::stringstream ss;
  write_mesh(m, ss);
  Mesh2D r = read_mesh(ss);
  CHECK(r.num_vertices() == m.num_vertices());
  CHECK(r.num_triangles() == m.num_triangles());
  CHECK(r.boundary.size() == m.boundary.size());
  CHECK(r.domain.radius == m.domain.radius);
  for (int v = 0; v < m.num_vertices(); ++v) CHECK(r.vertices[v] == m.vertices[v]);
  std::stringstream bad("nodal-mesh 1\ndomain disc 0 0 1\nvertices 2\n0 0\n");
  CHECK_THROWS_AS(read_mesh(bad), Error);
}
