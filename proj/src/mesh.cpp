#include "nodal/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "nodal/error.hpp"

namespace nodal {
namespace {

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 d = b - a;
  const double len2 = d.squaredNorm();
  const double t = len2 > 0 ? std::clamp((p - a).dot(d) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + t * d)).norm();
}

double point_triangle_distance(const Mesh2D& m, int t, const Vec2& p) {
  const Eigen::Vector3d b = m.barycentric(t, p);
  if (b.minCoeff() >= 0) return 0;
  const auto& tri = m.triangles[t];
  double d = std::numeric_limits<double>::infinity();
  for (int e = 0; e < 3; ++e)
    d = std::min(d, point_segment_distance(p, m.vertices[tri[e]], m.vertices[tri[(e + 1) % 3]]));
  return d;
}

}  // namespace

bool Domain::contains(const Vec2& p, double tol) const {
  if ((p - center).norm() > radius * (1 + tol)) return false;
  if (shape == Shape::HalfDisc && p.y() < center.y() - tol * radius) return false;
  return true;
}

void Mesh2D::finalize() {
  const int nv = num_vertices();
  for (auto& t : triangles) {
    const double s = cross(vertices[t[1]] - vertices[t[0]], vertices[t[2]] - vertices[t[0]]);
    if (s < 0) std::swap(t[1], t[2]);
    else if (s == 0) throw Error(ErrorKind::InvalidArgument, "degenerate triangle in mesh");
  }
  vertex_tris_.assign(nv, {});
  for (int t = 0; t < num_triangles(); ++t)
    for (int k = 0; k < 3; ++k) vertex_tris_[triangles[t][k]].push_back(t);

  std::vector<std::uint64_t> keys;
  keys.reserve(3 * triangles.size());
  for (const auto& t : triangles)
    for (int k = 0; k < 3; ++k) keys.push_back(edge_key(t[k], t[(k + 1) % 3]));
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  edges_.clear();
  edges_.reserve(keys.size());
  vertex_h_.assign(nv, 0);
  h_max_ = 0;
  h_min_ = std::numeric_limits<double>::infinity();
  for (auto k : keys) {
    const int a = static_cast<int>(k >> 32), b = static_cast<int>(k & 0xffffffffu);
    edges_.emplace_back(a, b);
    const double len = (vertices[a] - vertices[b]).norm();
    vertex_h_[a] = std::max(vertex_h_[a], len);
    vertex_h_[b] = std::max(vertex_h_[b], len);
    h_max_ = std::max(h_max_, len);
    h_min_ = std::min(h_min_, len);
  }

  outer_.assign(nv, 0);
  symmetry_.assign(nv, 0);
  for (const auto& e : boundary) {
    auto& flag = e.marker == BoundaryMarker::Outer ? outer_ : symmetry_;
    flag[e.a] = flag[e.b] = 1;
  }

  Vec2 lo = Vec2::Constant(std::numeric_limits<double>::infinity());
  Vec2 hi = -lo;
  for (const auto& v : vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  const double mean_h = keys.empty() ? 1.0 : std::max(h_max_, 1e-12);
  cell_ = std::max(mean_h, (hi - lo).maxCoeff() / 256);
  box_lo_ = lo - Vec2::Constant(cell_);
  nx_ = static_cast<int>((hi.x() - box_lo_.x()) / cell_) + 2;
  ny_ = static_cast<int>((hi.y() - box_lo_.y()) / cell_) + 2;
  buckets_.assign(static_cast<std::size_t>(nx_) * ny_, {});
  for (int t = 0; t < num_triangles(); ++t) {
    Vec2 tlo = vertices[triangles[t][0]], thi = tlo;
    for (int k = 1; k < 3; ++k) {
      tlo = tlo.cwiseMin(vertices[triangles[t][k]]);
      thi = thi.cwiseMax(vertices[triangles[t][k]]);
    }
    const int i0 = static_cast<int>((tlo.x() - box_lo_.x()) / cell_);
    const int i1 = static_cast<int>((thi.x() - box_lo_.x()) / cell_);
    const int j0 = static_cast<int>((tlo.y() - box_lo_.y()) / cell_);
    const int j1 = static_cast<int>((thi.y() - box_lo_.y()) / cell_);
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i <= i1; ++i) buckets_[static_cast<std::size_t>(j) * nx_ + i].push_back(t);
  }
}

double Mesh2D::area(int t) const {
  const auto& tri = triangles[t];
  return 0.5 * cross(vertices[tri[1]] - vertices[tri[0]], vertices[tri[2]] - vertices[tri[0]]);
}

Vec2 Mesh2D::centroid(int t) const {
  const auto& tri = triangles[t];
  return (vertices[tri[0]] + vertices[tri[1]] + vertices[tri[2]]) / 3.0;
}

Eigen::Matrix<double, 2, 3> Mesh2D::hat_gradients(int t) const {
  const auto& tri = triangles[t];
  const Vec2& p0 = vertices[tri[0]];
  const Vec2& p1 = vertices[tri[1]];
  const Vec2& p2 = vertices[tri[2]];
  const double twice = cross(p1 - p0, p2 - p0);
  Eigen::Matrix<double, 2, 3> g;
  g.col(0) = Vec2(p1.y() - p2.y(), p2.x() - p1.x()) / twice;
  g.col(1) = Vec2(p2.y() - p0.y(), p0.x() - p2.x()) / twice;
  g.col(2) = Vec2(p0.y() - p1.y(), p1.x() - p0.x()) / twice;
  return g;
}

Eigen::Vector3d Mesh2D::barycentric(int t, const Vec2& p) const {
  const auto& tri = triangles[t];
  const Vec2& p0 = vertices[tri[0]];
  const Vec2& p1 = vertices[tri[1]];
  const Vec2& p2 = vertices[tri[2]];
  const double twice = cross(p1 - p0, p2 - p0);
  const double b1 = cross(p - p0, p2 - p0) / twice;
  const double b2 = cross(p1 - p0, p - p0) / twice;
  return {1 - b1 - b2, b1, b2};
}

int Mesh2D::locate(const Vec2& p, bool nearest, const std::function<bool(int)>& accept) const {
  if (buckets_.empty()) throw Error(ErrorKind::InvalidArgument, "mesh not finalized");
  const int ci = static_cast<int>(std::floor((p.x() - box_lo_.x()) / cell_));
  const int cj = static_cast<int>(std::floor((p.y() - box_lo_.y()) / cell_));
  auto cell = [&](int i, int j) -> const std::vector<int>* {
    if (i < 0 || j < 0 || i >= nx_ || j >= ny_) return nullptr;
    return &buckets_[static_cast<std::size_t>(j) * nx_ + i];
  };
  int best = -1;
  double best_min = -1e-12;
  if (const auto* c = cell(ci, cj))
    for (int t : *c) {
      if (accept && !accept(t)) continue;
      const double m = barycentric(t, p).minCoeff();
      if (m >= best_min) {
        best_min = m;
        best = t;
        if (m >= 0) break;
      }
    }
  if (best >= 0 || !nearest) return best;
  double best_d = std::numeric_limits<double>::infinity();
  for (int j = cj - 1; j <= cj + 1; ++j)
    for (int i = ci - 1; i <= ci + 1; ++i)
      if (const auto* c = cell(i, j))
        for (int t : *c) {
          if (accept && !accept(t)) continue;
          const double d = point_triangle_distance(*this, t, p);
          if (d < best_d) {
            best_d = d;
            best = t;
          }
        }
  return best_d <= cell_ ? best : -1;
}

double Mesh2D::min_angle_deg() const {
  double m = 180;
  for (const auto& t : triangles)
    for (int k = 0; k < 3; ++k) {
      const Vec2 a = vertices[t[(k + 1) % 3]] - vertices[t[k]];
      const Vec2 b = vertices[t[(k + 2) % 3]] - vertices[t[k]];
      m = std::min(m, std::acos(std::clamp(a.dot(b) / (a.norm() * b.norm()), -1.0, 1.0)) * 180 / kPi);
    }
  return m;
}

int Mesh2D::nearest_vertex(const Vec2& p) const {
  const int t = locate(p, true);
  int best = -1;
  double bd = std::numeric_limits<double>::infinity();
  if (t >= 0) {
    for (int k = 0; k < 3; ++k) {
      const double d = (vertices[triangles[t][k]] - p).norm();
      if (d < bd) bd = d, best = triangles[t][k];
    }
    return best;
  }
  for (int v = 0; v < num_vertices(); ++v) {
    const double d = (vertices[v] - p).norm();
    if (d < bd) bd = d, best = v;
  }
  return best;
}

Mesh2D Mesh2D::rotated(double theta) const {
  if (domain.shape != Domain::Shape::Disc) throw Error(ErrorKind::InvalidArgument, "only disc meshes rotate");
  Mesh2D m;
  m.vertices = vertices;
  m.triangles = triangles;
  m.boundary = boundary;
  m.level = level;
  m.domain = domain;
  Mat2 r;
  r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  for (auto& v : m.vertices) v = domain.center + r * (v - domain.center);
  if (grading_center) m.grading_center = domain.center + r * (*grading_center - domain.center);
  m.finalize();
  return m;
}

Mesh2D fan_mesh(const std::vector<double>& rays, int level, const Domain& domain) {
  if (level < 0 || level > 12) throw Error(ErrorKind::InvalidArgument, "mesh level out of range [0, 12]");
  const bool closed = domain.shape == Domain::Shape::Disc;
  const int nrays = static_cast<int>(rays.size());
  const int sectors = closed ? nrays : nrays - 1;
  if (sectors < 3) throw Error(ErrorKind::InvalidArgument, "fan needs at least three sectors");
  for (int k = 0; k < sectors; ++k) {
    const double span = (k + 1 < nrays ? rays[k + 1] : rays[0] + 2 * kPi) - rays[k];
    if (span <= 0 || span > kPi / 2 + 1e-12)
      throw Error(ErrorKind::InvalidArgument, "fan sectors must have angles in (0, pi/2]");
  }
  const int n = 1 << level;
  Mesh2D m;
  m.level = level;
  m.domain = domain;
  m.vertices.emplace_back(0, 0);
  // ray points: index 1 + r * n + (i - 1)
  for (int r = 0; r < nrays; ++r)
    for (int i = 1; i <= n; ++i) m.vertices.emplace_back(std::cos(rays[r]) * i / n, std::sin(rays[r]) * i / n);
  auto ray_index = [&](int r, int i) { return i == 0 ? 0 : 1 + (r % nrays) * n + (i - 1); };

  for (int k = 0; k < sectors; ++k) {
    const double t0 = rays[k];
    const double t1 = k + 1 < nrays ? rays[k + 1] : rays[0] + 2 * kPi;
    const Vec2 p0(std::cos(t0), std::sin(t0)), p1(std::cos(t1), std::sin(t1));
    const double mid = 0.5 * (t0 + t1), half = 0.5 * (t1 - t0);
    std::vector<std::vector<int>> idx(n + 1);
    for (int i = 0; i <= n; ++i) {
      idx[i].resize(i + 1);
      for (int j = 0; j <= i; ++j) {
        if (j == 0) idx[i][j] = ray_index(k, i);
        else if (j == i) idx[i][j] = ray_index(k + 1, i);
        else {
          const Vec2 chord = ((i - j) * p0 + j * p1) / n;
          const double phi = std::atan2(chord.y(), chord.x());
          const double rho = std::cos(half) / std::cos(phi - mid);
          idx[i][j] = m.num_vertices();
          m.vertices.push_back(chord / rho);
        }
      }
    }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) {
        m.triangles.emplace_back(idx[i][j], idx[i + 1][j], idx[i + 1][j + 1]);
        if (j < i) m.triangles.emplace_back(idx[i][j], idx[i + 1][j + 1], idx[i][j + 1]);
      }
    for (int j = 0; j < n; ++j) m.boundary.push_back({idx[n][j], idx[n][j + 1], BoundaryMarker::Outer});
    if (!closed && k == 0)
      for (int i = 0; i < n; ++i) m.boundary.push_back({idx[i][0], idx[i + 1][0], BoundaryMarker::Symmetry});
    if (!closed && k == sectors - 1)
      for (int i = 0; i < n; ++i) m.boundary.push_back({idx[i][i], idx[i + 1][i + 1], BoundaryMarker::Symmetry});
  }
  for (auto& v : m.vertices) v = domain.center + domain.radius * v;
  m.finalize();
  return m;
}

Mesh2D disc_mesh(int level, double radius, const Vec2& center, int sectors, double rotation) {
  std::vector<double> rays;
  for (int k = 0; k < sectors; ++k) rays.push_back(rotation + 2 * kPi * k / sectors);
  return fan_mesh(rays, level, Domain{Domain::Shape::Disc, center, radius});
}

Mesh2D half_disc_mesh(int level, double radius, const Vec2& center, int sectors) {
  std::vector<double> rays;
  for (int k = 0; k <= sectors; ++k) rays.push_back(kPi * k / sectors);
  return fan_mesh(rays, level, Domain{Domain::Shape::HalfDisc, center, radius});
}

Mesh2D nodal_aligned_mesh(const HarmonicPolynomial2d& u, int level, double radius) {
  const int N = u.degree();
  if (N < 1) throw Error(ErrorKind::InvalidArgument, "aligned mesh needs a nonconstant polynomial");
  for (int k = 0; k < N; ++k)
    if (u.coeff(k) != std::complex<double>(0))
      throw Error(ErrorKind::InvalidArgument, "aligned mesh needs a homogeneous polynomial");
  const double phase = std::arg(u.coeff(N));
  const int pieces = (3 + N - 1) / N;
  const double first = std::fmod((kPi / 2 - phase) / N + 2 * kPi, kPi / N);
  std::vector<double> rays;
  for (int k = 0; k < 2 * N * pieces; ++k) rays.push_back(first + k * kPi / (N * pieces));
  return fan_mesh(rays, level, Domain{Domain::Shape::Disc, Vec2::Zero(), radius});
}

Mesh2D refine(const Mesh2D& mesh, const std::vector<char>& marked) {
  const auto& V = mesh.vertices;
  auto len2 = [&](int a, int b) { return (V[a] - V[b]).squaredNorm(); };
  // local edge e is opposite vertex e
  auto longest = [&](const Eigen::Vector3i& t) {
    int best = 0;
    for (int e = 1; e < 3; ++e) {
      const double le = len2(t[(e + 1) % 3], t[(e + 2) % 3]);
      const double lb = len2(t[(best + 1) % 3], t[(best + 2) % 3]);
      if (le > lb * (1 + 1e-12)) best = e;
      else if (le >= lb * (1 - 1e-12) &&
               edge_key(t[(e + 1) % 3], t[(e + 2) % 3]) < edge_key(t[(best + 1) % 3], t[(best + 2) % 3]))
        best = e;
    }
    return best;
  };
  std::unordered_set<std::uint64_t> split;
  for (int t = 0; t < mesh.num_triangles(); ++t)
    if (marked[t]) {
      const auto& tri = mesh.triangles[t];
      const int e = longest(tri);
      split.insert(edge_key(tri[(e + 1) % 3], tri[(e + 2) % 3]));
    }
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& tri : mesh.triangles) {
      bool any = false;
      for (int e = 0; e < 3; ++e) any = any || split.count(edge_key(tri[(e + 1) % 3], tri[(e + 2) % 3]));
      if (!any) continue;
      const int e = longest(tri);
      if (split.insert(edge_key(tri[(e + 1) % 3], tri[(e + 2) % 3])).second) changed = true;
    }
  }
  std::unordered_map<std::uint64_t, BoundaryMarker> boundary_marker;
  for (const auto& b : mesh.boundary) boundary_marker[edge_key(b.a, b.b)] = b.marker;

  Mesh2D out;
  out.vertices = mesh.vertices;
  out.level = mesh.level;
  out.grading_center = mesh.grading_center;
  out.domain = mesh.domain;
  std::unordered_map<std::uint64_t, int> mid;
  auto midpoint = [&](int a, int b) {
    const auto key = edge_key(a, b);
    auto it = mid.find(key);
    if (it != mid.end()) return it->second;
    Vec2 p = 0.5 * (V[a] + V[b]);
    auto bm = boundary_marker.find(key);
    if (bm != boundary_marker.end() && bm->second == BoundaryMarker::Outer) {
      const Vec2 d = p - mesh.domain.center;
      p = mesh.domain.center + mesh.domain.radius * d / d.norm();
    }
    const int id = static_cast<int>(out.vertices.size());
    out.vertices.push_back(p);
    mid.emplace(key, id);
    return id;
  };
  for (const auto& tri : mesh.triangles) {
    const int e = longest(tri);
    const int v0 = tri[(e + 1) % 3], v1 = tri[(e + 2) % 3], v2 = tri[e];
    if (!split.count(edge_key(v0, v1))) {
      out.triangles.push_back(tri);
      continue;
    }
    const int m = midpoint(v0, v1);
    if (split.count(edge_key(v1, v2))) {
      const int m12 = midpoint(v1, v2);
      out.triangles.emplace_back(m, v1, m12);
      out.triangles.emplace_back(m, m12, v2);
    } else {
      out.triangles.emplace_back(m, v1, v2);
    }
    if (split.count(edge_key(v2, v0))) {
      const int m20 = midpoint(v2, v0);
      out.triangles.emplace_back(v0, m, m20);
      out.triangles.emplace_back(m, v2, m20);
    } else {
      out.triangles.emplace_back(v0, m, v2);
    }
  }
  for (const auto& b : mesh.boundary) {
    auto it = mid.find(edge_key(b.a, b.b));
    if (it == mid.end()) out.boundary.push_back(b);
    else {
      out.boundary.push_back({b.a, it->second, b.marker});
      out.boundary.push_back({it->second, b.b, b.marker});
    }
  }
  out.finalize();
  return out;
}

Mesh2D graded_mesh(const Mesh2D& base, const Vec2& center, int rings, double ring_radius) {
  Mesh2D m = base;
  m.finalize();
  const double h0 = base.h_max();
  for (int k = 1; k <= rings; ++k) {
    const double rho = ring_radius * std::pow(2.0, 1 - k);
    const double target = h0 * std::pow(2.0, -k);
    for (int pass = 0; pass < 16; ++pass) {
      std::vector<char> marked(m.num_triangles(), 0);
      bool any = false;
      for (int t = 0; t < m.num_triangles(); ++t) {
        const auto& tri = m.triangles[t];
        double longest = 0;
        for (int e = 0; e < 3; ++e)
          longest = std::max(longest, (m.vertices[tri[e]] - m.vertices[tri[(e + 1) % 3]]).norm());
        if (longest <= target * 1.001) continue;
        if (point_triangle_distance(m, t, center) > rho) continue;
        marked[t] = 1;
        any = true;
      }
      if (!any) break;
      m = refine(m, marked);
    }
  }
  m.grading_center = center;
  m.finalize();
  return m;
}

void write_mesh(const Mesh2D& mesh, std::ostream& out) {
  char buf[128];
  out << "nodal-mesh 1\n";
  std::snprintf(buf, sizeof buf, "domain %s %.17g %.17g %.17g\n",
                mesh.domain.shape == Domain::Shape::Disc ? "disc" : "halfdisc", mesh.domain.center.x(),
                mesh.domain.center.y(), mesh.domain.radius);
  out << buf << "level " << mesh.level << "\n";
  out << "vertices " << mesh.num_vertices() << "\n";
  for (const auto& v : mesh.vertices) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g\n", v.x(), v.y());
    out << buf;
  }
  out << "triangles " << mesh.num_triangles() << "\n";
  for (const auto& t : mesh.triangles) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << "markers " << mesh.boundary.size() << "\n";
  for (const auto& b : mesh.boundary) out << b.a << ' ' << b.b << ' ' << static_cast<int>(b.marker) << '\n';
}

Mesh2D read_mesh(std::istream& in) {
  auto bad = [](const std::string& what) { return Error(ErrorKind::ParseError, "mesh file: " + what); };
  std::string word, shape;
  int version = 0;
  if (!(in >> word >> version) || word != "nodal-mesh" || version != 1) throw bad("missing 'nodal-mesh 1' header");
  Mesh2D m;
  double cx, cy, r;
  if (!(in >> word >> shape >> cx >> cy >> r) || word != "domain") throw bad("missing domain line");
  if (shape == "disc") m.domain.shape = Domain::Shape::Disc;
  else if (shape == "halfdisc") m.domain.shape = Domain::Shape::HalfDisc;
  else throw bad("unknown domain shape " + shape);
  m.domain.center = Vec2(cx, cy);
  m.domain.radius = r;
  if (!(in >> word >> m.level) || word != "level") throw bad("missing level line");
  long n = 0;
  if (!(in >> word >> n) || word != "vertices" || n < 3) throw bad("missing vertices section");
  m.vertices.resize(n);
  for (auto& v : m.vertices)
    if (!(in >> v.x() >> v.y())) throw bad("truncated vertices");
  if (!(in >> word >> n) || word != "triangles" || n < 1) throw bad("missing triangles section");
  m.triangles.resize(n);
  for (auto& t : m.triangles) {
    if (!(in >> t[0] >> t[1] >> t[2])) throw bad("truncated triangles");
    for (int k = 0; k < 3; ++k)
      if (t[k] < 0 || t[k] >= m.num_vertices()) throw bad("triangle index out of range");
  }
  if (!(in >> word >> n) || word != "markers") throw bad("missing markers section");
  for (long k = 0; k < n; ++k) {
    BoundaryEdge e;
    int marker = 0;
    if (!(in >> e.a >> e.b >> marker)) throw bad("truncated markers");
    if (marker != 1 && marker != 2) throw bad("unknown boundary marker");
    e.marker = static_cast<BoundaryMarker>(marker);
    m.boundary.push_back(e);
  }
  m.finalize();
  return m;
}

}  // namespace nodal
