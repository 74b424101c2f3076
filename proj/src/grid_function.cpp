#include "nodal/grid_function.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "nodal/error.hpp"
#include "nodal/quadrature.hpp"

namespace nodal {

GridFunction::GridFunction(std::shared_ptr<const Mesh2D> mesh, Eigen::VectorXd values, std::vector<char> active,
                           std::vector<char> active_triangles)
    : mesh_(std::move(mesh)), values_(std::move(values)), active_(std::move(active)),
      tri_active_(std::move(active_triangles)) {
  if (!mesh_) throw Error(ErrorKind::InvalidArgument, "grid function without mesh");
  const Mesh2D& m = *mesh_;
  if (values_.size() != m.num_vertices())
    throw Error(ErrorKind::InvalidArgument, "grid function length differs from vertex count");
  if (!active_.empty() && static_cast<int>(active_.size()) != m.num_vertices())
    throw Error(ErrorKind::InvalidArgument, "vertex mask length differs from vertex count");
  if (!values_.allFinite()) throw Error(ErrorKind::InvalidArgument, "grid function has non-finite values");
  if (tri_active_.empty() && !active_.empty()) {
    tri_active_.assign(m.num_triangles(), 1);
    for (int t = 0; t < m.num_triangles(); ++t)
      for (int k = 0; k < 3; ++k)
        if (!active_[m.triangles[t][k]]) tri_active_[t] = 0;
  }
  recovered_.assign(m.num_vertices(), Vec2::Zero());
  std::vector<double> weight(m.num_vertices(), 0);
  for (int t = 0; t < m.num_triangles(); ++t) {
    if (!triangle_active(t)) continue;
    const Vec2 g = triangle_gradient(t);
    const double a = m.area(t);
    for (int k = 0; k < 3; ++k) {
      recovered_[m.triangles[t][k]] += a * g;
      weight[m.triangles[t][k]] += a;
    }
  }
  for (int v = 0; v < m.num_vertices(); ++v)
    if (weight[v] > 0) recovered_[v] /= weight[v];
}

int GridFunction::locate(const Vec2& p) const {
  if (tri_active_.empty()) return mesh_->locate(p, true);
  return mesh_->locate(p, true, [this](int t) { return tri_active_[t] != 0; });
}

bool GridFunction::try_value(const Vec2& p, double& out) const {
  const int t = locate(p);
  if (t < 0) return false;
  const Eigen::Vector3d b = mesh_->barycentric(t, p);
  const auto& tri = mesh_->triangles[t];
  out = b(0) * values_(tri[0]) + b(1) * values_(tri[1]) + b(2) * values_(tri[2]);
  return true;
}

double GridFunction::value(const Vec2& p) const {
  double v = 0;
  if (!try_value(p, v))
    throw Error(ErrorKind::InvalidArgument,
                "point (" + std::to_string(p.x()) + ", " + std::to_string(p.y()) + ") outside the grid function");
  return v;
}

Vec2 GridFunction::triangle_gradient(int t) const {
  const auto& tri = mesh_->triangles[t];
  const auto g = mesh_->hat_gradients(t);
  return g.col(0) * values_(tri[0]) + g.col(1) * values_(tri[1]) + g.col(2) * values_(tri[2]);
}

Vec2 GridFunction::gradient(const Vec2& p) const {
  const int t = locate(p);
  if (t < 0) throw Error(ErrorKind::InvalidArgument, "gradient requested outside the grid function");
  return triangle_gradient(t);
}

Vec2 GridFunction::recovered_gradient(const Vec2& p) const {
  const int t = locate(p);
  if (t < 0) throw Error(ErrorKind::InvalidArgument, "gradient requested outside the grid function");
  const Eigen::Vector3d b = mesh_->barycentric(t, p);
  const auto& tri = mesh_->triangles[t];
  return b(0) * recovered_[tri[0]] + b(1) * recovered_[tri[1]] + b(2) * recovered_[tri[2]];
}

GridFunction interpolate(std::shared_ptr<const Mesh2D> mesh, const std::function<double(const Vec2&)>& f) {
  Eigen::VectorXd v(mesh->num_vertices());
  for (int i = 0; i < mesh->num_vertices(); ++i) v(i) = f(mesh->vertices[i]);
  return GridFunction(std::move(mesh), std::move(v));
}

void write_csv(const GridFunction& f, std::ostream& out) {
  out << "x,y,value\n";
  char buf[96];
  const Mesh2D& m = f.mesh();
  for (int v = 0; v < m.num_vertices(); ++v) {
    if (!f.vertex_active(v)) continue;
    std::snprintf(buf, sizeof buf, "%.12e,%.12e,%.12e\n", m.vertices[v].x(), m.vertices[v].y(), f[v]);
    out << buf;
  }
}

double value(const Field& f, const Vec2& p) {
  return std::visit(
      [&](const auto& g) -> double {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, HarmonicPolynomial2d>) return g(p);
        else if constexpr (std::is_same_v<T, GridFunction>) return g.value(p);
        else return g.base(p) + g.perturbation.value(p);
      },
      f);
}

Vec2 gradient(const Field& f, const Vec2& p) {
  return std::visit(
      [&](const auto& g) -> Vec2 {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, HarmonicPolynomial2d>) return g.gradient(p);
        else if constexpr (std::is_same_v<T, GridFunction>) return g.gradient(p);
        else return g.base.gradient(p) + g.perturbation.gradient(p);
      },
      f);
}

Vec2 smooth_gradient(const Field& f, const Vec2& p) {
  return std::visit(
      [&](const auto& g) -> Vec2 {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, HarmonicPolynomial2d>) return g.gradient(p);
        else if constexpr (std::is_same_v<T, GridFunction>) return g.recovered_gradient(p);
        else return g.base.gradient(p) + g.perturbation.recovered_gradient(p);
      },
      f);
}

const Mesh2D* mesh_of(const Field& f) {
  if (const auto* g = std::get_if<GridFunction>(&f)) return &g->mesh();
  if (const auto* g = std::get_if<PerturbedField>(&f)) return &g->perturbation.mesh();
  return nullptr;
}

double l2_error(const GridFunction& f, const std::function<double(const Vec2&)>& exact) {
  const Mesh2D& m = f.mesh();
  const TriangleRule& rule = dunavant7();
  double sum = 0;
  for (int t = 0; t < m.num_triangles(); ++t) {
    if (!f.triangle_active(t)) continue;
    const auto& tri = m.triangles[t];
    const double a = m.area(t);
    for (std::size_t q = 0; q < rule.w.size(); ++q) {
      const auto& b = rule.bary[q];
      const Vec2 p = b(0) * m.vertices[tri[0]] + b(1) * m.vertices[tri[1]] + b(2) * m.vertices[tri[2]];
      const double fh = b(0) * f[tri[0]] + b(1) * f[tri[1]] + b(2) * f[tri[2]];
      const double e = exact ? fh - exact(p) : fh;
      sum += a * rule.w[q] * e * e;
    }
  }
  return std::sqrt(sum);
}

double l2_norm(const GridFunction& f) { return l2_error(f, {}); }

}  // namespace nodal
