#pragma once

// Piecewise-linear fields on a Mesh2D and the Field variant shared by the
// analysis modules (exact polynomial, discrete, or polynomial + discrete).

#include <Eigen/Core>

#include <functional>
#include <iosfwd>
#include <memory>
#include <variant>
#include <vector>

#include "nodal/harmonic.hpp"
#include "nodal/mesh.hpp"
#include "nodal/types.hpp"

namespace nodal {

class GridFunction {
 public:
  GridFunction() = default;
  /// `active` masks vertices (per-component solutions); an empty mask means
  /// every vertex. A triangle is active when its three vertices are, unless
  /// an explicit triangle mask is given.
  GridFunction(std::shared_ptr<const Mesh2D> mesh, Eigen::VectorXd values, std::vector<char> active = {},
               std::vector<char> active_triangles = {});

  const Mesh2D& mesh() const { return *mesh_; }
  const std::shared_ptr<const Mesh2D>& mesh_ptr() const { return mesh_; }
  const Eigen::VectorXd& values() const { return values_; }
  double operator[](int v) const { return values_(v); }

  bool masked() const { return !active_.empty(); }
  bool vertex_active(int v) const { return active_.empty() || active_[v]; }
  bool triangle_active(int t) const { return tri_active_.empty() || tri_active_[t]; }
  const std::vector<char>& vertex_mask() const { return active_; }
  const std::vector<char>& triangle_mask() const { return tri_active_; }

  /// Active triangle containing p (nearest fallback near curved boundaries), or -1.
  int locate(const Vec2& p) const;
  /// Interpolated value; throws InvalidArgument outside the active region.
  double value(const Vec2& p) const;
  bool try_value(const Vec2& p, double& out) const;
  Vec2 triangle_gradient(int t) const;
  /// Piecewise-constant gradient of the containing triangle.
  Vec2 gradient(const Vec2& p) const;
  /// Area-weighted average of triangle gradients at each vertex.
  const std::vector<Vec2>& recovered_gradients() const { return recovered_; }
  /// Linear interpolation of the recovered vertex gradients.
  Vec2 recovered_gradient(const Vec2& p) const;

 private:
  std::shared_ptr<const Mesh2D> mesh_;
  Eigen::VectorXd values_;
  std::vector<char> active_, tri_active_;
  std::vector<Vec2> recovered_;
};

GridFunction interpolate(std::shared_ptr<const Mesh2D> mesh, const std::function<double(const Vec2&)>& f);

/// Columns x,y,value for active vertices.
void write_csv(const GridFunction& f, std::ostream& out);

/// Exact polynomial u plus a discrete perturbation (u_eps = u + phi_eps).
struct PerturbedField {
  HarmonicPolynomial2d base;
  GridFunction perturbation;
};

using Field = std::variant<HarmonicPolynomial2d, GridFunction, PerturbedField>;

double value(const Field& f, const Vec2& p);
/// Exact gradient for polynomials, piecewise gradient for discrete parts.
Vec2 gradient(const Field& f, const Vec2& p);
/// Exact gradient for polynomials, recovered gradient for discrete parts.
Vec2 smooth_gradient(const Field& f, const Vec2& p);
/// Mesh of the discrete part, or nullptr for an exact polynomial.
const Mesh2D* mesh_of(const Field& f);

/// L2 norm of f - exact over the active triangles, with the 7-point rule.
double l2_error(const GridFunction& f, const std::function<double(const Vec2&)>& exact);
double l2_norm(const GridFunction& f);

}  // namespace nodal
