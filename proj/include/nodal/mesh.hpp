#pragma once

// Conforming triangulations of discs and half-discs with boundary markers,
// graded longest-edge refinement and a plain-text exchange format.

#include <Eigen/Core>

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "nodal/harmonic.hpp"
#include "nodal/types.hpp"

namespace nodal {

enum class BoundaryMarker : int { Outer = 1, Symmetry = 2 };

struct BoundaryEdge {
  int a = 0;
  int b = 0;
  BoundaryMarker marker = BoundaryMarker::Outer;
};

struct Domain {
  enum class Shape { Disc, HalfDisc };
  Shape shape = Shape::Disc;
  Vec2 center = Vec2::Zero();
  double radius = 1;

  bool contains(const Vec2& p, double tol = 1e-12) const;
};

class Mesh2D {
 public:
  std::vector<Vec2> vertices;
  std::vector<Eigen::Vector3i> triangles;
  std::vector<BoundaryEdge> boundary;
  int level = 0;
  std::optional<Vec2> grading_center;
  Domain domain;

  /// Orients triangles counterclockwise and builds adjacency, vertex flags,
  /// local mesh sizes and the point locator. Call after editing the arrays.
  void finalize();

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_triangles() const { return static_cast<int>(triangles.size()); }

  double area(int t) const;
  Vec2 centroid(int t) const;
  /// Constant gradients of the three hat functions on triangle t (columns).
  Eigen::Matrix<double, 2, 3> hat_gradients(int t) const;
  Eigen::Vector3d barycentric(int t, const Vec2& p) const;

  /// Triangle containing p, or -1. With `nearest`, points within one local
  /// mesh size outside the polygon (curved boundary) map to the closest
  /// triangle. `accept` restricts the candidates.
  int locate(const Vec2& p, bool nearest = true, const std::function<bool(int)>& accept = {}) const;

  bool on_outer_boundary(int v) const { return outer_[v] != 0; }
  bool on_symmetry_line(int v) const { return symmetry_[v] != 0; }
  /// Longest edge incident to vertex v.
  double local_h(int v) const { return vertex_h_[v]; }
  double h_max() const { return h_max_; }
  double h_min() const { return h_min_; }
  const std::vector<int>& vertex_triangles(int v) const { return vertex_tris_[v]; }
  /// Unique undirected edges (i < j), sorted.
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  double min_angle_deg() const;
  int nearest_vertex(const Vec2& p) const;

  /// Copy with vertices mapped by x -> c + R (x - c), c the domain center.
  Mesh2D rotated(double theta) const;

 private:
  std::vector<char> outer_, symmetry_;
  std::vector<double> vertex_h_;
  std::vector<std::vector<int>> vertex_tris_;
  std::vector<std::pair<int, int>> edges_;
  double h_max_ = 0, h_min_ = 0;
  // bucket grid locator
  Vec2 box_lo_ = Vec2::Zero();
  double cell_ = 1;
  int nx_ = 0, ny_ = 0;
  std::vector<std::vector<int>> buckets_;
};

/// Fan triangulation of the disc: `sectors` sectors, each cut into a
/// barycentric lattice with 2^level steps per ray, then mapped radially
/// from the inscribed polygon onto the circle.
Mesh2D disc_mesh(int level, double radius = 1, const Vec2& center = Vec2::Zero(), int sectors = 6,
                 double rotation = 0);

/// Upper half-disc {|x - c| < R, y > c_y}; the diameter carries the
/// symmetry marker.
Mesh2D half_disc_mesh(int level, double radius = 1, const Vec2& center = Vec2::Zero(), int sectors = 3);

/// Disc mesh whose rays contain the 2N nodal rays of a homogeneous harmonic
/// polynomial of degree N (each nodal sector split into ceil(3/N) pieces).
Mesh2D nodal_aligned_mesh(const HarmonicPolynomial2d& homogeneous, int level, double radius = 1);

/// Fan through the given increasing ray angles; closed fans for discs,
/// open fans (first and last ray on the boundary) for half-discs.
Mesh2D fan_mesh(const std::vector<double>& ray_angles, int level, const Domain& domain);

/// Longest-edge bisection of the marked triangles with conforming closure.
/// New outer-boundary vertices are projected onto the circle.
Mesh2D refine(const Mesh2D& mesh, const std::vector<char>& marked);

/// Graded refinement toward `center`: ring k = 1..rings covers the ball of
/// radius ring_radius * 2^(1-k) and halves the mesh size there once more.
Mesh2D graded_mesh(const Mesh2D& base, const Vec2& center, int rings, double ring_radius);

void write_mesh(const Mesh2D& mesh, std::ostream& out);
Mesh2D read_mesh(std::istream& in);

}  // namespace nodal
