#pragma once

// Nodal set Z(u) of a polynomial or discrete field on a triangulation:
// polylines, regular and singular points, sign components, plus the
// hooking and xi diagnostics near nodal points.

#include <iosfwd>
#include <memory>
#include <vector>

#include "nodal/grid_function.hpp"
#include "nodal/mesh.hpp"

namespace nodal {

struct NodalOptions {
  /// Absolute floor below which the field counts as identically zero.
  double tau_val = 1e-9;
  /// Regular points need |grad u| > tau_grad * max |grad u|.
  double tau_grad = 1e-4;
};

struct SingularPoint {
  Vec2 position = Vec2::Zero();
  /// Sign changes of u on a small circle around the point (2N at order N).
  int branches = 0;
  /// Vanishing order: frequency limit for polynomials, branches / 2 otherwise.
  double order = 0;
};

struct NodalDecomposition {
  std::shared_ptr<const Mesh2D> mesh;
  std::vector<std::vector<Vec2>> polylines;
  std::vector<Vec2> regular_points;
  std::vector<SingularPoint> singular_points;
  /// Sign components of {u != 0}: vertex labels (-1 on Z(u)), triangle labels
  /// from the vertex of largest |u|, and the sign of each component.
  std::vector<int> vertex_component;
  std::vector<int> triangle_component;
  std::vector<int> component_sign;
  int num_components = 0;
  double gradient_scale = 0;
};

/// Marching triangles with zero vertices counted as positive. Crossing
/// points of polynomial fields are refined on the edge to machine precision.
/// Throws DegenerateField when |u| < tau_val at every vertex.
NodalDecomposition extract_nodal_set(const Field& u, std::shared_ptr<const Mesh2D> mesh,
                                     const NodalOptions& options = {});

/// Distance to the nearest polyline segment.
double dist_to_nodal(const NodalDecomposition& nd, const Vec2& p);

struct HookResult {
  Vec2 base = Vec2::Zero();
  Vec2 found = Vec2::Zero();
  /// Unsigned angle between grad u(base) and +-grad u(found), in [0, pi/2].
  double angle = 0;
  double radius = 0;
};

struct HookOptions {
  int radii = 48;
  int angular_samples = 1440;
  double tau_grad = 1e-4;
};

/// Scans circles |q - x0| = R for R in [r_min, r_max] and returns the
/// regular nodal point maximizing the angle. Throws NoNodalIntersection
/// when no circle meets Z(u), InvalidArgument when x0 is not a regular
/// nodal point.
HookResult find_hook(const Field& u, const Vec2& x0, double r_min, double r_max, const HookOptions& options = {});

struct XiReport {
  double min_modulus = 0;
  double max_modulus = 0;
  /// max |xi(z1) - xi(z2)| / omega(|z1 - z2|), omega(t) = t |log t| for
  /// t <= 1/e and 1/e beyond.
  double log_lipschitz = 0;
  /// Slope of log(mean |xi|) against log r; zero when N is the true order.
  double slope = 0;
  double r_min = 0;
};

struct XiOptions {
  int rings = 24;
  int angular_samples = 64;
};

/// xi(z) = i conj(grad u(z)) / z^{N-1} with grad u = u_x + i u_y, sampled on
/// a punctured polar grid about the origin. Throws OrderMismatch when
/// min |xi| < 1e-8 or |slope| > 0.5.
XiReport xi_diagnostic(const Field& u, int N, double radius, const XiOptions& options = {});

/// Columns polyline,x0,y0,x1,y1 (one row per segment).
void write_polylines_csv(const NodalDecomposition& nd, std::ostream& out);
/// Columns triangle,component,sign.
void write_components_csv(const NodalDecomposition& nd, std::ostream& out);

}  // namespace nodal
