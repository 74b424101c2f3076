#pragma once

// Ratios v/u across shared nodal sets, discrete Hoelder seminorms, the
// boundary conditions of the degenerate problem and uniformity sweeps.

#include <optional>
#include <string>
#include <vector>

#include "nodal/coefficient.hpp"
#include "nodal/fem.hpp"
#include "nodal/nodal_set.hpp"

namespace nodal {

struct Ball {
  Vec2 center = Vec2::Zero();
  double radius = 0.5;
  bool contains(const Vec2& p) const { return (p - center).norm() <= radius * (1 + 1e-12); }
};

struct HolderReport {
  double alpha = 0;
  double seminorm = 0;
  /// Attaining pair (zero when no admissible pair exists).
  Vec2 x = Vec2::Zero(), y = Vec2::Zero();
  double min_sep = 0;
};

/// max |f(x) - f(y)| / |x - y|^alpha over pairs with |x - y| >= min_sep.
/// Exact: a dual k-d tree prunes pairs whose bound cannot beat the current
/// maximum.
HolderReport holder_seminorm(const std::vector<Vec2>& points, const std::vector<double>& values, double alpha,
                             double min_sep);
/// Vector values compared in the Euclidean norm.
HolderReport holder_seminorm(const std::vector<Vec2>& points, const std::vector<Vec2>& values, double alpha,
                             double min_sep);
/// Over the active vertices of f inside `region` (all of them when empty).
HolderReport holder_seminorm(const GridFunction& f, double alpha, double min_sep,
                             const std::optional<Ball>& region = std::nullopt);
/// Seminorm of the recovered gradient, |grad f(x) - grad f(y)| in the
/// Euclidean norm so that rotations leave it unchanged.
HolderReport gradient_holder_seminorm(const GridFunction& f, double alpha, double min_sep,
                                      const std::optional<Ball>& region = std::nullopt);
/// sup |f| + sup |grad f| + [grad f]_alpha with recovered gradients.
double c1alpha_norm(const GridFunction& f, double alpha, double min_sep,
                    const std::optional<Ball>& region = std::nullopt);

struct RatioOptions {
  /// w = v / u where |u| > fill * max|u|.
  double fill = 0.05;
  /// Z(u) inside Z(v) is checked as |v| <= tau * max|v| on nodal samples.
  double tau = 2e-2;
};

/// v / u away from Z(u); the remaining vertices solve div(u^2 A grad w) = 0
/// with the computed quotients as Dirichlet data. Throws NodalInclusionViolated.
GridFunction ratio(const GridFunction& v, const Field& u, const CoefficientField& A = identity_field(),
                   const RatioOptions& options = {});

struct BoundaryReport {
  /// max |A grad w . grad u| / (|grad w| |grad u|) on regular nodal points.
  double conormal_defect = 0;
  /// max |grad w| over singular points (recovered gradient).
  double singular_gradient = 0;
  int samples = 0;
};

/// Regular points closer than `exclusion` to a singular point or to the
/// outer boundary are skipped.
BoundaryReport boundary_conditions_check(const GridFunction& w, const Field& u, const CoefficientField& A,
                                         const NodalDecomposition& nd, double exclusion = 0.1);

struct SweepCase {
  std::string id;
  HarmonicPolynomial2d u;
  ScalarFunction g;
};

struct SweepOptions {
  double a = 2;
  double alpha = 0.5;
  std::vector<int> levels{4, 5};
  CoefficientField A = identity_field();
  Ball inner{};
};

struct SweepRow {
  std::string id;
  int level = 0;
  double a = 0, alpha = 0;
  double sup_norm = 0;
  /// Seminorms of w / sup|w| on the inner ball, maximized over components.
  double c0alpha = 0, c1alpha = 0;
  double conormal_defect = 0, singular_gradient = 0;
};

struct SweepTable {
  std::vector<SweepRow> rows;
  double max_c0alpha = 0, max_c1alpha = 0;
};

/// Per-component degenerate solves on nodal-aligned meshes of B_1.
SweepTable uniformity_sweep(const std::vector<SweepCase>& cases, const SweepOptions& options);

/// Im z^N for N = 1..n_max with datum g.
std::vector<SweepCase> power_family(int n_max, const ScalarFunction& g);
/// Rotations of u by the given angles, with the datum rotated along.
std::vector<SweepCase> rotation_family(const HarmonicPolynomial2d& u, const std::vector<double>& angles,
                                       const ScalarFunction& g);

void write_sweep_csv(const SweepTable& table, std::ostream& out);

}  // namespace nodal
