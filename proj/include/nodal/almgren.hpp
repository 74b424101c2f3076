#pragma once

// Almgren frequency N(x0, u, r) = r D / H on the ellipses of the frozen
// coefficient A(x0), with vanishing orders, doubling ratios and the
// critical radius built on top of it.
//
// Integrals are taken in the coordinates y = A(x0)^{-1/2} (x - x0), where
// the ellipse E_r becomes the disc B_r:
//   H(r) = int_{|y| = r} u^2 ds_y,   D(r) = int_{|y| < r} A(x) grad u . grad u dy.
// For constant A and a homogeneous A-harmonic u of degree N this gives N
// exactly.

#include <optional>
#include <vector>

#include "nodal/coefficient.hpp"
#include "nodal/grid_function.hpp"
#include "nodal/mesh.hpp"

namespace nodal {

struct FrequencyOptions {
  int angular_points = 64;
  int radial_points = 24;
  /// Domain for exact polynomials (unbounded when empty); discrete fields
  /// always use the domain of their mesh.
  std::optional<Domain> domain;
  /// Discrete fields: radii are not reduced below floor_factor * local h.
  double floor_factor = 8;
};

struct FrequencyProfile {
  Vec2 center = Vec2::Zero();
  std::vector<double> radii, H, D, N;
  /// max_i max(0, N(r_i) - N(r_{i+1}))
  double monotonicity_defect = 0;
};

FrequencyProfile frequency_profile(const Field& u, const CoefficientField& A, const Vec2& x0,
                                   const std::vector<double>& radii, const FrequencyOptions& options = {});

double frequency(const Field& u, const CoefficientField& A, const Vec2& x0, double r,
                 const FrequencyOptions& options = {});

/// ZeroHeight is raised when the rms of u on the circle is below 1e-14 times
/// the magnitude of the terms evaluated there (u vanishes to machine precision).
/// Height and the solid mass int_{B_r} u^2 dy.
double height(const Field& u, const CoefficientField& A, const Vec2& x0, double r, const FrequencyOptions& options = {});
double ball_mass(const Field& u, const CoefficientField& A, const Vec2& x0, double r,
                 const FrequencyOptions& options = {});

struct VanishingOrder {
  double order = 0;
  /// False when a discrete field reached its mesh floor before two
  /// consecutive values agreed to 1e-3.
  bool converged = false;
  std::vector<double> radii, values;
};

/// N(x0, u, r) at r = r0 2^{-k} until consecutive values differ by less than
/// `tol`. r0 <= 0 picks 0.5 for polynomials and 0.9 times the largest
/// admissible radius for discrete fields. Throws NoConvergence after 20
/// halvings.
VanishingOrder vanishing_order(const Field& u, const CoefficientField& A, const Vec2& x0, double r0 = 0,
                               const FrequencyOptions& options = {}, double tol = 1e-3);

struct DoublingReport {
  double mass_ratio = 1;    // int_{B_R} u^2 / int_{B_r} u^2
  double mean_ratio = 1;    // same with averages, compared against the bound
  double height_ratio = 1;  // H(R) / H(r)
  double frequency_R = 0;   // N(x0, u, R)
  double constant = 1;
  double bound = 1;  // constant * (R / r)^(2 N(R))
  bool holds = true;
};

/// Doubling constant for the averaged form; the catalog calibration run
/// (test_almgren) measures at most 0.63, homogeneous u attain exactly 1.
inline constexpr double kDoublingConstant = 1.0;

DoublingReport doubling_check(const Field& u, const CoefficientField& A, const Vec2& x0, double r, double R,
                              const FrequencyOptions& options = {}, double constant = kDoublingConstant);

/// Smallest r in [r_min, r_max] with N(x0, u, r) >= 1 + eps, by bisection.
/// Empty when N(r_max) < 1 + eps; r_min when N(r_min) already qualifies.
/// r_min <= 0 means 1e-3 r_max.
std::optional<double> critical_radius(const Field& u, const CoefficientField& A, const Vec2& x0, double eps,
                                      double r_max, double r_min = 0, const FrequencyOptions& options = {});

/// Area of the triangle abc intersected with the disc |y| < r.
double triangle_disc_area(const Vec2& a, const Vec2& b, const Vec2& c, double r);

}  // namespace nodal
