#pragma once

// Hodograph map Theta = (ubar, sigma u) of a nodal component, the
// straightened coefficient B, pushforward onto half-disc meshes, the
// L_a-harmonic even polynomials and the Liouville fit w = P(ubar, u).

#include <functional>
#include <memory>
#include <vector>

#include "nodal/coefficient.hpp"
#include "nodal/fem.hpp"
#include "nodal/grid_function.hpp"

namespace nodal {

struct MapOptions {
  /// Working disc |x| < radius for polynomial fields (discrete fields use their mesh).
  double radius = 1;
  int cache_rings = 96;
  int cache_angles = 384;
  double newton_tol = 1e-13;
  int newton_max_iter = 60;
};

class HodographMap {
 public:
  /// Throws NonConstantDeterminant when det A varies over the working disc
  /// by more than 1e-10, InvalidArgument when the seed lies on Z(u).
  HodographMap(const Field& u, const CoefficientField& A, const Vec2& seed, const MapOptions& options = {});

  /// (ubar(p), sigma u(p)); sigma = sign u(seed), so the component maps to t > 0.
  Vec2 operator()(const Vec2& p) const;
  /// Rows grad ubar = J A grad u and sigma grad u.
  Mat2 jacobian(const Vec2& p) const;
  /// Damped Newton from the nearest cached sample; Theta^{-1}(0) = 0.
  /// Throws InverseMapFailure.
  Vec2 inverse(const Vec2& st) const;
  bool try_inverse(const Vec2& st, Vec2& out) const;

  int sign() const { return sign_; }
  const Vec2& seed() const { return seed_; }
  /// Constant value of det A over the working region.
  double determinant() const { return det_; }
  const CoefficientField& coefficient() const { return A_; }
  double ubar(const Vec2& p) const;
  /// Whether p lies in the selected component (same sign as the seed and
  /// inside the working domain).
  bool in_component(const Vec2& p) const;
  /// Largest t-radius of a half-disc that the cached image covers.
  double image_radius() const { return image_radius_; }

 private:
  struct Cache;
  Field u_;
  CoefficientField A_;
  Vec2 seed_;
  int sign_ = 1;
  double det_ = 1;
  double radius_ = 1;
  Vec2 center_ = Vec2::Zero();
  MapOptions options_;
  // exact conjugate for polynomials with constant A; discrete otherwise
  std::function<double(const Vec2&)> ubar_;
  std::shared_ptr<const GridFunction> ubar_grid_;
  std::shared_ptr<const Cache> cache_;
  double image_radius_ = 0;
};

/// B(s, t) = DTheta A DTheta^T / |det DTheta| at Theta^{-1}(s, t).
Mat2 straightened_matrix(const HodographMap& map, const Vec2& st);
/// The constant B = diag(det A, 1) as a coefficient field.
CoefficientField straightened_field(const HodographMap& map);

struct Pushforward {
  GridFunction wbar;
  double residual = 0;
  /// Half-disc vertices whose preimage could not be found (masked out).
  int failed_vertices = 0;
};

/// wbar(s, t) = w(Theta^{-1}(s, t)) on a half-disc mesh, with the weak
/// residual for the weight |t|^a and matrix B.
Pushforward pushforward(const Field& w, const HodographMap& map, double a, std::shared_ptr<const Mesh2D> half_disc);

/// Polynomial in (s, t), even in t: sum_j c_j s^{m-2j} t^{2j} of degree m.
struct EvenPolynomial {
  int degree = 0;
  std::vector<double> coeffs;
  double operator()(double s, double t) const;
  Vec2 gradient(double s, double t) const;
};

struct LaHarmonicBasis {
  double a = 0;
  int k = 0;
  /// One element per degree m = 0..k, normalized so the s^m coefficient is 1.
  std::vector<EvenPolynomial> basis;
};

/// Kernels of P -> Delta P + (a / t) dP/dt on t-even polynomials of each
/// degree. Throws InvalidArgument for a <= -1 or k < 0.
LaHarmonicBasis la_harmonic_basis(double a, int k);

struct DiscSamples {
  double radius = 1;
  std::vector<Vec2> points;
  std::vector<double> weights;
  std::vector<double> values;
};

/// Polar Gauss samples of f on the disc of the given radius; weights
/// integrate over the disc.
DiscSamples sample_disc(const std::function<double(const Vec2&)>& f, double radius, int rings = 16,
                        int angles = 48);

struct LiouvilleFit {
  std::vector<double> coefficients;  // fit on the largest disc
  std::vector<std::vector<double>> coefficients_per_radius;
  std::vector<double> radii, residuals;
  bool success = false;
  /// Results with the a = 0 dictionary; `harmonic_only` flags profiles that
  /// only the strictly harmonic dictionary represents.
  std::vector<double> harmonic_residuals;
  bool harmonic_only = false;
  LaHarmonicBasis basis;
};

/// Per-disc least squares of w against {P_j(ubar, u)} with P_j from
/// la_harmonic_basis(a, floor(gamma / d)), d = deg u. SUCCESS when every
/// relative L2 residual is below `threshold`. Throws RankDeficientDictionary.
LiouvilleFit liouville_fit(const std::vector<DiscSamples>& samples, const HarmonicPolynomial2d& u, double a,
                           double gamma, double threshold = 1e-6);

}  // namespace nodal
