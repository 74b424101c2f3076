#pragma once

// Symmetric uniformly elliptic 2x2 coefficient fields A(x) and the catalog
// used by experiments. Every catalog member except `constant` and `scaled`
// satisfies A(0) = Id.

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "nodal/types.hpp"

namespace nodal {

struct CoefficientField {
  std::string name;
  std::function<Mat2(const Vec2&)> eval;
  double lambda = 1;
  double Lambda = 1;
  double lipschitz = 0;
  bool is_constant = false;

  Mat2 operator()(const Vec2& x) const { return eval(x); }
};

CoefficientField identity_field();
/// Constant matrix [[a11, a12], [a12, a22]].
CoefficientField constant_field(double a11, double a12, double a22);
/// c * Id
CoefficientField scaled_identity(double c);
/// Q(theta) diag(s, 1/s) Q(theta)^T with s = 1 + delta |x| and
/// theta = theta0 + kappa x_1. det A = 1 everywhere.
CoefficientField rotation_perturbed(double delta, double theta0, double kappa);
/// (1 + beta min(|x|, rho) / rho) Id
CoefficientField radial_bump(double beta, double rho);
/// a11 = 1 + delta sin(kx), a22 = 1 + delta sin(ky), a12 = delta/2 sin(kx) sin(ky)
CoefficientField oscillatory(double delta, double k);
/// diag(1 + delta y, 1 + delta x). Every polynomial u with u_xx = u_yy = 0,
/// in particular Im z^2, solves div(A grad u) = 0 exactly.
CoefficientField separable(double delta);
/// Bilinear interpolation of samples on the grid x0 + i dx, y0 + j dy,
/// stored row-major in j (values[j * nx + i]). Points outside are clamped.
CoefficientField tabulated(double x0, double y0, double dx, double dy, int nx, int ny,
                           std::vector<Mat2> values, std::string name = "tabulated");
/// Samples `field` on an n x n grid over [-half_width, half_width]^2.
CoefficientField tabulate(const CoefficientField& field, double half_width, int n);
/// Reads a tabulated field: header "nx ny x0 y0 dx dy", then nx*ny lines
/// "a11 a12 a22" with x varying fastest.
CoefficientField read_tabulated(const std::string& path);

/// Builds a field from a catalog reference such as "identity",
/// "constant(a11=2, a12=0, a22=0.5)" or "rotation(delta=0.3, theta0=0.5)".
CoefficientField make_coefficient(std::string_view spec);

/// The reproducible family used for property tests and sweeps.
std::vector<CoefficientField> coefficient_catalog();

struct EllipticitySample {
  double lambda_min = 0;
  double Lambda_max = 0;
  double lipschitz = 0;
  double asymmetry = 0;
};

/// Eigenvalue range and entrywise difference quotients over a polar sample
/// of the disc of the given radius.
EllipticitySample sample_ellipticity(const CoefficientField& field, double radius = 1, int n = 24);

/// det A sampled over the disc; true when max - min <= tol.
bool determinant_constant(const CoefficientField& field, double radius = 1, double tol = 1e-10);

}  // namespace nodal
