#pragma once

// Planar harmonic polynomials u(x, y) = Re sum_k c_k z^k stored by their
// complex coefficient sequence. Conjugation, scaling, rotation and
// translation act exactly on the coefficients.

#include <Eigen/Core>

#include <cmath>
#include <complex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nodal/error.hpp"

namespace nodal {

template <typename Scalar>
struct ValueGradient {
  Scalar value;
  Eigen::Matrix<Scalar, 2, 1> gradient;
};

template <typename Scalar>
class HarmonicPolynomial {
 public:
  using Complex = std::complex<Scalar>;
  using Point = Eigen::Matrix<Scalar, 2, 1>;

  HarmonicPolynomial() = default;

  explicit HarmonicPolynomial(std::vector<Complex> coeffs) : coeffs_(std::move(coeffs)) {
    trim();
  }

  /// c * z^k
  static HarmonicPolynomial monomial(int k, Complex c = Complex(1)) {
    if (k < 0) throw Error(ErrorKind::InvalidArgument, "negative monomial degree");
    std::vector<Complex> coeffs(static_cast<std::size_t>(k) + 1, Complex(0));
    coeffs[static_cast<std::size_t>(k)] = c;
    return HarmonicPolynomial(std::move(coeffs));
  }

  static HarmonicPolynomial constant(Scalar c) { return monomial(0, Complex(c)); }

  /// Largest k with c_k != 0; the zero polynomial reports 0.
  int degree() const { return coeffs_.empty() ? 0 : static_cast<int>(coeffs_.size()) - 1; }
  bool is_zero() const { return coeffs_.empty(); }

  const std::vector<Complex>& coeffs() const { return coeffs_; }
  Complex coeff(int k) const {
    return (k >= 0 && k < static_cast<int>(coeffs_.size())) ? coeffs_[static_cast<std::size_t>(k)]
                                                            : Complex(0);
  }

  /// f(z) = sum c_k z^k
  Complex holomorphic(Complex z) const {
    Complex acc(0);
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * z + *it;
    return acc;
  }

  /// f'(z)
  Complex derivative(Complex z) const {
    Complex acc(0);
    for (int k = degree(); k >= 1; --k) acc = acc * z + Scalar(k) * coeffs_[static_cast<std::size_t>(k)];
    return acc;
  }

  Scalar operator()(const Point& p) const { return holomorphic(Complex(p.x(), p.y())).real(); }
  Scalar operator()(Scalar x, Scalar y) const { return holomorphic(Complex(x, y)).real(); }

  /// grad u = (Re f', -Im f')
  Point gradient(const Point& p) const {
    const Complex d = derivative(Complex(p.x(), p.y()));
    return Point(d.real(), -d.imag());
  }

  ValueGradient<Scalar> eval_with_gradient(const Point& p) const {
    const Complex z(p.x(), p.y());
    Complex f(0), df(0);
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) {
      df = df * z + f;
      f = f * z + *it;
    }
    return {f.real(), Point(df.real(), -df.imag())};
  }

  /// Hessian entries (u_xx, u_xy); u_yy = -u_xx.
  std::pair<Scalar, Scalar> second_derivatives(const Point& p) const {
    Complex acc(0);
    for (int k = degree(); k >= 2; --k)
      acc = acc * Complex(p.x(), p.y()) + Scalar(k * (k - 1)) * coeffs_[static_cast<std::size_t>(k)];
    return {acc.real(), -acc.imag()};
  }

  /// The degree-k part Re(c_k z^k).
  HarmonicPolynomial homogeneous_part(int k) const { return monomial(k, coeff(k)); }

  /// x -> u(s x)
  HarmonicPolynomial scaled(Scalar s) const {
    std::vector<Complex> out(coeffs_);
    Scalar power(1);
    for (auto& c : out) {
      c *= power;
      power *= s;
    }
    return HarmonicPolynomial(std::move(out));
  }

  /// x -> u(R_theta^{-1} x): the graph rotated counterclockwise by theta.
  HarmonicPolynomial rotated(Scalar theta) const {
    std::vector<Complex> out(coeffs_);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] *= std::polar(Scalar(1), -Scalar(k) * theta);
    return HarmonicPolynomial(std::move(out));
  }

  /// x -> u(x + shift)
  HarmonicPolynomial translated(const Point& shift) const {
    const Complex z0(shift.x(), shift.y());
    const int d = degree();
    std::vector<Complex> out(coeffs_.size(), Complex(0));
    for (int k = 0; k <= d && !coeffs_.empty(); ++k) {
      // (z + z0)^k = sum_j binom(k, j) z^j z0^(k-j)
      Scalar binom(1);
      for (int j = 0; j <= k; ++j) {
        out[static_cast<std::size_t>(j)] += coeffs_[static_cast<std::size_t>(k)] * binom * std::pow(z0, k - j);
        binom = binom * Scalar(k - j) / Scalar(j + 1);
      }
    }
    return HarmonicPolynomial(std::move(out));
  }

  HarmonicPolynomial& operator+=(const HarmonicPolynomial& o) {
    if (o.coeffs_.size() > coeffs_.size()) coeffs_.resize(o.coeffs_.size(), Complex(0));
    for (std::size_t k = 0; k < o.coeffs_.size(); ++k) coeffs_[k] += o.coeffs_[k];
    trim();
    return *this;
  }
  HarmonicPolynomial& operator*=(Scalar s) {
    for (auto& c : coeffs_) c *= s;
    trim();
    return *this;
  }
  friend HarmonicPolynomial operator+(HarmonicPolynomial a, const HarmonicPolynomial& b) { return a += b; }
  friend HarmonicPolynomial operator-(HarmonicPolynomial a, const HarmonicPolynomial& b) {
    return a += b * Scalar(-1);
  }
  friend HarmonicPolynomial operator*(HarmonicPolynomial a, Scalar s) { return a *= s; }
  friend HarmonicPolynomial operator*(Scalar s, HarmonicPolynomial a) { return a *= s; }
  friend bool operator==(const HarmonicPolynomial& a, const HarmonicPolynomial& b) {
    return a.coeffs_ == b.coeffs_;
  }

 private:
  void trim() {
    while (!coeffs_.empty() && coeffs_.back() == Complex(0)) coeffs_.pop_back();
  }

  std::vector<Complex> coeffs_;
};

using HarmonicPolynomial2d = HarmonicPolynomial<double>;

template <typename Scalar>
ValueGradient<Scalar> eval_with_gradient(const HarmonicPolynomial<Scalar>& p,
                                         const Eigen::Matrix<Scalar, 2, 1>& point) {
  return p.eval_with_gradient(point);
}

/// The conjugate ubar with d_x ubar = -d_y u, d_y ubar = d_x u and ubar(0) = 0,
/// i.e. Im f - Im f(0) written again as Re of a holomorphic polynomial.
template <typename Scalar>
HarmonicPolynomial<Scalar> harmonic_conjugate(const HarmonicPolynomial<Scalar>& p) {
  using Complex = std::complex<Scalar>;
  std::vector<Complex> out(p.coeffs());
  for (auto& c : out) c *= Complex(0, -1);
  if (!out.empty()) out[0] = Complex(0, out[0].imag());
  return HarmonicPolynomial<Scalar>(std::move(out));
}

/// (Re z^N, Im z^N)
template <typename Scalar = double>
std::pair<HarmonicPolynomial<Scalar>, HarmonicPolynomial<Scalar>> homogeneous_basis(int n) {
  using Complex = std::complex<Scalar>;
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "homogeneous_basis requires N >= 1");
  return {HarmonicPolynomial<Scalar>::monomial(n, Complex(1)),
          HarmonicPolynomial<Scalar>::monomial(n, Complex(0, -1))};
}

/// Five-point Laplacian of u at p with step h; used to sample harmonicity.
template <typename Scalar>
Scalar stencil_laplacian(const HarmonicPolynomial<Scalar>& p, const Eigen::Matrix<Scalar, 2, 1>& at,
                         Scalar h) {
  using Point = Eigen::Matrix<Scalar, 2, 1>;
  const Scalar c = p(at);
  return (p(Point(at + Point(h, 0))) + p(Point(at - Point(h, 0))) + p(Point(at + Point(0, h))) +
          p(Point(at - Point(0, h))) - Scalar(4) * c) /
         (h * h);
}

/// Parses literals such as "re(z^2) + 0.5*im(z^3) - 2*y + 1".
/// Terms: re(z^k), im(z^k), re(z), im(z), x, y, or a bare constant, each
/// optionally multiplied by a leading real factor.
HarmonicPolynomial2d parse_polynomial(std::string_view text);

/// Inverse of parse_polynomial for polynomials with real or imaginary
/// coefficients per degree; general complex coefficients print both parts.
std::string format_polynomial(const HarmonicPolynomial2d& p);

}  // namespace nodal
