#include "nodal/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <array>
#include <cmath>
#include <map>
#include <mutex>

#include "nodal/error.hpp"
#include "nodal/types.hpp"

namespace nodal {
namespace {

// Symmetric tridiagonal Jacobi matrix -> nodes on [-1, 1] and weights.
Rule1D golub_welsch(const Eigen::VectorXd& diag, const Eigen::VectorXd& off, double mu0) {
  const int n = static_cast<int>(diag.size());
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) J(i, i) = diag(i);
  for (int i = 0; i + 1 < n; ++i) J(i, i + 1) = J(i + 1, i) = off(i);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  Rule1D r;
  r.x = es.eigenvalues();
  r.w = mu0 * es.eigenvectors().row(0).transpose().array().square();
  return r;
}

}  // namespace

Rule1D gauss_legendre(int n, double a, double b) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "Gauss-Legendre needs n >= 1");
  Rule1D r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double pp = 1;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1, p2 = 0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2 * j - 1) * z * p2 - (j - 1) * p3) / j;
      }
      pp = n * (z * p1 - p2) / (z * z - 1);
      const double dz = p1 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    const double w = 2 / ((1 - z * z) * pp * pp);
    r.x(i) = -z;
    r.x(n - 1 - i) = z;
    r.w(i) = r.w(n - 1 - i) = w;
  }
  r.x = (a + (b - a) * 0.5 * (r.x.array() + 1)).matrix();
  r.w *= 0.5 * (b - a);
  return r;
}

Rule1D gauss_jacobi(int n, double alpha, double beta) {
  if (n < 1 || alpha <= -1 || beta <= -1)
    throw Error(ErrorKind::InvalidArgument, "Gauss-Jacobi needs n >= 1 and exponents > -1");
  const double ab = alpha + beta;
  Eigen::VectorXd diag(n), off(std::max(n - 1, 0));
  for (int k = 0; k < n; ++k) {
    const double t = 2 * k + ab;
    diag(k) = (k == 0) ? (beta - alpha) / (ab + 2) : (beta * beta - alpha * alpha) / (t * (t + 2));
  }
  for (int k = 1; k < n; ++k) {
    const double t = 2 * k + ab;
    // (k + ab) / (t - 1) equals one for k = 1 even when ab = -1.
    const double ratio = (k == 1) ? 1.0 : (k + ab) / (t - 1);
    off(k - 1) = std::sqrt(4.0 * k * (k + alpha) * (k + beta) / (t * t * (t + 1)) * ratio);
  }
  const double mu0 = std::exp((ab + 1) * std::log(2.0) + std::lgamma(alpha + 1) + std::lgamma(beta + 1) -
                              std::lgamma(ab + 2));
  Rule1D r = golub_welsch(diag, off, mu0);
  // [-1,1] with (1-x)^alpha (1+x)^beta  ->  [0,1] with (1-s)^alpha s^beta
  r.x = (0.5 * (r.x.array() + 1)).matrix();
  r.w *= std::pow(0.5, ab + 1);
  return r;
}

const TriangleRule& dunavant7() {
  static const TriangleRule rule = [] {
    TriangleRule t;
    t.degree = 5;
    t.bary.emplace_back(1.0 / 3, 1.0 / 3, 1.0 / 3);
    t.w.push_back(0.225);
    const double a1 = 0.059715871789770, b1 = 0.470142064105115, w1 = 0.132394152788506;
    const double a2 = 0.797426985353087, b2 = 0.101286507323456, w2 = 0.125939180544827;
    for (auto [a, b, w] : {std::array<double, 3>{a1, b1, w1}, std::array<double, 3>{a2, b2, w2}}) {
      t.bary.emplace_back(a, b, b);
      t.bary.emplace_back(b, a, b);
      t.bary.emplace_back(b, b, a);
      for (int k = 0; k < 3; ++k) t.w.push_back(w);
    }
    return t;
  }();
  return rule;
}

TriangleRule conical_rule(int n) {
  const Rule1D gu = gauss_legendre(n, 0, 1);
  const Rule1D jv = gauss_jacobi(n, 1, 0);  // weight (1 - v)
  TriangleRule t;
  t.degree = 2 * n - 1;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double xi = jv.x(i);
      const double eta = (1 - xi) * gu.x(j);
      t.bary.emplace_back(1 - xi - eta, xi, eta);
      t.w.push_back(2 * jv.w(i) * gu.w(j));
    }
  return t;
}

const TriangleRule& triangle_rule(int degree) {
  if (degree <= 5) return dunavant7();
  static std::mutex mu;
  static std::map<int, TriangleRule> cache;
  const int n = std::min((degree + 2) / 2, 24);
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, conical_rule(n)).first;
  return it->second;
}

}  // namespace nodal
