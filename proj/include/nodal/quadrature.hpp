#pragma once

// One-dimensional Gauss rules on [0, 1] and triangle rules in barycentric
// form. Weights of triangle rules sum to one (multiply by the area).

#include <Eigen/Core>

#include <vector>

namespace nodal {

struct Rule1D {
  Eigen::VectorXd x;
  Eigen::VectorXd w;
};

/// Gauss-Legendre on [a, b].
Rule1D gauss_legendre(int n, double a = 0, double b = 1);

/// Gauss-Jacobi on [0, 1] for the weight (1 - s)^alpha s^beta, alpha, beta > -1.
/// Nodes and weights from the Golub-Welsch eigenproblem.
Rule1D gauss_jacobi(int n, double alpha, double beta);

struct TriangleRule {
  std::vector<Eigen::Vector3d> bary;
  std::vector<double> w;
  int degree = 0;
};

/// Dunavant 7-point rule, exact for degree 5.
const TriangleRule& dunavant7();

/// Collapsed (conical) product rule with n x n points, exact for degree 2n - 1.
TriangleRule conical_rule(int n);

/// Smallest cached rule exact for the requested polynomial degree.
const TriangleRule& triangle_rule(int degree);

}  // namespace nodal
