#pragma once

// Regularized coefficients A_eps = A + (Id - A) eta_eps, the corrector
// phi_eps with div(A_eps grad (u + phi_eps)) = 0 and a prescribed vanishing
// order at the origin, and the xi diagnostic over an eps ladder.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nodal/coefficient.hpp"
#include "nodal/fem.hpp"
#include "nodal/nodal_set.hpp"

namespace nodal {

/// Radial C^1 cutoff: 1 on B_eps, 0 outside B_2eps, smoothstep between,
/// so |grad eta| <= 1.5 / eps.
struct Cutoff {
  double epsilon = 0.1;
  double operator()(const Vec2& x) const;
  Vec2 gradient(const Vec2& x) const;
};

/// Throws InvalidArgument unless 0 < epsilon < 0.5.
Cutoff cutoff(double epsilon);

/// A + (Id - A) eta_eps; the identity on B_eps and A outside B_2eps.
CoefficientField approx_coefficients(const CoefficientField& A, double epsilon);

struct SchemeOptions {
  /// Radius of the ball B_R carrying the corrector problem.
  double R = 0.5;
  /// Base disc level before grading toward the origin.
  int base_level = 4;
  /// Mesh size on B_eps is at most eps / h_ratio.
  double h_ratio = 32;
  int probe_samples = 256;
  double alpha = 0.5;
};

/// Disc B_R graded toward the origin so that h <= eps / h_ratio on B_eps.
std::shared_ptr<const Mesh2D> corrector_mesh(double epsilon, const SchemeOptions& options = {});

/// Leading-term probe radius min(R / 8, eps / 2).
double probe_radius(double epsilon, const SchemeOptions& options = {});

/// Coefficients of f on the circle |x| = r against 1, Re z^m, Im z^m for
/// m = 1..k: entry 0 is f(0), entries 2m - 1, 2m the cos and sin moments
/// divided by r^m.
Eigen::VectorXd probe_modes(const Field& f, double r, int k, int samples = 256);

struct BlowupSolution {
  GridFunction psi;
  /// Harmonic polynomial of degree <= k added to P_k on the boundary.
  HarmonicPolynomial2d shift;
  /// Constant part of the shift.
  double a_eps = 0;
  double order = 0;
  /// Log-log slope of max |psi - psi_Id| on circles inside the probe radius,
  /// psi_Id the same construction for A = Id (infinite when they agree).
  double remainder_slope = 0;
};

/// L_{A_eps} psi = 0 on the mesh with psi = P_k + shift on the boundary.
/// The shift (degree <= k) is fixed so that psi(0) = 0 and the modes of
/// degree 1..k on the probe circle equal those of P_k.
/// Throws OrderDeficit when the measured order is below k - 0.1.
BlowupSolution prescribed_blowup_solution(const CoefficientField& A_eps, const HarmonicPolynomial2d& P_k,
                                          double epsilon, std::shared_ptr<const Mesh2D> mesh,
                                          const SchemeOptions& options = {});

struct CorrectorResult {
  double epsilon = 0;
  int N = 0;
  CoefficientField A_eps;
  GridFunction phi;
  int iterations = 0;
  /// Vanishing order of u + phi at the origin (grid frequency).
  double order = 0;
  bool order_converged = false;
  double sup_norm = 0;
  double c1alpha = 0;
  /// Weak residual of u + phi for L_{A_eps}.
  double residual = 0;

  PerturbedField u_eps(const HarmonicPolynomial2d& u) const { return {u, phi}; }
};

/// -div(A_eps grad phi) = div(eta_eps (Id - A) grad u) on B_R with phi = 0
/// on the boundary, recentered to vanish at the origin; then each mode of
/// degree k < N on the probe circle is removed by subtracting prescribed
/// blow-up solutions. Throws IterationOverrun beyond N + 2 passes.
CorrectorResult corrector(const HarmonicPolynomial2d& u, const CoefficientField& A, double epsilon, int N,
                          const SchemeOptions& options = {});

struct SchemeRow {
  double epsilon = 0;
  int iterations = 0;
  double order = 0;
  double c1alpha = 0;
  double sup_norm = 0;
  double xi_min = 0, xi_max = 0, xi_log_lipschitz = 0;
  /// Error name when the diagnostic rejected the declared order.
  std::string xi_error;
};

struct SchemeReport {
  std::vector<SchemeRow> rows;
  /// (max - min) / max of min |xi| over the ladder.
  double xi_drift = 0;
  bool uniform = false;
  /// Log-log regression slope of the C^{1,alpha} norm against eps.
  double norm_slope = 0;
};

/// Runs xi_diagnostic(u + phi, N, R / 4) for each corrector; report only.
SchemeReport verify_scheme(const HarmonicPolynomial2d& u, const std::vector<CorrectorResult>& ladder,
                           const SchemeOptions& options = {});

void write_scheme_csv(const SchemeReport& report, std::ostream& out);

}  // namespace nodal
