#pragma once

// P1 finite elements for div(|u|^a A grad w) = 0 on discs and half-discs.
// a = 0 gives the plain elliptic operator L_A.

#include <Eigen/Sparse>

#include <functional>
#include <memory>
#include <mutex>
#include <variant>
#include <vector>

#include "nodal/coefficient.hpp"
#include "nodal/grid_function.hpp"
#include "nodal/harmonic.hpp"
#include "nodal/mesh.hpp"

namespace nodal {

using ScalarFunction = std::function<double(const Vec2&)>;
using VectorFunction = std::function<Vec2(const Vec2&)>;
using SparseMatrix = Eigen::SparseMatrix<double>;

struct WeightSpec {
  double a = 0;
  std::variant<HarmonicPolynomial2d, GridFunction> u;
  /// Declared frequency bound N0; zero means the polynomial degree.
  double frequency_bound = 0;

  /// a_S = min(1, 2 / N0)
  double critical_exponent() const;
  /// Throws ExponentBelowThreshold when a <= -a_S.
  void validate() const;
  double eval(const Vec2& p) const;
};

enum class SolveMode { WholeBall, PerComponent };

struct SolveOptions {
  SolveMode mode = SolveMode::WholeBall;
  /// Point inside the nodal component for PerComponent mode.
  Vec2 seed = Vec2::Zero();
  /// Optional restriction of the domain to a subset of triangles.
  std::shared_ptr<const std::vector<char>> triangle_filter;
};

/// Assembled weighted stiffness matrix with its active region; the
/// factorization for the default Dirichlet set is built on first use.
class WeightedSystem {
 public:
  /// `weight` may be null (weight 1).
  WeightedSystem(std::shared_ptr<const Mesh2D> mesh, const CoefficientField& A, const WeightSpec* weight,
                 const SolveOptions& options = {});

  const Mesh2D& mesh() const { return *mesh_; }
  const SparseMatrix& matrix() const { return K_; }
  const std::vector<char>& active_vertices() const { return active_v_; }
  const std::vector<char>& active_triangles() const { return active_t_; }
  /// Outer-boundary vertices of the active region (Dirichlet by default).
  const std::vector<char>& dirichlet() const { return dirichlet_; }
  /// Active, non-Dirichlet vertices whose whole star is active.
  std::vector<char> test_vertices() const;
  /// Sign of the selected component (0 in whole-ball mode).
  int component_sign() const { return sign_; }
  bool per_component() const { return per_component_; }
  /// Integral of the weight times A over each active triangle.
  const std::vector<Mat2>& element_weights() const { return W_; }

  /// Solves with nodal-interpolated Dirichlet data g and optional flux F in
  /// -div(|u|^a A grad w) = div F.
  GridFunction solve(const ScalarFunction& g, const VectorFunction* flux = nullptr) const;
  /// Solves with an explicit Dirichlet set and load vector.
  GridFunction solve_with(const std::vector<char>& dirichlet, const Eigen::VectorXd& dirichlet_values,
                          const Eigen::VectorXd& load) const;
  /// b_i = -sum_T (int_T F) . grad phi_i
  Eigen::VectorXd flux_load(const VectorFunction& F) const;

  struct Factorization;

 private:
  GridFunction wrap(Eigen::VectorXd values) const;
  const Factorization& default_factorization() const;

  std::shared_ptr<const Mesh2D> mesh_;
  SparseMatrix K_;
  std::vector<Mat2> W_;
  std::vector<char> active_v_, active_t_, dirichlet_;
  int sign_ = 0;
  bool per_component_ = false;
  mutable std::once_flag once_;
  mutable std::shared_ptr<Factorization> factor_;
};

GridFunction solve_elliptic(const CoefficientField& A, const ScalarFunction& g, std::shared_ptr<const Mesh2D> mesh);

GridFunction solve_degenerate(const WeightSpec& weight, const CoefficientField& A, const ScalarFunction& g,
                              std::shared_ptr<const Mesh2D> mesh, const SolveOptions& options = {});

/// div(y^a grad w) = 0 on a half-disc, weighted Neumann on the diameter.
GridFunction solve_halfplane_la(double a, const ScalarFunction& g, std::shared_ptr<const Mesh2D> half_disc);

/// Solves -div(A grad phi) = div F with data g (the corrector problem).
GridFunction solve_flux(const CoefficientField& A, const VectorFunction& F, const ScalarFunction& g,
                        std::shared_ptr<const Mesh2D> mesh);

/// max_i |int |u|^a A grad w . grad phi_i| / ||phi_i||_energy over interior hat functions.
double weak_residual(const GridFunction& w, const WeightSpec& weight, const CoefficientField& A,
                     const SolveOptions& options = {});
/// Same numerator normalized by int phi_i (a pointwise divergence scale).
double weak_residual_lumped(const GridFunction& w, const WeightSpec& weight, const CoefficientField& A,
                            const SolveOptions& options = {});

/// The A-harmonic conjugate of a discrete solution. The field J A grad u is
/// constant per triangle, so its primitive is a nonconforming P1 function
/// with values at edge midpoints: integrate it along a breadth-first
/// spanning tree of the dual graph starting at the triangle containing the
/// origin, then average the per-triangle linear extensions at the vertices.
/// Each non-tree midpoint closes a loop whose circulation is the discrete
/// residual of u; LoopDefectTooLarge is thrown when one exceeds
/// loop_tolerance * max|A grad u| * h_max. The result vanishes at the origin.
GridFunction a_harmonic_conjugate(const GridFunction& u, const CoefficientField& A, double loop_tolerance = 2e-2,
                                  double* max_loop_defect = nullptr);

}  // namespace nodal
