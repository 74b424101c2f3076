#include "nodal/fem.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <map>

#include "nodal/error.hpp"
#include "nodal/parallel.hpp"
#include "nodal/quadrature.hpp"

namespace nodal {
namespace {

constexpr int kJacobiPoints = 8;
constexpr int kDirectSolverLimit = 200000;

int sign_of(double v) { return v > 0 ? 1 : (v < 0 ? -1 : 0); }

bool is_even_integer(double a) { return a >= 0 && std::abs(a / 2 - std::round(a / 2)) < 1e-14; }

struct Piece {
  Vec2 p[3];
  double l[3];
  int sign() const {
    for (double v : l)
      if (v != 0) return sign_of(v);
    return 0;
  }
};

// Cut a triangle along the zero line of the linear interpolant of its
// vertex values; each piece carries one sign.
std::vector<Piece> split_by_sign(const Vec2 p[3], const double l[3]) {
  int s[3];
  for (int k = 0; k < 3; ++k) s[k] = sign_of(l[k]);
  auto cut = [&](int i, int j) {
    const double t = l[i] / (l[i] - l[j]);
    return Vec2(p[i] + t * (p[j] - p[i]));
  };
  bool opposite = false;
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) opposite = opposite || s[i] * s[j] < 0;
  if (!opposite) return {Piece{{p[0], p[1], p[2]}, {l[0], l[1], l[2]}}};
  for (int z = 0; z < 3; ++z)
    if (s[z] == 0) {
      const int i = (z + 1) % 3, j = (z + 2) % 3;
      const Vec2 c = cut(i, j);
      return {Piece{{p[z], p[i], c}, {0, l[i], 0}}, Piece{{p[z], c, p[j]}, {0, 0, l[j]}}};
    }
  int v = 0;
  for (int k = 0; k < 3; ++k)
    if (s[k] != s[(k + 1) % 3] && s[k] != s[(k + 2) % 3]) v = k;
  const int a = (v + 1) % 3, b = (v + 2) % 3;
  const Vec2 ca = cut(v, a), cb = cut(v, b);
  return {Piece{{p[v], ca, cb}, {l[v], 0, 0}}, Piece{{ca, p[a], p[b]}, {0, l[a], l[b]}},
          Piece{{ca, p[b], cb}, {0, l[b], 0}}};
}

double twice_area(const Vec2& a, const Vec2& b, const Vec2& c) {
  return std::abs((b - a).x() * (c - a).y() - (b - a).y() * (c - a).x());
}

class ElementIntegrator {
 public:
  ElementIntegrator(const CoefficientField& A, const WeightSpec* w) : A_(A), w_(w) {
    a_ = w ? w->a : 0.0;
    smooth_ = !w || is_even_integer(a_);
    int degree = 2;
    if (w && smooth_) {
      if (const auto* p = std::get_if<HarmonicPolynomial2d>(&w->u)) degree = static_cast<int>(a_) * p->degree();
      else degree = static_cast<int>(a_);
      degree += A.is_constant ? 0 : 2;
    }
    smooth_rule_ = &triangle_rule(std::max(degree, 5));
    if (!smooth_) {
      edge_rule_ = gauss_jacobi(kJacobiPoints, 1, a_);
      vertex_rule_ = gauss_jacobi(kJacobiPoints, 0, a_ + 1);
      tangent_rule_ = gauss_legendre(kJacobiPoints, 0, 1);
      interior_rule_ = &triangle_rule(11);
    }
  }

  // int over the pieces of the triangle with the given sign (0: all)
  Mat2 integrate(const Vec2 p[3], const double l[3], int sign_filter) const {
    if (sign_filter == 0 && smooth_) return smooth_piece(p);
    Mat2 sum = Mat2::Zero();
    for (const Piece& piece : split_by_sign(p, l)) {
      const int s = piece.sign();
      if (sign_filter != 0 && s != sign_filter) continue;
      if (smooth_) {
        sum += smooth_piece(piece.p);
        continue;
      }
      int zeros = 0;
      for (double v : piece.l) zeros += v == 0;
      if (zeros == 3) continue;
      if (zeros == 0) sum += rule_piece(piece.p, *interior_rule_);
      else if (zeros == 1) sum += vertex_piece(piece);
      else sum += edge_piece(piece);
    }
    return sum;
  }

 private:
  double weight(const Vec2& x) const { return w_ ? std::pow(std::abs(w_->eval(x)), a_) : 1.0; }

  Mat2 rule_piece(const Vec2 p[3], const TriangleRule& rule) const {
    const double area = 0.5 * twice_area(p[0], p[1], p[2]);
    Mat2 sum = Mat2::Zero();
    for (std::size_t q = 0; q < rule.w.size(); ++q) {
      const auto& b = rule.bary[q];
      const Vec2 x = b(0) * p[0] + b(1) * p[1] + b(2) * p[2];
      sum += rule.w[q] * weight(x) * A_(x);
    }
    return area * sum;
  }

  Mat2 smooth_piece(const Vec2 p[3]) const {
    if (!w_ && A_.is_constant) return 0.5 * twice_area(p[0], p[1], p[2]) * A_(p[0]);
    return rule_piece(p, *smooth_rule_);
  }

  // |u|^a / sigma^a is regular when u vanishes like sigma
  double scaled_weight(const Vec2& x, double sigma) const {
    return std::pow(std::abs(w_->eval(x)) / sigma, a_);
  }

  // zero at p[z]; x = P0 + s ((P1 - P0) + t (P2 - P1)), Jacobian s |2T|
  Mat2 vertex_piece(const Piece& piece) const {
    int z = 0;
    for (int k = 0; k < 3; ++k)
      if (piece.l[k] == 0) z = k;
    const Vec2& P0 = piece.p[z];
    const Vec2& P1 = piece.p[(z + 1) % 3];
    const Vec2& P2 = piece.p[(z + 2) % 3];
    const double jac = twice_area(P0, P1, P2);
    Mat2 sum = Mat2::Zero();
    for (int i = 0; i < vertex_rule_.x.size(); ++i)
      for (int j = 0; j < tangent_rule_.x.size(); ++j) {
        const double s = vertex_rule_.x(i), t = tangent_rule_.x(j);
        const Vec2 x = P0 + s * ((P1 - P0) + t * (P2 - P1));
        sum += vertex_rule_.w(i) * tangent_rule_.w(j) * scaled_weight(x, s) * A_(x);
      }
    return jac * sum;
  }

  // zero edge P1P2, apex P0; x = s P0 + (1 - s)(P1 + t (P2 - P1)), Jacobian (1 - s)|2T|
  Mat2 edge_piece(const Piece& piece) const {
    int apex = 0;
    for (int k = 0; k < 3; ++k)
      if (piece.l[k] != 0) apex = k;
    const Vec2& P0 = piece.p[apex];
    const Vec2& P1 = piece.p[(apex + 1) % 3];
    const Vec2& P2 = piece.p[(apex + 2) % 3];
    const double jac = twice_area(P0, P1, P2);
    Mat2 sum = Mat2::Zero();
    for (int i = 0; i < edge_rule_.x.size(); ++i)
      for (int j = 0; j < tangent_rule_.x.size(); ++j) {
        const double s = edge_rule_.x(i), t = tangent_rule_.x(j);
        const Vec2 x = s * P0 + (1 - s) * (P1 + t * (P2 - P1));
        sum += edge_rule_.w(i) * tangent_rule_.w(j) * scaled_weight(x, s) * A_(x);
      }
    return jac * sum;
  }

  const CoefficientField& A_;
  const WeightSpec* w_;
  double a_ = 0;
  bool smooth_ = true;
  const TriangleRule* smooth_rule_ = nullptr;
  const TriangleRule* interior_rule_ = nullptr;
  Rule1D edge_rule_, vertex_rule_, tangent_rule_;
};

}  // namespace

double WeightSpec::critical_exponent() const {
  double n = frequency_bound;
  if (n <= 0) {
    if (const auto* p = std::get_if<HarmonicPolynomial2d>(&u)) n = std::max(1, p->degree());
    else if (a < 0)
      throw Error(ErrorKind::InvalidArgument, "a negative exponent with a discrete weight needs a frequency bound");
    else n = 1;
  }
  return std::min(1.0, 2.0 / n);
}

void WeightSpec::validate() const {
  if (!std::isfinite(a)) throw Error(ErrorKind::InvalidArgument, "exponent must be finite");
  const double aS = critical_exponent();
  if (a <= -aS) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "a = %g is not above -a_S = %g", a, -aS);
    throw Error(ErrorKind::ExponentBelowThreshold, buf);
  }
}

double WeightSpec::eval(const Vec2& p) const {
  if (const auto* poly = std::get_if<HarmonicPolynomial2d>(&u)) return (*poly)(p);
  double v = 0;
  std::get<GridFunction>(u).try_value(p, v);
  return v;
}

struct WeightedSystem::Factorization {
  std::vector<int> free_index;  // vertex -> row, -1 if not free
  std::vector<int> free_vertices;
  SparseMatrix K_fd;  // free x all
  Eigen::SimplicialLDLT<SparseMatrix> ldlt;
  Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;
  bool iterative = false;
};

WeightedSystem::WeightedSystem(std::shared_ptr<const Mesh2D> mesh, const CoefficientField& A, const WeightSpec* weight,
                               const SolveOptions& options)
    : mesh_(std::move(mesh)) {
  const Mesh2D& m = *mesh_;
  const int nv = m.num_vertices(), nt = m.num_triangles();
  if (weight) weight->validate();
  per_component_ = options.mode == SolveMode::PerComponent;
  if (per_component_ && !weight)
    throw Error(ErrorKind::InvalidArgument, "per-component mode needs a weight function");

  // vertex values of the weight function, snapped to zero at rounding level
  std::vector<double> uv(nv, 1.0);
  std::vector<int> sv(nv, 1);
  if (weight) {
    double scale = 0;
    for (int v = 0; v < nv; ++v) {
      uv[v] = weight->eval(m.vertices[v]);
      scale = std::max(scale, std::abs(uv[v]));
    }
    for (int v = 0; v < nv; ++v) {
      if (std::abs(uv[v]) <= 1e-13 * scale) uv[v] = 0;
      sv[v] = sign_of(uv[v]);
    }
  }

  active_t_.assign(nt, 1);
  if (options.triangle_filter) active_t_ = *options.triangle_filter;
  active_v_.assign(nv, 0);
  if (per_component_) {
    sign_ = sign_of(weight->eval(options.seed));
    if (sign_ == 0) throw Error(ErrorKind::InvalidArgument, "component seed lies on the nodal set");
    const int t0 = m.locate(options.seed, true);
    if (t0 < 0) throw Error(ErrorKind::InvalidArgument, "component seed outside the mesh");
    std::vector<char> in(nv, 0);
    std::deque<int> queue;
    for (int k = 0; k < 3; ++k)
      if (sv[m.triangles[t0][k]] == sign_) {
        in[m.triangles[t0][k]] = 1;
        queue.push_back(m.triangles[t0][k]);
      }
    if (queue.empty()) throw Error(ErrorKind::InvalidArgument, "component seed triangle has no vertex of its sign");
    while (!queue.empty()) {
      const int v = queue.front();
      queue.pop_front();
      for (int t : m.vertex_triangles(v))
        for (int k = 0; k < 3; ++k) {
          const int w = m.triangles[t][k];
          if (!in[w] && sv[w] == sign_) {
            in[w] = 1;
            queue.push_back(w);
          }
        }
    }
    for (int t = 0; t < nt; ++t) {
      bool touches = false;
      for (int k = 0; k < 3; ++k) touches = touches || in[m.triangles[t][k]];
      active_t_[t] = active_t_[t] && touches;
    }
  }
  for (int t = 0; t < nt; ++t)
    if (active_t_[t])
      for (int k = 0; k < 3; ++k) active_v_[m.triangles[t][k]] = 1;
  dirichlet_.assign(nv, 0);
  for (int v = 0; v < nv; ++v)
    if (active_v_[v] && m.on_outer_boundary(v) && (!per_component_ || sv[v] == sign_ || sv[v] == 0))
      dirichlet_[v] = 1;

  ElementIntegrator integrator(A, weight);
  W_.assign(nt, Mat2::Zero());
  std::vector<Eigen::Matrix3d> local(nt);
  const int filter = per_component_ ? sign_ : 0;
  parallel_for(nt, [&](int t) {
    if (!active_t_[t]) return;
    const auto& tri = m.triangles[t];
    const Vec2 p[3] = {m.vertices[tri[0]], m.vertices[tri[1]], m.vertices[tri[2]]};
    const double l[3] = {uv[tri[0]], uv[tri[1]], uv[tri[2]]};
    W_[t] = integrator.integrate(p, l, filter);
    const auto G = m.hat_gradients(t);
    local[t] = G.transpose() * W_[t] * G;
  });

  double mean = 0;
  int count = 0;
  for (int t = 0; t < nt; ++t) {
    if (!active_t_[t]) continue;
    if (!W_[t].allFinite())
      throw Error(ErrorKind::QuadratureBreakdown, "non-finite weight integral on triangle " + std::to_string(t));
    mean += W_[t].trace() / m.area(t);
    ++count;
  }
  mean /= std::max(count, 1);
  for (int t = 0; t < nt; ++t)
    if (active_t_[t] && W_[t].trace() / m.area(t) > 1e6 * mean)
      throw Error(ErrorKind::QuadratureBreakdown, "weight integral on triangle " + std::to_string(t) +
                                                      " exceeds 1e6 times the mean");

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(9 * static_cast<std::size_t>(nt));
  for (int t = 0; t < nt; ++t) {
    if (!active_t_[t]) continue;
    const auto& tri = m.triangles[t];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) trip.emplace_back(tri[i], tri[j], local[t](i, j));
  }
  K_.resize(nv, nv);
  K_.setFromTriplets(trip.begin(), trip.end());
}

std::vector<char> WeightedSystem::test_vertices() const {
  const Mesh2D& m = *mesh_;
  std::vector<char> out(m.num_vertices(), 0);
  for (int v = 0; v < m.num_vertices(); ++v) {
    if (!active_v_[v] || dirichlet_[v]) continue;
    bool full = true;
    for (int t : m.vertex_triangles(v)) full = full && active_t_[t];
    out[v] = full;
  }
  return out;
}

GridFunction WeightedSystem::wrap(Eigen::VectorXd values) const {
  const bool restricted = per_component_ || std::find(active_t_.begin(), active_t_.end(), 0) != active_t_.end();
  if (!restricted) return GridFunction(mesh_, std::move(values));
  for (int v = 0; v < values.size(); ++v)
    if (!active_v_[v]) values(v) = 0;
  return GridFunction(mesh_, std::move(values), active_v_, active_t_);
}

namespace {

std::shared_ptr<WeightedSystem::Factorization> factorize(const SparseMatrix& K, const std::vector<char>& active,
                                                         const std::vector<char>& dirichlet) {
  auto f = std::make_shared<WeightedSystem::Factorization>();
  const int nv = static_cast<int>(K.rows());
  f->free_index.assign(nv, -1);
  for (int v = 0; v < nv; ++v)
    if (active[v] && !dirichlet[v]) {
      f->free_index[v] = static_cast<int>(f->free_vertices.size());
      f->free_vertices.push_back(v);
    }
  const int nf = static_cast<int>(f->free_vertices.size());
  std::vector<Eigen::Triplet<double>> ff, fd;
  for (int c = 0; c < K.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(K, c); it; ++it) {
      const int r = f->free_index[it.row()];
      if (r < 0) continue;
      fd.emplace_back(r, static_cast<int>(it.col()), it.value());
      const int cc = f->free_index[it.col()];
      if (cc >= 0) ff.emplace_back(r, cc, it.value());
    }
  SparseMatrix Kff(nf, nf);
  Kff.setFromTriplets(ff.begin(), ff.end());
  f->K_fd.resize(nf, nv);
  f->K_fd.setFromTriplets(fd.begin(), fd.end());
  if (nf == 0) return f;
  if (nf > kDirectSolverLimit) {
    f->iterative = true;
    f->cg.setTolerance(1e-12);
    f->cg.setMaxIterations(20 * nf);
    f->cg.compute(Kff);
    if (f->cg.info() != Eigen::Success) throw Error(ErrorKind::SingularSystem, "CG setup failed");
    return f;
  }
  f->ldlt.compute(Kff);
  if (f->ldlt.info() != Eigen::Success) throw Error(ErrorKind::SingularSystem, "sparse LDLT factorization failed");
  const Eigen::VectorXd d = f->ldlt.vectorD();
  if (d.minCoeff() <= 1e-14 * d.cwiseAbs().maxCoeff())
    throw Error(ErrorKind::SingularSystem, "stiffness matrix is not positive definite on the free vertices");
  return f;
}

Eigen::VectorXd solve_factored(const WeightedSystem::Factorization& f, const Eigen::VectorXd& dirichlet_values,
                               const Eigen::VectorXd& load) {
  Eigen::VectorXd x = dirichlet_values;
  const int nf = static_cast<int>(f.free_vertices.size());
  if (nf == 0) return x;
  Eigen::VectorXd rhs(nf);
  for (int i = 0; i < nf; ++i) rhs(i) = load(f.free_vertices[i]);
  Eigen::VectorXd xd = dirichlet_values;
  for (int v : f.free_vertices) xd(v) = 0;
  rhs -= f.K_fd * xd;
  Eigen::VectorXd y;
  if (f.iterative) {
    y = f.cg.solve(rhs);
    if (f.cg.info() != Eigen::Success) throw Error(ErrorKind::SingularSystem, "CG did not converge");
  } else {
    y = f.ldlt.solve(rhs);
  }
  if (!y.allFinite()) throw Error(ErrorKind::SingularSystem, "non-finite solution");
  for (int i = 0; i < nf; ++i) x(f.free_vertices[i]) = y(i);
  return x;
}

}  // namespace

const WeightedSystem::Factorization& WeightedSystem::default_factorization() const {
  std::call_once(once_, [this] { factor_ = factorize(K_, active_v_, dirichlet_); });
  return *factor_;
}

GridFunction WeightedSystem::solve(const ScalarFunction& g, const VectorFunction* flux) const {
  const Mesh2D& m = *mesh_;
  Eigen::VectorXd xd = Eigen::VectorXd::Zero(m.num_vertices());
  for (int v = 0; v < m.num_vertices(); ++v)
    if (dirichlet_[v]) xd(v) = g(m.vertices[v]);
  const Eigen::VectorXd load = flux ? flux_load(*flux) : Eigen::VectorXd::Zero(m.num_vertices());
  return wrap(solve_factored(default_factorization(), xd, load));
}

GridFunction WeightedSystem::solve_with(const std::vector<char>& dirichlet, const Eigen::VectorXd& dirichlet_values,
                                        const Eigen::VectorXd& load) const {
  const auto f = factorize(K_, active_v_, dirichlet);
  Eigen::VectorXd xd = Eigen::VectorXd::Zero(K_.rows());
  for (int v = 0; v < xd.size(); ++v)
    if (dirichlet[v]) xd(v) = dirichlet_values(v);
  return wrap(solve_factored(*f, xd, load));
}

Eigen::VectorXd WeightedSystem::flux_load(const VectorFunction& F) const {
  const Mesh2D& m = *mesh_;
  const TriangleRule& rule = dunavant7();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(m.num_vertices());
  for (int t = 0; t < m.num_triangles(); ++t) {
    if (!active_t_[t]) continue;
    const auto& tri = m.triangles[t];
    Vec2 integral = Vec2::Zero();
    for (std::size_t q = 0; q < rule.w.size(); ++q) {
      const auto& bc = rule.bary[q];
      integral += rule.w[q] * F(bc(0) * m.vertices[tri[0]] + bc(1) * m.vertices[tri[1]] + bc(2) * m.vertices[tri[2]]);
    }
    integral *= m.area(t);
    const auto G = m.hat_gradients(t);
    for (int k = 0; k < 3; ++k) b(tri[k]) -= integral.dot(G.col(k));
  }
  return b;
}

GridFunction solve_elliptic(const CoefficientField& A, const ScalarFunction& g, std::shared_ptr<const Mesh2D> mesh) {
  return WeightedSystem(std::move(mesh), A, nullptr).solve(g);
}

GridFunction solve_degenerate(const WeightSpec& weight, const CoefficientField& A, const ScalarFunction& g,
                              std::shared_ptr<const Mesh2D> mesh, const SolveOptions& options) {
  return WeightedSystem(std::move(mesh), A, &weight, options).solve(g);
}

GridFunction solve_halfplane_la(double a, const ScalarFunction& g, std::shared_ptr<const Mesh2D> half_disc) {
  if (half_disc->domain.shape != Domain::Shape::HalfDisc)
    throw Error(ErrorKind::InvalidArgument, "solve_halfplane_la needs a half-disc mesh");
  if (a <= -1) throw Error(ErrorKind::ExponentBelowThreshold, "half-plane problem needs a > -1");
  WeightSpec w;
  w.a = a;
  w.u = HarmonicPolynomial2d::monomial(1, {0, -1}) + HarmonicPolynomial2d::constant(-half_disc->domain.center.y());
  w.frequency_bound = 1;
  return solve_degenerate(w, identity_field(), g, std::move(half_disc));
}

GridFunction solve_flux(const CoefficientField& A, const VectorFunction& F, const ScalarFunction& g,
                        std::shared_ptr<const Mesh2D> mesh) {
  return WeightedSystem(std::move(mesh), A, nullptr).solve(g, &F);
}

namespace {

template <typename Norm>
double residual_impl(const GridFunction& w, const WeightSpec& weight, const CoefficientField& A,
                     SolveOptions options, Norm&& norm) {
  if (w.masked() && !options.triangle_filter)
    options.triangle_filter = std::make_shared<std::vector<char>>(w.triangle_mask());
  WeightedSystem sys(w.mesh_ptr(), A, &weight, options);
  const Eigen::VectorXd r = sys.matrix() * w.values();
  const auto test = sys.test_vertices();
  double worst = 0;
  for (int v = 0; v < r.size(); ++v)
    if (test[v]) {
      const double n = norm(sys, v);
      if (n > 0) worst = std::max(worst, std::abs(r(v)) / n);
    }
  return worst;
}

}  // namespace

double weak_residual(const GridFunction& w, const WeightSpec& weight, const CoefficientField& A,
                     const SolveOptions& options) {
  return residual_impl(w, weight, A, options,
                       [](const WeightedSystem& s, int v) { return std::sqrt(s.matrix().coeff(v, v)); });
}

double weak_residual_lumped(const GridFunction& w, const WeightSpec& weight, const CoefficientField& A,
                            const SolveOptions& options) {
  return residual_impl(w, weight, A, options, [](const WeightedSystem& s, int v) {
    double mass = 0;
    for (int t : s.mesh().vertex_triangles(v))
      if (s.active_triangles()[t]) mass += s.mesh().area(t) / 3;
    return mass;
  });
}

GridFunction a_harmonic_conjugate(const GridFunction& u, const CoefficientField& A, double loop_tolerance,
                                  double* max_loop_defect) {
  const Mesh2D& m = u.mesh();
  const int nv = m.num_vertices(), nt = m.num_triangles();
  const TriangleRule& rule = dunavant7();
  // piecewise-constant field J A grad u with A averaged like the stiffness assembly
  std::vector<Vec2> field(nt, Vec2::Zero());
  double scale = 0;
  for (int t = 0; t < nt; ++t) {
    if (!u.triangle_active(t)) continue;
    const auto& tri = m.triangles[t];
    Mat2 mean = Mat2::Zero();
    for (std::size_t q = 0; q < rule.w.size(); ++q) {
      const auto& b = rule.bary[q];
      mean += rule.w[q] * A(b(0) * m.vertices[tri[0]] + b(1) * m.vertices[tri[1]] + b(2) * m.vertices[tri[2]]);
    }
    const Vec2 f = mean * u.triangle_gradient(t);
    field[t] = Vec2(-f.y(), f.x());
    scale = std::max(scale, f.norm());
  }
  // Values live at edge midpoints (nonconforming P1); walk a spanning tree
  // of the dual graph, each triangle fixing its two remaining midpoints.
  std::map<std::pair<int, int>, int> edge_id;
  std::vector<std::array<int, 3>> tri_edges(nt);
  std::vector<Vec2> midpoint;
  std::vector<std::vector<int>> edge_tris;
  for (int t = 0; t < nt; ++t) {
    if (!u.triangle_active(t)) continue;
    for (int k = 0; k < 3; ++k) {
      const int a = m.triangles[t][(k + 1) % 3], b = m.triangles[t][(k + 2) % 3];
      const auto key = std::minmax(a, b);
      auto [it, fresh] = edge_id.emplace(key, static_cast<int>(midpoint.size()));
      if (fresh) {
        midpoint.push_back(0.5 * (m.vertices[a] + m.vertices[b]));
        edge_tris.emplace_back();
      }
      tri_edges[t][k] = it->second;
      edge_tris[it->second].push_back(t);
    }
  }
  const int ne = static_cast<int>(midpoint.size());
  std::vector<double> mid(ne, 0);
  std::vector<char> mid_set(ne, 0), visited(nt, 0);
  const int root = u.locate(m.domain.center);
  if (root < 0) throw Error(ErrorKind::InvalidArgument, "conjugate root triangle not found");
  double defect = 0;
  std::deque<int> queue{root};
  visited[root] = 1;
  mid_set[tri_edges[root][0]] = 1;
  while (!queue.empty()) {
    const int t = queue.front();
    queue.pop_front();
    int anchor = -1;
    for (int e : tri_edges[t])
      if (mid_set[e] && anchor < 0) anchor = e;
    for (int e : tri_edges[t]) {
      const double value = mid[anchor] + field[t].dot(midpoint[e] - midpoint[anchor]);
      if (mid_set[e]) {
        defect = std::max(defect, std::abs(value - mid[e]));
      } else {
        mid[e] = value;
        mid_set[e] = 1;
      }
      for (int s : edge_tris[e])
        if (!visited[s]) {
          visited[s] = 1;
          queue.push_back(s);
        }
    }
  }
  // vertex values: extrapolate each triangle's linear function, average over the star
  Eigen::VectorXd ubar = Eigen::VectorXd::Zero(nv);
  std::vector<int> count(nv, 0);
  for (int t = 0; t < nt; ++t) {
    if (!visited[t]) continue;
    const auto& e = tri_edges[t];
    for (int k = 0; k < 3; ++k) {
      const int v = m.triangles[t][k];
      ubar(v) += mid[e[(k + 1) % 3]] + mid[e[(k + 2) % 3]] - mid[e[k]];
      ++count[v];
    }
  }
  std::vector<char> active(nv, 0);
  for (int v = 0; v < nv; ++v)
    if (count[v] > 0) {
      ubar(v) /= count[v];
      active[v] = 1;
    }
  GridFunction tmp(u.mesh_ptr(), ubar, active, visited);
  double at_origin = 0;
  if (tmp.try_value(m.domain.center, at_origin))
    for (int v = 0; v < nv; ++v)
      if (active[v]) ubar(v) -= at_origin;
  if (max_loop_defect) *max_loop_defect = defect;
  const double limit = loop_tolerance * std::max(scale, 1e-300) * m.h_max();
  if (defect > limit) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "loop integral %.3e exceeds %.3e", defect, limit);
    throw Error(ErrorKind::LoopDefectTooLarge, buf);
  }
  if (!u.masked() && std::all_of(visited.begin(), visited.end(), [](char c) { return c != 0; }))
    return GridFunction(u.mesh_ptr(), std::move(ubar));
  return GridFunction(u.mesh_ptr(), std::move(ubar), std::move(active), std::move(visited));
}

}  // namespace nodal
