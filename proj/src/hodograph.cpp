#include "nodal/hodograph.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <deque>

#include "nodal/error.hpp"
#include "nodal/quadrature.hpp"

namespace nodal {

namespace {

// rotation taking A grad u to grad ubar: d_x ubar = -(A grad u)_2, d_y ubar = (A grad u)_1
Vec2 rotate(const Vec2& f) { return Vec2(-f.y(), f.x()); }

GridFunction as_grid(const Field& u) {
  if (const auto* g = std::get_if<GridFunction>(&u)) return *g;
  const auto& p = std::get<PerturbedField>(u);
  Eigen::VectorXd v = p.perturbation.values();
  const Mesh2D& m = p.perturbation.mesh();
  for (int i = 0; i < v.size(); ++i) v(i) += p.base(m.vertices[i]);
  return GridFunction(p.perturbation.mesh_ptr(), std::move(v), p.perturbation.vertex_mask(),
                      p.perturbation.triangle_mask());
}

}  // namespace

struct HodographMap::Cache {
  std::vector<Vec2> image, point;
  Vec2 lo = Vec2::Zero();
  double cell = 1;
  int nx = 0, ny = 0;
  std::vector<std::vector<int>> buckets;

  int nearest(const Vec2& st) const {
    const int cx = std::clamp(static_cast<int>((st.x() - lo.x()) / cell), 0, nx - 1);
    const int cy = std::clamp(static_cast<int>((st.y() - lo.y()) / cell), 0, ny - 1);
    int best = -1;
    double bd = std::numeric_limits<double>::infinity();
    for (int ring = 0; ring < std::max(nx, ny); ++ring) {
      for (int i = cx - ring; i <= cx + ring; ++i)
        for (int j = cy - ring; j <= cy + ring; ++j) {
          if (i < 0 || j < 0 || i >= nx || j >= ny) continue;
          if (std::max(std::abs(i - cx), std::abs(j - cy)) != ring) continue;
          for (int k : buckets[static_cast<std::size_t>(j) * nx + i]) {
            const double d = (image[k] - st).squaredNorm();
            if (d < bd) bd = d, best = k;
          }
        }
      // every unvisited bucket is at least `ring` cells away
      if (best >= 0 && std::sqrt(bd) <= ring * cell) break;
    }
    return best;
  }
};

HodographMap::HodographMap(const Field& u, const CoefficientField& A, const Vec2& seed, const MapOptions& options)
    : u_(u), A_(A), seed_(seed), options_(options) {
  const Mesh2D* mesh = mesh_of(u);
  radius_ = mesh ? mesh->domain.radius : options.radius;
  center_ = mesh ? mesh->domain.center : Vec2::Zero();
  if (!determinant_constant(A, radius_, 1e-10))
    throw Error(ErrorKind::NonConstantDeterminant, "det A varies over the working disc; straightening needs it constant");
  det_ = A(center_).determinant();
  const double s0 = value(u, seed);
  if (s0 == 0) throw Error(ErrorKind::InvalidArgument, "component seed lies on the nodal set");
  sign_ = s0 > 0 ? 1 : -1;

  if (const auto* p = std::get_if<HarmonicPolynomial2d>(&u)) {
    if (!A.is_constant) throw Error(ErrorKind::InvalidArgument, "polynomial fields need a constant coefficient");
    const Mat2 M = A(Vec2::Zero());
    if ((M - Mat2::Identity()).norm() < 1e-14) {
      const auto q = harmonic_conjugate(*p);
      ubar_ = [q](const Vec2& x) { return q(x); };
    } else {
      // u must solve div(M grad u) = 0: (m11 - m22) u_xx + 2 m12 u_xy = 0
      for (const Vec2& x : {Vec2(0.3, 0.1), Vec2(-0.2, 0.5), Vec2(0.7, -0.4)}) {
        const auto [uxx, uxy] = p->second_derivatives(radius_ * x);
        if (std::abs((M(0, 0) - M(1, 1)) * uxx + 2 * M(0, 1) * uxy) > 1e-10 * (1 + std::abs(uxx) + std::abs(uxy)))
          throw Error(ErrorKind::InvalidArgument, "polynomial is not A-harmonic for the given constant A");
      }
      const Rule1D rule = gauss_legendre(16, 0, 1);
      const auto poly = *p;
      ubar_ = [poly, M, rule](const Vec2& x) {
        double s = 0;
        for (int i = 0; i < rule.x.size(); ++i) s += rule.w(i) * rotate(M * poly.gradient(Vec2(rule.x(i) * x))).dot(x);
        return s;
      };
    }
  } else {
    const GridFunction g = as_grid(u);
    ubar_grid_ = std::make_shared<const GridFunction>(a_harmonic_conjugate(g, A));
    u_ = g;
    auto grid = ubar_grid_;
    ubar_ = [grid](const Vec2& x) { return grid->value(x); };
  }

  // forward-image cache over the component containing the seed
  auto cache = std::make_shared<Cache>();
  const int nr = options.cache_rings, na = options.cache_angles;
  auto cell_point = [&](int i, int j) {
    const double r = radius_ * (i + 0.5) / nr, th = 2 * kPi * j / na;
    return Vec2(center_ + r * Vec2(std::cos(th), std::sin(th)));
  };
  std::vector<char> inside(static_cast<std::size_t>(nr) * na, 0), seen(inside.size(), 0);
  for (int i = 0; i < nr; ++i)
    for (int j = 0; j < na; ++j) inside[static_cast<std::size_t>(i) * na + j] = in_component(cell_point(i, j));
  int start = -1;
  double sd = std::numeric_limits<double>::infinity();
  for (int i = 0; i < nr; ++i)
    for (int j = 0; j < na; ++j) {
      const double d = (cell_point(i, j) - seed).squaredNorm();
      if (inside[static_cast<std::size_t>(i) * na + j] && d < sd) sd = d, start = i * na + j;
    }
  if (start < 0) throw Error(ErrorKind::InvalidArgument, "component of the seed is not resolved by the map cache");
  std::deque<int> queue{start};
  seen[start] = 1;
  while (!queue.empty()) {
    const int c = queue.front();
    queue.pop_front();
    const int i = c / na, j = c % na;
    cache->point.push_back(cell_point(i, j));
    cache->image.push_back((*this)(cache->point.back()));
    const int nb[4][2] = {{i - 1, j}, {i + 1, j}, {i, (j + 1) % na}, {i, (j + na - 1) % na}};
    for (const auto& n : nb) {
      if (n[0] < 0 || n[0] >= nr) continue;
      const int k = n[0] * na + n[1];
      if (!seen[k] && inside[k]) {
        seen[k] = 1;
        queue.push_back(k);
      }
    }
  }
  Vec2 lo = cache->image[0], hi = cache->image[0];
  image_radius_ = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < cache->image.size(); ++k) {
    lo = lo.cwiseMin(cache->image[k]);
    hi = hi.cwiseMax(cache->image[k]);
    if ((cache->point[k] - center_).norm() > radius_ * (nr - 1.0) / nr)
      image_radius_ = std::min(image_radius_, cache->image[k].norm());
  }
  const int side = std::max(1, static_cast<int>(std::sqrt(cache->image.size() / 4.0)));
  cache->lo = lo;
  cache->cell = std::max((hi - lo).maxCoeff() / side, 1e-300);
  cache->nx = static_cast<int>((hi.x() - lo.x()) / cache->cell) + 1;
  cache->ny = static_cast<int>((hi.y() - lo.y()) / cache->cell) + 1;
  cache->buckets.resize(static_cast<std::size_t>(cache->nx) * cache->ny);
  for (std::size_t k = 0; k < cache->image.size(); ++k) {
    const int i = std::min(cache->nx - 1, static_cast<int>((cache->image[k].x() - lo.x()) / cache->cell));
    const int j = std::min(cache->ny - 1, static_cast<int>((cache->image[k].y() - lo.y()) / cache->cell));
    cache->buckets[static_cast<std::size_t>(j) * cache->nx + i].push_back(static_cast<int>(k));
  }
  cache_ = std::move(cache);
}

double HodographMap::ubar(const Vec2& p) const { return ubar_(p); }

Vec2 HodographMap::operator()(const Vec2& p) const { return Vec2(ubar_(p), sign_ * value(u_, p)); }

Mat2 HodographMap::jacobian(const Vec2& p) const {
  const Vec2 g = gradient(u_, p);
  Mat2 J;
  J.row(0) = rotate(A_(p) * g).transpose();
  J.row(1) = sign_ * g.transpose();
  return J;
}

bool HodographMap::in_component(const Vec2& p) const {
  if ((p - center_).norm() >= radius_) return false;
  if (const auto* g = std::get_if<GridFunction>(&u_)) {
    double v = 0;
    return g->try_value(p, v) && sign_ * v > 0;
  }
  return sign_ * value(u_, p) > 0;
}

bool HodographMap::try_inverse(const Vec2& st, Vec2& out) const {
  if (st.norm() == 0) {
    out = Vec2::Zero();
    return true;
  }
  const int k = cache_->nearest(st);
  if (k < 0) return false;
  const auto* grid = std::get_if<GridFunction>(&u_);
  // evaluation of Theta and of the Jacobian of the map actually evaluated
  auto eval = [&](const Vec2& x, Vec2& F, Mat2* J) {
    if ((x - center_).norm() > radius_ * (grid ? 1.0 + 1e-12 : 1.05)) return false;
    if (grid) {
      const int t = grid->locate(x);
      if (t < 0) return false;
      F = Vec2(ubar_grid_->value(x), sign_ * grid->value(x)) - st;
      if (J) {
        J->row(0) = ubar_grid_->triangle_gradient(t).transpose();
        J->row(1) = sign_ * grid->triangle_gradient(t).transpose();
      }
      return true;
    }
    F = (*this)(x) - st;
    if (J) *J = jacobian(x);
    return true;
  };
  Vec2 x = cache_->point[k], F;
  Mat2 J;
  if (!eval(x, F, &J)) return false;
  const double tol = options_.newton_tol * std::max(1.0, st.norm());
  for (int it = 0; it < options_.newton_max_iter; ++it) {
    if (F.norm() <= tol) {
      out = x;
      return true;
    }
    if (std::abs(J.determinant()) < 1e-300) return false;
    const Vec2 dx = -J.partialPivLu().solve(F);
    double lambda = 1;
    bool accepted = false;
    for (int h = 0; h < 30; ++h, lambda *= 0.5) {
      Vec2 Fn;
      Mat2 Jn;
      const Vec2 xn = x + lambda * dx;
      if (eval(xn, Fn, &Jn) && Fn.norm() < F.norm()) {
        x = xn, F = Fn, J = Jn;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  if (F.norm() <= std::max(tol, 1e-10 * std::max(1.0, st.norm()))) {
    out = x;
    return true;
  }
  return false;
}

Vec2 HodographMap::inverse(const Vec2& st) const {
  Vec2 x;
  if (!try_inverse(st, x)) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "Newton inversion failed at (%g, %g)", st.x(), st.y());
    throw Error(ErrorKind::InverseMapFailure, buf);
  }
  return x;
}

Mat2 straightened_matrix(const HodographMap& map, const Vec2& st) {
  const Vec2 x = map.inverse(st);
  const Mat2 D = map.jacobian(x);
  const double det = std::abs(D.determinant());
  if (det == 0) return (Mat2() << map.determinant(), 0, 0, 1).finished();
  return D * map.coefficient()(x) * D.transpose() / det;
}

CoefficientField straightened_field(const HodographMap& map) {
  CoefficientField B = constant_field(map.determinant(), 0, 1);
  B.name = "straightened";
  return B;
}

Pushforward pushforward(const Field& w, const HodographMap& map, double a, std::shared_ptr<const Mesh2D> half_disc) {
  if (half_disc->domain.shape != Domain::Shape::HalfDisc)
    throw Error(ErrorKind::InvalidArgument, "pushforward needs a half-disc mesh");
  const Mesh2D& m = *half_disc;
  const int nv = m.num_vertices();
  Eigen::VectorXd values = Eigen::VectorXd::Zero(nv);
  std::vector<char> active(nv, 1);
  Pushforward out;
  for (int v = 0; v < nv; ++v) {
    Vec2 x;
    bool ok = map.try_inverse(m.vertices[v], x);
    if (ok) {
      if (const auto* g = std::get_if<GridFunction>(&w)) ok = g->try_value(x, values(v));
      else values(v) = value(w, x);
    }
    if (!ok) {
      active[v] = 0;
      ++out.failed_vertices;
    }
  }
  if (out.failed_vertices == nv) throw Error(ErrorKind::InverseMapFailure, "no half-disc vertex could be inverted");
  out.wbar = out.failed_vertices ? GridFunction(half_disc, std::move(values), std::move(active))
                                 : GridFunction(half_disc, std::move(values));
  WeightSpec ws;
  ws.a = a;
  ws.u = HarmonicPolynomial2d::monomial(1, {0, -1});
  ws.frequency_bound = 1;
  out.residual = weak_residual(out.wbar, ws, straightened_field(map));
  return out;
}

double EvenPolynomial::operator()(double s, double t) const {
  double sum = 0;
  for (std::size_t j = 0; j < coeffs.size(); ++j)
    sum += coeffs[j] * std::pow(s, degree - 2 * static_cast<int>(j)) * std::pow(t, 2 * static_cast<int>(j));
  return sum;
}

Vec2 EvenPolynomial::gradient(double s, double t) const {
  Vec2 g = Vec2::Zero();
  for (std::size_t j = 0; j < coeffs.size(); ++j) {
    const int p = degree - 2 * static_cast<int>(j), q = 2 * static_cast<int>(j);
    if (p > 0) g.x() += coeffs[j] * p * std::pow(s, p - 1) * std::pow(t, q);
    if (q > 0) g.y() += coeffs[j] * q * std::pow(s, p) * std::pow(t, q - 1);
  }
  return g;
}

LaHarmonicBasis la_harmonic_basis(double a, int k) {
  if (!(a > -1)) throw Error(ErrorKind::InvalidArgument, "L_a-harmonic basis needs a > -1");
  if (k < 0) throw Error(ErrorKind::InvalidArgument, "degree bound must be nonnegative");
  LaHarmonicBasis out;
  out.a = a;
  out.k = k;
  for (int m = 0; m <= k; ++m) {
    const int n = m / 2 + 1;  // monomials s^{m-2j} t^{2j}
    EvenPolynomial P;
    P.degree = m;
    if (m < 2) {
      P.coeffs = {1.0};
      out.basis.push_back(P);
      continue;
    }
    // L_a s^p t^q = p(p-1) s^{p-2} t^q + q(q-1+a) s^p t^{q-2}, images in degree m - 2
    const int rows = (m - 2) / 2 + 1;
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(rows, n);
    for (int j = 0; j < n; ++j) {
      const int p = m - 2 * j, q = 2 * j;
      if (p >= 2) L(j, j) += p * (p - 1.0);
      if (q >= 2) L(j - 1, j) += q * (q - 1.0 + a);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(L);
    const Eigen::MatrixXd ker = lu.kernel();
    if (ker.cols() != 1) throw Error(ErrorKind::InvalidArgument, "unexpected kernel dimension");
    const Eigen::VectorXd c = ker.col(0) / ker(0, 0);
    P.coeffs.assign(c.data(), c.data() + c.size());
    out.basis.push_back(P);
  }
  return out;
}

DiscSamples sample_disc(const std::function<double(const Vec2&)>& f, double radius, int rings, int angles) {
  DiscSamples s;
  s.radius = radius;
  const Rule1D rule = gauss_legendre(rings, 0, radius);
  for (int i = 0; i < rings; ++i)
    for (int j = 0; j < angles; ++j) {
      const double th = 2 * kPi * (j + 0.5) / angles;
      const Vec2 p = rule.x(i) * Vec2(std::cos(th), std::sin(th));
      s.points.push_back(p);
      s.weights.push_back(rule.w(i) * rule.x(i) * 2 * kPi / angles);
      s.values.push_back(f(p));
    }
  return s;
}

namespace {

struct DiscFit {
  std::vector<double> coeffs;
  double residual;
};

DiscFit fit_disc(const DiscSamples& d, const HarmonicPolynomial2d& u, const HarmonicPolynomial2d& ubar,
                 const LaHarmonicBasis& basis) {
  const int n = static_cast<int>(d.points.size()), k = static_cast<int>(basis.basis.size());
  Eigen::MatrixXd M(n, k);
  Eigen::VectorXd b(n);
  for (int i = 0; i < n; ++i) {
    const double w = std::sqrt(d.weights[i]);
    const double s = ubar(d.points[i]), t = u(d.points[i]);
    for (int j = 0; j < k; ++j) M(i, j) = w * basis.basis[j](s, t);
    b(i) = w * d.values[i];
  }
  Eigen::VectorXd scale = M.colwise().norm().transpose();
  for (int j = 0; j < k; ++j) {
    if (scale(j) == 0) throw Error(ErrorKind::RankDeficientDictionary, "dictionary element vanishes on the samples");
    M.col(j) /= scale(j);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(M);
  qr.setThreshold(1e-10);
  if (qr.rank() < k) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "composed dictionary has rank %d < %d on the disc of radius %g",
                  static_cast<int>(qr.rank()), k, d.radius);
    throw Error(ErrorKind::RankDeficientDictionary, buf);
  }
  const Eigen::VectorXd c = qr.solve(b);
  DiscFit out;
  out.residual = (M * c - b).norm() / std::max(b.norm(), 1e-300);
  for (int j = 0; j < k; ++j) out.coeffs.push_back(c(j) / scale(j));
  return out;
}

}  // namespace

LiouvilleFit liouville_fit(const std::vector<DiscSamples>& samples, const HarmonicPolynomial2d& u, double a,
                           double gamma, double threshold) {
  if (samples.empty()) throw Error(ErrorKind::InvalidArgument, "no sample discs");
  const int d = u.degree();
  if (d < 1 || u.coeff(d) == std::complex<double>(0) || u.homogeneous_part(d) != u)
    throw Error(ErrorKind::InvalidArgument, "liouville_fit needs a homogeneous harmonic u of degree >= 1");
  if (!(gamma >= 0)) throw Error(ErrorKind::InvalidArgument, "growth exponent must be nonnegative");
  const int kmax = static_cast<int>(std::floor(gamma / d + 1e-12));
  const auto ubar = harmonic_conjugate(u);
  LiouvilleFit out;
  out.basis = la_harmonic_basis(a, kmax);
  const LaHarmonicBasis harmonic = la_harmonic_basis(0, kmax);
  out.success = true;
  bool harmonic_success = true;
  for (const auto& disc : samples) {
    const DiscFit f = fit_disc(disc, u, ubar, out.basis);
    out.radii.push_back(disc.radius);
    out.residuals.push_back(f.residual);
    out.coefficients_per_radius.push_back(f.coeffs);
    out.success = out.success && f.residual < threshold;
    const double hr = a == 0 ? f.residual : fit_disc(disc, u, ubar, harmonic).residual;
    out.harmonic_residuals.push_back(hr);
    harmonic_success = harmonic_success && hr < threshold;
  }
  std::size_t largest = 0;
  for (std::size_t i = 0; i < out.radii.size(); ++i)
    if (out.radii[i] > out.radii[largest]) largest = i;
  out.coefficients = out.coefficients_per_radius[largest];
  out.harmonic_only = harmonic_success && !out.success;
  return out;
}

}  // namespace nodal
