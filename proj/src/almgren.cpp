#include "nodal/almgren.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <functional>

#include "nodal/error.hpp"
#include "nodal/quadrature.hpp"

namespace nodal {
namespace {

constexpr int kMaxHalvings = 20;
constexpr int kMaxDepth = 5;

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

// signed area of triangle (0, a, b) intersected with the disc
double wedge_disc_area(const Vec2& a, const Vec2& b, double r) {
  const Vec2 d = b - a;
  const double A = d.squaredNorm();
  if (A == 0) return 0;
  const double B = a.dot(d), C = a.squaredNorm() - r * r;
  std::vector<double> cuts{0.0};
  const double disc = B * B - A * C;
  if (disc > 0) {
    const double s = std::sqrt(disc);
    for (double t : {(-B - s) / A, (-B + s) / A})
      if (t > 0 && t < 1) cuts.push_back(t);
  }
  cuts.push_back(1.0);
  double area = 0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const Vec2 p = a + cuts[i] * d, q = a + cuts[i + 1] * d;
    const Vec2 mid = 0.5 * (p + q);
    if (mid.squaredNorm() <= r * r) area += 0.5 * cross(p, q);
    else area += 0.5 * r * r * std::atan2(cross(p, q), p.dot(q));
  }
  return area;
}

double segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 d = b - a;
  const double t = std::clamp((p - a).dot(d) / std::max(d.squaredNorm(), 1e-300), 0.0, 1.0);
  return (a + t * d - p).norm();
}

// Ellipse geometry at x0: x = x0 + T y with T = A(x0)^{1/2}.
struct Frame {
  Vec2 x0;
  Mat2 T, Tinv;
  double stretch;  // largest eigenvalue of T
  Vec2 to_x(const Vec2& y) const { return x0 + T * y; }
  Vec2 to_y(const Vec2& x) const { return Tinv * (x - x0); }
};

Frame make_frame(const CoefficientField& A, const Vec2& x0) {
  Eigen::SelfAdjointEigenSolver<Mat2> es(A(x0));
  if (es.eigenvalues().minCoeff() <= 0) throw Error(ErrorKind::InvalidArgument, "coefficient not positive definite");
  Frame f;
  f.x0 = x0;
  f.T = es.operatorSqrt();
  f.Tinv = es.operatorInverseSqrt();
  f.stretch = std::sqrt(es.eigenvalues().maxCoeff());
  return f;
}

const Domain* domain_of(const Field& u, const FrequencyOptions& options) {
  if (const Mesh2D* m = mesh_of(u)) return &m->domain;
  return options.domain ? &*options.domain : nullptr;
}

void check_radius(const Field& u, const Frame& frame, double r, const FrequencyOptions& options) {
  if (!(r > 0)) throw Error(ErrorKind::InvalidArgument, "radius must be positive");
  const Domain* d = domain_of(u, options);
  if (!d) return;
  const double reach = r * frame.stretch;
  bool ok = (frame.x0 - d->center).norm() + reach <= d->radius * (1 + 1e-12);
  if (d->shape == Domain::Shape::HalfDisc) ok = ok && frame.x0.y() - reach >= d->center.y() - 1e-12 * d->radius;
  if (!ok) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "ellipse of radius %g at (%g, %g) leaves the domain", r, frame.x0.x(), frame.x0.y());
    throw Error(ErrorKind::RadiusOutOfDomain, buf);
  }
}

// Evaluators on a triangle of the discrete part for (possibly perturbed) fields.
struct MeshField {
  const GridFunction* grid = nullptr;
  const HarmonicPolynomial2d* base = nullptr;

  double value(int t, const Vec2& x) const {
    const auto& tri = grid->mesh().triangles[t];
    const Eigen::Vector3d b = grid->mesh().barycentric(t, x);
    double v = b(0) * (*grid)[tri[0]] + b(1) * (*grid)[tri[1]] + b(2) * (*grid)[tri[2]];
    if (base) v += (*base)(x);
    return v;
  }
  Vec2 gradient(int t, const Vec2& x) const {
    Vec2 g = grid->triangle_gradient(t);
    if (base) g += base->gradient(x);
    return g;
  }
};

MeshField mesh_field(const Field& u) {
  if (const auto* g = std::get_if<GridFunction>(&u)) return {g, nullptr};
  const auto& p = std::get<PerturbedField>(u);
  return {&p.perturbation, &p.base};
}

// int_{B_r(y)} f(t, x(y)) dy over the active triangles of the mesh
double disc_integral(const MeshField& mf, const Frame& frame, double r,
                     const std::function<double(int, const Vec2&)>& f) {
  const Mesh2D& m = mf.grid->mesh();
  const TriangleRule& rule = dunavant7();
  double total = 0;
  std::function<void(int, const Vec2&, const Vec2&, const Vec2&, int)> visit = [&](int t, const Vec2& a, const Vec2& b,
                                                                                  const Vec2& c, int depth) {
    const double r2 = r * r;
    const bool ia = a.squaredNorm() <= r2, ib = b.squaredNorm() <= r2, ic = c.squaredNorm() <= r2;
    const double area = 0.5 * std::abs(cross(b - a, c - a));
    if (ia && ib && ic) {
      double s = 0;
      for (std::size_t q = 0; q < rule.w.size(); ++q) {
        const auto& w = rule.bary[q];
        s += rule.w[q] * f(t, frame.to_x(w(0) * a + w(1) * b + w(2) * c));
      }
      total += area * s;
      return;
    }
    const bool origin_inside = cross(b - a, -a) * cross(c - b, -b) >= 0 && cross(c - b, -b) * cross(a - c, -c) >= 0;
    const double dist = origin_inside ? 0.0
                                      : std::min({segment_distance(Vec2::Zero(), a, b), segment_distance(Vec2::Zero(), b, c),
                                                  segment_distance(Vec2::Zero(), c, a)});
    if (dist >= r) return;
    if (depth >= kMaxDepth) {
      const double cut = std::abs(wedge_disc_area(a, b, r) + wedge_disc_area(b, c, r) + wedge_disc_area(c, a, r));
      // evaluate at the centroid of the inside vertices and the cut, a point inside the piece
      Vec2 inside = Vec2::Zero();
      int n = 0;
      for (const Vec2* v : {&a, &b, &c})
        if (v->squaredNorm() <= r2) inside += *v, ++n;
      const Vec2 centroid = (a + b + c) / 3;
      Vec2 p = n > 0 ? Vec2(0.5 * (inside / n + centroid)) : centroid;
      if (p.norm() > r) p *= r / p.norm();
      total += cut * f(t, frame.to_x(p));
      return;
    }
    const Vec2 ab = 0.5 * (a + b), bc = 0.5 * (b + c), ca = 0.5 * (c + a);
    visit(t, a, ab, ca, depth + 1);
    visit(t, ab, b, bc, depth + 1);
    visit(t, ca, bc, c, depth + 1);
    visit(t, ab, bc, ca, depth + 1);
  };
  for (int t = 0; t < m.num_triangles(); ++t) {
    if (!mf.grid->triangle_active(t)) continue;
    const auto& tri = m.triangles[t];
    const Vec2 a = frame.to_y(m.vertices[tri[0]]), b = frame.to_y(m.vertices[tri[1]]), c = frame.to_y(m.vertices[tri[2]]);
    // quick reject by bounding box
    const double lo_x = std::min({a.x(), b.x(), c.x()}), hi_x = std::max({a.x(), b.x(), c.x()});
    const double lo_y = std::min({a.y(), b.y(), c.y()}), hi_y = std::max({a.y(), b.y(), c.y()});
    if (lo_x > r || hi_x < -r || lo_y > r || hi_y < -r) continue;
    // depth budget relative to the triangle size keeps leaves below r / 64
    visit(t, a, b, c, std::max(0, kMaxDepth - static_cast<int>(std::ceil(std::log2(std::max(1.0, 64 * std::max(hi_x - lo_x, hi_y - lo_y) / r))))));
  }
  return total;
}

// r int_0^{2 pi} g(x(r e^{i theta})) d theta with composite Gauss panels
double circle_integral(const Field& u, const Frame& frame, double r, const FrequencyOptions& options,
                       const std::function<double(const Vec2&)>& g) {
  int panels = 1;
  int points = options.angular_points;
  if (const Mesh2D* m = mesh_of(u)) {
    // panels of length about h / 2 in x
    panels = std::max(16, static_cast<int>(std::ceil(2 * kPi * r * frame.stretch / (0.5 * m->h_min()))));
    points = 4;
    panels = std::min(panels, 1 << 16);
  }
  const Rule1D rule = gauss_legendre(points, 0, 1);
  const double width = 2 * kPi / panels;
  double s = 0;
  for (int k = 0; k < panels; ++k)
    for (int i = 0; i < points; ++i) {
      const double th = width * (k + rule.x(i));
      s += width * rule.w(i) * g(frame.to_x(Vec2(r * std::cos(th), r * std::sin(th))));
    }
  return r * s;
}

double height_in_frame(const Field& u, const Frame& frame, double r, const FrequencyOptions& options) {
  return circle_integral(u, frame, r, options, [&](const Vec2& x) {
    const double v = value(u, x);
    return v * v;
  });
}

double energy_in_frame(const Field& u, const CoefficientField& A, const Frame& frame, double r,
                       const FrequencyOptions& options) {
  if (const auto* p = std::get_if<HarmonicPolynomial2d>(&u)) {
    const Rule1D th = gauss_legendre(options.angular_points, 0, 2 * kPi);
    const Rule1D rho = gauss_legendre(options.radial_points, 0, r);
    double s = 0;
    for (int i = 0; i < th.x.size(); ++i) {
      const Vec2 dir(std::cos(th.x(i)), std::sin(th.x(i)));
      for (int j = 0; j < rho.x.size(); ++j) {
        const Vec2 x = frame.to_x(rho.x(j) * dir);
        const Vec2 g = p->gradient(x);
        s += th.w(i) * rho.w(j) * rho.x(j) * g.dot(A(x) * g);
      }
    }
    return s;
  }
  const MeshField mf = mesh_field(u);
  return disc_integral(mf, frame, r, [&](int t, const Vec2& x) {
    const Vec2 g = mf.gradient(t, x);
    return g.dot(A(x) * g);
  });
}

double mass_in_frame(const Field& u, const Frame& frame, double r, const FrequencyOptions& options) {
  if (const auto* p = std::get_if<HarmonicPolynomial2d>(&u)) {
    const Rule1D th = gauss_legendre(options.angular_points, 0, 2 * kPi);
    const Rule1D rho = gauss_legendre(options.radial_points, 0, r);
    double s = 0;
    for (int i = 0; i < th.x.size(); ++i) {
      const Vec2 dir(std::cos(th.x(i)), std::sin(th.x(i)));
      for (int j = 0; j < rho.x.size(); ++j) {
        const double v = (*p)(frame.to_x(rho.x(j) * dir));
        s += th.w(i) * rho.w(j) * rho.x(j) * v * v;
      }
    }
    return s;
  }
  const MeshField mf = mesh_field(u);
  return disc_integral(mf, frame, r, [&](int t, const Vec2& x) {
    const double v = mf.value(t, x);
    return v * v;
  });
}

double polynomial_scale(const HarmonicPolynomial2d& p, double reach) {
  double s = 0, power = 1;
  for (const auto& c : p.coeffs()) {
    s += std::abs(c) * power;
    power *= reach;
  }
  return s;
}

double evaluation_scale(const Field& u, const Frame& frame, double r) {
  const double reach = frame.x0.norm() + r * frame.stretch;
  if (const auto* p = std::get_if<HarmonicPolynomial2d>(&u)) return polynomial_scale(*p, reach);
  const MeshField mf = mesh_field(u);
  double s = mf.grid->values().cwiseAbs().maxCoeff();
  if (mf.base) s += polynomial_scale(*mf.base, reach);
  return s;
}

struct Sample {
  double H, D, N;
};

Sample sample(const Field& u, const CoefficientField& A, const Frame& frame, double r, const FrequencyOptions& options) {
  check_radius(u, frame, r, options);
  const double H = height_in_frame(u, frame, r, options);
  // zero to machine precision: rms of u on the circle against the size of
  // the terms that produce it
  const double rms = std::sqrt(H / (2 * kPi * r));
  if (!(rms > 1e-14 * evaluation_scale(u, frame, r))) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "H = %.3e at radius %g", H, r);
    throw Error(ErrorKind::ZeroHeight, buf);
  }
  const double D = energy_in_frame(u, A, frame, r, options);
  return {H, D, r * D / H};
}

double max_admissible_radius(const Field& u, const Frame& frame, const FrequencyOptions& options) {
  const Domain* d = domain_of(u, options);
  if (!d) return std::numeric_limits<double>::infinity();
  double reach = d->radius - (frame.x0 - d->center).norm();
  if (d->shape == Domain::Shape::HalfDisc) reach = std::min(reach, frame.x0.y() - d->center.y());
  return std::max(0.0, reach / frame.stretch);
}

}  // namespace

double triangle_disc_area(const Vec2& a, const Vec2& b, const Vec2& c, double r) {
  return std::abs(wedge_disc_area(a, b, r) + wedge_disc_area(b, c, r) + wedge_disc_area(c, a, r));
}

FrequencyProfile frequency_profile(const Field& u, const CoefficientField& A, const Vec2& x0,
                                   const std::vector<double>& radii, const FrequencyOptions& options) {
  if (!std::is_sorted(radii.begin(), radii.end()) || std::adjacent_find(radii.begin(), radii.end()) != radii.end())
    throw Error(ErrorKind::InvalidArgument, "radii must be strictly increasing");
  const Frame frame = make_frame(A, x0);
  FrequencyProfile out;
  out.center = x0;
  for (double r : radii) {
    const Sample s = sample(u, A, frame, r, options);
    out.radii.push_back(r);
    out.H.push_back(s.H);
    out.D.push_back(s.D);
    out.N.push_back(s.N);
  }
  for (std::size_t i = 0; i + 1 < out.N.size(); ++i)
    out.monotonicity_defect = std::max(out.monotonicity_defect, out.N[i] - out.N[i + 1]);
  return out;
}

double frequency(const Field& u, const CoefficientField& A, const Vec2& x0, double r, const FrequencyOptions& options) {
  return sample(u, A, make_frame(A, x0), r, options).N;
}

double height(const Field& u, const CoefficientField& A, const Vec2& x0, double r, const FrequencyOptions& options) {
  const Frame frame = make_frame(A, x0);
  check_radius(u, frame, r, options);
  return height_in_frame(u, frame, r, options);
}

double ball_mass(const Field& u, const CoefficientField& A, const Vec2& x0, double r, const FrequencyOptions& options) {
  const Frame frame = make_frame(A, x0);
  check_radius(u, frame, r, options);
  return mass_in_frame(u, frame, r, options);
}

VanishingOrder vanishing_order(const Field& u, const CoefficientField& A, const Vec2& x0, double r0,
                               const FrequencyOptions& options, double tol) {
  const Frame frame = make_frame(A, x0);
  const Mesh2D* m = mesh_of(u);
  if (r0 <= 0) {
    const double limit = max_admissible_radius(u, frame, options);
    r0 = std::isfinite(limit) ? 0.9 * limit : 0.5;
  }
  const double floor = m ? options.floor_factor * m->local_h(m->nearest_vertex(x0)) * frame.stretch : 0.0;
  VanishingOrder out;
  double r = r0;
  for (int k = 0; k <= kMaxHalvings; ++k, r *= 0.5) {
    if (m && r < floor) return out;  // converged stays false
    const double n = sample(u, A, frame, r, options).N;
    out.radii.push_back(r);
    out.values.push_back(n);
    out.order = n;
    if (out.values.size() >= 2 && std::abs(n - out.values[out.values.size() - 2]) < tol) {
      out.converged = true;
      return out;
    }
  }
  throw Error(ErrorKind::NoConvergence, "frequency did not settle after 20 halvings");
}

DoublingReport doubling_check(const Field& u, const CoefficientField& A, const Vec2& x0, double r, double R,
                              const FrequencyOptions& options, double constant) {
  if (!(r > 0) || r > R) throw Error(ErrorKind::InvalidArgument, "doubling needs 0 < r <= R");
  const Frame frame = make_frame(A, x0);
  const Sample big = sample(u, A, frame, R, options);
  DoublingReport out;
  out.frequency_R = big.N;
  out.constant = constant;
  if (r == R) {
    out.bound = 1;
    return out;
  }
  const Sample small = sample(u, A, frame, r, options);
  const double m_small = mass_in_frame(u, frame, r, options), m_big = mass_in_frame(u, frame, R, options);
  out.mass_ratio = m_big / m_small;
  out.mean_ratio = out.mass_ratio * (r * r) / (R * R);
  out.height_ratio = big.H / small.H;
  out.bound = constant * std::pow(R / r, 2 * big.N);
  // homogeneous u attain equality; allow roundoff in N(R)
  out.holds = out.mean_ratio <= out.bound * (1 + 1e-12);
  return out;
}

std::optional<double> critical_radius(const Field& u, const CoefficientField& A, const Vec2& x0, double eps,
                                      double r_max, double r_min, const FrequencyOptions& options) {
  if (!(eps > 0 && eps < 1)) throw Error(ErrorKind::InvalidArgument, "eps must lie in (0, 1)");
  if (r_min <= 0) r_min = 1e-3 * r_max;
  const Frame frame = make_frame(A, x0);
  const double target = 1 + eps;
  if (sample(u, A, frame, r_max, options).N < target) return std::nullopt;
  if (sample(u, A, frame, r_min, options).N >= target) return r_min;
  double lo = r_min, hi = r_max;
  while (hi - lo > 1e-6 * hi) {
    const double mid = std::sqrt(lo * hi);
    if (sample(u, A, frame, mid, options).N >= target) hi = mid;
    else lo = mid;
  }
  return hi;
}

}  // namespace nodal
