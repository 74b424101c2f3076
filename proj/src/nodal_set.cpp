#include "nodal/nodal_set.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <map>
#include <numeric>
#include <ostream>
#include <set>

#include "nodal/almgren.hpp"
#include "nodal/error.hpp"

namespace nodal {
namespace {

using Complex = std::complex<double>;

// root of g on [0, 1] with g(0) g(1) <= 0 (Illinois false position)
double edge_root(const std::function<double(double)>& g, double g0, double g1) {
  double a = 0, b = 1, fa = g0, fb = g1;
  int side = 0;
  for (int it = 0; it < 100 && b - a > 1e-15; ++it) {
    const double c = (a * fb - b * fa) / (fb - fa);
    const double fc = g(c);
    if (fc == 0) return c;
    if ((fc > 0) == (fb > 0)) {
      b = c, fb = fc;
      if (side == -1) fa *= 0.5;
      side = -1;
    } else {
      a = c, fa = fc;
      if (side == 1) fb *= 0.5;
      side = 1;
    }
  }
  return std::abs(fa) < std::abs(fb) ? a : b;
}

// Polynomial roots of f'(z) via the companion matrix, then Newton polish.
std::vector<Complex> critical_points(const HarmonicPolynomial2d& p) {
  const int d = p.degree();
  if (d < 2) return {};
  std::vector<Complex> c(d);  // coefficients of f'
  for (int k = 1; k <= d; ++k) c[k - 1] = double(k) * p.coeff(k);
  const int n = d - 1;
  Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(n, n);
  for (int i = 1; i < n; ++i) companion(i, i - 1) = 1;
  for (int i = 0; i < n; ++i) companion(i, n - 1) = -c[i] / c[n];
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(companion, false);
  std::vector<Complex> roots;
  for (int i = 0; i < n; ++i) roots.push_back(es.eigenvalues()(i));
  auto fprime = [&](Complex z) { return p.derivative(z); };
  auto fsecond = [&](Complex z) {
    Complex acc(0);
    for (int k = d; k >= 2; --k) acc = acc * z + double(k * (k - 1)) * p.coeff(k);
    return acc;
  };
  for (auto& z : roots)
    for (int it = 0; it < 8; ++it) {
      const Complex s = fsecond(z);
      if (std::abs(s) < 1e-12) break;  // multiple root: eigenvalues are already clustered
      const Complex step = fprime(z) / s;
      z -= step;
      if (std::abs(step) < 1e-16) break;
    }
  return roots;
}

int count_sign_changes(const std::vector<double>& v) {
  int changes = 0;
  const int n = static_cast<int>(v.size());
  for (int i = 0; i < n; ++i) {
    const double a = v[i], b = v[(i + 1) % n];
    if ((a < 0) != (b < 0)) ++changes;
  }
  return changes;
}

int branches_on_circle(const Field& u, const Vec2& center, double rho, int samples = 720) {
  std::vector<double> vals;
  vals.reserve(samples);
  for (int i = 0; i < samples; ++i) {
    const double th = 2 * kPi * (i + 0.5) / samples;
    vals.push_back(value(u, Vec2(center + rho * Vec2(std::cos(th), std::sin(th)))));
  }
  return count_sign_changes(vals);
}

struct Key {
  int a, b;  // vertex crossing: (v, -1); edge crossing: (min, max)
  bool operator<(const Key& o) const { return a != o.a ? a < o.a : b < o.b; }
  bool operator==(const Key& o) const { return a == o.a && b == o.b; }
};

double segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 d = b - a;
  const double t = std::clamp((p - a).dot(d) / std::max(d.squaredNorm(), 1e-300), 0.0, 1.0);
  return (a + t * d - p).norm();
}

}  // namespace

NodalDecomposition extract_nodal_set(const Field& u, std::shared_ptr<const Mesh2D> mesh, const NodalOptions& options) {
  if (!mesh) {
    const Mesh2D* m = mesh_of(u);
    if (!m) throw Error(ErrorKind::InvalidArgument, "a mesh is required for polynomial fields");
    if (const auto* g = std::get_if<GridFunction>(&u)) mesh = g->mesh_ptr();
    else mesh = std::get<PerturbedField>(u).perturbation.mesh_ptr();
  }
  const Mesh2D& m = *mesh;
  const int nv = m.num_vertices(), nt = m.num_triangles();
  const auto* poly = std::get_if<HarmonicPolynomial2d>(&u);

  std::vector<double> val(nv);
  double vmax = 0;
  for (int v = 0; v < nv; ++v) {
    val[v] = value(u, m.vertices[v]);
    vmax = std::max(vmax, std::abs(val[v]));
  }
  if (vmax < options.tau_val) throw Error(ErrorKind::DegenerateField, "|u| is below tau_val at every vertex");
  for (auto& x : val)
    if (std::abs(x) <= 1e-13 * vmax) x = 0;

  NodalDecomposition nd;
  nd.mesh = mesh;
  for (int v = 0; v < nv; ++v) nd.gradient_scale = std::max(nd.gradient_scale, smooth_gradient(u, m.vertices[v]).norm());

  // crossing points
  std::map<Key, int> node_of;
  std::vector<Vec2> nodes;
  auto crossing = [&](int a, int b) {
    // a >= 0 > b in the zero-as-positive convention
    if (val[a] == 0) {
      auto [it, fresh] = node_of.emplace(Key{a, -1}, static_cast<int>(nodes.size()));
      if (fresh) nodes.push_back(m.vertices[a]);
      return it->second;
    }
    const Key key{std::min(a, b), std::max(a, b)};
    auto it = node_of.find(key);
    if (it != node_of.end()) return it->second;
    const Vec2 pa = m.vertices[a], pb = m.vertices[b];
    double t = val[a] / (val[a] - val[b]);
    if (poly) t = edge_root([&](double s) { return (*poly)(Vec2(pa + s * (pb - pa))); }, val[a], val[b]);
    node_of.emplace(key, static_cast<int>(nodes.size()));
    nodes.push_back(pa + t * (pb - pa));
    return static_cast<int>(nodes.size()) - 1;
  };
  std::map<std::pair<int, int>, int> segments;
  for (int t = 0; t < nt; ++t) {
    const auto& tri = m.triangles[t];
    std::vector<int> ends;
    for (int k = 0; k < 3; ++k) {
      int a = tri[k], b = tri[(k + 1) % 3];
      if ((val[a] < 0) == (val[b] < 0)) continue;
      if (val[a] < 0) std::swap(a, b);
      ends.push_back(crossing(a, b));
    }
    if (ends.size() == 2 && ends[0] != ends[1]) segments.emplace(std::minmax(ends[0], ends[1]), t);
  }

  // chain segments into polylines, breaking at junctions
  const int nn = static_cast<int>(nodes.size());
  std::vector<std::vector<int>> adj(nn);
  for (const auto& [s, t] : segments) {
    adj[s.first].push_back(s.second);
    adj[s.second].push_back(s.first);
  }
  std::set<std::pair<int, int>> used;
  auto walk = [&](int start, int next) {
    std::vector<Vec2> line{nodes[start]};
    int prev = start, cur = next;
    used.insert(std::minmax(prev, cur));
    while (true) {
      line.push_back(nodes[cur]);
      if (adj[cur].size() != 2 || cur == start) break;
      const int nxt = adj[cur][0] == prev ? adj[cur][1] : adj[cur][0];
      if (used.count(std::minmax(cur, nxt))) break;
      used.insert(std::minmax(cur, nxt));
      prev = cur;
      cur = nxt;
    }
    nd.polylines.push_back(std::move(line));
  };
  for (int s = 0; s < nn; ++s)
    if (adj[s].size() != 2)
      for (int nb : adj[s])
        if (!used.count(std::minmax(s, nb))) walk(s, nb);
  for (int s = 0; s < nn; ++s)
    for (int nb : adj[s])
      if (!used.count(std::minmax(s, nb))) walk(s, nb);

  for (const auto& line : nd.polylines)
    for (const Vec2& p : line)
      if (smooth_gradient(u, p).norm() > options.tau_grad * nd.gradient_scale) nd.regular_points.push_back(p);

  // singular points
  const double R = m.domain.radius;
  if (poly) {
    std::vector<Vec2> found;
    for (const Complex& z : critical_points(*poly)) {
      const Vec2 p(z.real(), z.imag());
      if (!m.domain.contains(p, 1e-12)) continue;
      double scale = 0, power = 1;
      for (const auto& c : poly->coeffs()) {
        scale += std::abs(c) * power;
        power *= p.norm();
      }
      if (std::abs((*poly)(p)) > 1e-9 * std::max(scale, 1e-300)) continue;
      bool dup = false;
      for (const Vec2& q : found) dup = dup || (q - p).norm() < 1e-6 * R;
      if (!dup) found.push_back(p);
    }
    for (const Vec2& p : found) {
      double rho = 0.05 * R;
      for (const Vec2& q : found)
        if (q != p) rho = std::min(rho, 0.3 * (q - p).norm());
      SingularPoint sp;
      sp.position = p;
      sp.branches = branches_on_circle(u, p, rho);
      sp.order = vanishing_order(u, identity_field(), p).order;
      nd.singular_points.push_back(sp);
    }
  } else {
    // discrete saddles of u near the zero set
    std::vector<int> candidates;
    for (int v = 0; v < nv; ++v) {
      if (m.on_outer_boundary(v)) continue;
      // ordered link around v
      std::map<int, int> next;
      for (int t : m.vertex_triangles(v)) {
        const auto& tri = m.triangles[t];
        int k = 0;
        while (tri[k] != v) ++k;
        next[tri[(k + 1) % 3]] = tri[(k + 2) % 3];
      }
      if (next.size() != m.vertex_triangles(v).size()) continue;
      std::vector<double> ring;
      int w = next.begin()->first;
      double spread = 0;
      for (std::size_t i = 0; i < next.size(); ++i) {
        ring.push_back(val[w] - val[v]);
        spread = std::max(spread, std::abs(val[w] - val[v]));
        w = next[w];
      }
      if (count_sign_changes(ring) >= 4 && std::abs(val[v]) <= 0.5 * spread) candidates.push_back(v);
    }
    std::vector<char> taken(nv, 0);
    for (int v : candidates) {
      if (taken[v]) continue;
      // cluster within three local mesh sizes, keep the smallest |u|
      int best = v;
      for (int w : candidates)
        if (!taken[w] && (m.vertices[w] - m.vertices[v]).norm() <= 3 * m.local_h(v)) {
          taken[w] = 1;
          if (std::abs(val[w]) < std::abs(val[best])) best = w;
        }
      SingularPoint sp;
      sp.position = m.vertices[best];
      const double rho = 4 * m.local_h(best);
      if ((sp.position - m.domain.center).norm() + rho >= R) continue;
      sp.branches = branches_on_circle(u, sp.position, rho);
      if (sp.branches < 4) continue;
      sp.order = sp.branches / 2.0;
      nd.singular_points.push_back(sp);
    }
  }

  // sign components by union-find over same-sign edges
  std::vector<int> parent(nv);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
  // exact fields can change sign twice along an edge (thin sectors at a
  // singular point), so the edge is sampled before merging
  auto edge_keeps_sign = [&](int a, int b) {
    if (std::holds_alternative<GridFunction>(u)) return true;
    for (int k = 1; k < 8; ++k) {
      const double s = value(u, Vec2(m.vertices[a] + (k / 8.0) * (m.vertices[b] - m.vertices[a])));
      if ((s > 0) != (val[a] > 0)) return false;
    }
    return true;
  };
  for (const auto& [a, b] : m.edges())
    if (val[a] != 0 && val[b] != 0 && (val[a] > 0) == (val[b] > 0) && edge_keeps_sign(a, b)) {
      const int ra = find(a), rb = find(b);
      if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
    }
  nd.vertex_component.assign(nv, -1);
  std::map<int, int> label;
  for (int v = 0; v < nv; ++v) {
    if (val[v] == 0) continue;
    auto [it, fresh] = label.emplace(find(v), static_cast<int>(label.size()));
    if (fresh) nd.component_sign.push_back(val[v] > 0 ? 1 : -1);
    nd.vertex_component[v] = it->second;
  }
  nd.num_components = static_cast<int>(label.size());
  nd.triangle_component.assign(nt, -1);
  for (int t = 0; t < nt; ++t) {
    int best = -1;
    for (int k = 0; k < 3; ++k) {
      const int v = m.triangles[t][k];
      if (val[v] != 0 && (best < 0 || std::abs(val[v]) > std::abs(val[best]))) best = v;
    }
    if (best >= 0) nd.triangle_component[t] = nd.vertex_component[best];
  }
  return nd;
}

double dist_to_nodal(const NodalDecomposition& nd, const Vec2& p) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& line : nd.polylines)
    for (std::size_t i = 0; i + 1 < line.size(); ++i) best = std::min(best, segment_distance(p, line[i], line[i + 1]));
  if (!std::isfinite(best)) throw Error(ErrorKind::InvalidArgument, "empty nodal set");
  return best;
}

HookResult find_hook(const Field& u, const Vec2& x0, double r_min, double r_max, const HookOptions& options) {
  if (!(r_min > 0) || r_max < r_min) throw Error(ErrorKind::InvalidArgument, "hook needs 0 < r_min <= r_max");
  const Vec2 g0 = smooth_gradient(u, x0);
  if (g0.norm() == 0 || std::abs(value(u, x0)) > 1e-6 * g0.norm() * r_max)
    throw Error(ErrorKind::InvalidArgument, "hook base point is not a regular nodal point");
  HookResult best;
  best.base = x0;
  bool any = false;
  const int nr = std::max(options.radii, 1);
  const int ns = options.angular_samples;
  for (int i = 0; i < nr; ++i) {
    const double R = nr == 1 ? r_min : r_min + (r_max - r_min) * i / (nr - 1);
    auto point = [&](double th) { return Vec2(x0 + R * Vec2(std::cos(th), std::sin(th))); };
    auto eval = [&](double th, double& out) {
      const Vec2 p = point(th);
      if (const Mesh2D* m = mesh_of(u)) {
        if (!m->domain.contains(p)) return false;
        if (const auto* g = std::get_if<GridFunction>(&u)) return g->try_value(p, out);
      }
      out = value(u, p);
      return true;
    };
    std::vector<double> vals(ns);
    std::vector<char> ok(ns);
    for (int k = 0; k < ns; ++k) ok[k] = eval(2 * kPi * k / ns, vals[k]);
    for (int k = 0; k < ns; ++k) {
      const int k1 = (k + 1) % ns;
      if (!ok[k] || !ok[k1] || (vals[k] < 0) == (vals[k1] < 0)) continue;
      double a = 2 * kPi * k / ns, b = 2 * kPi * (k + 1) / ns, fa = vals[k];
      for (int it = 0; it < 60; ++it) {
        const double c = 0.5 * (a + b);
        double fc = 0;
        eval(c, fc);
        if ((fc < 0) == (fa < 0)) a = c, fa = fc;
        else b = c;
      }
      const Vec2 q = point(0.5 * (a + b));
      const Vec2 gq = smooth_gradient(u, q);
      if (gq.norm() <= options.tau_grad * g0.norm()) continue;
      const double angle = std::acos(std::min(1.0, std::abs(g0.dot(gq)) / (g0.norm() * gq.norm())));
      if (!any || angle > best.angle) {
        best.found = q;
        best.angle = angle;
        best.radius = R;
        any = true;
      }
    }
  }
  if (!any) throw Error(ErrorKind::NoNodalIntersection, "no sampled circle meets the nodal set");
  return best;
}

XiReport xi_diagnostic(const Field& u, int N, double radius, const XiOptions& options) {
  if (N < 1) throw Error(ErrorKind::InvalidArgument, "xi diagnostic needs N >= 1");
  XiReport rep;
  rep.r_min = 1e-3 * radius;
  if (const Mesh2D* m = mesh_of(u)) rep.r_min = std::max(rep.r_min, 8 * m->local_h(m->nearest_vertex(Vec2::Zero())));
  if (rep.r_min >= radius) throw Error(ErrorKind::InvalidArgument, "xi radius below the mesh resolution");
  const int nr = options.rings, na = options.angular_samples;
  std::vector<Complex> z, xi;
  std::vector<double> log_r, log_mean;
  for (int i = 0; i < nr; ++i) {
    const double r = rep.r_min * std::pow(radius / rep.r_min, double(i) / (nr - 1));
    double mean = 0;
    for (int k = 0; k < na; ++k) {
      const double th = 2 * kPi * (k + 0.5 * (i % 2)) / na;
      const Complex zz = std::polar(r, th);
      const Vec2 g = smooth_gradient(u, Vec2(zz.real(), zz.imag()));
      const Complex val = Complex(0, 1) * Complex(g.x(), -g.y()) / std::pow(zz, N - 1);
      z.push_back(zz);
      xi.push_back(val);
      mean += std::abs(val) / na;
    }
    log_r.push_back(std::log(r));
    log_mean.push_back(std::log(std::max(mean, 1e-300)));
  }
  rep.min_modulus = std::numeric_limits<double>::infinity();
  for (const auto& v : xi) {
    rep.min_modulus = std::min(rep.min_modulus, std::abs(v));
    rep.max_modulus = std::max(rep.max_modulus, std::abs(v));
  }
  auto omega = [](double t) { return t <= std::exp(-1.0) ? t * std::abs(std::log(t)) : std::exp(-1.0); };
  for (std::size_t i = 0; i < z.size(); ++i)
    for (std::size_t j = i + 1; j < z.size(); ++j) {
      const double t = std::abs(z[i] - z[j]);
      if (t > 0) rep.log_lipschitz = std::max(rep.log_lipschitz, std::abs(xi[i] - xi[j]) / omega(t));
    }
  const double n = static_cast<double>(nr);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < nr; ++i) {
    sx += log_r[i], sy += log_mean[i], sxx += log_r[i] * log_r[i], sxy += log_r[i] * log_mean[i];
  }
  rep.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  if (rep.min_modulus < 1e-8 || std::abs(rep.slope) > 0.5) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "declared order %d: min |xi| = %.3e, log-log slope %.3f", N, rep.min_modulus,
                  rep.slope);
    throw Error(ErrorKind::OrderMismatch, buf);
  }
  return rep;
}

void write_polylines_csv(const NodalDecomposition& nd, std::ostream& out) {
  out << "polyline,x0,y0,x1,y1\n";
  char buf[160];
  for (std::size_t k = 0; k < nd.polylines.size(); ++k) {
    const auto& line = nd.polylines[k];
    for (std::size_t i = 0; i + 1 < line.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%zu,%.12e,%.12e,%.12e,%.12e\n", k, line[i].x(), line[i].y(), line[i + 1].x(),
                    line[i + 1].y());
      out << buf;
    }
  }
}

void write_components_csv(const NodalDecomposition& nd, std::ostream& out) {
  out << "triangle,component,sign\n";
  for (std::size_t t = 0; t < nd.triangle_component.size(); ++t) {
    const int c = nd.triangle_component[t];
    out << t << ',' << c << ',' << (c >= 0 ? nd.component_sign[c] : 0) << '\n';
  }
}

}  // namespace nodal
