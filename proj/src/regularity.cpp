#include "nodal/regularity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "nodal/error.hpp"

namespace nodal {

namespace {

class PairScan {
 public:
  // f holds values (dim 1) or vectors (dim 2) compared in the Euclidean norm
  PairScan(const std::vector<Vec2>& p, const std::vector<Vec2>& f, int dim, double alpha, double sep)
      : p_(p), f_(f), dim_(dim), alpha_(alpha), sep_(sep), order_(p.size()) {
    std::iota(order_.begin(), order_.end(), 0);
    if (!order_.empty()) build(0, static_cast<int>(order_.size()), 0);
  }

  HolderReport run() {
    if (!nodes_.empty()) visit(0, 0);
    HolderReport r;
    r.alpha = alpha_;
    r.min_sep = sep_;
    r.seminorm = best_;
    if (bi_ >= 0) r.x = p_[bi_], r.y = p_[bj_];
    return r;
  }

 private:
  struct Node {
    int begin, end, left = -1, right = -1;
    Vec2 lo, hi;
    Vec2 fmin, fmax;
  };

  int build(int b, int e, int depth) {
    Node n{b, e, -1, -1, p_[order_[b]], p_[order_[b]], f_[order_[b]], f_[order_[b]]};
    for (int i = b; i < e; ++i) {
      const int k = order_[i];
      n.lo = n.lo.cwiseMin(p_[k]);
      n.hi = n.hi.cwiseMax(p_[k]);
      n.fmin = n.fmin.cwiseMin(f_[k]);
      n.fmax = n.fmax.cwiseMax(f_[k]);
    }
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(n);
    if (e - b > kLeaf) {
      const int axis = (n.hi - n.lo).x() >= (n.hi - n.lo).y() ? 0 : 1;
      const int mid = (b + e) / 2;
      std::nth_element(order_.begin() + b, order_.begin() + mid, order_.begin() + e,
                       [&](int i, int j) { return p_[i](axis) < p_[j](axis) || (p_[i](axis) == p_[j](axis) && i < j); });
      const int l = build(b, mid, depth + 1);
      const int r = build(mid, e, depth + 1);
      nodes_[id].left = l;
      nodes_[id].right = r;
    }
    return id;
  }

  void visit(int a, int b) {
    const Node& A = nodes_[a];
    const Node& B = nodes_[b];
    const Vec2 gap = (A.lo - B.hi).cwiseMax(B.lo - A.hi).cwiseMax(Vec2::Zero());
    const double dmax = (A.hi.cwiseMax(B.hi) - A.lo.cwiseMin(B.lo)).norm();
    if (dmax < sep_) return;
    const double spread = (A.fmax - B.fmin).cwiseMax(B.fmax - A.fmin).head(dim_).norm();
    if (spread / std::pow(std::max(gap.norm(), sep_), alpha_) <= best_) return;
    const bool leafA = A.left < 0, leafB = B.left < 0;
    if (leafA && leafB) {
      for (int i = A.begin; i < A.end; ++i)
        for (int j = (a == b ? i + 1 : B.begin); j < B.end; ++j) {
          const int pi = order_[i], pj = order_[j];
          const double d = (p_[pi] - p_[pj]).norm();
          if (d < sep_) continue;
          const double q = (f_[pi] - f_[pj]).head(dim_).norm() / std::pow(d, alpha_);
          if (q > best_) best_ = q, bi_ = std::min(pi, pj), bj_ = std::max(pi, pj);
        }
      return;
    }
    if (a == b) {
      visit(A.left, A.left);
      visit(A.left, A.right);
      visit(A.right, A.right);
      return;
    }
    if (leafB || (!leafA && (A.end - A.begin) >= (B.end - B.begin))) {
      const int l = A.left, r = A.right;
      visit(l, b);
      visit(r, b);
    } else {
      const int l = B.left, r = B.right;
      visit(a, l);
      visit(a, r);
    }
  }

  static constexpr int kLeaf = 16;
  const std::vector<Vec2>& p_;
  const std::vector<Vec2>& f_;
  int dim_;
  double alpha_, sep_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  double best_ = 0;
  int bi_ = -1, bj_ = -1;
};

std::vector<int> region_vertices(const GridFunction& f, const std::optional<Ball>& region) {
  std::vector<int> out;
  const Mesh2D& m = f.mesh();
  for (int v = 0; v < m.num_vertices(); ++v)
    if (f.vertex_active(v) && (!region || region->contains(m.vertices[v]))) out.push_back(v);
  return out;
}

}  // namespace

namespace {

HolderReport scan(const std::vector<Vec2>& points, const std::vector<Vec2>& values, int dim, double alpha,
                  double min_sep) {
  if (!(alpha > 0 && alpha <= 1)) throw Error(ErrorKind::InvalidArgument, "Hoelder exponent must lie in (0, 1]");
  if (points.size() != values.size()) throw Error(ErrorKind::InvalidArgument, "points and values differ in length");
  if (!(min_sep > 0)) throw Error(ErrorKind::InvalidArgument, "minimum separation must be positive");
  return PairScan(points, values, dim, alpha, min_sep).run();
}

}  // namespace

HolderReport holder_seminorm(const std::vector<Vec2>& points, const std::vector<double>& values, double alpha,
                             double min_sep) {
  std::vector<Vec2> f;
  for (double v : values) f.emplace_back(v, 0);
  return scan(points, f, 1, alpha, min_sep);
}

HolderReport holder_seminorm(const std::vector<Vec2>& points, const std::vector<Vec2>& values, double alpha,
                             double min_sep) {
  return scan(points, values, 2, alpha, min_sep);
}

HolderReport holder_seminorm(const GridFunction& f, double alpha, double min_sep, const std::optional<Ball>& region) {
  std::vector<Vec2> p;
  std::vector<double> val;
  for (int v : region_vertices(f, region)) {
    p.push_back(f.mesh().vertices[v]);
    val.push_back(f[v]);
  }
  return holder_seminorm(p, val, alpha, min_sep);
}

HolderReport gradient_holder_seminorm(const GridFunction& f, double alpha, double min_sep,
                                      const std::optional<Ball>& region) {
  std::vector<Vec2> p, g;
  for (int v : region_vertices(f, region)) {
    p.push_back(f.mesh().vertices[v]);
    g.push_back(f.recovered_gradients()[v]);
  }
  return holder_seminorm(p, g, alpha, min_sep);
}

double c1alpha_norm(const GridFunction& f, double alpha, double min_sep, const std::optional<Ball>& region) {
  double sup = 0, gsup = 0;
  for (int v : region_vertices(f, region)) {
    sup = std::max(sup, std::abs(f[v]));
    gsup = std::max(gsup, f.recovered_gradients()[v].norm());
  }
  return sup + gsup + gradient_holder_seminorm(f, alpha, min_sep, region).seminorm;
}

GridFunction ratio(const GridFunction& v, const Field& u, const CoefficientField& A, const RatioOptions& options) {
  const auto mesh = v.mesh_ptr();
  const Mesh2D& m = *mesh;
  const int nv = m.num_vertices();
  Eigen::VectorXd uv(nv);
  double umax = 0, vmax = 0;
  for (int i = 0; i < nv; ++i) {
    uv(i) = value(u, m.vertices[i]);
    umax = std::max(umax, std::abs(uv(i)));
    vmax = std::max(vmax, std::abs(v[i]));
  }
  if (umax == 0) throw Error(ErrorKind::DegenerateField, "u vanishes on the whole mesh");

  const NodalDecomposition nd = extract_nodal_set(u, mesh);
  for (const auto& line : nd.polylines)
    for (std::size_t k = 0; k < line.size(); ++k) {
      const Vec2 pts[2] = {line[k], k + 1 < line.size() ? Vec2(0.5 * (line[k] + line[k + 1])) : line[k]};
      for (const Vec2& p : pts) {
        double val;
        if (!v.try_value(p, val)) continue;
        if (std::abs(val) > options.tau * vmax) {
          char buf[160];
          std::snprintf(buf, sizeof buf, "|v| = %.3g at (%.4f, %.4f) on Z(u) exceeds %.3g", std::abs(val), p.x(),
                        p.y(), options.tau * vmax);
          throw Error(ErrorKind::NodalInclusionViolated, buf);
        }
      }
    }

  const GridFunction uh(mesh, uv);
  std::vector<char> fixed(nv, 0);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(nv);
  int free = 0;
  for (int i = 0; i < nv; ++i) {
    if (std::abs(uv(i)) > options.fill * umax) {
      fixed[i] = 1;
      w(i) = v[i] / uv(i);
    } else if (m.on_outer_boundary(i)) {
      // no data reaches these through the equation: quotient, or the ratio of
      // normal derivatives on Z(u)
      fixed[i] = 1;
      const Vec2 gu = uh.recovered_gradients()[i];
      w(i) = std::abs(uv(i)) > 1e-8 * umax ? v[i] / uv(i) : v.recovered_gradients()[i].dot(gu) / gu.squaredNorm();
    } else {
      ++free;
    }
  }
  if (free == 0) return GridFunction(mesh, std::move(w));
  WeightSpec ws;
  ws.a = 2;
  if (const auto* p = std::get_if<HarmonicPolynomial2d>(&u)) ws.u = *p;
  else ws.u = uh;
  ws.frequency_bound = 1;
  const WeightedSystem sys(mesh, A, &ws);
  return sys.solve_with(fixed, w, Eigen::VectorXd::Zero(nv));
}

BoundaryReport boundary_conditions_check(const GridFunction& w, const Field& u, const CoefficientField& A,
                                         const NodalDecomposition& nd, double exclusion) {
  BoundaryReport r;
  const Mesh2D& m = w.mesh();
  auto inside = [&](const Vec2& p, int& t) {
    t = w.locate(p);
    if (t < 0) return false;
    return m.barycentric(t, p).minCoeff() >= -1e-9;
  };
  for (const auto& line : nd.polylines)
    for (const Vec2& p : line) {
      bool near = false;
      for (const auto& s : nd.singular_points) near = near || (p - s.position).norm() < exclusion;
      near = near || (p - m.domain.center).norm() > m.domain.radius - exclusion;
      int t;
      if (near || !inside(p, t)) continue;
      const Vec2 gw = w.recovered_gradient(p), gu = gradient(u, p);
      const double scale = gw.norm() * gu.norm();
      ++r.samples;
      if (scale == 0) continue;
      r.conormal_defect = std::max(r.conormal_defect, std::abs((A(p) * gw).dot(gu)) / scale);
    }
  for (const auto& s : nd.singular_points) {
    int t;
    if (inside(s.position, t)) r.singular_gradient = std::max(r.singular_gradient, w.recovered_gradient(s.position).norm());
  }
  return r;
}

std::vector<SweepCase> power_family(int n_max, const ScalarFunction& g) {
  std::vector<SweepCase> out;
  for (int n = 1; n <= n_max; ++n)
    out.push_back({"Im z^" + std::to_string(n), HarmonicPolynomial2d::monomial(n, std::complex<double>(0, -1)), g});
  return out;
}

std::vector<SweepCase> rotation_family(const HarmonicPolynomial2d& u, const std::vector<double>& angles,
                                       const ScalarFunction& g) {
  std::vector<SweepCase> out;
  for (double th : angles) {
    const double c = std::cos(th), s = std::sin(th);
    char id[64];
    std::snprintf(id, sizeof id, "rot(%.6g)", th);
    out.push_back({id, u.rotated(th), [g, c, s](const Vec2& p) { return g(Vec2(c * p.x() + s * p.y(), -s * p.x() + c * p.y())); }});
  }
  return out;
}

SweepTable uniformity_sweep(const std::vector<SweepCase>& cases, const SweepOptions& options) {
  SweepTable table;
  for (const auto& c : cases) {
    WeightSpec ws;
    ws.a = options.a;
    ws.u = c.u;
    ws.validate();
    for (int level : options.levels) {
      const auto mesh = std::make_shared<const Mesh2D>(nodal_aligned_mesh(c.u.homogeneous_part(c.u.degree()), level));
      const NodalDecomposition nd = extract_nodal_set(c.u, mesh);
      const double sep = 4 * mesh->h_max();
      SweepRow row;
      row.id = c.id;
      row.level = level;
      row.a = options.a;
      row.alpha = options.alpha;
      std::vector<GridFunction> parts;
      // with weight 1 the nodal set plays no role: one solve on the ball
      if (options.a == 0) parts.push_back(solve_degenerate(ws, options.A, c.g, mesh));
      for (int comp = 0; options.a != 0 && comp < nd.num_components; ++comp) {
        // seed: centroid of the component triangle where |u| is largest
        double best = -1;
        Vec2 seed = Vec2::Zero();
        for (int t = 0; t < mesh->num_triangles(); ++t) {
          if (nd.triangle_component[t] != comp) continue;
          const Vec2 ctr = mesh->centroid(t);
          const double val = std::abs(c.u(ctr));
          if (val > best) best = val, seed = ctr;
        }
        SolveOptions so;
        so.mode = SolveMode::PerComponent;
        so.seed = seed;
        parts.push_back(solve_degenerate(ws, options.A, c.g, mesh, so));
      }
      for (const auto& w : parts)
        for (int v = 0; v < mesh->num_vertices(); ++v)
          if (w.vertex_active(v)) row.sup_norm = std::max(row.sup_norm, std::abs(w[v]));
      const double norm = row.sup_norm > 0 ? row.sup_norm : 1;
      for (const auto& w : parts) {
        row.c0alpha = std::max(row.c0alpha, holder_seminorm(w, options.alpha, sep, options.inner).seminorm / norm);
        if (options.a >= 0)
          row.c1alpha = std::max(row.c1alpha, gradient_holder_seminorm(w, options.alpha, sep, options.inner).seminorm / norm);
        const BoundaryReport br = boundary_conditions_check(w, c.u, options.A, nd);
        row.conormal_defect = std::max(row.conormal_defect, br.conormal_defect);
        row.singular_gradient = std::max(row.singular_gradient, br.singular_gradient / norm);
      }
      table.max_c0alpha = std::max(table.max_c0alpha, row.c0alpha);
      table.max_c1alpha = std::max(table.max_c1alpha, row.c1alpha);
      table.rows.push_back(row);
    }
  }
  return table;
}

void write_sweep_csv(const SweepTable& table, std::ostream& out) {
  out << "case,level,alpha,a,sup_norm,c0alpha,c1alpha,conormal_defect,singular_gradient\n";
  char buf[512];
  for (const auto& r : table.rows) {
    std::snprintf(buf, sizeof buf, "%s,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.id.c_str(), r.level, r.alpha,
                  r.a, r.sup_norm, r.c0alpha, r.c1alpha, r.conormal_defect, r.singular_gradient);
    out << buf;
  }
}

}  // namespace nodal
