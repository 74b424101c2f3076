#include "nodal/scheme.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "nodal/almgren.hpp"
#include "nodal/error.hpp"
#include "nodal/regularity.hpp"

namespace nodal {

namespace {

double smoothstep(double t) { return t <= 0 ? 0 : t >= 1 ? 1 : t * t * (3 - 2 * t); }
double smoothstep_slope(double t) { return t <= 0 || t >= 1 ? 0 : 6 * t * (1 - t); }

// 1, Re z, Im z, ..., Re z^k, Im z^k
std::vector<HarmonicPolynomial2d> mode_basis(int k) {
  std::vector<HarmonicPolynomial2d> b{HarmonicPolynomial2d::constant(1)};
  for (int m = 1; m <= k; ++m) {
    b.push_back(HarmonicPolynomial2d::monomial(m));
    b.push_back(HarmonicPolynomial2d::monomial(m, std::complex<double>(0, -1)));
  }
  return b;
}

// Solutions with boundary data b_j combined so that psi(0) = 0 and the probe
// modes 1..k match P_k.
struct Calibrated {
  GridFunction psi;
  HarmonicPolynomial2d shift;
};

Calibrated calibrate(const WeightedSystem& sys, const HarmonicPolynomial2d& P, int k, double r, int samples) {
  const auto basis = mode_basis(k);
  const int n = static_cast<int>(basis.size());
  std::vector<GridFunction> sol;
  Eigen::MatrixXd M(n, n);
  for (int j = 0; j < n; ++j) {
    const auto& b = basis[j];
    sol.push_back(sys.solve([&b](const Vec2& x) { return b(x); }));
    M.col(j) = probe_modes(sol.back(), r, k, samples);
  }
  Eigen::VectorXd target = probe_modes(P, r, k, samples);
  target(0) = 0;
  const Eigen::VectorXd c = M.fullPivLu().solve(target);
  Eigen::VectorXd values = Eigen::VectorXd::Zero(sys.mesh().num_vertices());
  HarmonicPolynomial2d boundary = HarmonicPolynomial2d::constant(0);
  for (int j = 0; j < n; ++j) {
    values += c(j) * sol[j].values();
    boundary += c(j) * basis[j];
  }
  return {GridFunction(sol[0].mesh_ptr(), std::move(values)), boundary - P};
}

double order_at_origin(const Field& f, const CoefficientField& A_eps, double epsilon, const SchemeOptions& o,
                       bool* converged = nullptr) {
  const VanishingOrder v = vanishing_order(f, A_eps, Vec2::Zero(), std::min(epsilon, 0.5 * o.R));
  if (converged) *converged = v.converged;
  return v.order;
}

}  // namespace

double Cutoff::operator()(const Vec2& x) const { return 1 - smoothstep(x.norm() / epsilon - 1); }

Vec2 Cutoff::gradient(const Vec2& x) const {
  const double r = x.norm();
  if (r == 0) return Vec2::Zero();
  return -smoothstep_slope(r / epsilon - 1) / epsilon * x / r;
}

Cutoff cutoff(double epsilon) {
  if (!(epsilon > 0 && epsilon < 0.5)) throw Error(ErrorKind::InvalidArgument, "cutoff needs 0 < eps < 0.5");
  return Cutoff{epsilon};
}

CoefficientField approx_coefficients(const CoefficientField& A, double epsilon) {
  const Cutoff eta = cutoff(epsilon);
  CoefficientField out;
  char buf[64];
  std::snprintf(buf, sizeof buf, "(eps=%.6g)", epsilon);
  out.name = A.name + buf;
  out.eval = [A, eta](const Vec2& x) -> Mat2 {
    const double e = eta(x);
    if (e == 0) return A(x);
    if (e == 1) return Mat2::Identity();
    return A(x) + e * (Mat2::Identity() - A(x));
  };
  out.lambda = std::min(A.lambda, 1.0);
  out.Lambda = std::max(A.Lambda, 1.0);
  out.lipschitz = A.lipschitz;  // the cutoff term adds at most 1.5 |Id - A| / eps
  out.is_constant = A.is_constant && (A(Vec2::Zero()) - Mat2::Identity()).norm() == 0;
  return out;
}

std::shared_ptr<const Mesh2D> corrector_mesh(double epsilon, const SchemeOptions& options) {
  if (!(epsilon > 0 && 2 * epsilon < options.R)) throw Error(ErrorKind::InvalidArgument, "corrector needs 0 < 2 eps < R");
  const Mesh2D base = disc_mesh(options.base_level, options.R);
  const int rings = std::max(0, static_cast<int>(std::ceil(std::log2(options.h_ratio * base.h_max() / epsilon))));
  if (rings == 0) return std::make_shared<const Mesh2D>(base);
  return std::make_shared<const Mesh2D>(graded_mesh(base, Vec2::Zero(), rings, epsilon * std::pow(2.0, rings - 1)));
}

double probe_radius(double epsilon, const SchemeOptions& options) { return std::min(options.R / 8, epsilon / 2); }

Eigen::VectorXd probe_modes(const Field& f, double r, int k, int samples) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(2 * k + 1);
  out(0) = value(f, Vec2::Zero());
  for (int s = 0; s < samples; ++s) {
    const double th = 2 * kPi * (s + 0.5) / samples;
    const double val = value(f, Vec2(r * std::cos(th), r * std::sin(th)));
    for (int m = 1; m <= k; ++m) {
      out(2 * m - 1) += val * std::cos(m * th);
      out(2 * m) += val * std::sin(m * th);
    }
  }
  for (int m = 1; m <= k; ++m) out.segment(2 * m - 1, 2) *= 2.0 / samples / std::pow(r, m);
  return out;
}

BlowupSolution prescribed_blowup_solution(const CoefficientField& A_eps, const HarmonicPolynomial2d& P_k,
                                          double epsilon, std::shared_ptr<const Mesh2D> mesh,
                                          const SchemeOptions& options) {
  const int k = P_k.degree();
  if (k < 1 || P_k.homogeneous_part(k) != P_k)
    throw Error(ErrorKind::InvalidArgument, "prescribed blow-up needs a homogeneous harmonic polynomial of degree >= 1");
  const double r = probe_radius(epsilon, options);
  const WeightedSystem sys(mesh, A_eps, nullptr);
  Calibrated c = calibrate(sys, P_k, k, r, options.probe_samples);
  BlowupSolution out;
  out.shift = c.shift;
  out.a_eps = c.shift.coeff(0).real();
  out.order = order_at_origin(c.psi, A_eps, epsilon, options);
  // remainder psi - P_k on circles between r/4 and r; the calibrated
  // solution for A = Id on the same mesh stands in for P_k so that the
  // discretization error of P_k itself cancels
  const WeightedSystem flat(mesh, identity_field(), nullptr);
  const GridFunction ref = calibrate(flat, P_k, k, r, options.probe_samples).psi;
  std::vector<double> lr, le;
  double emax = 0;
  for (int i = 0; i < 5; ++i) {
    const double rho = r * std::pow(0.25, i / 4.0);
    double e = 0;
    for (int s = 0; s < 64; ++s) {
      const Vec2 x = rho * Vec2(std::cos(2 * kPi * s / 64), std::sin(2 * kPi * s / 64));
      e = std::max(e, std::abs(c.psi.value(x) - ref.value(x)));
    }
    emax = std::max(emax, e);
    lr.push_back(std::log(rho));
    le.push_back(std::log(std::max(e, 1e-300)));
  }
  if (emax <= 1e-14 * std::pow(r, k)) {
    out.remainder_slope = std::numeric_limits<double>::infinity();
  } else {
    const double mx = std::accumulate(lr.begin(), lr.end(), 0.0) / lr.size();
    const double my = std::accumulate(le.begin(), le.end(), 0.0) / le.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < lr.size(); ++i) sxy += (lr[i] - mx) * (le[i] - my), sxx += (lr[i] - mx) * (lr[i] - mx);
    out.remainder_slope = sxy / sxx;
  }
  out.psi = std::move(c.psi);
  if (out.order < k - 0.1) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "prescribed blow-up of degree %d has measured order %.4f (eps = %g, R = %g)", k,
                  out.order, epsilon, options.R);
    throw Error(ErrorKind::OrderDeficit, buf);
  }
  return out;
}

CorrectorResult corrector(const HarmonicPolynomial2d& u, const CoefficientField& A, double epsilon, int N,
                          const SchemeOptions& options) {
  if (N < 1) throw Error(ErrorKind::InvalidArgument, "declared order must be >= 1");
  if (std::abs(u(Vec2::Zero())) > 1e-14) throw Error(ErrorKind::InvalidArgument, "u must vanish at the origin");
  CorrectorResult out;
  out.epsilon = epsilon;
  out.N = N;
  out.A_eps = approx_coefficients(A, epsilon);
  const auto mesh = corrector_mesh(epsilon, options);
  const Cutoff eta = cutoff(epsilon);
  const WeightedSystem sys(mesh, out.A_eps, nullptr);
  const VectorFunction F = [&](const Vec2& x) -> Vec2 {
    const double e = eta(x);
    if (e == 0) return Vec2::Zero();
    return e * (Mat2::Identity() - A(x)) * u.gradient(x);
  };
  GridFunction phi = sys.solve([](const Vec2&) { return 0.0; }, &F);
  phi = GridFunction(mesh, phi.values().array() - phi.value(Vec2::Zero()));

  const double r = probe_radius(epsilon, options);
  double uscale = 0;
  for (int s = 0; s < 64; ++s) uscale = std::max(uscale, std::abs(u(r * Vec2(std::cos(kPi * s / 32), std::sin(kPi * s / 32)))));
  for (;;) {
    // lowest degree below N still present on the probe circle
    const Eigen::VectorXd modes = probe_modes(phi, r, std::max(N - 1, 1), options.probe_samples);
    int k = 0;
    for (int m = 1; m < N && k == 0; ++m)
      if (modes.segment(2 * m - 1, 2).norm() * std::pow(r, m) > 1e-12 * uscale) k = m;
    if (k == 0) break;
    if (out.iterations >= N + 2) throw Error(ErrorKind::IterationOverrun, "corrector did not reach the declared order");
    const Calibrated re = calibrate(sys, HarmonicPolynomial2d::monomial(k), k, r, options.probe_samples);
    const Calibrated im = calibrate(sys, HarmonicPolynomial2d::monomial(k, std::complex<double>(0, -1)), k, r,
                                    options.probe_samples);
    const double order = order_at_origin(re.psi, out.A_eps, epsilon, options);
    if (order < k - 0.1) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "prescribed blow-up of degree %d has measured order %.4f (eps = %g)", k, order, epsilon);
      throw Error(ErrorKind::OrderDeficit, buf);
    }
    phi = GridFunction(mesh, phi.values() - modes(2 * k - 1) * re.psi.values() - modes(2 * k) * im.psi.values());
    ++out.iterations;
  }
  out.phi = phi;
  const PerturbedField ue{u, phi};
  out.order = order_at_origin(ue, out.A_eps, epsilon, options, &out.order_converged);
  for (int v = 0; v < mesh->num_vertices(); ++v) out.sup_norm = std::max(out.sup_norm, std::abs(phi[v]));
  out.c1alpha = c1alpha_norm(phi, options.alpha, 4 * mesh->h_min());
  WeightSpec ws;
  ws.u = HarmonicPolynomial2d::constant(1);
  ws.frequency_bound = 1;
  const GridFunction uh(mesh, phi.values() + interpolate(mesh, [&](const Vec2& x) { return u(x); }).values());
  out.residual = weak_residual(uh, ws, out.A_eps);
  return out;
}

SchemeReport verify_scheme(const HarmonicPolynomial2d& u, const std::vector<CorrectorResult>& ladder,
                           const SchemeOptions& options) {
  SchemeReport rep;
  double lo = std::numeric_limits<double>::infinity(), hi = 0;
  bool all = true;
  for (const auto& c : ladder) {
    SchemeRow row;
    row.epsilon = c.epsilon;
    row.iterations = c.iterations;
    row.order = c.order;
    row.c1alpha = c.c1alpha;
    row.sup_norm = c.sup_norm;
    try {
      const XiReport xi = xi_diagnostic(c.u_eps(u), c.N, options.R / 4);
      row.xi_min = xi.min_modulus;
      row.xi_max = xi.max_modulus;
      row.xi_log_lipschitz = xi.log_lipschitz;
      lo = std::min(lo, xi.min_modulus);
      hi = std::max(hi, xi.min_modulus);
    } catch (const Error& e) {
      row.xi_error = std::string(error_name(e.kind()));
      all = false;
    }
    rep.rows.push_back(row);
  }
  rep.xi_drift = hi > 0 ? (hi - lo) / hi : 0;
  rep.uniform = all && !ladder.empty() && rep.xi_drift < 0.2;
  if (ladder.size() >= 2) {
    double mx = 0, my = 0;
    for (const auto& c : ladder) mx += std::log(c.epsilon), my += std::log(std::max(c.c1alpha, 1e-300));
    mx /= ladder.size(), my /= ladder.size();
    double sxy = 0, sxx = 0;
    for (const auto& c : ladder) {
      const double dx = std::log(c.epsilon) - mx;
      sxy += dx * (std::log(std::max(c.c1alpha, 1e-300)) - my);
      sxx += dx * dx;
    }
    rep.norm_slope = sxy / sxx;
  }
  return rep;
}

void write_scheme_csv(const SchemeReport& report, std::ostream& out) {
  out << "epsilon,iterations,order,c1alpha_norm,sup_norm,xi_min,xi_max,xi_log_lipschitz,xi_error\n";
  char buf[512];
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%s\n", r.epsilon, r.iterations, r.order,
                  r.c1alpha, r.sup_norm, r.xi_min, r.xi_max, r.xi_log_lipschitz, r.xi_error.c_str());
    out << buf;
  }
}

}  // namespace nodal
