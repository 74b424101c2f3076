#include "nodal/experiment.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <openssl/evp.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "nodal/almgren.hpp"
#include "nodal/error.hpp"
#include "nodal/hodograph.hpp"
#include "nodal/nodal_set.hpp"
#include "nodal/parallel.hpp"
#include "nodal/regularity.hpp"
#include "nodal/scheme.hpp"

#ifndef NODAL_LAB_VERSION
#define NODAL_LAB_VERSION "0.0.0"
#endif

namespace nodal {

namespace {

using json = nlohmann::json;

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorKind::ConfigInvalid, what); }

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (trim(s.substr(used)).empty() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  invalid(key + ": expected a number, got '" + s + "'");
}

long long to_int(const std::string& key, const std::string& s) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (trim(s.substr(used)).empty()) return v;
  } catch (const std::exception&) {
  }
  invalid(key + ": expected an integer, got '" + s + "'");
}

/// "a, b, c" or "lo:hi:n" (n evenly spaced values, endpoints included).
std::vector<double> to_doubles(const std::string& key, const std::string& s) {
  if (s.find(':') != std::string::npos) {
    const auto parts = split(s, ':');
    if (parts.size() != 3) invalid(key + ": range must be lo:hi:n");
    const double lo = to_double(key, parts[0]), hi = to_double(key, parts[1]);
    const long long n = to_int(key, parts[2]);
    if (n < 1 || n > 100000) invalid(key + ": range count out of bounds");
    std::vector<double> out;
    for (long long i = 0; i < n; ++i) out.push_back(n == 1 ? lo : lo + (hi - lo) * double(i) / double(n - 1));
    return out;
  }
  std::vector<double> out;
  for (const auto& p : split(s, ',')) out.push_back(to_double(key, p));
  return out;
}

/// "4, 5, 6" or "4:6".
std::vector<int> to_ints(const std::string& key, const std::string& s) {
  std::vector<int> out;
  if (s.find(':') != std::string::npos) {
    const auto parts = split(s, ':');
    if (parts.size() != 2) invalid(key + ": integer range must be lo:hi");
    const long long lo = to_int(key, parts[0]), hi = to_int(key, parts[1]);
    if (hi < lo || hi - lo > 64) invalid(key + ": bad integer range");
    for (long long i = lo; i <= hi; ++i) out.push_back(static_cast<int>(i));
    return out;
  }
  for (const auto& p : split(s, ',')) out.push_back(static_cast<int>(to_int(key, p)));
  return out;
}

Vec2 to_point(const std::string& key, const std::string& s) {
  const auto v = to_doubles(key, s);
  if (v.size() != 2) invalid(key + ": expected 'x, y'");
  return {v[0], v[1]};
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    t["kind"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      const auto kind = parse_kind(v);
      if (!kind) invalid(k + ": unknown experiment kind '" + v + "'");
      c.kind = *kind;
    };
    t["name"] = [](ExperimentConfig& c, const std::string&, const std::string& v) { c.name = v; };
    t["seed"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      const long long s = to_int(k, v);
      if (s < 0) invalid(k + ": seed must be non-negative");
      c.seed = static_cast<std::uint64_t>(s);
    };
    t["field.u"] = [](ExperimentConfig& c, const std::string&, const std::string& v) { c.u = split(v, ';'); };
    t["field.v"] = [](ExperimentConfig& c, const std::string&, const std::string& v) { c.v = v; };
    t["field.A"] = [](ExperimentConfig& c, const std::string&, const std::string& v) { c.A = split(v, ';'); };
    t["field.w"] = [](ExperimentConfig& c, const std::string&, const std::string& v) { c.w = split(v, ';'); };
    t["field.family"] = [](ExperimentConfig& c, const std::string&, const std::string& v) { c.family = v; };
    auto num = [&t](const std::string& key, double ExperimentConfig::*m) {
      t[key] = [m](ExperimentConfig& c, const std::string& k, const std::string& v) { c.*m = to_double(k, v); };
    };
    auto integer = [&t](const std::string& key, int ExperimentConfig::*m) {
      t[key] = [m](ExperimentConfig& c, const std::string& k, const std::string& v) {
        c.*m = static_cast<int>(to_int(k, v));
      };
    };
    auto list = [&t](const std::string& key, std::vector<double> ExperimentConfig::*m) {
      t[key] = [m](ExperimentConfig& c, const std::string& k, const std::string& v) { c.*m = to_doubles(k, v); };
    };
    auto point = [&t](const std::string& key, Vec2 ExperimentConfig::*m) {
      t[key] = [m](ExperimentConfig& c, const std::string& k, const std::string& v) { c.*m = to_point(k, v); };
    };
    num("params.a", &ExperimentConfig::a);
    num("params.alpha", &ExperimentConfig::alpha);
    num("params.gamma", &ExperimentConfig::gamma);
    num("params.R", &ExperimentConfig::R);
    num("params.radius", &ExperimentConfig::radius);
    num("params.r_min", &ExperimentConfig::r_min);
    num("params.r_max", &ExperimentConfig::r_max);
    integer("params.N", &ExperimentConfig::N);
    integer("params.n_max", &ExperimentConfig::n_max);
    integer("params.level", &ExperimentConfig::level);
    t["params.levels"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.levels = to_ints(k, v);
    };
    list("params.radii", &ExperimentConfig::radii);
    list("params.epsilons", &ExperimentConfig::epsilons);
    list("params.angles", &ExperimentConfig::angles);
    list("params.a_values", &ExperimentConfig::a_values);
    list("params.mesh_rotations", &ExperimentConfig::mesh_rotations);
    point("params.x0", &ExperimentConfig::x0);
    point("params.seed_point", &ExperimentConfig::seed_point);
    t["params.centers"] = [](ExperimentConfig& c, const std::string&, const std::string& v) { c.centers = v; };
    t["params.mode"] = [](ExperimentConfig& c, const std::string&, const std::string& v) { c.mode = v; };
    t["output.dir"] = [](ExperimentConfig& c, const std::string&, const std::string& v) { c.out_dir = v; };
    return t;
  }();
  return table;
}

void assign(ExperimentConfig& c, const std::string& key, const std::string& raw) {
  const auto& table = setters();
  const auto it = table.find(key);
  if (it == table.end()) invalid("unknown key '" + key + "'");
  const std::string value = trim(raw);
  it->second(c, key, value);
  c.entries[key] = value;
}

// ---------------------------------------------------------------------------
// helpers shared by the runners

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

/// Least-squares slope of log y against log x.
double log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = std::min(x.size(), y.size());
  if (n < 2) return 0;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) mx += std::log(x[i]), my += std::log(y[i]);
  mx /= n, my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxx > 0 ? sxy / sxx : 0;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<CoefficientField> coefficients(const ExperimentConfig& c) {
  std::vector<CoefficientField> out;
  for (const auto& ref : c.A) {
    if (ref == "catalog") {
      for (auto& f : coefficient_catalog()) out.push_back(std::move(f));
    } else {
      out.push_back(make_coefficient(ref));
    }
  }
  return out;
}

std::vector<HarmonicPolynomial2d> polynomials(const std::vector<std::string>& refs) {
  std::vector<HarmonicPolynomial2d> out;
  for (const auto& r : refs) out.push_back(parse_polynomial(r));
  return out;
}

std::shared_ptr<const Mesh2D> shared(Mesh2D m) { return std::make_shared<const Mesh2D>(std::move(m)); }

ScalarFunction as_function(const HarmonicPolynomial2d& p) {
  return [p](const Vec2& x) { return p(x); };
}

/// Lowest degree carrying a nonzero coefficient (degree >= 1).
int leading_order(const HarmonicPolynomial2d& u) {
  for (int k = 1; k <= u.degree(); ++k)
    if (std::abs(u.coeff(k)) > 0) return k;
  return 0;
}

/// Uniform doubles in [0, 1) from the top 53 bits, independent of the
/// standard library's distribution implementations.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Vec2 random_in_disc(std::mt19937_64& rng, double radius) {
  const double r = radius * std::sqrt(unit(rng));
  const double t = 2 * kPi * unit(rng);
  return {r * std::cos(t), r * std::sin(t)};
}

std::vector<Vec2> resolve_centers(const ExperimentConfig& c, const Field& u, std::shared_ptr<const Mesh2D> mesh) {
  const std::string& spec = c.centers;
  if (spec == "origin") return {Vec2::Zero()};
  std::mt19937_64 rng(c.seed);
  if (spec.rfind("random:", 0) == 0) {
    const long long k = to_int("params.centers", spec.substr(7));
    std::vector<Vec2> out;
    for (long long i = 0; i < k; ++i) out.push_back(random_in_disc(rng, 0.5));
    return out;
  }
  if (spec.rfind("nodal:", 0) == 0) {
    const long long k = to_int("params.centers", spec.substr(6));
    const auto nd = extract_nodal_set(u, mesh);
    std::vector<Vec2> out;
    for (long long i = 0; i < k; ++i) {
      const Vec2 target = i == 0 ? Vec2::Zero() : random_in_disc(rng, 0.4);
      Vec2 best = target;
      double bd = std::numeric_limits<double>::infinity();
      for (const auto& line : nd.polylines)
        for (const auto& p : line)
          if ((p - target).norm() < bd) bd = (p - target).norm(), best = p;
      if (!std::isfinite(bd)) throw Error(ErrorKind::NoNodalIntersection, "field has no nodal set to place centers on");
      out.push_back(best);
    }
    return out;
  }
  std::vector<Vec2> out;
  for (const auto& p : split(spec, ';')) out.push_back(to_point("params.centers", p));
  return out;
}

// ---------------------------------------------------------------------------
// runners

struct Context {
  const ExperimentConfig& c;
  bool verbose;
  ExperimentResult& r;
  void log(const std::string& s) const {
    if (verbose) std::cerr << "[" << c.name << "] " << s << "\n";
  }
};

void run_frequency(const Context& ctx) {
  const auto& c = ctx.c;
  const auto As = coefficients(c);
  std::ostringstream csv;
  csv << "u,A,x0,y0,r,H,D,N\n";
  json cases = json::array();
  double worst_defect = 0, worst_seconds = 0;
  for (const auto& uref : c.u) {
    const auto u = parse_polynomial(uref);
    for (const auto& A : As) {
      const auto t0 = std::chrono::steady_clock::now();
      std::shared_ptr<const Mesh2D> mesh;
      Field f = u;
      double h = 0;
      if (c.level > 0) {
        mesh = shared(disc_mesh(c.level));
        f = solve_elliptic(A, as_function(u), mesh);
        h = mesh->h_max();
      }
      const std::size_t first = cases.size();
      const auto centers = resolve_centers(c, f, mesh ? mesh : shared(disc_mesh(5)));
      for (const auto& x0 : centers) {
        auto radii = c.radii;
        if (mesh) {
          const double reach = std::sqrt(Eigen::SelfAdjointEigenSolver<Mat2>(A(x0)).eigenvalues().maxCoeff());
          const double limit = 0.95 * (1 - x0.norm()) / reach;
          const double top = *std::max_element(radii.begin(), radii.end());
          if (top > limit)
            for (auto& r : radii) r *= limit / top;
        }
        const auto prof = frequency_profile(f, A, x0, radii);
        for (std::size_t i = 0; i < prof.radii.size(); ++i)
          csv << field(uref) << ',' << field(A.name) << ',' << num(x0.x()) << ',' << num(x0.y()) << ','
              << num(prof.radii[i]) << ',' << num(prof.H[i]) << ',' << num(prof.D[i]) << ',' << num(prof.N[i])
              << '\n';
        worst_defect = std::max(worst_defect, prof.monotonicity_defect);
        cases.push_back({{"u", uref},
                         {"A", A.name},
                         {"center", {x0.x(), x0.y()}},
                         {"h", h},
                         {"monotonicity_defect", prof.monotonicity_defect},
                         {"N", prof.N},
                         {"radii", prof.radii}});
      }
      const double s = seconds_since(t0);
      worst_seconds = std::max(worst_seconds, s);
      for (std::size_t i = first; i < cases.size(); ++i) cases[i]["seconds"] = s;
      ctx.log(uref + " / " + A.name + ": " + num(s) + " s");
    }
  }
  ctx.r.files["frequency.csv"] = csv.str();
  ctx.r.summary["cases"] = cases;
  ctx.r.summary["max_monotonicity_defect"] = worst_defect;
  ctx.r.summary["max_case_seconds"] = worst_seconds;
}

void run_ratio(const Context& ctx) {
  const auto& c = ctx.c;
  const auto u = parse_polynomial(c.u.front());
  const auto v = parse_polynomial(c.v);
  const auto A = coefficients(c).front();
  auto mesh = shared(disc_mesh(c.level));
  const bool identity = A.name == "identity";
  Field uf = u;
  GridFunction vh;
  if (identity) {
    vh = interpolate(mesh, as_function(v));
  } else {
    uf = solve_elliptic(A, as_function(u), mesh);
    vh = solve_elliptic(A, as_function(v), mesh);
  }
  const auto w = ratio(vh, uf, A);
  std::ostringstream csv;
  write_csv(w, csv);
  ctx.r.files["ratio.csv"] = csv.str();
  const auto nd = extract_nodal_set(uf, mesh);
  const auto br = boundary_conditions_check(w, uf, A, nd);
  ctx.r.summary["h"] = mesh->h_max();
  ctx.r.summary["conormal_defect"] = br.conormal_defect;
  ctx.r.summary["singular_gradient"] = br.singular_gradient;
  ctx.r.summary["boundary_samples"] = br.samples;
  ctx.r.summary["holder_c0alpha"] =
      holder_seminorm(w, c.alpha, 4 * mesh->h_max(), Ball{Vec2::Zero(), 0.5}).seminorm;
  if (!c.w.empty()) {
    const auto exact = parse_polynomial(c.w.front());
    ctx.r.summary["l2_error"] = l2_error(w, as_function(exact));
  }
}

void run_hodograph(const Context& ctx) {
  const auto& c = ctx.c;
  const auto u = parse_polynomial(c.u.front());
  const auto As = coefficients(c);
  const auto& A = As.front();
  const HodographMap map(u, A, c.seed_point);
  const double rho = std::min(c.radius, 0.95 * map.image_radius());
  auto half = shared(half_disc_mesh(c.level, rho));
  json& s = ctx.r.summary;
  s["image_radius"] = map.image_radius();
  s["half_disc_radius"] = rho;
  s["determinant"] = map.determinant();
  if (!c.w.empty()) {
    const auto w = parse_polynomial(c.w.front());
    const auto pf = pushforward(w, map, c.a, half);
    std::ostringstream csv;
    csv << "s,t,wbar\n";
    for (int i = 0; i < half->num_vertices(); ++i)
      if (pf.wbar.vertex_active(i))
        csv << num(half->vertices[i].x()) << ',' << num(half->vertices[i].y()) << ',' << num(pf.wbar[i]) << '\n';
    ctx.r.files["hodograph.csv"] = csv.str();
    s["residual"] = pf.residual;
    s["failed_vertices"] = pf.failed_vertices;
    if (c.w.size() > 1) {
      // expected profile written in x, y standing for s, t
      const auto expected = parse_polynomial(c.w[1]);
      const double err = l2_error(pf.wbar, as_function(expected));
      const double norm = l2_norm(pf.wbar);
      s["l2_error"] = err;
      s["relative_l2_error"] = norm > 0 ? err / norm : err;
    }
  }
  std::ostringstream bcsv;
  bcsv << "A,det,max_deviation,samples,status\n";
  json checks = json::array();
  for (const auto& field_A : As) {
    std::string status = "ok";
    double dev = 0, det = 0;
    int samples = 0;
    try {
      std::unique_ptr<HodographMap> m;
      try {
        m = std::make_unique<HodographMap>(u, field_A, c.seed_point);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::InvalidArgument) throw;
        auto mesh = shared(disc_mesh(5));
        m = std::make_unique<HodographMap>(solve_elliptic(field_A, as_function(u), mesh), field_A, c.seed_point);
      }
      det = m->determinant();
      const Mat2 target = Vec2(det, 1).asDiagonal();
      const double rs = 0.5 * m->image_radius();
      for (int i = 1; i <= 4; ++i)
        for (int j = 0; j < 8; ++j) {
          const double r = rs * i / 4, th = kPi * (j + 0.5) / 8;
          Vec2 x;
          const Vec2 st(r * std::cos(th), r * std::sin(th));
          if (!m->try_inverse(st, x)) continue;
          dev = std::max(dev, (straightened_matrix(*m, st) - target).cwiseAbs().maxCoeff());
          ++samples;
        }
    } catch (const Error& e) {
      status = std::string(e.name());
    }
    bcsv << field(field_A.name) << ',' << num(det) << ',' << num(dev) << ',' << samples << ',' << status << '\n';
    checks.push_back({{"A", field_A.name}, {"det", det}, {"max_deviation", dev}, {"samples", samples}, {"status", status}});
  }
  ctx.r.files["straightening.csv"] = bcsv.str();
  s["straightening"] = checks;
}

void run_liouville(const Context& ctx) {
  const auto& c = ctx.c;
  const auto u = parse_polynomial(c.u.front());
  std::vector<double> radii = c.radii.empty() ? std::vector<double>{0.25, 0.5, 1.0} : c.radii;
  std::ostringstream csv;
  json profiles = json::array();
  bool header = false;
  for (const auto& ref : c.w) {
    std::function<double(const Vec2&)> w;
    const std::string prefix = "u|u|^(";
    if (ref.rfind(prefix, 0) == 0 && ref.back() == ')') {
      const std::string e = trim(ref.substr(prefix.size(), ref.size() - prefix.size() - 1));
      const double p = e == "-a" ? -c.a : to_double("field.w", e);
      w = [u, p](const Vec2& x) {
        const double v = u(x);
        return v == 0 ? 0.0 : v * std::pow(std::abs(v), p);
      };
    } else {
      w = as_function(parse_polynomial(ref));
    }
    std::vector<DiscSamples> discs;
    for (double r : radii) discs.push_back(sample_disc(w, r));
    const auto fit = liouville_fit(discs, u, c.a, c.gamma);
    if (!header) {
      csv << "profile,radius,residual,harmonic_residual";
      for (std::size_t j = 0; j < fit.coefficients.size(); ++j) csv << ",c" << j;
      csv << '\n';
      header = true;
    }
    for (std::size_t i = 0; i < fit.radii.size(); ++i) {
      csv << field(ref) << ',' << num(fit.radii[i]) << ',' << num(fit.residuals[i]) << ','
          << num(fit.harmonic_residuals[i]);
      for (double cj : fit.coefficients_per_radius[i]) csv << ',' << num(cj);
      csv << '\n';
    }
    profiles.push_back({{"profile", ref},
                        {"success", fit.success},
                        {"harmonic_only", fit.harmonic_only},
                        {"residuals", fit.residuals},
                        {"coefficients", fit.coefficients}});
  }
  ctx.r.files["liouville.csv"] = csv.str();
  ctx.r.summary["profiles"] = profiles;
}

void run_corrector(const Context& ctx) {
  const auto& c = ctx.c;
  const auto u = parse_polynomial(c.u.front());
  const auto A = coefficients(c).front();
  const int N = c.N > 0 ? c.N : leading_order(u);
  SchemeOptions opts;
  opts.R = c.R;
  opts.alpha = c.alpha;
  std::vector<CorrectorResult> ladder;
  json rows = json::array();
  for (double eps : c.epsilons) {
    const auto t0 = std::chrono::steady_clock::now();
    ladder.push_back(corrector(u, A, eps, N, opts));
    const auto& cr = ladder.back();
    rows.push_back({{"epsilon", eps},
                    {"iterations", cr.iterations},
                    {"order", cr.order},
                    {"order_converged", cr.order_converged},
                    {"sup_norm", cr.sup_norm},
                    {"c1alpha", cr.c1alpha},
                    {"residual", cr.residual},
                    {"seconds", seconds_since(t0)}});
    ctx.log("eps " + num(eps) + ": order " + num(cr.order));
  }
  const auto rep = verify_scheme(u, ladder, opts);
  std::ostringstream csv;
  write_scheme_csv(rep, csv);
  ctx.r.files["corrector.csv"] = csv.str();
  json& s = ctx.r.summary;
  s["N"] = N;
  s["A"] = A.name;
  s["rows"] = rows;
  s["norm_slope"] = rep.norm_slope;
  s["xi_drift"] = finite_or_null(rep.xi_drift);
  s["xi_uniform"] = rep.uniform;
}

void run_sweep(const Context& ctx) {
  const auto& c = ctx.c;
  const ScalarFunction g = [](const Vec2& p) { return 1 + p.x() + 0.5 * p.y() * p.y(); };
  std::vector<SweepCase> cases;
  if (c.family == "powers") cases = power_family(c.n_max, g);
  else if (c.family == "rotations") cases = rotation_family(parse_polynomial(c.u.front()), c.angles, g);
  else invalid("field.family: expected powers or rotations");
  SweepOptions o;
  o.a = c.a;
  o.alpha = c.alpha;
  o.levels = c.levels;
  o.A = coefficients(c).front();
  const auto table = uniformity_sweep(cases, o);
  std::ostringstream csv;
  write_sweep_csv(table, csv);
  ctx.r.files["sweep.csv"] = csv.str();

  std::vector<int> levels = c.levels;
  std::sort(levels.begin(), levels.end());
  json changes = json::array();
  double worst0 = 0, worst1 = 0;
  if (levels.size() >= 2) {
    const int fine = levels.back(), coarse = levels[levels.size() - 2];
    for (const auto& sc : cases) {
      const SweepRow *a = nullptr, *b = nullptr;
      for (const auto& row : table.rows) {
        if (row.id != sc.id) continue;
        if (row.level == coarse) a = &row;
        if (row.level == fine) b = &row;
      }
      if (!a || !b) continue;
      const double d0 = std::abs(b->c0alpha - a->c0alpha) / std::max(b->c0alpha, 1e-300);
      const double d1 = std::abs(b->c1alpha - a->c1alpha) / std::max(b->c1alpha, 1e-300);
      worst0 = std::max(worst0, d0);
      worst1 = std::max(worst1, d1);
      changes.push_back({{"case", sc.id}, {"c0alpha_change", d0}, {"c1alpha_change", d1}});
    }
  }
  json& s = ctx.r.summary;
  s["max_c0alpha"] = table.max_c0alpha;
  s["max_c1alpha"] = table.max_c1alpha;
  s["changes"] = changes;
  s["max_c0alpha_change"] = worst0;
  s["max_c1alpha_change"] = worst1;
}

void run_hook(const Context& ctx) {
  const auto& c = ctx.c;
  std::ostringstream csv;
  csv << "u,x0,y0,found_x,found_y,base_x,base_y,radius,angle\n";
  json rows = json::array();
  for (const auto& ref : c.u) {
    const auto u = parse_polynomial(ref);
    const auto h = find_hook(u, c.x0, c.r_min, c.r_max);
    csv << field(ref) << ',' << num(c.x0.x()) << ',' << num(c.x0.y()) << ',' << num(h.found.x()) << ','
        << num(h.found.y()) << ',' << num(h.base.x()) << ',' << num(h.base.y()) << ',' << num(h.radius) << ','
        << num(h.angle) << '\n';
    rows.push_back({{"u", ref}, {"angle", h.angle}, {"radius", h.radius}, {"found", {h.found.x(), h.found.y()}}});
  }
  ctx.r.files["hook.csv"] = csv.str();
  ctx.r.summary["hooks"] = rows;
}

void run_convergence(const Context& ctx) {
  const auto& c = ctx.c;
  std::ostringstream csv;
  json& s = ctx.r.summary;
  s["mode"] = c.mode;
  if (c.mode == "halfplane") {
    csv << "a,level,h,l2_error\n";
    json series = json::array();
    for (double a : c.a_values) {
      const ScalarFunction exact = [a](const Vec2& p) { return p.x() * p.x() - p.y() * p.y() / (1 + a); };
      std::vector<double> hs, errs;
      for (int level : c.levels) {
        auto half = shared(half_disc_mesh(level));
        const double err = l2_error(solve_halfplane_la(a, exact, half), exact);
        csv << num(a) << ',' << level << ',' << num(half->h_max()) << ',' << num(err) << '\n';
        hs.push_back(half->h_max());
        errs.push_back(err);
      }
      series.push_back({{"a", a}, {"h", hs}, {"l2_error", errs}, {"l2_slope", log_slope(hs, errs)}});
    }
    s["series"] = series;
  } else if (c.mode == "degenerate") {
    const auto u = parse_polynomial(c.u.front());
    const auto exact = parse_polynomial(c.w.front());
    const auto A = coefficients(c).front();
    WeightSpec ws;
    ws.a = c.a;
    ws.u = u;
    ws.frequency_bound = c.N;
    csv << "rotation,level,h,l2_error,conormal_defect\n";
    json series = json::array();
    for (double rot : c.mesh_rotations) {
      std::vector<double> hs, errs, defects;
      for (int level : c.levels) {
        auto mesh = shared(rot == 0 ? disc_mesh(level) : disc_mesh(level).rotated(rot));
        const auto w = solve_degenerate(ws, A, as_function(exact), mesh);
        const double err = l2_error(w, as_function(exact));
        const auto nd = extract_nodal_set(u, mesh);
        const auto br = boundary_conditions_check(w, u, A, nd);
        csv << num(rot) << ',' << level << ',' << num(mesh->h_max()) << ',' << num(err) << ','
            << num(br.conormal_defect) << '\n';
        hs.push_back(mesh->h_max());
        errs.push_back(err);
        defects.push_back(br.conormal_defect);
        ctx.log("rotation " + num(rot) + " level " + std::to_string(level) + ": " + num(err));
      }
      const double dmax = *std::max_element(defects.begin(), defects.end());
      const bool positive = std::all_of(defects.begin(), defects.end(), [](double d) { return d > 0; });
      series.push_back({{"rotation", rot},
                        {"h", hs},
                        {"l2_error", errs},
                        {"conormal_defect", defects},
                        {"l2_slope", log_slope(hs, errs)},
                        {"conormal_slope", positive ? json(log_slope(hs, defects)) : json(nullptr)},
                        {"max_conormal_defect", dmax}});
    }
    s["series"] = series;
  } else {
    invalid("params.mode: expected degenerate or halfplane");
  }
  ctx.r.files["convergence.csv"] = csv.str();
}

bool uses_weight(const ExperimentConfig& c) {
  switch (c.kind) {
    case ExperimentKind::Hodograph:
    case ExperimentKind::LiouvilleFit:
    case ExperimentKind::Sweep: return true;
    case ExperimentKind::Convergence: return c.mode == "degenerate";
    default: return false;
  }
}

json tolerances(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Frequency:
      return {{"angular_points", 64}, {"radial_points", 24}, {"floor_factor", 8}};
    case ExperimentKind::Ratio: return {{"fill", 0.05}, {"inclusion_tau", 2e-2}, {"boundary_exclusion", 0.1}};
    case ExperimentKind::Hodograph:
      return {{"determinant_tol", 1e-10}, {"newton_tol", 1e-13}, {"newton_max_iter", 60}, {"loop_tolerance", 2e-2}};
    case ExperimentKind::LiouvilleFit: return {{"threshold", 1e-6}, {"rank_tol", 1e-10}, {"rings", 16}, {"angles", 48}};
    case ExperimentKind::Corrector:
      return {{"h_ratio", 32}, {"base_level", 4}, {"probe_samples", 256}, {"mode_floor", 1e-12},
              {"order_tol", 1e-3}, {"order_deficit", 0.1}};
    case ExperimentKind::Sweep: return {{"min_sep_factor", 4}, {"inner_radius", 0.5}};
    case ExperimentKind::Hook: return {{"radii", 48}, {"angular_samples", 1440}, {"tau_grad", 1e-4}};
    case ExperimentKind::Convergence: return {{"quadrature_points", 7}, {"boundary_exclusion", 0.1}};
  }
  return json::object();
}

std::string normalized_text(const ExperimentConfig& c) {
  std::string text;
  for (const auto& [k, v] : c.entries) text += k + " = " + v + "\n";
  return text;
}

}  // namespace

std::string_view kind_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Frequency: return "frequency";
    case ExperimentKind::Ratio: return "ratio";
    case ExperimentKind::Hodograph: return "hodograph";
    case ExperimentKind::LiouvilleFit: return "liouville-fit";
    case ExperimentKind::Corrector: return "corrector";
    case ExperimentKind::Sweep: return "sweep";
    case ExperimentKind::Hook: return "hook";
    case ExperimentKind::Convergence: return "convergence";
  }
  return "unknown";
}

std::optional<ExperimentKind> parse_kind(std::string_view name) {
  for (auto k : {ExperimentKind::Frequency, ExperimentKind::Ratio, ExperimentKind::Hodograph,
                 ExperimentKind::LiouvilleFit, ExperimentKind::Corrector, ExperimentKind::Sweep, ExperimentKind::Hook,
                 ExperimentKind::Convergence})
    if (kind_name(k) == name) return k;
  return std::nullopt;
}

ExperimentConfig parse_config(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    invalid(std::string("malformed config: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  ExperimentConfig c;
  bool has_kind = false;
  for (const auto& [key, node] : tree) {
    if (node.empty()) {
      assign(c, key, node.data());
      has_kind = has_kind || key == "kind";
      continue;
    }
    for (const auto& [sub, leaf] : node) assign(c, key + "." + sub, leaf.data());
  }
  if (!has_kind) invalid("missing 'kind'");
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) invalid("cannot open config '" + path + "'");
  return parse_config(in);
}

void apply_override(ExperimentConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) invalid("override must be key=value: '" + assignment + "'");
  assign(config, trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

void validate(const ExperimentConfig& c) {
  using K = ExperimentKind;
  const bool needs_u = !(c.kind == K::Sweep && c.family == "powers") &&
                       !(c.kind == K::Convergence && c.mode == "halfplane");
  if (needs_u && c.u.empty()) invalid("field.u is required");
  const auto us = polynomials(c.u);
  const auto As = coefficients(c);
  if (As.empty()) invalid("field.A is empty");
  if (!(c.alpha > 0 && c.alpha <= 1)) invalid("params.alpha must lie in (0, 1]");
  auto level_ok = [](int l) { return l >= 0 && l <= 9; };
  if (!level_ok(c.level)) invalid("params.level must lie in 0..9");
  for (int l : c.levels)
    if (!level_ok(l)) invalid("params.levels must lie in 0..9");
  for (double r : c.radii)
    if (!(r > 0)) invalid("params.radii must be positive");

  switch (c.kind) {
    case K::Frequency:
      if (c.radii.empty()) invalid("frequency needs params.radii");
      break;
    case K::Ratio:
      if (c.v.empty()) invalid("ratio needs field.v");
      parse_polynomial(c.v);
      if (c.level < 1) invalid("ratio needs params.level >= 1");
      break;
    case K::Hodograph:
      if (c.level < 1) invalid("hodograph needs params.level >= 1");
      if (!(c.radius > 0)) invalid("params.radius must be positive");
      break;
    case K::LiouvilleFit:
      if (c.w.empty()) invalid("liouville-fit needs field.w profiles");
      if (c.gamma < 0) invalid("params.gamma must be non-negative");
      break;
    case K::Corrector:
      if (c.epsilons.empty()) invalid("corrector needs params.epsilons");
      if (!(c.R > 0 && c.R <= 1)) invalid("params.R must lie in (0, 1]");
      for (double e : c.epsilons)
        if (!(e > 0 && 2 * e < c.R)) invalid("params.epsilons must lie in (0, R/2)");
      if (c.N < 0) invalid("params.N must be non-negative");
      if (std::abs(us.front()(Vec2::Zero())) > 0) invalid("corrector needs u(0) = 0");
      break;
    case K::Sweep:
      if (c.levels.empty()) invalid("sweep needs params.levels");
      if (c.family != "powers" && c.family != "rotations") invalid("field.family: expected powers or rotations");
      if (c.n_max < 1) invalid("params.n_max must be >= 1");
      break;
    case K::Hook:
      if (!(c.r_min > 0 && c.r_max >= c.r_min)) invalid("need 0 < params.r_min <= params.r_max");
      break;
    case K::Convergence:
      if (c.levels.empty()) invalid("convergence needs params.levels");
      if (c.mode == "halfplane") {
        if (c.a_values.empty()) invalid("halfplane convergence needs params.a_values");
        for (double a : c.a_values)
          if (!(a > -1)) throw Error(ErrorKind::ExponentBelowThreshold, "halfplane exponent must exceed -1");
      } else if (c.mode == "degenerate") {
        if (c.w.empty()) invalid("degenerate convergence needs the exact solution in field.w");
      } else {
        invalid("params.mode: expected degenerate or halfplane");
      }
      break;
  }
  if (!c.w.empty() && c.kind != K::LiouvilleFit) polynomials(c.w);

  if (uses_weight(c)) {
    std::vector<HarmonicPolynomial2d> weights = us;
    if (c.kind == K::Sweep && c.family == "powers")
      weights = {HarmonicPolynomial2d::monomial(c.n_max, {0, -1})};
    for (const auto& u : weights) {
      WeightSpec ws;
      ws.a = c.a;
      ws.u = u;
      ws.frequency_bound = c.N;
      ws.validate();
    }
  }
}

ExperimentResult run_experiment(const ExperimentConfig& config, bool verbose) {
  ExperimentResult result;
  result.summary = json::object();
  try {
    validate(config);
  } catch (const Error& e) {
    result.exit_code = 2;
    result.error = std::string(e.name());
    result.message = e.what();
    return result;
  }
  const Context ctx{config, verbose, result};
  const auto t0 = std::chrono::steady_clock::now();
  try {
    switch (config.kind) {
      case ExperimentKind::Frequency: run_frequency(ctx); break;
      case ExperimentKind::Ratio: run_ratio(ctx); break;
      case ExperimentKind::Hodograph: run_hodograph(ctx); break;
      case ExperimentKind::LiouvilleFit: run_liouville(ctx); break;
      case ExperimentKind::Corrector: run_corrector(ctx); break;
      case ExperimentKind::Sweep: run_sweep(ctx); break;
      case ExperimentKind::Hook: run_hook(ctx); break;
      case ExperimentKind::Convergence: run_convergence(ctx); break;
    }
  } catch (const Error& e) {
    result.exit_code = e.kind() == ErrorKind::ConfigInvalid ? 2 : 3;
    result.error = std::string(e.name());
    result.message = e.what();
  } catch (const std::exception& e) {
    result.exit_code = 3;
    result.error = "InternalError";
    result.message = e.what();
  }
  result.summary["seconds"] = seconds_since(t0);
  return result;
}

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

void write_outputs(const ExperimentConfig& config, const ExperimentResult& result, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto put = [&](const std::string& name, const std::string& text) {
    std::ofstream out(fs::path(dir) / name, std::ios::binary);
    out << text;
    if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write " + (fs::path(dir) / name).string());
  };
  json files = json::object();
  for (const auto& [name, text] : result.files) {
    put(name, text);
    files[name] = sha256_hex(text);
  }
  put("summary.json", result.summary.dump(2) + "\n");

  json modules = json::object();
  for (const char* m : {"harmonic_core", "weighted_fem", "nodal_geometry", "almgren", "hodograph", "scheme",
                        "regularity", "cli"})
    modules[m] = NODAL_LAB_VERSION;
  const char* threads = std::getenv("NODAL_LAB_THREADS");
  json manifest = {{"name", config.name},
                   {"kind", kind_name(config.kind)},
                   {"seed", config.seed},
                   {"config_sha256", sha256_hex(normalized_text(config))},
                   {"config", config.entries},
                   {"tolerances", tolerances(config.kind)},
                   {"modules", modules},
                   {"files", files},
                   {"threads", thread_count()},
                   {"threads_env", threads ? json(threads) : json(nullptr)},
                   {"exit_code", result.exit_code},
                   {"error", result.error},
                   {"message", result.message}};
  put("manifest.json", manifest.dump(2) + "\n");
}

}  // namespace nodal
