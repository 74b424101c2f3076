#include "nodal/coefficient.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <memory>

#include "nodal/error.hpp"

namespace nodal {
namespace {

Mat2 sym(double a11, double a12, double a22) {
  Mat2 m;
  m << a11, a12, a12, a22;
  return m;
}

// Fill lambda, Lambda, L from a deterministic sample of the unit disc.
CoefficientField with_constants(CoefficientField f, double radius = 1) {
  const EllipticitySample s = sample_ellipticity(f, radius, 32);
  f.lambda = s.lambda_min;
  f.Lambda = s.Lambda_max;
  f.lipschitz = 1.25 * s.lipschitz;
  return f;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

CoefficientField identity_field() {
  CoefficientField f{"identity", [](const Vec2&) { return Mat2::Identity().eval(); }};
  f.is_constant = true;
  return f;
}

CoefficientField constant_field(double a11, double a12, double a22) {
  const Mat2 m = sym(a11, a12, a22);
  Eigen::SelfAdjointEigenSolver<Mat2> es(m);
  if (es.eigenvalues()(0) <= 0)
    throw Error(ErrorKind::InvalidArgument, "constant coefficient is not positive definite");
  CoefficientField f{"constant(a11=" + fmt(a11) + ", a12=" + fmt(a12) + ", a22=" + fmt(a22) + ")",
                     [m](const Vec2&) { return m; }};
  f.lambda = es.eigenvalues()(0);
  f.Lambda = es.eigenvalues()(1);
  f.is_constant = true;
  return f;
}

CoefficientField scaled_identity(double c) {
  if (c <= 0) throw Error(ErrorKind::InvalidArgument, "scaled identity needs c > 0");
  CoefficientField f{"scaled(c=" + fmt(c) + ")", [c](const Vec2&) { return (c * Mat2::Identity()).eval(); }};
  f.lambda = f.Lambda = c;
  f.is_constant = true;
  return f;
}

CoefficientField rotation_perturbed(double delta, double theta0, double kappa) {
  if (delta < 0) throw Error(ErrorKind::InvalidArgument, "rotation field needs delta >= 0");
  auto eval = [=](const Vec2& x) {
    const double s = 1 + delta * x.norm();
    const double th = theta0 + kappa * x.x();
    const double c = std::cos(th), sn = std::sin(th);
    Mat2 q;
    q << c, -sn, sn, c;
    return (q * Eigen::Vector2d(s, 1 / s).asDiagonal() * q.transpose()).eval();
  };
  return with_constants({"rotation(delta=" + fmt(delta) + ", theta0=" + fmt(theta0) + ", kappa=" + fmt(kappa) + ")",
                         eval});
}

CoefficientField radial_bump(double beta, double rho) {
  if (rho <= 0 || beta <= -1) throw Error(ErrorKind::InvalidArgument, "bump needs rho > 0, beta > -1");
  auto eval = [=](const Vec2& x) {
    return ((1 + beta * std::min(x.norm(), rho) / rho) * Mat2::Identity()).eval();
  };
  return with_constants({"bump(beta=" + fmt(beta) + ", rho=" + fmt(rho) + ")", eval});
}

CoefficientField oscillatory(double delta, double k) {
  auto eval = [=](const Vec2& x) {
    const double sx = std::sin(k * x.x()), sy = std::sin(k * x.y());
    return sym(1 + delta * sx, 0.5 * delta * sx * sy, 1 + delta * sy);
  };
  CoefficientField f = with_constants({"oscillatory(delta=" + fmt(delta) + ", k=" + fmt(k) + ")", eval});
  if (f.lambda <= 0) throw Error(ErrorKind::InvalidArgument, "oscillatory field lost ellipticity");
  return f;
}

CoefficientField separable(double delta) {
  if (std::abs(delta) >= 1) throw Error(ErrorKind::InvalidArgument, "separable field needs |delta| < 1");
  auto eval = [=](const Vec2& x) { return sym(1 + delta * x.y(), 0, 1 + delta * x.x()); };
  return with_constants({"separable(delta=" + fmt(delta) + ")", eval});
}

CoefficientField tabulated(double x0, double y0, double dx, double dy, int nx, int ny, std::vector<Mat2> values,
                           std::string name) {
  if (nx < 2 || ny < 2 || static_cast<int>(values.size()) != nx * ny || dx <= 0 || dy <= 0)
    throw Error(ErrorKind::InvalidArgument, "tabulated field: inconsistent grid");
  auto data = std::make_shared<const std::vector<Mat2>>(std::move(values));
  auto eval = [=](const Vec2& x) {
    const double fx = std::clamp((x.x() - x0) / dx, 0.0, nx - 1.0);
    const double fy = std::clamp((x.y() - y0) / dy, 0.0, ny - 1.0);
    const int i = std::min(static_cast<int>(fx), nx - 2);
    const int j = std::min(static_cast<int>(fy), ny - 2);
    const double s = fx - i, t = fy - j;
    const auto& v = *data;
    return ((1 - s) * (1 - t) * v[j * nx + i] + s * (1 - t) * v[j * nx + i + 1] + (1 - s) * t * v[(j + 1) * nx + i] +
            s * t * v[(j + 1) * nx + i + 1])
        .eval();
  };
  return with_constants({std::move(name), eval});
}

CoefficientField tabulate(const CoefficientField& field, double half_width, int n) {
  std::vector<Mat2> values;
  values.reserve(static_cast<std::size_t>(n) * n);
  const double d = 2 * half_width / (n - 1);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) values.push_back(field(Vec2(-half_width + i * d, -half_width + j * d)));
  return tabulated(-half_width, -half_width, d, d, n, n, std::move(values),
                   "tabulated(n=" + std::to_string(n) + ", of=" + field.name + ")");
}

CoefficientField read_tabulated(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ConfigInvalid, "cannot open tabulated field " + path);
  int nx = 0, ny = 0;
  double x0 = 0, y0 = 0, dx = 0, dy = 0;
  if (!(in >> nx >> ny >> x0 >> y0 >> dx >> dy)) throw Error(ErrorKind::ParseError, "bad tabulated header in " + path);
  std::vector<Mat2> values;
  for (int k = 0; k < nx * ny; ++k) {
    double a11, a12, a22;
    if (!(in >> a11 >> a12 >> a22)) throw Error(ErrorKind::ParseError, "truncated tabulated field " + path);
    values.push_back(sym(a11, a12, a22));
  }
  return tabulated(x0, y0, dx, dy, nx, ny, std::move(values), "tabulated(file=" + path + ")");
}

CoefficientField make_coefficient(std::string_view spec) {
  auto trim = [](std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
  };
  spec = trim(spec);
  std::string name(spec.substr(0, spec.find('(')));
  name = std::string(trim(name));
  std::map<std::string, std::string> args;
  if (const auto open = spec.find('('); open != std::string_view::npos) {
    if (spec.back() != ')') throw Error(ErrorKind::ParseError, "unbalanced parentheses in '" + std::string(spec) + "'");
    std::string_view body = spec.substr(open + 1, spec.size() - open - 2);
    while (!trim(body).empty()) {
      const auto comma = body.find(',');
      std::string_view item = trim(body.substr(0, comma));
      body = comma == std::string_view::npos ? std::string_view() : body.substr(comma + 1);
      const auto eq = item.find('=');
      if (eq == std::string_view::npos)
        throw Error(ErrorKind::ParseError, "expected key=value in '" + std::string(spec) + "'");
      args[std::string(trim(item.substr(0, eq)))] = std::string(trim(item.substr(eq + 1)));
    }
  }
  auto num = [&](const std::string& key, double def) {
    auto it = args.find(key);
    if (it == args.end()) return def;
    double v = 0;
    const auto& s = it->second;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
      throw Error(ErrorKind::ParseError, "bad number for " + key + ": " + s);
    args.erase(it);
    return v;
  };
  CoefficientField f;
  if (name == "identity") f = identity_field();
  else if (name == "constant") {
    const double a11 = num("a11", 2), a12 = num("a12", 0), a22 = num("a22", 0.5);
    f = constant_field(a11, a12, a22);
  } else if (name == "scaled") f = scaled_identity(num("c", 2));
  else if (name == "rotation") {
    const double d = num("delta", 0.3), t = num("theta0", 0.5), k = num("kappa", 0);
    f = rotation_perturbed(d, t, k);
  } else if (name == "bump") {
    const double b = num("beta", 0.5), r = num("rho", 0.5);
    f = radial_bump(b, r);
  } else if (name == "oscillatory") {
    const double d = num("delta", 0.2), k = num("k", 4);
    f = oscillatory(d, k);
  } else if (name == "separable") f = separable(num("delta", 0.5));
  else if (name == "tabulated") {
    if (auto it = args.find("file"); it != args.end()) {
      const std::string path = it->second;
      args.erase(it);
      f = read_tabulated(path);
    } else {
      const int n = static_cast<int>(num("n", 33));
      const double d = num("delta", 0.3), t = num("theta0", 0.5), k = num("kappa", 0);
      f = tabulate(rotation_perturbed(d, t, k), 1.0, n);
    }
  } else {
    throw Error(ErrorKind::ConfigInvalid, "unknown coefficient field '" + name + "'");
  }
  if (!args.empty())
    throw Error(ErrorKind::ConfigInvalid, "unknown parameter '" + args.begin()->first + "' for " + name);
  return f;
}

std::vector<CoefficientField> coefficient_catalog() {
  return {identity_field(),          constant_field(2, 0, 0.5),  scaled_identity(2),
          rotation_perturbed(0.3, 0.5, 0), radial_bump(0.5, 0.5), oscillatory(0.2, 4),
          separable(0.5),            tabulate(rotation_perturbed(0.3, 0.5, 0), 1.0, 33)};
}

EllipticitySample sample_ellipticity(const CoefficientField& field, double radius, int n) {
  EllipticitySample s;
  s.lambda_min = std::numeric_limits<double>::infinity();
  s.Lambda_max = 0;
  std::vector<Vec2> pts;
  std::vector<Mat2> vals;
  for (int i = 0; i <= n; ++i) {
    const double r = radius * i / n;
    const int m = i == 0 ? 1 : 4 * i;
    for (int j = 0; j < m; ++j) {
      const double th = 2 * kPi * (j + 0.5 * (i % 2)) / m;
      pts.emplace_back(r * std::cos(th), r * std::sin(th));
      vals.push_back(field(pts.back()));
    }
  }
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const Mat2& a = vals[k];
    s.asymmetry = std::max(s.asymmetry, std::abs(a(0, 1) - a(1, 0)));
    Eigen::SelfAdjointEigenSolver<Mat2> es(a);
    s.lambda_min = std::min(s.lambda_min, es.eigenvalues()(0));
    s.Lambda_max = std::max(s.Lambda_max, es.eigenvalues()(1));
  }
  // difference quotients between nearby samples
  const double reach = 2.5 * radius / n;
  for (std::size_t k = 0; k < pts.size(); ++k)
    for (std::size_t l = k + 1; l < pts.size(); ++l) {
      const double d = (pts[k] - pts[l]).norm();
      if (d > reach || d == 0) continue;
      s.lipschitz = std::max(s.lipschitz, (vals[k] - vals[l]).cwiseAbs().maxCoeff() / d);
    }
  return s;
}

bool determinant_constant(const CoefficientField& field, double radius, double tol) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  const int n = 24;
  for (int i = 0; i <= n; ++i) {
    const double r = radius * i / n;
    const int m = i == 0 ? 1 : 4 * i;
    for (int j = 0; j < m; ++j) {
      const double th = 2 * kPi * j / m;
      const double d = field(Vec2(r * std::cos(th), r * std::sin(th))).determinant();
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
  }
  return hi - lo <= tol;
}

}  // namespace nodal
