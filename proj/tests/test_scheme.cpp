#include "doctest.h"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>
#include <sstream>

#include "nodal/error.hpp"
#include "nodal/scheme.hpp"

using namespace nodal;
using Complex = std::complex<double>;

namespace {

HarmonicPolynomial2d im(int n) { return HarmonicPolynomial2d::monomial(n, Complex(0, -1)); }
HarmonicPolynomial2d re(int n) { return HarmonicPolynomial2d::monomial(n); }

double sampled_lipschitz(const CoefficientField& A, double radius) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> U(-1, 1);
  double L = 0;
  for (int i = 0; i < 20000; ++i) {
    const Vec2 x(U(rng) * radius, U(rng) * radius);
    const Vec2 d(U(rng), U(rng));
    const Vec2 y = x + 1e-3 * radius * d;
    L = std::max(L, (A(x) - A(y)).norm() / (x - y).norm());
  }
  return L;
}

const std::vector<CorrectorResult>& separable_ladder() {
  static const std::vector<CorrectorResult> ladder = [] {
    std::vector<CorrectorResult> out;
    for (double eps : {0.2, 0.1, 0.05, 0.025}) out.push_back(corrector(im(2), separable(0.5), eps, 2));
    return out;
  }();
  return ladder;
}

}  // namespace

TEST_CASE("cutoff") {
  for (double eps : {0.2, 0.05, 0.01}) {
    const Cutoff eta = cutoff(eps);
    CHECK(eta(Vec2::Zero()) == 1);
    CHECK(eta(Vec2(0.99 * eps, 0)) == 1);
    CHECK(eta(Vec2(3 * eps, 0)) == 0);
    CHECK(eta(Vec2(0, 2 * eps)) == 0);
    double gmax = 0;
    for (int i = 0; i <= 4000; ++i) {
      const double r = 2.5 * eps * i / 4000;
      const Vec2 x = r * Vec2(std::cos(0.7), std::sin(0.7));
      const Vec2 g = eta.gradient(x);
      gmax = std::max(gmax, g.norm());
      const Vec2 e = 1e-7 * eps * Vec2(std::cos(0.7), std::sin(0.7));
      const double fd = (eta(x + e) - eta(x - e)) / (2e-7 * eps);
      CHECK(g.dot(Vec2(std::cos(0.7), std::sin(0.7))) == doctest::Approx(fd).epsilon(1e-5).scale(1 / eps));
    }
    CHECK(gmax <= 2 / eps);
  }
  CHECK_THROWS_AS(cutoff(0), Error);
}

TEST_CASE("blended coefficients") {
  const auto id = approx_coefficients(identity_field(), 0.1);
  CHECK((id(Vec2(0.15, 0.02)) - Mat2::Identity()).norm() == 0);
  for (const auto& A : coefficient_catalog()) {
    const double eps = 0.1;
    const auto Ae = approx_coefficients(A, eps);
    CHECK((Ae(Vec2(0.07, -0.05)) - Mat2::Identity()).norm() == 0);
    CHECK((Ae(Vec2(0.3, 0.1)) - A(Vec2(0.3, 0.1))).norm() == 0);
    for (int i = 0; i < 200; ++i) {
      const Vec2 x = (0.05 + 0.2 * i / 200.0) * Vec2(std::cos(0.37 * i), std::sin(0.37 * i));
      const Eigen::SelfAdjointEigenSolver<Mat2> es(Ae(x));
      CHECK(es.eigenvalues()(0) >= std::min(A.lambda, 1.0) - 1e-12);
      CHECK(es.eigenvalues()(1) <= std::max(A.Lambda, 1.0) + 1e-12);
    }
  }
}

TEST_CASE("blended Lipschitz seminorm stays bounded along the ladder") {
  for (const auto& A : {rotation_perturbed(0.3, 0.5, 0), separable(0.5)}) {
    const double L = sampled_lipschitz(A, 0.5);
    for (double eps : {0.2, 0.1, 0.05, 0.025, 0.0125}) CHECK(sampled_lipschitz(approx_coefficients(A, eps), 0.5) <= 4 * L);
  }
}

TEST_CASE("probe modes of polynomials") {
  const auto p = 0.5 * re(1) - 2.0 * im(2) + 0.25 * re(3);
  const Eigen::VectorXd m = probe_modes(p, 0.3, 3);
  const Eigen::VectorXd expect = (Eigen::VectorXd(7) << 0, 0.5, 0, 0, -2, 0.25, 0).finished();
  CHECK((m - expect).norm() < 1e-12);
}

TEST_CASE("prescribed blow-up reproduces harmonic data") {
  const double eps = 0.05;
  const auto mesh = corrector_mesh(eps);
  for (const auto& P : {re(2), im(3)}) {
    const auto b = prescribed_blowup_solution(approx_coefficients(identity_field(), eps), P, eps, mesh);
    double err = 0;
    for (int v = 0; v < mesh->num_vertices(); ++v) err = std::max(err, std::abs(b.psi[v] - P(mesh->vertices[v])));
    CHECK(err < 5e-4);  // P1 error of P on the coarse outer rings
    CHECK(std::abs(b.a_eps) < 1e-6);
    CHECK(b.psi.value(Vec2::Zero()) == doctest::Approx(0).scale(1e-14));
  }
}

TEST_CASE("prescribed blow-up for a rotation-perturbed field") {
  SchemeOptions o;
  o.R = 0.25;
  const double eps = 0.05;
  const auto b = prescribed_blowup_solution(approx_coefficients(rotation_perturbed(0.3, 0.5, 0), eps), re(2), eps,
                                            corrector_mesh(eps, o), o);
  CHECK(b.order >= 1.99);
  CHECK(b.remainder_slope > 2);
}

TEST_CASE("corrector vanishes for the identity") {
  const auto c = corrector(im(2), identity_field(), 0.1, 2);
  CHECK(c.iterations == 0);
  CHECK(c.sup_norm == 0);
  CHECK(c.order == doctest::Approx(2).epsilon(1e-2));
}

TEST_CASE("corrector ladder on the separable field") {
  const auto& ladder = separable_ladder();
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    const auto& c = ladder[i];
    CHECK(c.iterations >= 1);
    CHECK(c.iterations <= 2);
    CHECK(c.order == doctest::Approx(2).epsilon(5e-3));
    CHECK(std::abs(c.phi.value(Vec2::Zero())) < 1e-18);
    CHECK(c.residual < 1e-3);
    if (i > 0) CHECK(c.sup_norm < ladder[i - 1].sup_norm);
  }
  const auto rep = verify_scheme(im(2), ladder);
  CHECK(rep.norm_slope >= 0.5 - 0.2);
  // sup |u_eps - u| decays at least linearly in eps
  const double slope = std::log(ladder.front().sup_norm / ladder.back().sup_norm) /
                       std::log(ladder.front().epsilon / ladder.back().epsilon);
  CHECK(slope >= 0.8);
}

TEST_CASE("xi diagnostic over the ladder") {
  const auto rep = verify_scheme(im(2), separable_ladder());
  CHECK(rep.uniform);
  CHECK(rep.xi_drift < 0.2);
  for (const auto& r : rep.rows) CHECK(r.xi_error.empty());

  const auto flat = verify_scheme(im(2), {corrector(im(2), identity_field(), 0.1, 2)});
  CHECK(flat.rows[0].xi_min == doctest::Approx(2).epsilon(1e-2));
  CHECK(flat.rows[0].xi_max == doctest::Approx(2).epsilon(1e-2));

  auto wrong = separable_ladder().front();
  wrong.N = 3;
  const auto bad = verify_scheme(im(2), {wrong});
  CHECK(bad.rows[0].xi_error == "OrderMismatch");
  CHECK_FALSE(bad.uniform);

  std::ostringstream out;
  write_scheme_csv(rep, out);
  CHECK(out.str().rfind("epsilon,iterations,order,c1alpha_norm,sup_norm,xi_min,xi_max,xi_log_lipschitz,xi_error\n", 0) == 0);
}
