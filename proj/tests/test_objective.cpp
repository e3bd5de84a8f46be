#include <cmath>

#include "doctest.h"
#include "phasekit/analysis.hpp"
#include "phasekit/objective.hpp"

using namespace phasekit;

namespace {

struct Problem {
  Ensemble e;
  CVector x0;
  RVector b;
};

Problem random_problem(std::uint64_t seed, int d, int n, Field field) {
  RngStream rng(seed);
  Ensemble e = gaussian_ensemble(d, n, field, rng);
  CVector x0 = sample_complex_gaussian(rng, d, field);
  RVector b = measure(e, x0).values();
  return {std::move(e), std::move(x0), std::move(b)};
}

// Per-measurement loops straight from the definitions.
double naive_E(const CMatrix& F, const CVector& x, const CVector& y, const RVector& b, double lambda) {
  double acc = 0.0;
  for (Eigen::Index n = 0; n < F.cols(); ++n) {
    Complex xf(0.0), fy(0.0);
    for (Eigen::Index t = 0; t < F.rows(); ++t) {
      xf += std::conj(x[t]) * F(t, n);
      fy += std::conj(F(t, n)) * y[t];
    }
    acc += std::norm(xf * fy - b[n]);
  }
  return acc / static_cast<double>(F.cols()) + lambda * (x - y).squaredNorm();
}

double naive_G(const CMatrix& F, const CVector& z, const RVector& b) {
  double acc = 0.0;
  for (Eigen::Index n = 0; n < F.cols(); ++n) {
    Complex fz(0.0);
    for (Eigen::Index t = 0; t < F.rows(); ++t) fz += std::conj(F(t, n)) * z[t];
    acc += std::pow(std::norm(fz) - b[n], 2);
  }
  return acc / static_cast<double>(F.cols());
}

}  // namespace

TEST_CASE("E vanishes at the truth and matches hand arithmetic") {
  const Problem p = random_problem(1, 8, 40, Field::Complex);
  CHECK(eval_E(p.e, SplitPoint::diagonal(p.x0), p.b, 3.0) < 1e-20 * std::pow(p.x0.squaredNorm(), 2));

  CMatrix one(1, 1);
  one(0, 0) = 1.0;
  const Ensemble e1 = Ensemble::from_matrix(one);
  CVector x(1), y(1);
  x[0] = 2.0;
  y[0] = 3.0;
  CHECK(eval_E(e1, SplitPoint(x, y), RVector::Zero(1), 1.0) == doctest::Approx(37.0));
  CHECK_THROWS(eval_E(e1, SplitPoint(x, y), RVector::Zero(1), -1.0));
  CHECK_THROWS_AS(eval_E(e1, SplitPoint(x, y), RVector::Zero(2), 1.0), DimensionError);
}

TEST_CASE("E and G match naive loops") {
  for (Field field : {Field::Real, Field::Complex}) {
    const Problem p = random_problem(2, 8, 40, field);
    RngStream rng(3);
    for (int k = 0; k < 5; ++k) {
      const CVector x = sample_complex_gaussian(rng, 8, field);
      const CVector y = sample_complex_gaussian(rng, 8, field);
      const double e = eval_E(p.e, SplitPoint(x, y), p.b, 0.7);
      CHECK(e == doctest::Approx(naive_E(p.e.frame(), x, y, p.b, 0.7)).epsilon(1e-12));
      CHECK(eval_G(p.e, x, p.b) == doctest::Approx(naive_G(p.e.frame(), x, p.b)).epsilon(1e-12));
      // G(z) is E at (z, z) for any lambda.
      CHECK(eval_G(p.e, x, p.b) == doctest::Approx(eval_E(p.e, SplitPoint::diagonal(x), p.b, 5.0)).epsilon(1e-12));
      // Swapping x and y conjugates each residual.
      CHECK(eval_E(p.e, SplitPoint(y, x), p.b, 0.7) == doctest::Approx(e).epsilon(1e-12));
    }
  }
}

TEST_CASE("cached residuals match recomputation") {
  const Problem p = random_problem(4, 8, 40, Field::Complex);
  RngStream rng(5);
  const SplitPoint sp(sample_complex_gaussian(rng, 8), sample_complex_gaussian(rng, 8));
  const Residuals a = Residuals::compute(p.e, sp, p.b);
  const Residuals b = Residuals::from_products(forward(p.e, sp.x), forward(p.e, sp.y), p.b);
  CHECK((a.r - b.r).norm() <= 1e-12 * a.r.norm());
  CHECK(eval_E(a, sp, 0.3) == doctest::Approx(eval_E(p.e, sp, p.b, 0.3)).epsilon(1e-12));
}

TEST_CASE("gradients vanish at the global minimizer") {
  const Problem p = random_problem(6, 8, 40, Field::Complex);
  const SplitGradient g = grad_E(p.e, SplitPoint::diagonal(p.x0), p.b, 2.0);
  const double scale = std::pow(p.x0.norm(), 3);
  CHECK(g.gx.norm() < 1e-12 * scale);
  CHECK(g.gy.norm() < 1e-12 * scale);
  CHECK(grad_G(p.e, p.x0, p.b).norm() < 1e-12 * scale);
}

TEST_CASE("finite-difference agreement, real and complex") {
  for (Field field : {Field::Real, Field::Complex}) {
    const double tol = field == Field::Real ? 1e-6 : 1e-5;
    const Problem p = random_problem(7, 8, 40, field);
    RngStream rng(8);
    for (int k = 0; k < 10; ++k) {
      const SplitPoint sp(sample_complex_gaussian(rng, 8, field), sample_complex_gaussian(rng, 8, field));
      for (GradientKind kind : {GradientKind::E_x, GradientKind::E_y, GradientKind::G}) {
        const auto r = fd_gradient_check(kind, p.e, sp, p.b, 0.4, 1e-5, rng);
        CHECK(r.max_rel_deviation < tol);
        CHECK(r.complex_mode == (field == Field::Complex));
      }
    }
  }
}

TEST_CASE("grad_G is gx + gy on the diagonal with lambda = 0") {
  const Problem p = random_problem(9, 8, 40, Field::Complex);
  RngStream rng(10);
  const CVector z = sample_complex_gaussian(rng, 8);
  const SplitGradient g = grad_E(p.e, SplitPoint::diagonal(z), p.b, 0.0);
  const CVector gg = grad_G(p.e, z, p.b);
  CHECK((gg - g.gx - g.gy).norm() <= 1e-12 * gg.norm());
}

TEST_CASE("quad_form_x: examples, dense oracle, exact quadratic coefficient") {
  CMatrix one(1, 1);
  one(0, 0) = 1.0;
  const Ensemble e1 = Ensemble::from_matrix(one);
  CVector y(1), v(1);
  y[0] = 2.0;
  v[0] = 3.0;
  CHECK(quad_form_x(e1, y, v, 0.0) == doctest::Approx(36.0));
  CHECK(quad_form_x(e1, y, CVector::Zero(1), 0.0) == 0.0);

  const Problem p = random_problem(11, 8, 40, Field::Complex);
  RngStream rng(12);
  const CMatrix& F = p.e.frame();
  const CVector yy = sample_complex_gaussian(rng, 8);
  const CVector xx = sample_complex_gaussian(rng, 8);
  const CVector vv = sample_complex_gaussian(rng, 8);
  const double lambda = 0.9;
  CMatrix H = lambda * CMatrix::Identity(8, 8);
  for (Eigen::Index n = 0; n < F.cols(); ++n) {
    const CVector a = F.col(n) * F.col(n).adjoint() * yy;
    H += a * a.adjoint() / static_cast<double>(F.cols());
  }
  const double dense = (vv.adjoint() * H * vv)(0, 0).real();
  CHECK(quad_form_x(p.e, yy, vv, lambda) == doctest::Approx(dense).epsilon(1e-10));
  CHECK(quad_form_y(p.e, yy, vv, lambda) == doctest::Approx(dense).epsilon(1e-10));
  CHECK(quad_form_x(p.e, yy, vv, lambda) >= lambda * vv.squaredNorm());

  // E(x - a v, y) = E0 - a Re<gx, v> + a^2 q exactly, so the line search is exact.
  const SplitPoint sp(xx, yy);
  const CVector gx = grad_E(p.e, sp, p.b, lambda).gx;
  const double e0 = eval_E(p.e, sp, p.b, lambda);
  const double q = quad_form_x(p.e, yy, vv, lambda);
  for (double a : {0.1, 0.5, 2.0}) {
    const double model = e0 - a * gx.dot(vv).real() + a * a * q;
    CHECK(eval_E(p.e, SplitPoint(xx - a * vv, yy), p.b, lambda) == doctest::Approx(model).epsilon(1e-10));
  }
}

TEST_CASE("wf_quad_form: real closed form and degenerate inputs") {
  const Problem p = random_problem(13, 8, 40, Field::Real);
  RngStream rng(14);
  const CVector z = sample_complex_gaussian(rng, 8, Field::Real);
  const CVector v = sample_complex_gaussian(rng, 8, Field::Real);
  const CMatrix& F = p.e.frame();
  double naive = 0.0;
  for (Eigen::Index n = 0; n < F.cols(); ++n) {
    const double fz = F.col(n).real().dot(z.real());
    const double fv = F.col(n).real().dot(v.real());
    naive += 6.0 * fz * fz * fv * fv;
  }
  naive /= static_cast<double>(F.cols());
  CHECK(wf_quad_form(p.e, z, v) == doctest::Approx(naive).epsilon(1e-10));
  CHECK(wf_quad_form(p.e, z, CVector::Zero(8)) == 0.0);
  CHECK(wf_quad_form(p.e, CVector::Zero(8), v) == 0.0);
}

TEST_CASE("wf_quad_form matches dense Hessian blocks, complex case") {
  const Problem p = random_problem(15, 8, 40, Field::Complex);
  RngStream rng(16);
  const CVector z = sample_complex_gaussian(rng, 8);
  const CVector v = sample_complex_gaussian(rng, 8);
  const CMatrix& F = p.e.frame();
  CMatrix h11 = CMatrix::Zero(8, 8), h21 = CMatrix::Zero(8, 8);
  for (Eigen::Index n = 0; n < F.cols(); ++n) {
    const CMatrix ff = F.col(n) * F.col(n).adjoint();
    h11 += 4.0 * ff * z * z.adjoint() * ff;
    // Complex-symmetric block: 2 conj(f f^* z) conj(f f^* z)^T.
    const CVector w = (ff * z).conjugate();
    h21 += 2.0 * w * w.transpose();
  }
  h11 /= static_cast<double>(F.cols());
  h21 /= static_cast<double>(F.cols());
  const double dense = (v.adjoint() * h11 * v)(0, 0).real() + (v.transpose() * h21 * v)(0, 0).real();
  CHECK(wf_quad_form(p.e, z, v) == doctest::Approx(dense).epsilon(1e-10));
  // Quadratic in each argument.
  CHECK(wf_quad_form(p.e, 2.0 * z, v) == doctest::Approx(4.0 * dense).epsilon(1e-10));
  CHECK(wf_quad_form(p.e, z, 3.0 * v) == doctest::Approx(9.0 * dense).epsilon(1e-10));
}

TEST_CASE("E is coercive along a fixed direction") {
  const Problem p = random_problem(17, 8, 40, Field::Complex);
  RngStream rng(18);
  const SplitPoint dir(sample_complex_gaussian(rng, 8), sample_complex_gaussian(rng, 8));
  double prev = eval_E(p.e, dir, p.b, 0.1);
  for (double t : {1e2, 1e4}) {
    const double v = eval_E(p.e, SplitPoint(t * dir.x, t * dir.y), p.b, 0.1);
    CHECK(v > prev);
    prev = v;
  }
}
