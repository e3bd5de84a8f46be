#include <cmath>
#include <sstream>

#include <Eigen/SVD>

#include "doctest.h"
#include "phasekit/analysis.hpp"

using namespace phasekit;

TEST_CASE("fd_gradient_check: minimizer, coarse step, bad h") {
  RngStream rng(1);
  const Ensemble e = gaussian_ensemble(8, 40, Field::Complex, rng);
  const CVector x0 = sample_complex_gaussian(rng, 8);
  const RVector b = measure(e, x0).values();
  const SplitPoint star = SplitPoint::diagonal(x0);
  for (GradientKind kind : {GradientKind::E_x, GradientKind::E_y, GradientKind::G}) {
    const auto r = fd_gradient_check(kind, e, star, b, 1.0, 1e-5, rng);
    CHECK(r.max_abs_deviation < 1e-8);
    CHECK(r.passed(1e-6, 1e-8));
    CHECK(r.directions == 40);
  }
  const SplitPoint p(sample_complex_gaussian(rng, 8), sample_complex_gaussian(rng, 8));
  // E is quadratic in each block, so only the quartic G shows truncation error.
  RngStream r1(2), r2(2);
  const auto fine = fd_gradient_check(GradientKind::G, e, p, b, 1.0, 1e-5, r1);
  const auto coarse = fd_gradient_check(GradientKind::G, e, p, b, 1.0, 1e-1, r2);
  CHECK(coarse.max_rel_deviation > fine.max_rel_deviation);
  CHECK_THROWS(fd_gradient_check(GradientKind::E_x, e, p, b, 1.0, 0.0, rng));
}

TEST_CASE("fd_gradient_check catches an injected sign error") {
  RngStream rng(3);
  const Ensemble e = gaussian_ensemble(8, 40, Field::Real, rng);
  const RVector b = measure(e, sample_complex_gaussian(rng, 8, Field::Real)).values();
  const SplitPoint p(sample_complex_gaussian(rng, 8, Field::Real), sample_complex_gaussian(rng, 8, Field::Real));
  GradientFn wrong = [](const Ensemble& en, const SplitPoint& sp, const RVector& bb, double lambda) {
    const Residuals res = Residuals::compute(en, sp, bb);
    return CVector(grad_E_x(en, res, sp, lambda) - 4.0 * lambda * (sp.x - sp.y));
  };
  const auto r = fd_gradient_check(GradientKind::E_x, e, p, b, 2.0, 1e-5, rng, 20, wrong);
  CHECK_FALSE(r.passed(1e-6));
  CHECK_FALSE(r.complex_mode);
}

TEST_CASE("frame bound on the identity frame") {
  const Ensemble id = Ensemble::from_matrix(CMatrix::Identity(6, 6));
  RngStream rng(4);
  const FrameBoundReport r = frame_bound_check(id, 1000, rng);
  CHECK(r.C == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(r.violations == 0);
  // u = v attains Cauchy-Schwarz equality here, so the slack is zero up to rounding.
  CHECK(r.worst_relative_slack >= -1e-12);
  CHECK(r.tightness_rel_error < 1e-6);
  CHECK(r.homogeneity_rel_error < 1e-12);
  CHECK(r.passed());

  // Cauchy-Schwarz oracle on the identity.
  const CVector u = sample_complex_gaussian(rng, 6);
  CHECK(measurement_l1(id, u, u) == doctest::Approx(u.squaredNorm()).epsilon(1e-12));
}

TEST_CASE("frame bound on Gaussian and CDP ensembles") {
  RngStream rng(5);
  const Ensemble g = gaussian_ensemble(16, 64, Field::Complex, rng);
  const FrameBoundReport rg = frame_bound_check(g, 1000, rng);
  CHECK(rg.violations == 0);
  CHECK(rg.tightness_rel_error < 1e-6);
  const Ensemble c = cdp_ensemble(16, 4, rng);
  const FrameBoundReport rc = frame_bound_check(c, 1000, rng);
  CHECK(rc.violations == 0);
  CHECK(rc.tightness_rel_error < 1e-6);
}

TEST_CASE("nuclear_dist_rank2 matches an SVD and the degenerate cases") {
  RngStream rng(6);
  for (int d : {2, 5, 16}) {
    for (int t = 0; t < 5; ++t) {
      const CVector x = sample_complex_gaussian(rng, d);
      const CVector z = sample_complex_gaussian(rng, d);
      const CMatrix m = z * z.adjoint() - x * x.adjoint();
      const double svd = Eigen::JacobiSVD<CMatrix>(m).singularValues().sum();
      CHECK(nuclear_dist_rank2(x, z) == doctest::Approx(svd).epsilon(1e-10));
    }
  }
  CVector e1 = CVector::Zero(3), e2 = CVector::Zero(3);
  e1[0] = 1.0;
  e2[1] = 1.0;
  CHECK(nuclear_dist_rank2(e1, e2) == doctest::Approx(2.0).epsilon(1e-14));
  const CVector x = sample_complex_gaussian(rng, 4);
  CHECK(nuclear_dist_rank2(x, std::polar(1.0, 0.4) * x) < 1e-12 * x.squaredNorm());
  const CVector z = 2.0 * x;
  CHECK(nuclear_dist_rank2(x, z) == doctest::Approx(3.0 * x.squaredNorm()).epsilon(1e-12));
}

TEST_CASE("speedup diagnostic: exact two thirds on the diagonal, homogeneity, errors") {
  RngStream rng(7);
  const Ensemble e = gaussian_ensemble(32, 8 * 32, Field::Real, rng);
  const CVector x0 = sample_complex_gaussian(rng, 32, Field::Real);
  for (int s = 0; s < 5; ++s) {
    RngStream r(derive_seed(8, s, 0));
    const SpeedupReport rep = speedup_diagnostic(e, x0, 1e-3, r);
    CHECK(rep.ratio == doctest::Approx(2.0 / 3.0).epsilon(1e-10));
    CHECK(rep.predicted_E_decrease <= 0.0);
    CHECK(rep.predicted_G_decrease <= 0.0);
    CHECK(rep.proximity == 0.0);
    CHECK(rep.d == 32);
    CHECK(rep.N == 256);
  }
  // The ratio does not depend on the signal scale.
  RngStream a(9), b(9);
  const double base = speedup_diagnostic(e, x0, 1e-2, a, 1e-2).ratio;
  const double scaled = speedup_diagnostic(e, 1e-10 * x0, 1e-2, b, 1e-2).ratio;
  CHECK(scaled == doctest::Approx(base).epsilon(1e-8));

  CHECK_THROWS_AS(speedup_diagnostic(e, x0, 0.0, rng), std::domain_error);
  const Ensemble c = gaussian_ensemble(32, 256, Field::Complex, rng);
  CHECK_THROWS(speedup_diagnostic(c, x0, 1e-3, rng));
}

TEST_CASE("monotonicity audit finds the first uptick") {
  CHECK(monotonicity_audit(std::vector<double>{5, 4, 4, 3}).ok);
  const MonotonicityReport r = monotonicity_audit(std::vector<double>{5, 4, 4.5, 3, 3.2});
  CHECK_FALSE(r.ok);
  REQUIRE(r.first_violation.has_value());
  CHECK(*r.first_violation == 2);
  CHECK(r.violations == 2);
  CHECK(r.worst_increase == doctest::Approx(0.5));
  // Increases at the rounding level are tolerated.
  CHECK(monotonicity_audit(std::vector<double>{1.0, 1.0 + 1e-13}).ok);

  std::vector<TraceRecord> trace(3);
  trace[0].objective = 2.0;
  trace[1].objective = 1.0;
  trace[2].objective = 1.5;
  CHECK(*monotonicity_audit(trace).first_violation == 2);
}

TEST_CASE("robustness report at the truth and under noise") {
  RngStream rng(10);
  const Ensemble e = gaussian_ensemble(16, 96, Field::Complex, rng);
  const CVector x0 = sample_complex_gaussian(rng, 16);
  const RVector b = measure(e, x0).values();
  const RobustnessReport exact = robustness_report(e, x0, SplitPoint::diagonal(x0), b, 1.0);
  CHECK(exact.delta < 1e-12);
  CHECK(exact.epsilon == 0.0);
  CHECK(exact.nuclear_distance < 1e-12 * x0.squaredNorm());

  RVector noisy = b;
  for (Eigen::Index n = 0; n < noisy.size(); ++n) noisy[n] += 0.1 * rng.normal();
  const CVector x = x0 + 0.01 * sample_complex_gaussian(rng, 16);
  const CVector y = x0 + 0.01 * sample_complex_gaussian(rng, 16);
  const RobustnessReport r = robustness_report(e, x0, SplitPoint(x, y), noisy, 1.0);
  CHECK(r.epsilon == doctest::Approx((noisy - b).norm()));
  CHECK(r.data_misfit <= r.rhs);
  CHECK(r.C == doctest::Approx(upper_frame_bound(e)).epsilon(1e-8));
}

TEST_CASE("reports serialize to JSON objects") {
  std::ostringstream os;
  MonotonicityReport m;
  write_json(os, m);
  const std::string s = os.str();
  CHECK(s.front() == '{');
  CHECK(s.find("\"ok\"") != std::string::npos);
  CHECK(s.find("null") != std::string::npos);

  std::ostringstream os2;
  SpeedupReport sp;
  sp.ratio = std::nan("");
  write_json(os2, sp);
  CHECK(os2.str().find("\"ratio\": null") != std::string::npos);
}
