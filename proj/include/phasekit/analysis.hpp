#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "phasekit/core.hpp"
#include "phasekit/measurement.hpp"
#include "phasekit/objective.hpp"
#include "phasekit/solvers.hpp"

namespace phasekit {

enum class GradientKind { E_x, E_y, G };

std::string to_string(GradientKind kind);

/// Replacement gradient for the checker, same signature as the analytic one.
/// For G the point's x is the argument. Used to confirm the checker catches errors.
using GradientFn = std::function<CVector(const Ensemble&, const SplitPoint&, const RVector&, double)>;

struct GradientCheckReport {
  GradientKind kind = GradientKind::E_x;
  bool complex_mode = false;
  int directions = 0;
  double h = 0.0;
  /// max over directions of |analytic - numeric| / max(|analytic|, |numeric|).
  double max_rel_deviation = 0.0;
  double max_abs_deviation = 0.0;
  /// Largest |analytic| seen, for judging whether max_rel is meaningful.
  double max_abs_derivative = 0.0;

  /// Every direction within rel_tol relative or abs_tol absolute deviation.
  bool passed(double rel_tol, double abs_tol = 0.0) const {
    return max_rel_deviation < rel_tol || max_abs_deviation < abs_tol;
  }
};

/// Compares Re<grad, v> with the central difference (f(p + h v) - f(p - h v)) / 2h
/// along `directions` random real unit directions v, and as many directions i v
/// when the ensemble or the point is complex. The E checks vary one block with
/// the other fixed; the G check varies x. Throws on h <= 0.
GradientCheckReport fd_gradient_check(GradientKind kind, const Ensemble& e, const SplitPoint& point,
                                      const RVector& b, double lambda, double h, RngStream& rng,
                                      int directions = 20, const GradientFn& gradient = {});

struct FrameBoundReport {
  double C = 0.0;  // upper frame bound
  int trials = 0;
  int violations = 0;
  /// min over trials of (C ||u|| ||v|| - ||M(uv^*)||_1) / (C ||u|| ||v||); >= 0 when the bound holds.
  double worst_relative_slack = 0.0;
  /// |lhs - C| / C for u = v = top eigenvector of F F^*.
  double tightness_rel_error = 0.0;
  /// |lhs(7u, v) - 7 lhs(u, v)| / (7 lhs(u, v)) on the first trial.
  double homogeneity_rel_error = 0.0;

  bool passed(double tight_tol = 1e-6) const { return violations == 0 && tightness_rel_error <= tight_tol; }
};

/// ||M_F(u v^*)||_1 = sum_n |f_n^* u| |f_n^* v|.
double measurement_l1(const Ensemble& e, const CVector& u, const CVector& v);

/// Checks sum_n |f_n^* u| |f_n^* v| <= C ||u|| ||v|| + 1e-8 on random complex
/// Gaussian u, v (every other trial uses v = u), plus tightness at the top eigenvector.
FrameBoundReport frame_bound_check(const Ensemble& e, int trials, RngStream& rng);

/// ||z z^* - x x^*||_* from the 2x2 reduction on span{x, z}:
/// sqrt((||z||^2 - ||x||^2)^2 + 4 (||x||^2 ||z||^2 - |<x, z>|^2)).
double nuclear_dist_rank2(const CVector& x, const CVector& z);

struct SpeedupReport {
  double predicted_E_decrease = 0.0;  // <= 0
  double predicted_G_decrease = 0.0;  // <= 0
  double ratio = 0.0;                 // G over E
  Eigen::Index d = 0;
  Eigen::Index N = 0;
  std::uint64_t seed = 0;
  double perturbation = 0.0;  // ||x - x0|| / ||x0||
  double proximity = 0.0;     // ||x - y|| / ||x||
};

/// One-step model decreases at a point near x0 with lambda = 0 and b = measure(e, x0):
///   E: -||gx||^4 / (2 q),  q = (1/N) sum |f_n^* y|^2 |f_n^* gx|^2,
///   G: -||grad G||^4 / (2 wf_quad_form(z, grad G)),  z = (x + y) / 2.
/// x = x0 + perturbation ||x0|| u and y = x + split_gap ||x0|| w for random real unit
/// vectors u, w. With split_gap = 0 the real-case ratio is exactly 2/3.
/// Requires a real ensemble and real x0; throws when a gradient vanishes.
SpeedupReport speedup_diagnostic(const Ensemble& e, const CVector& x0, double perturbation, RngStream& rng,
                                 double split_gap = 0.0);

struct MonotonicityReport {
  bool ok = true;
  std::optional<std::size_t> first_violation;  // index i with E[i] > E[i-1] + slack
  int violations = 0;
  double worst_increase = 0.0;
};

/// Flags E[i] > E[i-1] + 1e-12 (1 + |E[i-1]|).
MonotonicityReport monotonicity_audit(const std::vector<double>& objective);
MonotonicityReport monotonicity_audit(const std::vector<TraceRecord>& trace);

/// Computable parts of the stability bound for an estimate (x, y) of x0 under
/// observed data b_obs, with E taken as sum_n |...|^2 + lambda' ||x - y||^2:
///   delta^2 = E(x, y), eps = ||b - b_obs||, rhs = C delta^2 / (4 lambda') + delta + eps.
/// The bound gives data_misfit = ||M(z z^*) - b|| <= rhs; the nuclear distance is
/// reported for inspection only.
struct RobustnessReport {
  double nuclear_distance = 0.0;
  double data_misfit = 0.0;
  double C = 0.0;
  double delta = 0.0;
  double epsilon = 0.0;
  double lambda = 0.0;
  double rhs = 0.0;
};

RobustnessReport robustness_report(const Ensemble& e, const CVector& x0, const SplitPoint& estimate,
                                   const RVector& b_observed, double lambda);

// Reports serialize as a single JSON object with the field names above.
void write_json(std::ostream& os, const GradientCheckReport& r);
void write_json(std::ostream& os, const FrameBoundReport& r);
void write_json(std::ostream& os, const SpeedupReport& r);
void write_json(std::ostream& os, const MonotonicityReport& r);
void write_json(std::ostream& os, const RobustnessReport& r);

}  // namespace phasekit
