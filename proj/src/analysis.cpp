#include "phasekit/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace phasekit {

std::string to_string(GradientKind kind) {
  switch (kind) {
    case GradientKind::E_x: return "E_x";
    case GradientKind::E_y: return "E_y";
    case GradientKind::G: return "G";
  }
  return "unknown";
}

namespace {

CVector random_unit_real(RngStream& rng, Eigen::Index d) {
  CVector v = sample_complex_gaussian(rng, d, Field::Real);
  return v / v.norm();
}

bool is_real_vector(const CVector& v) { return v.imag().cwiseAbs().maxCoeff() == 0.0; }

}  // namespace

GradientCheckReport fd_gradient_check(GradientKind kind, const Ensemble& e, const SplitPoint& point,
                                      const RVector& b, double lambda, double h, RngStream& rng,
                                      int directions, const GradientFn& gradient) {
  if (!(h > 0.0)) throw std::invalid_argument("fd_gradient_check: h must be positive");
  if (directions < 1) throw std::invalid_argument("fd_gradient_check: need at least one direction");
  require_same_dim(point.dim(), e.dim(), "fd_gradient_check");
  require_same_dim(point.y.size(), e.dim(), "fd_gradient_check");

  auto value = [&](const SplitPoint& p) {
    return kind == GradientKind::G ? eval_G(e, p.x, b) : eval_E(e, p, b, lambda);
  };
  auto shifted = [&](const CVector& v, double t) {
    SplitPoint p = point;
    if (kind == GradientKind::E_y) {
      p.y += t * v;
    } else {
      p.x += t * v;
    }
    return p;
  };

  CVector g;
  if (gradient) {
    g = gradient(e, point, b, lambda);
  } else if (kind == GradientKind::G) {
    g = grad_G(e, point.x, b);
  } else {
    const SplitGradient sg = grad_E(e, point, b, lambda);
    g = kind == GradientKind::E_x ? sg.gx : sg.gy;
  }
  require_same_dim(g.size(), e.dim(), "fd_gradient_check");

  GradientCheckReport report;
  report.kind = kind;
  report.h = h;
  report.complex_mode = !e.is_real() || !is_real_vector(point.x) || !is_real_vector(point.y);

  auto check_direction = [&](const CVector& v) {
    const double analytic = g.dot(v).real();
    const double numeric = (value(shifted(v, h)) - value(shifted(v, -h))) / (2.0 * h);
    const double abs_dev = std::abs(analytic - numeric);
    const double scale = std::max(std::abs(analytic), std::abs(numeric));
    report.max_abs_deviation = std::max(report.max_abs_deviation, abs_dev);
    report.max_abs_derivative = std::max(report.max_abs_derivative, std::abs(analytic));
    if (scale > 0.0) report.max_rel_deviation = std::max(report.max_rel_deviation, abs_dev / scale);
    ++report.directions;
  };

  for (int i = 0; i < directions; ++i) {
    const CVector v = random_unit_real(rng, e.dim());
    check_direction(v);
    if (report.complex_mode) check_direction(Complex(0.0, 1.0) * v);
  }
  return report;
}

double measurement_l1(const Ensemble& e, const CVector& u, const CVector& v) {
  return forward(e, u).cwiseAbs().cwiseProduct(forward(e, v).cwiseAbs()).sum();
}

FrameBoundReport frame_bound_check(const Ensemble& e, int trials, RngStream& rng) {
  if (trials < 1) throw std::invalid_argument("frame_bound_check: trials must be >= 1");
  const FrameBoundEstimate top = estimate_frame_bound(e);

  FrameBoundReport report;
  report.C = top.bound;
  report.trials = trials;
  report.worst_relative_slack = std::numeric_limits<double>::infinity();
  for (int t = 0; t < trials; ++t) {
    const CVector u = sample_complex_gaussian(rng, e.dim());
    const CVector v = t % 2 == 1 ? u : sample_complex_gaussian(rng, e.dim());
    const double lhs = measurement_l1(e, u, v);
    const double rhs = report.C * u.norm() * v.norm();
    if (lhs > rhs + 1e-8) ++report.violations;
    report.worst_relative_slack = std::min(report.worst_relative_slack, (rhs - lhs) / rhs);
    if (t == 0) {
      const double scaled = measurement_l1(e, 7.0 * u, v);
      report.homogeneity_rel_error = std::abs(scaled - 7.0 * lhs) / (7.0 * lhs);
    }
  }
  const double at_top = measurement_l1(e, top.eigenvector, top.eigenvector);
  report.tightness_rel_error = std::abs(at_top - report.C * top.eigenvector.squaredNorm()) / report.C;
  return report;
}

double nuclear_dist_rank2(const CVector& x, const CVector& z) {
  require_same_dim(x.size(), z.size(), "nuclear_dist_rank2");
  const double nx2 = x.squaredNorm();
  const double nz = z.norm();
  const double nx = std::sqrt(nx2);
  if (nx2 == 0.0) return z.squaredNorm();
  // ||x||^2 ||z||^2 - |<x,z>|^2 = ||x||^2 ||z - P_x z||^2, without cancellation.
  const CVector z_perp = z - (x.dot(z) / nx2) * x;
  const double gram_det = nx2 * z_perp.squaredNorm();
  const double trace = (nz - nx) * (nz + nx);
  return std::sqrt(trace * trace + 4.0 * gram_det);
}

SpeedupReport speedup_diagnostic(const Ensemble& e, const CVector& x0, double perturbation, RngStream& rng,
                                 double split_gap) {
  require_same_dim(x0.size(), e.dim(), "speedup_diagnostic");
  if (!e.is_real() || !is_real_vector(x0)) {
    throw std::invalid_argument("speedup_diagnostic: requires a real ensemble and a real signal");
  }
  if (!(perturbation >= 0.0) || !(split_gap >= 0.0)) {
    throw std::invalid_argument("speedup_diagnostic: perturbation and split gap must be nonnegative");
  }
  const double scale = x0.norm();
  const RVector b = measure(e, x0).values();

  SplitPoint p = SplitPoint::diagonal(x0);
  if (perturbation > 0.0) p.x += perturbation * scale * random_unit_real(rng, e.dim());
  p.y = p.x;
  if (split_gap > 0.0) p.y += split_gap * scale * random_unit_real(rng, e.dim());

  const Residuals res = Residuals::compute(e, p, b);
  const CVector gx = grad_E_x(e, res, p, 0.0);
  const CVector z = p.midpoint();
  const CVector gg = grad_G(e, z, b);
  const double gx2 = gx.squaredNorm();
  const double gg2 = gg.squaredNorm();
  if (gx2 == 0.0 || gg2 == 0.0) throw std::domain_error("speedup_diagnostic: zero gradient at a critical point");

  SpeedupReport report;
  report.predicted_E_decrease = -gx2 * gx2 / (2.0 * quad_form_cached(e, res.fy, gx, 0.0));
  report.predicted_G_decrease = -gg2 * gg2 / (2.0 * wf_quad_form(e, z, gg));
  report.ratio = report.predicted_G_decrease / report.predicted_E_decrease;
  report.d = e.dim();
  report.N = e.count();
  report.seed = rng.seed();
  report.perturbation = (p.x - x0).norm() / scale;
  report.proximity = (p.x - p.y).norm() / p.x.norm();
  return report;
}

MonotonicityReport monotonicity_audit(const std::vector<double>& objective) {
  MonotonicityReport report;
  for (std::size_t i = 1; i < objective.size(); ++i) {
    const double prev = objective[i - 1];
    const double rise = objective[i] - prev;
    if (!(rise <= 1e-12 * (1.0 + std::abs(prev)))) {
      if (!report.first_violation) report.first_violation = i;
      ++report.violations;
      report.ok = false;
      if (std::isfinite(rise)) {
        report.worst_increase = std::max(report.worst_increase, rise);
      } else {
        report.worst_increase = std::numeric_limits<double>::infinity();
      }
    }
  }
  return report;
}

MonotonicityReport monotonicity_audit(const std::vector<TraceRecord>& trace) {
  std::vector<double> values;
  values.reserve(trace.size());
  for (const auto& row : trace) values.push_back(row.objective);
  return monotonicity_audit(values);
}

RobustnessReport robustness_report(const Ensemble& e, const CVector& x0, const SplitPoint& estimate,
                                   const RVector& b_observed, double lambda) {
  require_same_dim(x0.size(), e.dim(), "robustness_report");
  const double n = static_cast<double>(e.count());
  const RVector b = measure(e, x0).values();
  require_same_dim(b_observed.size(), b.size(), "robustness_report");
  const CVector z = estimate.midpoint();

  RobustnessReport report;
  report.nuclear_distance = nuclear_dist_rank2(x0, z);
  report.data_misfit = (forward(e, z).cwiseAbs2() - b).norm();
  report.C = upper_frame_bound(e);
  report.lambda = lambda;
  // Our E carries 1/N on the data term, so delta^2 = N E and lambda' = N lambda.
  const double e_value = eval_E(e, estimate, b_observed, lambda);
  report.delta = std::sqrt(n * e_value);
  report.epsilon = (b - b_observed).norm();
  const double penalty_part = lambda > 0.0 ? report.C * e_value / (4.0 * lambda)
                                           : std::numeric_limits<double>::infinity();
  report.rhs = penalty_part + report.delta + report.epsilon;
  return report;
}

namespace {

class JsonObject {
 public:
  explicit JsonObject(std::ostream& os) : os_(os) { os_ << '{'; }
  ~JsonObject() { os_ << '}'; }
  JsonObject(const JsonObject&) = delete;
  JsonObject& operator=(const JsonObject&) = delete;

  void field(const char* name, double v) {
    key(name);
    if (std::isfinite(v)) {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      os_ << buf;
    } else {
      os_ << "null";
    }
  }
  void field(const char* name, long long v) {
    key(name);
    os_ << v;
  }
  void field(const char* name, std::uint64_t v) {
    key(name);
    os_ << v;
  }
  void field(const char* name, bool v) {
    key(name);
    os_ << (v ? "true" : "false");
  }
  void field(const char* name, const std::string& v) {
    key(name);
    os_ << '"' << v << '"';
  }
  void null_field(const char* name) {
    key(name);
    os_ << "null";
  }

 private:
  void key(const char* name) {
    if (!first_) os_ << ", ";
    first_ = false;
    os_ << '"' << name << "\": ";
  }
  std::ostream& os_;
  bool first_ = true;
};

}  // namespace

void write_json(std::ostream& os, const GradientCheckReport& r) {
  JsonObject j(os);
  j.field("kind", to_string(r.kind));
  j.field("complex_mode", r.complex_mode);
  j.field("directions", static_cast<long long>(r.directions));
  j.field("h", r.h);
  j.field("max_rel_deviation", r.max_rel_deviation);
  j.field("max_abs_deviation", r.max_abs_deviation);
  j.field("max_abs_derivative", r.max_abs_derivative);
}

void write_json(std::ostream& os, const FrameBoundReport& r) {
  JsonObject j(os);
  j.field("C", r.C);
  j.field("trials", static_cast<long long>(r.trials));
  j.field("violations", static_cast<long long>(r.violations));
  j.field("worst_relative_slack", r.worst_relative_slack);
  j.field("tightness_rel_error", r.tightness_rel_error);
  j.field("homogeneity_rel_error", r.homogeneity_rel_error);
}

void write_json(std::ostream& os, const SpeedupReport& r) {
  JsonObject j(os);
  j.field("predicted_E_decrease", r.predicted_E_decrease);
  j.field("predicted_G_decrease", r.predicted_G_decrease);
  j.field("ratio", r.ratio);
  j.field("d", static_cast<long long>(r.d));
  j.field("N", static_cast<long long>(r.N));
  j.field("seed", r.seed);
  j.field("perturbation", r.perturbation);
  j.field("proximity", r.proximity);
}

void write_json(std::ostream& os, const MonotonicityReport& r) {
  JsonObject j(os);
  j.field("ok", r.ok);
  if (r.first_violation) {
    j.field("first_violation", static_cast<long long>(*r.first_violation));
  } else {
    j.null_field("first_violation");
  }
  j.field("violations", static_cast<long long>(r.violations));
  j.field("worst_increase", r.worst_increase);
}

void write_json(std::ostream& os, const RobustnessReport& r) {
  JsonObject j(os);
  j.field("nuclear_distance", r.nuclear_distance);
  j.field("data_misfit", r.data_misfit);
  j.field("C", r.C);
  j.field("delta", r.delta);
  j.field("epsilon", r.epsilon);
  j.field("lambda", r.lambda);
  j.field("rhs", r.rhs);
}

}  // namespace phasekit
