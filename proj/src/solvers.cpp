#include "phasekit/solvers.hpp"

#include <cmath>
#include <cstdio>

#include "phasekit/init.hpp"

namespace phasekit {

double step_schedule(long tau, double tau0, double mu_max) {
  if (tau < 1) throw std::invalid_argument("step_schedule: tau must be >= 1");
  return std::min(1.0 - std::exp(-static_cast<double>(tau) / tau0), mu_max);
}

double lambda_schedule(long tau, double lambda0, double xi) {
  if (tau < 1) throw std::invalid_argument("lambda_schedule: tau must be >= 1");
  return lambda0 * std::exp(-xi * static_cast<double>(tau));
}

void Schedules::validate() const {
  if (!(tau0 > 0.0)) throw std::invalid_argument("schedules: tau0 must be positive");
  if (!(mu_max > 0.0)) throw std::invalid_argument("schedules: mu_max must be positive");
  if (!(lambda0 >= 0.0)) throw std::invalid_argument("schedules: lambda0 must be nonnegative");
  if (!(xi >= 0.0)) throw std::invalid_argument("schedules: xi must be nonnegative");
}

Schedules Schedules::constant(double step, double lambda, StepScaling scaling) {
  // exp(-tau / tau0) underflows to 0 for every tau >= 1, so mu_tau = mu_max.
  return Schedules{1e-300, step, lambda, 0.0, scaling};
}

void SolverConfig::validate() const {
  if (max_rounds < 1) throw std::invalid_argument("solver: max_rounds must be >= 1");
  if (stop_tolerance && !(*stop_tolerance >= 0.0)) {
    throw std::invalid_argument("solver: stop_tolerance must be nonnegative");
  }
  schedules.validate();
}

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::BudgetExhausted: return "budget_exhausted";
    case SolveStatus::Converged: return "converged";
    case SolveStatus::Diverged: return "diverged";
  }
  return "unknown";
}

SplitPoint altmin_step(const Ensemble& e, const RVector& b, const SplitPoint& state, double alpha,
                       double beta, double lambda) {
  if (!(alpha > 0.0) || !(beta > 0.0)) throw std::invalid_argument("altmin_step: step sizes must be positive");
  SplitPoint next = state;
  const Residuals at_start = Residuals::compute(e, state, b);
  next.x -= alpha * grad_E_x(e, at_start, state, lambda);
  const Residuals at_mid = Residuals::from_products(forward(e, next.x), at_start.fy, b);
  next.y -= beta * grad_E_y(e, at_mid, next, lambda);
  return next;
}

namespace {

double step_scale(const Ensemble& e, const RVector& b, const CVector& z0, StepScaling scaling) {
  if (scaling == StepScaling::Raw) return 1.0;
  const double theta = init_scale(e, b);
  if (theta > 0.0) return theta * theta;
  const double nz = z0.squaredNorm();
  return nz > 0.0 ? nz : 1.0;
}

void check_inputs(const Ensemble& e, const RVector& b, const CVector& z0, const SolverConfig& cfg,
                  const std::optional<CVector>& truth, const char* where) {
  cfg.validate();
  require_same_dim(z0.size(), e.dim(), where);
  require_same_dim(b.size(), e.count(), where);
  if (truth) require_same_dim(truth->size(), e.dim(), where);
}

std::vector<std::string> initial_warnings(const Ensemble& e) {
  std::vector<std::string> w;
  if (e.rank_deficient()) w.emplace_back("frame is rank deficient; the objective is not coercive");
  return w;
}

bool stop_reached(const SolverConfig& cfg, const TraceRecord& row) {
  if (!cfg.stop_tolerance) return false;
  const double value = row.rel_error ? *row.rel_error : row.grad_norm;
  return value <= *cfg.stop_tolerance;
}

// Finite, or a Signal-safe placeholder so a diverged result can still be returned.
Signal safe_signal(const CVector& v, const CVector& fallback) {
  return all_finite(v) ? Signal(v) : Signal(fallback);
}

}  // namespace

SolveResult altmin_solve(const Ensemble& e, const RVector& b, const CVector& z0, const SolverConfig& cfg,
                         const std::optional<CVector>& truth) {
  check_inputs(e, b, z0, cfg, truth, "altmin_solve");
  SolveResult result;
  result.warnings = initial_warnings(e);
  const double scale = step_scale(e, b, z0, cfg.schedules.step_scaling);
  result.theta_squared = init_scale(e, b) * init_scale(e, b);

  SplitPoint p = SplitPoint::diagonal(z0);
  Residuals res = Residuals::from_products(forward(e, p.x), forward(e, p.y), b);
  SplitPoint last_good = p;

  {
    TraceRecord row;
    row.lambda = cfg.schedules.lambda(1);
    row.objective = eval_E(res, p, row.lambda);
    if (cfg.record_G) row.G = eval_G(e, p.midpoint(), b);
    if (truth) row.rel_error = relative_error(*truth, p.midpoint());
    result.trace.push_back(row);
  }

  for (int k = 1; k <= cfg.max_rounds; ++k) {
    TraceRecord row;
    row.round = k;
    row.tau = 2L * k;
    row.lambda = cfg.schedules.lambda(k);

    const CVector gx = grad_E_x(e, res, p, row.lambda);
    const double gx2 = gx.squaredNorm();
    if (cfg.mode == StepMode::ExactLineSearch) {
      const double q = quad_form_cached(e, res.fy, gx, row.lambda);
      row.alpha = q > 0.0 ? gx2 / (2.0 * q) : 0.0;
    } else {
      row.alpha = cfg.schedules.mu(k) / scale * kAltGradientNormalization;
    }
    p.x -= row.alpha * gx;
    res = Residuals::from_products(forward(e, p.x), std::move(res.fy), b);

    const CVector gy = grad_E_y(e, res, p, row.lambda);
    const double gy2 = gy.squaredNorm();
    if (cfg.mode == StepMode::ExactLineSearch) {
      const double q = quad_form_cached(e, res.fx, gy, row.lambda);
      row.beta = q > 0.0 ? gy2 / (2.0 * q) : 0.0;
    } else {
      row.beta = row.alpha;
    }
    p.y -= row.beta * gy;
    res = Residuals::from_products(std::move(res.fx), forward(e, p.y), b);

    row.grad_norm = std::sqrt(gx2 + gy2);
    row.objective = eval_E(res, p, row.lambda);
    result.rounds_used = k;
    if (!std::isfinite(row.objective) || !all_finite(p.x) || !all_finite(p.y)) {
      result.status = SolveStatus::Diverged;
      result.warnings.emplace_back("non-finite objective at round " + std::to_string(k));
      result.trace.push_back(row);
      break;
    }
    last_good = p;
    if (cfg.record_G) row.G = eval_G(e, p.midpoint(), b);
    if (truth) row.rel_error = relative_error(*truth, p.midpoint());
    result.trace.push_back(row);
    if (stop_reached(cfg, row)) {
      result.status = SolveStatus::Converged;
      break;
    }
  }

  result.converged = result.status == SolveStatus::Converged;
  result.x_final = safe_signal(p.x, last_good.x);
  result.y_final = safe_signal(p.y, last_good.y);
  result.z_final = safe_signal(p.midpoint(), last_good.midpoint());
  return result;
}

SolveResult wf_solve(const Ensemble& e, const RVector& b, const CVector& z0, const SolverConfig& cfg,
                     const std::optional<CVector>& truth) {
  check_inputs(e, b, z0, cfg, truth, "wf_solve");
  if (cfg.mode != StepMode::FixedSchedule) {
    throw std::invalid_argument("wf_solve: only the fixed-schedule step mode is supported");
  }
  SolveResult result;
  result.warnings = initial_warnings(e);
  const double scale = step_scale(e, b, z0, cfg.schedules.step_scaling);
  result.theta_squared = init_scale(e, b) * init_scale(e, b);
  const double n = static_cast<double>(e.count());

  CVector z = z0;
  CVector fz = forward(e, z);
  CVector last_good = z;
  auto objective = [&](const CVector& products) { return (products.cwiseAbs2() - b).squaredNorm() / n; };

  {
    TraceRecord row;
    row.objective = objective(fz);
    row.G = row.objective;
    if (truth) row.rel_error = relative_error(*truth, z);
    result.trace.push_back(row);
  }

  for (int k = 1; k <= cfg.max_rounds; ++k) {
    TraceRecord row;
    row.round = k;
    row.tau = k;
    const RVector q = fz.cwiseAbs2() - b;
    const CVector g = (4.0 / n) * adjoint(e, q.cast<Complex>().cwiseProduct(fz));
    row.alpha = row.beta = cfg.schedules.mu(k) / scale * kWfGradientNormalization;
    z -= row.alpha * g;
    fz = forward(e, z);
    row.grad_norm = g.norm();
    row.objective = objective(fz);
    row.G = row.objective;
    result.rounds_used = k;
    if (!std::isfinite(row.objective) || !all_finite(z)) {
      result.status = SolveStatus::Diverged;
      result.warnings.emplace_back("non-finite objective at iteration " + std::to_string(k));
      result.trace.push_back(row);
      break;
    }
    last_good = z;
    if (truth) row.rel_error = relative_error(*truth, z);
    result.trace.push_back(row);
    if (stop_reached(cfg, row)) {
      result.status = SolveStatus::Converged;
      break;
    }
  }

  result.converged = result.status == SolveStatus::Converged;
  result.z_final = safe_signal(z, last_good);
  result.x_final = result.z_final;
  result.y_final = result.z_final;
  return result;
}

namespace {
void put_number(std::ostream& os, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  os << buf;
}
void put_optional(std::ostream& os, const std::optional<double>& v) {
  if (v) put_number(os, *v);
}
}  // namespace

void write_trace_csv(std::ostream& os, const std::vector<TraceRecord>& trace) {
  os << "round,tau,E,G,mu,lambda,rel_error\n";
  for (const auto& row : trace) {
    os << row.round << ',' << row.tau << ',';
    put_number(os, row.objective);
    os << ',';
    put_optional(os, row.G);
    os << ',';
    put_number(os, row.alpha);
    os << ',';
    put_number(os, row.lambda);
    os << ',';
    put_optional(os, row.rel_error);
    os << '\n';
  }
}

}  // namespace phasekit
