#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "phasekit/core.hpp"
#include "phasekit/measurement.hpp"
#include "phasekit/objective.hpp"

namespace phasekit {

enum class StepScaling { ByThetaSquared, Raw };

/// min(1 - exp(-tau / tau0), mu_max), tau >= 1.
double step_schedule(long tau, double tau0, double mu_max);

/// lambda0 * exp(-xi * tau), tau >= 1.
double lambda_schedule(long tau, double lambda0, double xi);

struct Schedules {
  double tau0 = 330.0;
  double mu_max = 0.4;
  double lambda0 = 0.0;
  double xi = 0.0;
  StepScaling step_scaling = StepScaling::ByThetaSquared;

  double mu(long tau) const { return step_schedule(tau, tau0, mu_max); }
  double lambda(long tau) const { return lambda_schedule(tau, lambda0, xi); }
  void validate() const;

  /// Step mu_max and penalty lambda0 at every round.
  static Schedules constant(double step, double lambda, StepScaling scaling = StepScaling::Raw);
};

enum class StepMode { FixedSchedule, ExactLineSearch };

struct SolverConfig {
  /// Alternating: one round is an x-update followed by a y-update.
  /// Wirtinger flow: one round is one gradient step.
  int max_rounds = 1250;
  StepMode mode = StepMode::FixedSchedule;
  Schedules schedules;
  /// Stop once the relative error (truth known) or the gradient norm (truth
  /// unknown) drops to this value. Unset runs the full budget.
  std::optional<double> stop_tolerance;
  std::uint64_t seed = 0;
  /// Also evaluate G at the estimate each round (costs one forward product).
  bool record_G = false;

  void validate() const;
};

struct TraceRecord {
  int round = 0;
  long tau = 0;  // cumulative single-variable iterations: 2 per alternating round
  double objective = 0.0;  // E for alternating, G for Wirtinger flow
  std::optional<double> G;
  double alpha = 0.0;
  double beta = 0.0;
  double lambda = 0.0;
  double grad_norm = 0.0;
  std::optional<double> rel_error;
};

enum class SolveStatus { BudgetExhausted, Converged, Diverged };

std::string to_string(SolveStatus status);

struct SolveResult {
  Signal x_final;
  Signal y_final;
  Signal z_final;  // (x + y) / 2
  /// Row 0 is the starting point; row k follows round k.
  std::vector<TraceRecord> trace;
  SolveStatus status = SolveStatus::BudgetExhausted;
  bool converged = false;
  int rounds_used = 0;
  double theta_squared = 0.0;
  std::vector<std::string> warnings;
};

/// x+ = x - alpha gx(x, y); y+ = y - beta gy(x+, y).
SplitPoint altmin_step(const Ensemble& e, const RVector& b, const SplitPoint& state, double alpha,
                       double beta, double lambda);

/// Alternating gradient descent on E from x = y = z0.
///
/// Fixed-schedule mode steps along d E / d(conj x) = gx / 2 with step mu_tau / s,
/// i.e. alpha = beta = mu_tau / (2 s), and lambda = lambda_tau, with tau the round
/// index and s = theta^2 (or 1 for raw scaling). Exact line search
/// takes alpha = ||gx||^2 / (2 quad_form_x(y, gx, lambda)), and beta likewise,
/// which minimizes E exactly along each block gradient.
SolveResult altmin_solve(const Ensemble& e, const RVector& b, const CVector& z0, const SolverConfig& cfg,
                         const std::optional<CVector>& truth = std::nullopt);

/// Wirtinger flow: z+ = z - (mu_tau / s) * grad_G(z) / 4.
///
/// The 1/4 puts grad_G into the reference normalization of the WF method, whose
/// gradient is of (1/2N) sum (|f_n^* z|^2 - b_n)^2 taken as d/d(conj z). Only the
/// fixed-schedule mode is supported.
SolveResult wf_solve(const Ensemble& e, const RVector& b, const CVector& z0, const SolverConfig& cfg,
                     const std::optional<CVector>& truth = std::nullopt);

inline constexpr double kWfGradientNormalization = 0.25;
inline constexpr double kAltGradientNormalization = 0.5;

/// Header: round,tau,E,G,mu,lambda,rel_error. Empty cells for absent values.
void write_trace_csv(std::ostream& os, const std::vector<TraceRecord>& trace);

}  // namespace phasekit
