#pragma once

#include <vector>

#include "phasekit/core.hpp"
#include "phasekit/measurement.hpp"

namespace phasekit {

struct InitResult {
  Signal z0;
  double theta = 0.0;
  int power_iterations_used = 0;
  /// Rayleigh quotient v^* Y v of the unit iterate entering each power step.
  std::vector<double> rayleigh_trace;
};

/// Y v with Y = (1/N) sum_n b_n f_n f_n^*, applied matrix-free.
CVector apply_Y(const Ensemble& e, const RVector& b, const CVector& v);

/// theta^2 = d * sum_n b_n / sum_n ||f_n||^2.
double init_scale(const Ensemble& e, const RVector& b);

/// Spectral initialization: power iteration on Y from a random complex Gaussian
/// start drawn from `rng`, scaled to norm theta. Throws on all-zero b.
InitResult spectral_init(const Ensemble& e, const RVector& b, int iters, RngStream& rng);

inline constexpr int kDefaultPowerIterations = 50;

}  // namespace phasekit
