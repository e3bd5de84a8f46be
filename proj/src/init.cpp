#include "phasekit/init.hpp"

#include <cmath>

namespace phasekit {

CVector apply_Y(const Ensemble& e, const RVector& b, const CVector& v) {
  require_same_dim(b.size(), e.count(), "apply_Y");
  require_same_dim(v.size(), e.dim(), "apply_Y");
  return adjoint(e, b.cast<Complex>().cwiseProduct(forward(e, v))) / static_cast<double>(e.count());
}

double init_scale(const Ensemble& e, const RVector& b) {
  require_same_dim(b.size(), e.count(), "init_scale");
  return std::sqrt(static_cast<double>(e.dim()) * b.sum() / e.frame_energy());
}

InitResult spectral_init(const Ensemble& e, const RVector& b, int iters, RngStream& rng) {
  if (iters < 1) throw std::invalid_argument("spectral_init: iters must be >= 1");
  require_same_dim(b.size(), e.count(), "spectral_init");
  if (!(b.array() > 0.0).any()) throw std::invalid_argument("spectral_init: measurements are all zero");

  CVector v = sample_complex_gaussian(rng, e.dim(), Field::Complex);
  v.normalize();
  InitResult out;
  out.rayleigh_trace.reserve(static_cast<std::size_t>(iters));
  for (int it = 0; it < iters; ++it) {
    const CVector w = apply_Y(e, b, v);
    out.rayleigh_trace.push_back(v.dot(w).real());
    const double wn = w.norm();
    if (wn == 0.0) break;  // start orthogonal to range(Y); keep v
    v = w / wn;
    out.power_iterations_used = it + 1;
  }
  out.theta = init_scale(e, b);
  out.z0 = Signal(out.theta * v);
  return out;
}

}  // namespace phasekit
