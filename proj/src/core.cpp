#include "phasekit/core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace phasekit {

void require_same_dim(Eigen::Index a, Eigen::Index b, std::string_view where) {
  if (a != b) {
    throw DimensionError(std::string(where) + ": dimension mismatch (" + std::to_string(a) +
                         " vs " + std::to_string(b) + ")");
  }
}

bool all_finite(const CVector& v) {
  return std::all_of(v.data(), v.data() + v.size(),
                     [](const Complex& c) { return std::isfinite(c.real()) && std::isfinite(c.imag()); });
}

Signal::Signal(CVector entries) : entries_(std::move(entries)) {
  if (entries_.size() == 0) throw std::invalid_argument("Signal: dimension must be positive");
  if (!all_finite(entries_)) throw std::invalid_argument("Signal: entries must be finite");
}

Signal Signal::real(const RVector& entries) { return Signal(entries.cast<Complex>()); }

RngStream::RngStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

std::uint64_t RngStream::next_u64() {
  ++draws_;
  return engine_();
}

double RngStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

namespace {
std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(splitmix64(base) ^ a) ^ (b * 0xd1342543de82ef95ULL));
}

CVector sample_complex_gaussian(RngStream& rng, Eigen::Index n, Field field) {
  if (n < 1) throw std::invalid_argument("sample_complex_gaussian: n must be >= 1");
  CVector out(n);
  if (field == Field::Real) {
    for (Eigen::Index i = 0; i < n; ++i) out[i] = Complex(rng.normal(), 0.0);
  } else {
    const double s = std::sqrt(0.5);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double re = rng.normal();
      const double im = rng.normal();
      out[i] = Complex(s * re, s * im);
    }
  }
  return out;
}

double phase_dist(const CVector& x, const CVector& y) {
  require_same_dim(x.size(), y.size(), "phase_dist");
  // Equals sqrt(max(0, |x|^2 + |y|^2 - 2 |<x,y>|)); the explicit difference avoids
  // the cancellation that caps the closed form near 1e-8 relative accuracy.
  return (x - align_phase(x, y)).norm();
}

double relative_error(const CVector& x_true, const CVector& x_hat) {
  const double n = x_true.norm();
  if (n == 0.0) throw std::invalid_argument("relative_error: reference signal is zero");
  return phase_dist(x_true, x_hat) / n;
}

CVector align_phase(const CVector& x, const CVector& y) {
  require_same_dim(x.size(), y.size(), "align_phase");
  const Complex ip = y.dot(x);  // y* x
  const double mag = std::abs(ip);
  if (mag == 0.0) return y;
  return y * (ip / mag);
}

}  // namespace phasekit
