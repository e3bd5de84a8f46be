#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace phasekit {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;

/// Raised when operands disagree on dimension.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Throws DimensionError naming `where` unless `a == b`.
void require_same_dim(Eigen::Index a, Eigen::Index b, std::string_view where);

/// A finite complex vector of fixed dimension. Immutable once built.
class Signal {
 public:
  Signal() = default;
  /// Throws std::invalid_argument on an empty vector or non-finite entries.
  explicit Signal(CVector entries);

  static Signal real(const RVector& entries);

  const CVector& entries() const noexcept { return entries_; }
  Eigen::Index dim() const noexcept { return entries_.size(); }
  double norm() const { return entries_.norm(); }

  operator const CVector&() const noexcept { return entries_; }

 private:
  CVector entries_;
};

bool all_finite(const CVector& v);

/// Seeded random stream.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Uniform and normal variates are derived here rather than through
/// <random> distributions, whose algorithms are implementation-defined, so a
/// seed reproduces the same draws on every conforming platform:
///   uniform  = (next() >> 11) * 2^-53            in [0, 1)
///   normal   = Box-Muller on (1 - u1, u2), both outputs used in order
class RngStream {
 public:
  static constexpr std::string_view kAlgorithm = "mt19937_64+bm53";

  explicit RngStream(std::uint64_t seed);

  std::uint64_t seed() const noexcept { return seed_; }
  std::string_view algorithm() const noexcept { return kAlgorithm; }

  /// Number of 64-bit words consumed so far.
  std::uint64_t draws() const noexcept { return draws_; }

  std::uint64_t next_u64();
  double uniform();
  double normal();

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::uint64_t draws_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Derives an independent child seed; used to split per-trial streams.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

enum class Field { Real, Complex };

/// n draws of N(0,1/2) + i N(0,1/2) (complex) or N(0,1) (real).
CVector sample_complex_gaussian(RngStream& rng, Eigen::Index n, Field field = Field::Complex);

/// min over |c| = 1 of ||x - c y||.
double phase_dist(const CVector& x, const CVector& y);

/// phase_dist(x_true, x_hat) / ||x_true||.
double relative_error(const CVector& x_true, const CVector& x_hat);

/// Rotates `y` by the unimodular factor that brings it closest to `x`.
CVector align_phase(const CVector& x, const CVector& y);

}  // namespace phasekit
