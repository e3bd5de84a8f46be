#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "phasekit/core.hpp"

namespace phasekit {

enum class EnsembleKind { GaussianComplex, GaussianReal, CDP, Explicit };

std::string to_string(EnsembleKind kind);
EnsembleKind ensemble_kind_from_string(const std::string& name);

/// Recipe that regenerates an ensemble from its seed.
///
/// Text form is a single line of space separated key=value pairs:
///   kind=gaussian_complex d=128 N=576 seed=42
///   kind=cdp d=128 L=6 seed=42
struct EnsembleSpec {
  EnsembleKind kind = EnsembleKind::GaussianComplex;
  Eigen::Index d = 0;
  Eigen::Index count = 0;  // N for Gaussian kinds, L for CDP
  std::uint64_t seed = 0;

  std::string to_text() const;
  static EnsembleSpec parse(const std::string& text);

  bool operator==(const EnsembleSpec&) const = default;
};

namespace detail {
struct FftPlans;
}

/// A measurement frame f_1..f_N in C^d. Immutable and safe to share between threads.
///
/// Dense kinds hold F = [f_1 ... f_N] as a d x N matrix. The CDP kind holds L masks
/// g_p and represents a_{p,q} = G_p f_q, with f_q^* the q-th row of the unnormalized
/// DFT matrix, ordered mask-major: n = p * d + q.
class Ensemble {
 public:
  /// Wraps an explicit frame matrix (columns are frame vectors).
  static Ensemble from_matrix(CMatrix frame);
  /// Wraps a list of CDP masks of equal length.
  static Ensemble from_masks(std::vector<CVector> masks);

  EnsembleKind kind() const noexcept { return kind_; }
  Eigen::Index dim() const noexcept { return d_; }
  Eigen::Index count() const noexcept { return n_; }
  Eigen::Index mask_count() const noexcept { return static_cast<Eigen::Index>(masks_.size()); }
  bool is_cdp() const noexcept { return kind_ == EnsembleKind::CDP; }
  /// True when every frame vector is real, so real signals stay real.
  bool is_real() const noexcept { return real_; }

  const CMatrix& frame() const;
  const std::vector<CVector>& masks() const;

  /// rank(F) < d; solvers warn since the split objective is then not coercive.
  bool rank_deficient() const noexcept { return rank_deficient_; }

  /// sum_n ||f_n||^2, computed from the stored payload.
  double frame_energy() const noexcept { return frame_energy_; }

  /// Set only when the ensemble was drawn from a fresh RngStream, so that
  /// build_ensemble(*spec()) reproduces it exactly.
  const std::optional<EnsembleSpec>& spec() const noexcept { return spec_; }

  /// Builds the d x N matrix of frame vectors. Intended for small checks.
  CMatrix materialize() const;

 private:
  friend Ensemble gaussian_ensemble(Eigen::Index, Eigen::Index, Field, RngStream&);
  friend Ensemble cdp_ensemble(Eigen::Index, Eigen::Index, RngStream&);
  friend CVector forward(const Ensemble&, const CVector&);
  friend CVector adjoint(const Ensemble&, const CVector&);

  Ensemble() = default;
  void finalize();

  EnsembleKind kind_ = EnsembleKind::Explicit;
  Eigen::Index d_ = 0;
  Eigen::Index n_ = 0;
  bool real_ = false;
  bool rank_deficient_ = false;
  double frame_energy_ = 0.0;
  CMatrix frame_;
  std::vector<CVector> masks_;
  std::shared_ptr<const detail::FftPlans> fft_;
  std::optional<EnsembleSpec> spec_;
};

/// Measurement intensities b_n >= 0.
class MeasurementData {
 public:
  MeasurementData() = default;
  /// Throws std::invalid_argument on negative or non-finite entries.
  explicit MeasurementData(RVector values);

  const RVector& values() const noexcept { return b_; }
  Eigen::Index size() const noexcept { return b_.size(); }
  double sum() const { return b_.sum(); }

  operator const RVector&() const noexcept { return b_; }

 private:
  RVector b_;
};

/// N i.i.d. columns: N(0,I/2) + i N(0,I/2) (complex) or N(0,I) (real).
Ensemble gaussian_ensemble(Eigen::Index d, Eigen::Index n, Field field, RngStream& rng);

/// L masks with i.i.d. entries: +-sqrt(2)/2, +-i sqrt(2)/2 w.p. 1/5 each,
/// +-sqrt(3), +-i sqrt(3) w.p. 1/20 each.
Ensemble cdp_ensemble(Eigen::Index d, Eigen::Index masks, RngStream& rng);

/// Draws one mask entry from the CDP atom distribution.
Complex draw_cdp_atom(RngStream& rng);

/// Rebuilds the ensemble described by `spec`.
Ensemble build_ensemble(const EnsembleSpec& spec);

/// Entry n is f_n^* v.
CVector forward(const Ensemble& e, const CVector& v);

/// sum_n w_n f_n.
CVector adjoint(const Ensemble& e, const CVector& w);

/// Optional additive noise on intensities; results are clamped at zero.
struct IntensityNoise {
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

/// b_n = |f_n^* x|^2, optionally perturbed by N(0, sigma^2) noise.
MeasurementData measure(const Ensemble& e, const CVector& x,
                        const std::optional<IntensityNoise>& noise = std::nullopt);

/// Unnormalized DFT with kernel exp(-2 pi i q t / n), or exp(+2 pi i q t / n) when
/// `inverse` is set (no 1/n factor in either direction).
CVector dft(const CVector& v, bool inverse = false);

/// Largest eigenvalue of F F^* by power iteration on v -> adjoint(forward(v)).
double upper_frame_bound(const Ensemble& e, double rel_tol = 1e-10, int max_iter = 20000);

/// Top eigenpair of F F^*, power iteration from a fixed seeded start.
struct FrameBoundEstimate {
  double bound = 0.0;
  CVector eigenvector;
  int iterations = 0;
};
FrameBoundEstimate estimate_frame_bound(const Ensemble& e, double rel_tol = 1e-10,
                                        int max_iter = 20000);

}  // namespace phasekit
