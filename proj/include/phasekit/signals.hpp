#pragma once

#include <filesystem>
#include <vector>

#include "phasekit/core.hpp"

namespace phasekit {

/// x[t] = sum_{k=k_min}^{k_min+M-1} c_k exp(2 pi i (k-1)(t-1) / d) for t = 1..d,
/// stored 0-based. Mode k lands on DFT bin (k-1) mod d.
Signal fourier_series_signal(const CVector& coefficients, long k_min, Eigen::Index d);

/// Low-pass signal with M = d/8 modes, k = -(M/2-1)..M/2, standard normal
/// real and imaginary coefficients. Requires d divisible by 8.
Signal random_lowpass(Eigen::Index d, RngStream& rng);

/// Full-band signal with d modes, k = -(d/2-1)..d/2, coefficients with real and
/// imaginary parts i.i.d. N(0, 1/8). Requires d even.
Signal random_gaussian_signal(Eigen::Index d, RngStream& rng);

/// Number of modes and lowest mode index used by random_lowpass for dimension d.
struct ModeBand {
  long count;
  long k_min;
};
ModeBand lowpass_band(Eigen::Index d);

/// Image as 1 (gray) or 3 (RGB) real channels, row-major, values in [0, 1].
struct ImageChannels {
  int width = 0;
  int height = 0;
  std::vector<RVector> channels;

  Eigen::Index pixels() const { return static_cast<Eigen::Index>(width) * height; }
};

class ImageFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reads binary PGM (P5) or PPM (P6) with maxval 255.
ImageChannels load_image(const std::filesystem::path& path);

/// Writes P5 for one channel, P6 for three. Values are clamped to [0, 1] and
/// rounded to the nearest of 256 levels.
void save_image(const ImageChannels& image, const std::filesystem::path& path);

}  // namespace phasekit
