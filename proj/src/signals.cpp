#include "phasekit/signals.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "phasekit/measurement.hpp"

namespace phasekit {

Signal fourier_series_signal(const CVector& coefficients, long k_min, Eigen::Index d) {
  if (d < 1) throw std::invalid_argument("fourier_series_signal: d must be positive");
  if (coefficients.size() > d) throw std::invalid_argument("fourier_series_signal: more modes than samples");
  CVector spectrum = CVector::Zero(d);
  for (Eigen::Index i = 0; i < coefficients.size(); ++i) {
    const long k = k_min + static_cast<long>(i);
    const long bin = ((k - 1) % d + d) % d;
    spectrum[bin] += coefficients[i];
  }
  return Signal(dft(spectrum, /*inverse=*/true));
}

ModeBand lowpass_band(Eigen::Index d) {
  if (d < 8 || d % 8 != 0) throw std::invalid_argument("random_lowpass: d must be a positive multiple of 8");
  const long m = static_cast<long>(d / 8);
  // Upper mode is M/2; the band holds M consecutive modes ending there.
  return {m, m / 2 - m + 1};
}

namespace {
CVector draw_coefficients(RngStream& rng, long count, double sd) {
  CVector c(count);
  for (long k = 0; k < count; ++k) {
    const double re = rng.normal();
    const double im = rng.normal();
    c[k] = Complex(sd * re, sd * im);
  }
  return c;
}
}  // namespace

Signal random_lowpass(Eigen::Index d, RngStream& rng) {
  const ModeBand band = lowpass_band(d);
  return fourier_series_signal(draw_coefficients(rng, band.count, 1.0), band.k_min, d);
}

Signal random_gaussian_signal(Eigen::Index d, RngStream& rng) {
  if (d < 2 || d % 2 != 0) throw std::invalid_argument("random_gaussian_signal: d must be even");
  const long half = static_cast<long>(d / 2);
  return fourier_series_signal(draw_coefficients(rng, static_cast<long>(d), std::sqrt(0.125)),
                               -(half - 1), d);
}

namespace {

// Skips whitespace and '#' comments between header fields.
void skip_header_space(const std::string& data, std::size_t& pos) {
  while (pos < data.size()) {
    const char c = data[pos];
    if (c == '#') {
      while (pos < data.size() && data[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
    } else {
      break;
    }
  }
}

long read_header_int(const std::string& data, std::size_t& pos, const char* what) {
  skip_header_space(data, pos);
  const std::size_t start = pos;
  while (pos < data.size() && std::isdigit(static_cast<unsigned char>(data[pos]))) ++pos;
  if (start == pos) throw ImageFormatError(std::string("image header: missing ") + what);
  return std::stol(data.substr(start, pos - start));
}

}  // namespace

ImageChannels load_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageFormatError("cannot open image '" + path.string() + "'");
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (data.size() < 2 || data[0] != 'P' || (data[1] != '5' && data[1] != '6')) {
    throw ImageFormatError("unsupported image format (expected binary PGM P5 or PPM P6)");
  }
  const int nchan = data[1] == '5' ? 1 : 3;
  std::size_t pos = 2;
  const long width = read_header_int(data, pos, "width");
  const long height = read_header_int(data, pos, "height");
  const long maxval = read_header_int(data, pos, "maxval");
  if (width <= 0 || height <= 0) throw ImageFormatError("image has zero dimensions");
  if (maxval != 255) throw ImageFormatError("only maxval 255 is supported");
  if (pos >= data.size() || !std::isspace(static_cast<unsigned char>(data[pos]))) {
    throw ImageFormatError("image header: missing raster separator");
  }
  ++pos;
  const std::size_t npix = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (data.size() - pos < npix * nchan) throw ImageFormatError("image raster is truncated");

  ImageChannels img;
  img.width = static_cast<int>(width);
  img.height = static_cast<int>(height);
  img.channels.assign(nchan, RVector(static_cast<Eigen::Index>(npix)));
  for (std::size_t i = 0; i < npix; ++i) {
    for (int c = 0; c < nchan; ++c) {
      const auto byte = static_cast<unsigned char>(data[pos + i * nchan + c]);
      img.channels[c][static_cast<Eigen::Index>(i)] = byte / 255.0;
    }
  }
  return img;
}

void save_image(const ImageChannels& image, const std::filesystem::path& path) {
  const auto nchan = image.channels.size();
  if (nchan != 1 && nchan != 3) throw ImageFormatError("save_image: need 1 or 3 channels");
  if (image.width <= 0 || image.height <= 0) throw ImageFormatError("save_image: zero dimensions");
  for (const auto& ch : image.channels) require_same_dim(ch.size(), image.pixels(), "save_image");

  std::ofstream out(path, std::ios::binary);
  if (!out) throw ImageFormatError("cannot write image '" + path.string() + "'");
  out << (nchan == 1 ? "P5" : "P6") << '\n' << image.width << ' ' << image.height << "\n255\n";
  std::string raster(static_cast<std::size_t>(image.pixels()) * nchan, '\0');
  for (Eigen::Index i = 0; i < image.pixels(); ++i) {
    for (std::size_t c = 0; c < nchan; ++c) {
      const double v = std::clamp(image.channels[c][i], 0.0, 1.0);
      raster[static_cast<std::size_t>(i) * nchan + c] = static_cast<char>(std::lround(v * 255.0));
    }
  }
  out.write(raster.data(), static_cast<std::streamsize>(raster.size()));
}

}  // namespace phasekit
