#include "nase/metrics.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

#include "nase/error.hpp"

namespace nase {

double snr_db(const AudioBuffer& reference, const AudioBuffer& test) {
  if (reference.samples.size() != test.samples.size()) {
    throw ShapeError("snr_db: buffers differ in length (" +
                     std::to_string(reference.samples.size()) + " vs " +
                     std::to_string(test.samples.size()) + ")");
  }
  const double signal_energy = reference.samples.squaredNorm();
  if (!(signal_energy > 0.0)) {
    throw DegenerateSignalError("snr_db: reference has zero energy");
  }
  const double error_energy = (test.samples - reference.samples).squaredNorm();
  if (error_energy == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(signal_energy / error_energy);
}

namespace {

// Magnitude of the spectral peak closest to the nominal bin, refined with a
// parabolic fit through the peak and its neighbours.
double peak_magnitude(const std::vector<std::complex<double>>& bins, double nominal_bin) {
  const long last = static_cast<long>(bins.size()) - 1;
  long k0 = std::lround(nominal_bin);
  k0 = std::clamp(k0, 0L, last);
  // hunt for the local maximum in a small neighbourhood
  for (long k = std::max(0L, k0 - 2); k <= std::min(last, k0 + 2); ++k) {
    if (std::abs(bins[k]) > std::abs(bins[k0])) k0 = k;
  }
  if (k0 == 0 || k0 == last) return std::abs(bins[k0]);
  const double y0 = std::abs(bins[k0 - 1]);
  const double y1 = std::abs(bins[k0]);
  const double y2 = std::abs(bins[k0 + 1]);
  const double denom = y0 - 2.0 * y1 + y2;
  if (std::abs(denom) < 1e-30) return y1;
  const double offset = 0.5 * (y0 - y2) / denom;
  return y1 - 0.25 * (y0 - y2) * offset;
}

}  // namespace

double thd(const AudioBuffer& buf, double fundamental_hz) {
  validate_audio(buf, "thd");
  const double nyquist = buf.sample_rate_hz / 2.0;
  if (!(fundamental_hz > 0.0) || 2.0 * fundamental_hz >= nyquist) {
    throw DomainError("thd: fundamental and its 2nd harmonic must lie below Nyquist");
  }

  const Eigen::Index len = buf.samples.size();
  std::vector<double> windowed(len);
  for (Eigen::Index n = 0; n < len; ++n) {
    const double w = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * n / len));
    windowed[n] = w * buf.samples[n];
  }

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<std::complex<double>> bins;
  fft.fwd(bins, windowed);

  const double bin_per_hz = static_cast<double>(len) / buf.sample_rate_hz;
  const double fundamental_amp = peak_magnitude(bins, fundamental_hz * bin_per_hz);
  if (fundamental_amp < 1e-12) {
    throw DegenerateSignalError("thd: fundamental magnitude below 1e-12");
  }

  const int max_harmonic = static_cast<int>(std::floor(nyquist / fundamental_hz));
  double harmonic_energy = 0.0;
  for (int h = 2; h <= max_harmonic; ++h) {
    const double amp = peak_magnitude(bins, h * fundamental_hz * bin_per_hz);
    harmonic_energy += amp * amp;
  }
  return std::sqrt(harmonic_energy) / fundamental_amp;
}

}  // namespace nase
