#include "nase/stft.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>
#include <vector>

#include "nase/error.hpp"

namespace nase {

namespace {

constexpr double kPi = std::numbers::pi;

// Overlap-add sum of the window over all integer hop shifts, evaluated at
// offsets [0, hop). Constant iff the pair satisfies COLA.
Eigen::VectorXd cola_sums(const Eigen::VectorXd& window, int hop) {
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(hop);
  for (int n = 0; n < hop; ++n) {
    for (Eigen::Index k = n; k < window.size(); k += hop) sums[n] += window[k];
  }
  return sums;
}

void check_same_shape(Eigen::Index rows_a, Eigen::Index cols_a, Eigen::Index rows_b,
                      Eigen::Index cols_b, const char* what) {
  if (rows_a != rows_b || cols_a != cols_b) {
    throw ShapeError(std::string(what) + ": shape mismatch (" + std::to_string(rows_a) +
                     "x" + std::to_string(cols_a) + " vs " + std::to_string(rows_b) + "x" +
                     std::to_string(cols_b) + ")");
  }
}

}  // namespace

void validate_stft_params(const StftParams& params) {
  if (params.frame_len < 2 || params.frame_len % 2 != 0) {
    throw ConfigError("frame_len must be even and >= 2, got " +
                      std::to_string(params.frame_len));
  }
  if (params.hop <= 0 || params.hop > params.frame_len) {
    throw ConfigError("hop must satisfy 0 < hop <= frame_len, got " +
                      std::to_string(params.hop));
  }
  const Eigen::VectorXd sums = cola_sums(make_window(params), params.hop);
  const double mean = sums.mean();
  const double deviation = (sums.array() - mean).abs().maxCoeff();
  if (!(mean > 0.0) || deviation > 1e-10 * mean) {
    throw ConfigError("window/hop pair is not constant-overlap-add (relative deviation " +
                      std::to_string(deviation / (mean > 0 ? mean : 1.0)) + ")");
  }
}

Eigen::VectorXd make_window(const StftParams& params) {
  Eigen::VectorXd w(params.frame_len);
  switch (params.window) {
    case StftParams::Window::kHann:
      for (int n = 0; n < params.frame_len; ++n) {
        w[n] = 0.5 * (1.0 - std::cos(2.0 * kPi * (n + 0.5) / params.frame_len));
      }
      break;
    case StftParams::Window::kRect:
      w.setOnes();
      break;
  }
  return w;
}

Spectrogram stft(const AudioBuffer& buf, const StftParams& params) {
  validate_stft_params(params);
  validate_audio(buf, "stft");

  const Eigen::Index len = buf.samples.size();
  const int frame_len = params.frame_len;
  const int hop = params.hop;
  const Eigen::Index num_frames =
      std::max<Eigen::Index>(1, (len + hop - 1) / hop);  // tail zero-padded
  const Eigen::Index padded = (num_frames - 1) * hop + frame_len;

  Eigen::VectorXd padded_samples = Eigen::VectorXd::Zero(padded);
  padded_samples.head(len) = buf.samples;

  const Eigen::VectorXd window = make_window(params);

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);

  Spectrogram spec;
  spec.params = params;
  spec.origin_len = len;
  spec.sample_rate_hz = buf.sample_rate_hz;
  spec.frames.resize(params.num_bins(), num_frames);

  std::vector<double> frame(frame_len);
  std::vector<std::complex<double>> bins;
  for (Eigen::Index t = 0; t < num_frames; ++t) {
    Eigen::Map<Eigen::VectorXd>(frame.data(), frame_len) =
        padded_samples.segment(t * hop, frame_len).cwiseProduct(window);
    fft.fwd(bins, frame);
    spec.frames.col(t) =
        Eigen::Map<const Eigen::VectorXcd>(bins.data(), params.num_bins());
  }
  return spec;
}

AudioBuffer istft(const Spectrogram& spec, const StftParams& params) {
  if (!(spec.params == params)) {
    throw ShapeError("istft: spectrogram was produced with different parameters");
  }
  validate_stft_params(params);
  if (spec.frames.rows() != params.num_bins() || spec.frames.cols() < 1) {
    throw ShapeError("istft: spectrogram shape does not match parameters");
  }
  if (!spec.frames.allFinite()) {
    throw DomainError("istft: spectrogram contains non-finite values");
  }

  const int frame_len = params.frame_len;
  const int hop = params.hop;
  const Eigen::Index num_frames = spec.frames.cols();
  const Eigen::Index padded = (num_frames - 1) * hop + frame_len;

  const Eigen::VectorXd window = make_window(params);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(padded);
  Eigen::VectorXd norm = Eigen::VectorXd::Zero(padded);

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);

  std::vector<std::complex<double>> bins(params.num_bins());
  std::vector<double> frame(frame_len);
  for (Eigen::Index t = 0; t < num_frames; ++t) {
    Eigen::Map<Eigen::VectorXcd>(bins.data(), params.num_bins()) = spec.frames.col(t);
    fft.inv(frame, bins, frame_len);
    acc.segment(t * hop, frame_len) +=
        Eigen::Map<const Eigen::VectorXd>(frame.data(), frame_len);
    norm.segment(t * hop, frame_len) += window;
  }

  const Eigen::Index out_len =
      spec.origin_len > 0 ? std::min(spec.origin_len, padded) : padded;
  AudioBuffer out;
  out.sample_rate_hz = spec.sample_rate_hz;
  out.samples.resize(out_len);
  for (Eigen::Index n = 0; n < out_len; ++n) {
    out.samples[n] = norm[n] > 1e-12 ? acc[n] / norm[n] : 0.0;
  }
  return out;
}

std::pair<MagnitudeGrid, PhaseGrid> split(const Spectrogram& spec) {
  MagnitudeGrid mag;
  PhaseGrid phase;
  mag.params = phase.params = spec.params;
  mag.origin_len = phase.origin_len = spec.origin_len;
  mag.sample_rate_hz = phase.sample_rate_hz = spec.sample_rate_hz;
  mag.mags = spec.frames.cwiseAbs();
  phase.phases.resize(spec.frames.rows(), spec.frames.cols());
  for (Eigen::Index t = 0; t < spec.frames.cols(); ++t) {
    for (Eigen::Index k = 0; k < spec.frames.rows(); ++k) {
      const std::complex<double> c = spec.frames(k, t);
      double p = (c == std::complex<double>(0.0, 0.0)) ? 0.0 : std::arg(c);
      if (p <= -kPi) p = kPi;  // keep phases in (-pi, pi]
      phase.phases(k, t) = p;
    }
  }
  return {std::move(mag), std::move(phase)};
}

Spectrogram mix(const MagnitudeGrid& mag, const PhaseGrid& phase) {
  check_same_shape(mag.mags.rows(), mag.mags.cols(), phase.phases.rows(),
                   phase.phases.cols(), "mix");
  if (!(mag.params == phase.params)) {
    throw ShapeError("mix: magnitude and phase carry different parameters");
  }
  Spectrogram spec;
  spec.params = mag.params;
  spec.origin_len = mag.origin_len;
  spec.sample_rate_hz = mag.sample_rate_hz;
  spec.frames = mag.mags.binaryExpr(phase.phases, [](double m, double p) {
    return std::polar(m, p);
  });
  return spec;
}

namespace {

template <typename Grid, typename Field>
Grid delay_grid(const Grid& grid, int frames, Field field) {
  if (frames < 0) throw DomainError("delay: frame count must be >= 0");
  Grid out = grid;
  auto& data = out.*field;
  const Eigen::Index cols = data.cols();
  const Eigen::Index d = std::min<Eigen::Index>(frames, cols);
  if (d > 0) {
    for (Eigen::Index t = cols - 1; t >= d; --t) data.col(t) = data.col(t - d);
    data.leftCols(d).setZero();
  }
  return out;
}

}  // namespace

MagnitudeGrid delay(const MagnitudeGrid& grid, int frames) {
  return delay_grid(grid, frames, &MagnitudeGrid::mags);
}

PhaseGrid delay(const PhaseGrid& grid, int frames) {
  return delay_grid(grid, frames, &PhaseGrid::phases);
}

void spg1_save(const Eigen::MatrixXd& grid, const std::string& path) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot open for writing: " + path);
  file.write("SPG1", 4);
  const uint32_t num_frames = static_cast<uint32_t>(grid.cols());
  const uint32_t num_bins = static_cast<uint32_t>(grid.rows());
  file.write(reinterpret_cast<const char*>(&num_frames), sizeof(num_frames));
  file.write(reinterpret_cast<const char*>(&num_bins), sizeof(num_bins));
  // column-major dump: one contiguous frame after another
  file.write(reinterpret_cast<const char*>(grid.data()),
             static_cast<std::streamsize>(sizeof(double) * grid.size()));
  if (!file.good()) throw IoError("write failed: " + path);
}

Eigen::MatrixXd spg1_load(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open: " + path);
  char magic[4];
  file.read(magic, 4);
  if (!file.good() || std::string_view(magic, 4) != "SPG1") {
    throw FormatError("not an SPG1 container: " + path);
  }
  uint32_t num_frames = 0, num_bins = 0;
  file.read(reinterpret_cast<char*>(&num_frames), sizeof(num_frames));
  file.read(reinterpret_cast<char*>(&num_bins), sizeof(num_bins));
  if (!file.good() || num_frames == 0 || num_bins == 0) {
    throw FormatError("bad SPG1 dimensions: " + path);
  }
  Eigen::MatrixXd grid(num_bins, num_frames);
  file.read(reinterpret_cast<char*>(grid.data()),
            static_cast<std::streamsize>(sizeof(double) * grid.size()));
  if (static_cast<size_t>(file.gcount()) != sizeof(double) * grid.size()) {
    throw FormatError("truncated SPG1 container: " + path);
  }
  return grid;
}

}  // namespace nase
