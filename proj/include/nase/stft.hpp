#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>

#include "nase/audio.hpp"

namespace nase {

// Analysis/synthesis parameters. The Hann window here is the half-sample
// offset variant w[n] = 0.5*(1 - cos(2*pi*(n+0.5)/frame_len)): it satisfies
// constant overlap-add exactly whenever hop divides frame_len and is strictly
// positive, so weighted overlap-add reconstructs every sample including the
// frame edges.
struct StftParams {
  enum class Window { kHann, kRect };

  int frame_len = 512;
  int hop = 128;
  Window window = Window::kHann;

  int num_bins() const { return frame_len / 2 + 1; }
  bool operator==(const StftParams&) const = default;
};

// Throws ConfigError unless frame_len is even and >= 2, 0 < hop <= frame_len,
// and the window/hop pair overlap-adds to a constant within 1e-10 relative
// deviation.
void validate_stft_params(const StftParams& params);

// Analysis window as a frame_len vector.
Eigen::VectorXd make_window(const StftParams& params);

// Grids are stored bins-by-frames: column t is frame t, so num_bins() rows
// and num_frames() columns. origin_len is the pre-padding signal length that
// istft truncates back to.
struct Spectrogram {
  Eigen::MatrixXcd frames;  // num_bins x num_frames
  StftParams params;
  Eigen::Index origin_len = 0;
  int sample_rate_hz = 16000;

  Eigen::Index num_bins() const { return frames.rows(); }
  Eigen::Index num_frames() const { return frames.cols(); }
};

struct MagnitudeGrid {
  Eigen::MatrixXd mags;  // num_bins x num_frames, entries >= 0
  StftParams params;
  Eigen::Index origin_len = 0;
  int sample_rate_hz = 16000;

  Eigen::Index num_bins() const { return mags.rows(); }
  Eigen::Index num_frames() const { return mags.cols(); }
};

struct PhaseGrid {
  Eigen::MatrixXd phases;  // num_bins x num_frames, entries in (-pi, pi]
  StftParams params;
  Eigen::Index origin_len = 0;
  int sample_rate_hz = 16000;

  Eigen::Index num_bins() const { return phases.rows(); }
  Eigen::Index num_frames() const { return phases.cols(); }
};

// Short-time Fourier transform. Frame t covers samples [t*hop, t*hop +
// frame_len); the input is zero-padded at the tail so ceil(len/hop) frames
// cover the whole signal (at least one frame for short inputs).
Spectrogram stft(const AudioBuffer& buf, const StftParams& params);

// Weighted overlap-add synthesis, truncated to origin_len. Exact inverse of
// stft for unmodified spectrograms. Throws ShapeError when `params` does not
// match the ones stored in `spec`.
AudioBuffer istft(const Spectrogram& spec, const StftParams& params);

// Polar split. The phase of a zero coefficient is defined as 0.
std::pair<MagnitudeGrid, PhaseGrid> split(const Spectrogram& spec);

// Recombination: frames[k][t] = mags[k][t] * exp(i*phases[k][t]).
// Throws ShapeError on shape or parameter mismatch.
Spectrogram mix(const MagnitudeGrid& mag, const PhaseGrid& phase);

// Shifts a grid `frames` columns later, zero-filling the head; the number of
// frames is preserved.
MagnitudeGrid delay(const MagnitudeGrid& grid, int frames);
PhaseGrid delay(const PhaseGrid& grid, int frames);

// Binary container for real-valued grids: magic "SPG1", then num_frames and
// num_bins as little-endian uint32, then 64-bit little-endian floats, frame
// by frame.
void spg1_save(const Eigen::MatrixXd& grid, const std::string& path);
Eigen::MatrixXd spg1_load(const std::string& path);

}  // namespace nase
