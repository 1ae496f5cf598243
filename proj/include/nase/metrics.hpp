#pragma once

#include "nase/audio.hpp"

namespace nase {

// Time-domain signal-to-noise ratio in dB over the full clip:
// 10*log10(sum(ref^2) / sum((test-ref)^2)). Returns +infinity when test
// equals ref exactly. Throws ShapeError on length mismatch and
// DegenerateSignalError when the reference has zero energy.
double snr_db(const AudioBuffer& reference, const AudioBuffer& test);

// Total harmonic distortion as a ratio: sqrt(sum A_h^2, h=2..H) / A_1 with
// H = floor(nyquist / fundamental). Harmonic amplitudes come from one
// full-length Hann-windowed DFT with parabolic peak interpolation. Throws
// DomainError unless the 2nd harmonic is below Nyquist, and
// DegenerateSignalError when the fundamental is absent.
double thd(const AudioBuffer& buf, double fundamental_hz);

}  // namespace nase
