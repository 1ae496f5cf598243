#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

namespace nase {

// Mono PCM signal. Samples are real amplitudes nominally in [-1, 1]; values
// are clamped when written out as 16-bit PCM, not on every in-memory update.
struct AudioBuffer {
  Eigen::VectorXd samples;
  int sample_rate_hz = 16000;

  Eigen::Index size() const { return samples.size(); }
  double seconds() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
};

// Throws DomainError unless the buffer is non-empty, has a positive sample
// rate and every sample is finite.
void validate_audio(const AudioBuffer& buf, const std::string& context);

// Linear 16-bit PCM conversion. pcm_to_sample maps the full int16 range onto
// [-1, 1); sample_to_pcm clamps to [-1, 1] and rounds half away from zero.
inline double pcm_to_sample(int16_t pcm) { return pcm / 32768.0; }
int16_t sample_to_pcm(double sample);

}  // namespace nase
