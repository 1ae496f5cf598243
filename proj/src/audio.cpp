#include "nase/audio.hpp"

#include <algorithm>
#include <cmath>

#include "nase/error.hpp"

namespace nase {

void validate_audio(const AudioBuffer& buf, const std::string& context) {
  if (buf.sample_rate_hz <= 0) {
    throw DomainError(context + ": sample rate must be positive");
  }
  if (buf.samples.size() < 1) {
    throw DomainError(context + ": buffer is empty");
  }
  if (!buf.samples.allFinite()) {
    throw DomainError(context + ": buffer contains non-finite samples");
  }
}

int16_t sample_to_pcm(double sample) {
  const double clamped = std::clamp(sample, -1.0, 1.0);
  const long pcm = std::lround(clamped * 32768.0);
  return static_cast<int16_t>(std::clamp(pcm, -32768L, 32767L));
}

}  // namespace nase
