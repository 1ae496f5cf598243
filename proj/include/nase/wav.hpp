#pragma once

#include <string>

#include "nase/audio.hpp"

namespace nase {

// Reads a RIFF/WAVE file containing 16-bit PCM. Stereo input is downmixed by
// averaging the channels. Throws FormatError on malformed containers and
// UnsupportedError for other codecs or bit depths.
AudioBuffer read_wav(const std::string& path);

// Writes `buf` as a mono 16-bit PCM WAV file. Samples are clamped to [-1, 1]
// and rounded half away from zero. Throws IoError if the path is not writable.
void write_wav(const AudioBuffer& buf, const std::string& path);

}  // namespace nase
