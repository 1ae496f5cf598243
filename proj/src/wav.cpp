#include "nase/wav.hpp"

#include <cstring>
#include <fstream>
#include <vector>

#include "nase/error.hpp"

namespace nase {

namespace {

#pragma pack(push, 1)
struct RiffHeader {
  char riff[4];
  uint32_t file_size;
  char wave[4];
};

struct ChunkHeader {
  char id[4];
  uint32_t size;
};

struct FmtChunk {
  uint16_t audio_format;  // 1 = PCM
  uint16_t num_channels;
  uint32_t sample_rate;
  uint32_t byte_rate;
  uint16_t block_align;
  uint16_t bits_per_sample;
};
#pragma pack(pop)

}  // namespace

AudioBuffer read_wav(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open WAV file: " + path);

  RiffHeader riff{};
  file.read(reinterpret_cast<char*>(&riff), sizeof(riff));
  if (!file.good() || std::strncmp(riff.riff, "RIFF", 4) != 0 ||
      std::strncmp(riff.wave, "WAVE", 4) != 0) {
    throw FormatError("not a RIFF/WAVE file: " + path);
  }

  FmtChunk fmt{};
  bool found_fmt = false;
  std::vector<int16_t> raw;
  bool found_data = false;

  while (file.good()) {
    ChunkHeader chunk{};
    file.read(reinterpret_cast<char*>(&chunk), sizeof(chunk));
    if (!file.good()) break;
    const auto chunk_start = file.tellg();

    if (std::strncmp(chunk.id, "fmt ", 4) == 0) {
      if (chunk.size < sizeof(FmtChunk)) {
        throw FormatError("truncated fmt chunk: " + path);
      }
      file.read(reinterpret_cast<char*>(&fmt), sizeof(fmt));
      if (!file.good()) throw FormatError("truncated fmt chunk: " + path);
      found_fmt = true;
    } else if (std::strncmp(chunk.id, "data", 4) == 0) {
      if (!found_fmt) throw FormatError("data chunk before fmt chunk: " + path);
      if (fmt.audio_format != 1) {
        throw UnsupportedError("only PCM WAV is supported (format tag " +
                               std::to_string(fmt.audio_format) + "): " + path);
      }
      if (fmt.bits_per_sample != 16) {
        throw UnsupportedError("only 16-bit WAV is supported (" +
                               std::to_string(fmt.bits_per_sample) + " bits): " + path);
      }
      if (fmt.num_channels == 0) throw FormatError("zero channels: " + path);
      raw.resize(chunk.size / sizeof(int16_t));
      file.read(reinterpret_cast<char*>(raw.data()),
                static_cast<std::streamsize>(raw.size() * sizeof(int16_t)));
      if (static_cast<size_t>(file.gcount()) != raw.size() * sizeof(int16_t)) {
        throw FormatError("truncated data chunk: " + path);
      }
      found_data = true;
    }

    // chunks are word aligned
    file.seekg(chunk_start + static_cast<std::streamoff>((chunk.size + 1) & ~1u));
  }

  if (!found_fmt || !found_data) {
    throw FormatError("missing fmt or data chunk: " + path);
  }

  const int channels = fmt.num_channels;
  const Eigen::Index num_frames = static_cast<Eigen::Index>(raw.size() / channels);
  if (num_frames == 0) throw FormatError("empty data chunk: " + path);

  AudioBuffer buf;
  buf.sample_rate_hz = static_cast<int>(fmt.sample_rate);
  buf.samples.resize(num_frames);
  for (Eigen::Index i = 0; i < num_frames; ++i) {
    double acc = 0.0;
    for (int c = 0; c < channels; ++c) acc += raw[i * channels + c];
    buf.samples[i] = acc / channels / 32768.0;
  }
  return buf;
}

void write_wav(const AudioBuffer& buf, const std::string& path) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot open for writing: " + path);

  const uint32_t data_size = static_cast<uint32_t>(buf.samples.size() * sizeof(int16_t));

  RiffHeader riff{};
  std::memcpy(riff.riff, "RIFF", 4);
  std::memcpy(riff.wave, "WAVE", 4);
  riff.file_size = 4 + 8 + sizeof(FmtChunk) + 8 + data_size;
  file.write(reinterpret_cast<const char*>(&riff), sizeof(riff));

  ChunkHeader fmt_hdr{{'f', 'm', 't', ' '}, sizeof(FmtChunk)};
  file.write(reinterpret_cast<const char*>(&fmt_hdr), sizeof(fmt_hdr));
  FmtChunk fmt{};
  fmt.audio_format = 1;
  fmt.num_channels = 1;
  fmt.sample_rate = static_cast<uint32_t>(buf.sample_rate_hz);
  fmt.bits_per_sample = 16;
  fmt.block_align = fmt.num_channels * (fmt.bits_per_sample / 8);
  fmt.byte_rate = fmt.sample_rate * fmt.block_align;
  file.write(reinterpret_cast<const char*>(&fmt), sizeof(fmt));

  ChunkHeader data_hdr{{'d', 'a', 't', 'a'}, data_size};
  file.write(reinterpret_cast<const char*>(&data_hdr), sizeof(data_hdr));
  for (Eigen::Index i = 0; i < buf.samples.size(); ++i) {
    const int16_t pcm = sample_to_pcm(buf.samples[i]);
    file.write(reinterpret_cast<const char*>(&pcm), sizeof(pcm));
  }
  if (!file.good()) throw IoError("write failed: " + path);
}

}  // namespace nase
