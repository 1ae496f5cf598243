#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nase/audio.hpp"

namespace nase {

// Parameters of the seeded synthetic tonal-plus-noise corpus.
struct SynthSpec {
  enum class NoiseKind { kWhite, kPink };

  int num_clips = 200;
  double clip_seconds = 2.0;
  int num_tones = 3;
  double tone_band_low_hz = 200.0;
  double tone_band_high_hz = 4000.0;
  NoiseKind noise_kind = NoiseKind::kWhite;
  double target_snr_db = 10.0;
  int sample_rate_hz = 16000;

  bool operator==(const SynthSpec&) const = default;
};

struct ClipPair {
  AudioBuffer clean;
  AudioBuffer noisy;
  std::string clip_id;
  double target_snr_db = 0.0;
  std::vector<double> tone_hz;  // ascending; tone_hz[0] is the nominal fundamental
};

struct Corpus {
  std::vector<ClipPair> pairs;
  uint64_t seed = 0;
  SynthSpec generation_config;
};

// One clip: `num_tones` random-frequency random-phase sinusoids normalized to
// total RMS 0.3, plus noise scaled so snr_db(clean, noisy) hits target_snr_db
// exactly at generation time. Deterministic in clip_seed. Throws ConfigError
// for infeasible specs (no tones, empty band, non-positive duration).
ClipPair synth_clip(const SynthSpec& spec, uint64_t clip_seed);

// pairs[i] = synth_clip(spec, derive_seed(seed, i)) with clip ids
// "clip-0000", "clip-0001", ... Pure function of (spec, seed).
Corpus build_corpus(const SynthSpec& spec, uint64_t seed);

// On-disk corpus: <dir>/<clip_id>-{clean,noisy}.wav plus <dir>/manifest.json
// listing ids, per-clip seeds, tone frequencies and the generation config.
// Returns the manifest path.
std::string corpus_save(const Corpus& corpus, const std::string& dir);
Corpus corpus_load(const std::string& manifest_path);

}  // namespace nase
