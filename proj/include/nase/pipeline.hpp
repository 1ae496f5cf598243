#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nase/attack.hpp"
#include "nase/crypto.hpp"
#include "nase/detector.hpp"
#include "nase/guard.hpp"
#include "nase/snn.hpp"
#include "nase/stft.hpp"
#include "nase/synth.hpp"

namespace nase {

struct DenoiserConfig {
  enum class Kind { kSnn, kSpectralSubtract };

  Kind kind = Kind::kSnn;
  std::string checkpoint_path;   // empty: fresh seeded net of default topology
  int hidden = 128;              // topology of the fresh net
  double subtract_alpha = 1.0;   // spectral subtraction over-subtraction factor

  bool operator==(const DenoiserConfig&) const = default;
};

struct PipelineConfig {
  StftParams stft;
  DenoiserConfig denoiser;
  LifParams lif;
  AttackSpec attack;
  DetectorConfig detector;
  int delay_frames = 1;
  int batch_size = 32;
  std::string key_file;  // path to the AES key; required once a clip is flagged
  bool encrypt_at_ingest = false;
  uint64_t seed = 0;
};

void validate_pipeline_config(const PipelineConfig& cfg);

struct StageTimings {
  double stft_ms = 0.0;
  double denoise_ms = 0.0;
  double attack_ms = 0.0;
  double detect_ms = 0.0;
  double encrypt_ms = 0.0;
  double total_ms = 0.0;

  StageTimings& operator+=(const StageTimings& other);
};

struct ClipOutcome {
  std::string clip_id;
  bool attacked_truth = false;
  AttackSpec::Kind attack_kind = AttackSpec::Kind::kNone;  // kind actually injected
  Verdict verdict;
  GuardState guard;
  std::optional<AudioBuffer> denoised;       // exactly one of denoised /
  std::optional<EncryptedBlob> encrypted;    // encrypted is set, per verdict
  std::optional<EncryptedBlob> ingest_blob;  // only with encrypt_at_ingest
  double snr_in_db = 0.0;
  std::optional<double> snr_out_db;
  std::optional<double> thd_value;
  double spike_rate = 0.0;
  double mean_abs_delta = 0.0;       // 0 when no attack was injected
  double saturation_fraction = 0.0;  // share of |delta| within 10% of its max
  double latency_ms = 0.0;
  StageTimings timings;
};

// Loaded resources shared across clips. The denoiser hook exists so tests
// can swap in stub denoisers (for example an oracle that returns the clean
// magnitude).
struct PipelineContext {
  SpikingNet net;
  std::vector<uint8_t> key;
  std::function<MagnitudeGrid(const MagnitudeGrid&, const ClipPair&)> denoiser_override;
};

PipelineContext make_context(const PipelineConfig& cfg, int num_bins);

// One pass of the processing graph over a clip: analyze both signals, split,
// delay, optionally synthesize and apply the configured attack on the noisy
// magnitude, rebuild the composite with the noisy phase, detect, then either
// encrypt the composite PCM (flagged) or denoise and resynthesize (clean).
// Any submodule error forces the guard into hard reset before propagating.
ClipOutcome process_clip(const ClipPair& pair, const PipelineConfig& cfg,
                         bool inject_attack, PipelineContext& ctx,
                         uint64_t clip_index = 0);

// Convenience overload that builds a fresh context.
ClipOutcome process_clip(const ClipPair& pair, const PipelineConfig& cfg,
                         bool inject_attack);

struct AttackKindStats {
  long total = 0;
  long detected = 0;
  std::optional<double> detection_rate;
};

struct RunReport {
  std::optional<double> detection_rate;        // over attacked clips only
  std::optional<double> false_positive_rate;   // over clean clips only
  std::optional<double> mean_snr_attacked_db;
  std::optional<double> mean_snr_clean_db;
  std::optional<double> mean_snr_out_db;
  std::optional<double> mean_thd;
  std::optional<double> mean_spike_rate;
  std::optional<double> mean_abs_delta;
  std::optional<double> mean_saturation_fraction;
  double mean_latency_ms = 0.0;
  AttackKindStats fgsm_stats;
  AttackKindStats pgd_stats;
  std::vector<ClipOutcome> clips;
  PipelineConfig config;
  double attack_fraction = 0.0;
  uint64_t seed = 0;
};

// Runs the corpus in batches of cfg.batch_size. A deterministic seeded draw
// marks round(attack_fraction * n) clips for injection; with
// attack.kind == kPgd or kFgsm all marked clips get that attack, and
// run_experiment_pooled alternates the two. Throws ConfigError on an empty
// corpus or when attack.kind == kNone while attack_fraction > 0.
RunReport run_experiment(const Corpus& corpus, const PipelineConfig& cfg,
                         double attack_fraction);

// Same, but marked clips alternate deterministically between fgsm and pgd.
RunReport run_experiment_pooled(const Corpus& corpus, const PipelineConfig& cfg,
                                double attack_fraction);

// Picks epsilon so that the mean attacked composite SNR over up to
// probe_clips clips lands on target_snr_db: one probe pass plus an energy
// rescaling refinement. Deterministic.
double calibrate_epsilon(const Corpus& corpus, const PipelineConfig& cfg,
                         double target_snr_db, int probe_clips = 8);

}  // namespace nase
