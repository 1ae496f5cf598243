#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "nase/audio.hpp"
#include "nase/stft.hpp"

namespace nase {

struct DetectorConfig {
  enum class Mode { kOracle, kBlind };

  double snr_threshold_db = 8.0;
  Mode mode = Mode::kOracle;
  int blind_window = 16;  // frames of smoothing for the noise-floor estimate

  bool operator==(const DetectorConfig&) const = default;
};

enum class AttackClass { kFgsmLike, kPgdLike, kUnknown };

struct Verdict {
  bool attacked = false;
  double snr_estimate_db = 0.0;
  AttackClass classified = AttackClass::kUnknown;  // kUnknown whenever !attacked
  std::string clip_id;
};

// SNR-deviation detection: attacked iff snr_estimate < snr_threshold_db
// (strict). Oracle mode measures snr_db(clean_ref, composite); blind mode
// estimates SNR from the minimum-statistics noise floor of the composite's
// magnitude grid. Throws ConfigError when clean_ref presence does not match
// the mode.
Verdict detect(const std::optional<AudioBuffer>& clean_ref, const AudioBuffer& composite,
               const DetectorConfig& cfg, const StftParams& stft_params);

// Blind SNR estimate used by detect() in blind mode, exposed for tests.
double blind_snr_estimate_db(const AudioBuffer& composite, const DetectorConfig& cfg,
                             const StftParams& stft_params);

// Perturbation-signature heuristic: deltas saturated near their own maximum
// look like a signed single step (fgsm_like); interior-valued deltas look
// like a projected iteration (pgd_like). Scale invariant; all-zero deltas
// are unknown.
AttackClass classify_perturbation(const Eigen::MatrixXd& delta_est, double epsilon_hint);

const char* attack_class_name(AttackClass c);

}  // namespace nase
