#include "nase/detector.hpp"

#include <algorithm>
#include <cmath>

#include "nase/error.hpp"
#include "nase/metrics.hpp"

namespace nase {

const char* attack_class_name(AttackClass c) {
  switch (c) {
    case AttackClass::kFgsmLike: return "fgsm_like";
    case AttackClass::kPgdLike: return "pgd_like";
    case AttackClass::kUnknown: return "unknown";
  }
  return "?";
}

double blind_snr_estimate_db(const AudioBuffer& composite, const DetectorConfig& cfg,
                             const StftParams& stft_params) {
  if (cfg.blind_window < 1) throw ConfigError("blind smoothing window must be >= 1");
  const auto [mag, phase] = split(stft(composite, stft_params));
  const Eigen::MatrixXd power = mag.mags.array().square();
  const Eigen::Index num_bins = power.rows();
  const Eigen::Index num_frames = power.cols();
  const Eigen::Index window = std::min<Eigen::Index>(cfg.blind_window, num_frames);

  // per-bin minimum over frames of a `window`-frame moving average
  Eigen::VectorXd floor_power(num_bins);
  for (Eigen::Index k = 0; k < num_bins; ++k) {
    double best = std::numeric_limits<double>::infinity();
    double acc = power.row(k).head(window).sum();
    best = acc;
    for (Eigen::Index t = window; t < num_frames; ++t) {
      acc += power(k, t) - power(k, t - window);
      best = std::min(best, acc);
    }
    floor_power[k] = best / window;
  }

  const double mean_power = power.mean() * num_bins;            // per-frame total
  const double noise_power = std::max(floor_power.sum(), 1e-30);  // per-frame floor
  const double signal_power = std::max(mean_power - noise_power, 1e-30);
  return 10.0 * std::log10(signal_power / noise_power);
}

Verdict detect(const std::optional<AudioBuffer>& clean_ref, const AudioBuffer& composite,
               const DetectorConfig& cfg, const StftParams& stft_params) {
  Verdict verdict;
  switch (cfg.mode) {
    case DetectorConfig::Mode::kOracle:
      if (!clean_ref.has_value()) {
        throw ConfigError("detect: oracle mode requires the clean reference");
      }
      verdict.snr_estimate_db = snr_db(*clean_ref, composite);
      break;
    case DetectorConfig::Mode::kBlind:
      if (clean_ref.has_value()) {
        throw ConfigError("detect: blind mode must not receive a clean reference");
      }
      verdict.snr_estimate_db = blind_snr_estimate_db(composite, cfg, stft_params);
      break;
  }
  verdict.attacked = verdict.snr_estimate_db < cfg.snr_threshold_db;
  verdict.classified = AttackClass::kUnknown;
  return verdict;
}

AttackClass classify_perturbation(const Eigen::MatrixXd& delta_est, double epsilon_hint) {
  if (!delta_est.allFinite()) throw DomainError("classify_perturbation: non-finite delta");
  const Eigen::ArrayXXd mag = delta_est.array().abs();
  const double peak = mag.maxCoeff();
  const double tiny = 1e-15 * std::max(1.0, epsilon_hint);
  if (peak <= tiny) return AttackClass::kUnknown;

  // single signed steps concentrate |delta| at the budget; projected
  // iterations leave a large interior mass
  const double saturated =
      (mag >= 0.9 * peak).cast<double>().sum() / static_cast<double>(mag.size());
  if (saturated > 0.8) return AttackClass::kFgsmLike;
  if (saturated < 0.5) return AttackClass::kPgdLike;
  return AttackClass::kUnknown;
}

}  // namespace nase
