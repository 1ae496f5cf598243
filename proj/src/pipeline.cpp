#include "nase/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "nase/error.hpp"
#include "nase/metrics.hpp"
#include "nase/seed.hpp"

namespace nase {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// sub-seed namespaces so independent draws never collide
constexpr uint64_t kSeedNet = 0x6e65;
constexpr uint64_t kSeedMark = 0x6d61;
constexpr uint64_t kSeedNonce = 0x6e6f;

std::vector<uint8_t> pcm_bytes(const AudioBuffer& buf) {
  std::vector<uint8_t> bytes;
  bytes.reserve(buf.samples.size() * 2);
  for (Eigen::Index i = 0; i < buf.samples.size(); ++i) {
    const auto pcm = static_cast<uint16_t>(sample_to_pcm(buf.samples[i]));
    bytes.push_back(static_cast<uint8_t>(pcm & 0xff));
    bytes.push_back(static_cast<uint8_t>(pcm >> 8));
  }
  return bytes;
}

}  // namespace

void validate_pipeline_config(const PipelineConfig& cfg) {
  validate_stft_params(cfg.stft);
  validate_lif_params(cfg.lif);
  validate_attack_spec(cfg.attack);
  if (cfg.delay_frames < 0) throw ConfigError("delay_frames must be >= 0");
  if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (cfg.detector.blind_window < 1) throw ConfigError("blind window must be >= 1");
  if (cfg.denoiser.hidden < 1) throw ConfigError("hidden layer size must be >= 1");
  if (cfg.denoiser.subtract_alpha < 0.0) throw ConfigError("subtract_alpha must be >= 0");
}

StageTimings& StageTimings::operator+=(const StageTimings& other) {
  stft_ms += other.stft_ms;
  denoise_ms += other.denoise_ms;
  attack_ms += other.attack_ms;
  detect_ms += other.detect_ms;
  encrypt_ms += other.encrypt_ms;
  total_ms += other.total_ms;
  return *this;
}

PipelineContext make_context(const PipelineConfig& cfg, int num_bins) {
  validate_pipeline_config(cfg);
  PipelineContext ctx;
  if (!cfg.denoiser.checkpoint_path.empty()) {
    ctx.net = load_checkpoint(cfg.denoiser.checkpoint_path);
    if (ctx.net.layer_sizes.front() != num_bins || ctx.net.layer_sizes.back() != num_bins) {
      throw ShapeError("checkpoint topology does not match " + std::to_string(num_bins) +
                       " frequency bins");
    }
  } else {
    ctx.net =
        make_net({num_bins, cfg.denoiser.hidden, num_bins}, cfg.lif,
                 derive_seed(cfg.seed, kSeedNet));
  }
  if (!cfg.key_file.empty()) ctx.key = load_key_file(cfg.key_file);
  return ctx;
}

ClipOutcome process_clip(const ClipPair& pair, const PipelineConfig& cfg, bool inject_attack,
                         PipelineContext& ctx, uint64_t clip_index) {
  validate_audio(pair.clean, "process_clip clean");
  validate_audio(pair.noisy, "process_clip noisy");
  if (pair.clean.samples.size() != pair.noisy.samples.size() ||
      pair.clean.sample_rate_hz != pair.noisy.sample_rate_hz) {
    throw ShapeError("clip " + pair.clip_id + ": clean and noisy disagree in shape");
  }

  ClipOutcome outcome;
  outcome.clip_id = pair.clip_id;
  outcome.attacked_truth = inject_attack;
  outcome.attack_kind = inject_attack ? cfg.attack.kind : AttackSpec::Kind::kNone;
  outcome.guard = step_guard(GuardState{}, GuardEvent::start());

  const auto clip_start = Clock::now();
  try {
    if (cfg.encrypt_at_ingest) {
      const auto t = Clock::now();
      if (ctx.key.empty()) throw ConfigError("encrypt_at_ingest requires a key file");
      outcome.ingest_blob =
          aes_encrypt(ctx.key, derive_bytes<12>(derive_seed(cfg.seed, kSeedNonce), 2 * clip_index + 1),
                      pcm_bytes(pair.noisy));
      outcome.timings.encrypt_ms += ms_since(t);
    }

    auto t = Clock::now();
    auto [noisy_mag, noisy_phase] = split(stft(pair.noisy, cfg.stft));
    auto [clean_mag, clean_phase] = split(stft(pair.clean, cfg.stft));
    noisy_mag = delay(noisy_mag, cfg.delay_frames);
    noisy_phase = delay(noisy_phase, cfg.delay_frames);
    clean_mag = delay(clean_mag, cfg.delay_frames);
    clean_phase = delay(clean_phase, cfg.delay_frames);
    const AudioBuffer clean_ref = istft(mix(clean_mag, clean_phase), cfg.stft);
    outcome.timings.stft_ms += ms_since(t);

    MagnitudeGrid processed = noisy_mag;
    if (inject_attack && cfg.attack.kind != AttackSpec::Kind::kNone &&
        cfg.attack.epsilon > 0.0) {
      t = Clock::now();
      AttackSpec clip_spec = cfg.attack;
      clip_spec.seed = derive_seed(cfg.attack.seed, clip_index);
      const Perturbation pert = clip_spec.kind == AttackSpec::Kind::kFgsm
                                    ? fgsm(ctx.net, noisy_mag, clean_mag, clip_spec)
                                    : pgd(ctx.net, noisy_mag, clean_mag, clip_spec);
      processed = apply(noisy_mag, pert);
      outcome.mean_abs_delta = pert.delta.cwiseAbs().mean();
      const double peak = pert.delta.cwiseAbs().maxCoeff();
      outcome.saturation_fraction =
          peak > 0.0 ? (pert.delta.cwiseAbs().array() >= 0.9 * peak).cast<double>().sum() /
                           static_cast<double>(pert.delta.size())
                     : 0.0;
      outcome.timings.attack_ms += ms_since(t);
    }

    t = Clock::now();
    const AudioBuffer composite = istft(mix(processed, noisy_phase), cfg.stft);
    outcome.timings.stft_ms += ms_since(t);

    t = Clock::now();
    const bool oracle = cfg.detector.mode == DetectorConfig::Mode::kOracle;
    Verdict verdict = detect(oracle ? std::optional<AudioBuffer>(clean_ref) : std::nullopt,
                             composite, cfg.detector, cfg.stft);
    verdict.clip_id = pair.clip_id;
    if (verdict.attacked) {
      verdict.classified =
          classify_perturbation(processed.mags - noisy_mag.mags, cfg.attack.epsilon);
    }
    outcome.timings.detect_ms += ms_since(t);

    outcome.snr_in_db = oracle ? verdict.snr_estimate_db : snr_db(clean_ref, composite);
    outcome.verdict = verdict;
    outcome.guard = step_guard(outcome.guard, GuardEvent::on_verdict(verdict));

    if (!pair.tone_hz.empty() &&
        2.0 * pair.tone_hz.front() < pair.clean.sample_rate_hz / 2.0) {
      try {
        outcome.thd_value = thd(composite, pair.tone_hz.front());
      } catch (const DegenerateSignalError&) {
        outcome.thd_value.reset();
      }
    }

    if (verdict.attacked) {
      t = Clock::now();
      if (ctx.key.empty()) {
        throw ConfigError("clip " + pair.clip_id +
                          " was flagged but no key file is configured");
      }
      outcome.encrypted =
          aes_encrypt(ctx.key, derive_bytes<12>(derive_seed(cfg.seed, kSeedNonce), 2 * clip_index),
                      pcm_bytes(composite));
      outcome.timings.encrypt_ms += ms_since(t);
    } else {
      t = Clock::now();
      MagnitudeGrid denoised_mag;
      if (ctx.denoiser_override) {
        denoised_mag = ctx.denoiser_override(processed, pair);
      } else if (cfg.denoiser.kind == DenoiserConfig::Kind::kSnn) {
        const double frame_seconds =
            static_cast<double>(cfg.stft.hop) / pair.noisy.sample_rate_hz;
        GridForwardResult run = forward_grid(ctx.net, processed, frame_seconds);
        denoised_mag = std::move(run.denoised);
        outcome.spike_rate = spike_rate(run.trace);
      } else {
        const Eigen::VectorXd floor_mag =
            noise_floor_estimate(processed, cfg.detector.blind_window);
        denoised_mag = spectral_subtract(processed, floor_mag, cfg.denoiser.subtract_alpha);
      }
      AudioBuffer output = istft(mix(denoised_mag, noisy_phase), cfg.stft);
      outcome.snr_out_db = snr_db(clean_ref, output);
      outcome.denoised = std::move(output);
      outcome.timings.denoise_ms += ms_since(t);
    }
  } catch (...) {
    outcome.guard = force_hard_reset();
    throw;
  }

  outcome.timings.total_ms = ms_since(clip_start);
  outcome.latency_ms = outcome.timings.total_ms;
  return outcome;
}

ClipOutcome process_clip(const ClipPair& pair, const PipelineConfig& cfg, bool inject_attack) {
  PipelineContext ctx = make_context(cfg, static_cast<int>(cfg.stft.num_bins()));
  return process_clip(pair, cfg, inject_attack, ctx, 0);
}

namespace {

std::optional<double> mean_of(const std::vector<double>& values) {
  if (values.empty()) return std::nullopt;
  return std::accumulate(values.begin(), values.end(), 0.0) / values.size();
}

RunReport run_core(const Corpus& corpus, const PipelineConfig& cfg, double attack_fraction,
                   bool pooled) {
  validate_pipeline_config(cfg);
  if (corpus.pairs.empty()) throw ConfigError("corpus is empty");
  if (!(attack_fraction >= 0.0 && attack_fraction <= 1.0)) {
    throw ConfigError("attack_fraction must lie in [0, 1]");
  }

  const size_t n = corpus.pairs.size();
  const size_t marked = static_cast<size_t>(std::lround(attack_fraction * n));
  if (marked > 0 && !pooled && cfg.attack.kind == AttackSpec::Kind::kNone) {
    throw ConfigError("attack_fraction > 0 requires an attack kind");
  }

  // deterministic ground-truth marking
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(derive_seed(cfg.seed, kSeedMark));
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> inject(n, false);
  for (size_t i = 0; i < marked; ++i) inject[order[i]] = true;

  PipelineContext ctx = make_context(cfg, cfg.stft.num_bins());

  RunReport report;
  report.config = cfg;
  report.seed = cfg.seed;
  report.attack_fraction = attack_fraction;
  report.clips.reserve(n);

  size_t attacked_seen = 0;
  for (size_t batch_start = 0; batch_start < n;
       batch_start += static_cast<size_t>(cfg.batch_size)) {
    const size_t batch_end =
        std::min(n, batch_start + static_cast<size_t>(cfg.batch_size));
    for (size_t i = batch_start; i < batch_end; ++i) {
      PipelineConfig clip_cfg = cfg;
      if (pooled && inject[i]) {
        clip_cfg.attack.kind = (attacked_seen % 2 == 0) ? AttackSpec::Kind::kFgsm
                                                        : AttackSpec::Kind::kPgd;
        ++attacked_seen;
      }
      report.clips.push_back(process_clip(corpus.pairs[i], clip_cfg, inject[i], ctx, i));
    }
  }

  // aggregates
  long attacked_total = 0, attacked_detected = 0, clean_total = 0, clean_flagged = 0;
  std::vector<double> snr_attacked, snr_clean, snr_out, thds, rates, deltas, saturations,
      latencies;
  for (const ClipOutcome& clip : report.clips) {
    latencies.push_back(clip.latency_ms);
    if (clip.thd_value) thds.push_back(*clip.thd_value);
    if (clip.attacked_truth) {
      ++attacked_total;
      attacked_detected += clip.verdict.attacked;
      snr_attacked.push_back(clip.snr_in_db);
      deltas.push_back(clip.mean_abs_delta);
      saturations.push_back(clip.saturation_fraction);
      AttackKindStats& ks = clip.attack_kind == AttackSpec::Kind::kPgd ? report.pgd_stats
                                                                       : report.fgsm_stats;
      ++ks.total;
      ks.detected += clip.verdict.attacked;
    } else {
      ++clean_total;
      clean_flagged += clip.verdict.attacked;
      snr_clean.push_back(clip.snr_in_db);
    }
    if (clip.snr_out_db) snr_out.push_back(*clip.snr_out_db);
    if (clip.denoised.has_value() && !ctx.denoiser_override &&
        cfg.denoiser.kind == DenoiserConfig::Kind::kSnn) {
      rates.push_back(clip.spike_rate);
    }
  }

  if (attacked_total > 0) {
    report.detection_rate = static_cast<double>(attacked_detected) / attacked_total;
  }
  if (clean_total > 0) {
    report.false_positive_rate = static_cast<double>(clean_flagged) / clean_total;
  }
  for (AttackKindStats* ks : {&report.fgsm_stats, &report.pgd_stats}) {
    if (ks->total > 0) ks->detection_rate = static_cast<double>(ks->detected) / ks->total;
  }
  report.mean_snr_attacked_db = mean_of(snr_attacked);
  report.mean_snr_clean_db = mean_of(snr_clean);
  report.mean_snr_out_db = mean_of(snr_out);
  report.mean_thd = mean_of(thds);
  report.mean_spike_rate = mean_of(rates);
  report.mean_abs_delta = mean_of(deltas);
  report.mean_saturation_fraction = mean_of(saturations);
  report.mean_latency_ms = mean_of(latencies).value_or(0.0);
  return report;
}

}  // namespace

RunReport run_experiment(const Corpus& corpus, const PipelineConfig& cfg,
                         double attack_fraction) {
  return run_core(corpus, cfg, attack_fraction, /*pooled=*/false);
}

RunReport run_experiment_pooled(const Corpus& corpus, const PipelineConfig& cfg,
                                double attack_fraction) {
  return run_core(corpus, cfg, attack_fraction, /*pooled=*/true);
}

double calibrate_epsilon(const Corpus& corpus, const PipelineConfig& cfg,
                         double target_snr_db, int probe_clips) {
  validate_pipeline_config(cfg);
  if (corpus.pairs.empty()) throw ConfigError("corpus is empty");
  if (probe_clips < 1) throw ConfigError("probe_clips must be >= 1");

  PipelineContext ctx = make_context(cfg, cfg.stft.num_bins());
  const size_t probes = std::min<size_t>(probe_clips, corpus.pairs.size());

  struct Probe {
    MagnitudeGrid noisy_mag, clean_mag;
    PhaseGrid noisy_phase;
    AudioBuffer clean_ref;
    double ref_energy = 0.0;
    double noise_energy = 0.0;
  };
  std::vector<Probe> probe_set(probes);
  for (size_t i = 0; i < probes; ++i) {
    const ClipPair& pair = corpus.pairs[i];
    Probe& p = probe_set[i];
    auto [nm, np] = split(stft(pair.noisy, cfg.stft));
    auto [cm, cp] = split(stft(pair.clean, cfg.stft));
    p.noisy_mag = delay(nm, cfg.delay_frames);
    p.noisy_phase = delay(np, cfg.delay_frames);
    p.clean_mag = delay(cm, cfg.delay_frames);
    PhaseGrid cpd = delay(cp, cfg.delay_frames);
    p.clean_ref = istft(mix(p.clean_mag, cpd), cfg.stft);
    const AudioBuffer baseline = istft(mix(p.noisy_mag, p.noisy_phase), cfg.stft);
    p.ref_energy = p.clean_ref.samples.squaredNorm();
    p.noise_energy = (baseline.samples - p.clean_ref.samples).squaredNorm();
  }

  double total_ref = 0.0, total_noise = 0.0;
  for (const Probe& p : probe_set) {
    total_ref += p.ref_energy;
    total_noise += p.noise_energy;
  }
  const double target_error = total_ref / std::pow(10.0, target_snr_db / 10.0);
  if (target_error <= total_noise) {
    throw ConfigError("target SNR is above the unattacked operating point; nothing to calibrate");
  }

  auto attacked_error = [&](double eps) {
    double total = 0.0;
    for (size_t i = 0; i < probes; ++i) {
      Probe& p = probe_set[i];
      AttackSpec spec = cfg.attack;
      spec.kind = AttackSpec::Kind::kFgsm;
      spec.epsilon = eps;
      spec.seed = derive_seed(cfg.attack.seed, i);
      const Perturbation pert = fgsm(ctx.net, p.noisy_mag, p.clean_mag, spec);
      const AudioBuffer composite =
          istft(mix(apply(p.noisy_mag, pert), p.noisy_phase), cfg.stft);
      total += (composite.samples - p.clean_ref.samples).squaredNorm();
    }
    return total;
  };

  double eps = cfg.attack.epsilon > 0.0 ? cfg.attack.epsilon : 0.05;
  for (int refine = 0; refine < 2; ++refine) {
    const double delta_energy = std::max(attacked_error(eps) - total_noise, 1e-30);
    eps *= std::sqrt((target_error - total_noise) / delta_energy);
  }
  return eps;
}

}  // namespace nase
