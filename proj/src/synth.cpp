#include "nase/synth.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <vector>

#include <json.hpp>

#include "nase/error.hpp"
#include "nase/metrics.hpp"
#include "nase/report.hpp"
#include "nase/seed.hpp"
#include "nase/wav.hpp"

namespace nase {

namespace {

constexpr double kCleanRms = 0.3;

void validate_synth_spec(const SynthSpec& spec) {
  if (spec.sample_rate_hz <= 0) throw ConfigError("sample_rate_hz must be positive");
  if (spec.num_tones < 1) throw ConfigError("num_tones must be >= 1");
  if (!(spec.tone_band_low_hz > 0.0) ||
      !(spec.tone_band_low_hz < spec.tone_band_high_hz) ||
      spec.tone_band_high_hz > spec.sample_rate_hz / 2.0) {
    throw ConfigError("tone band must satisfy 0 < low < high <= sample_rate/2");
  }
  if (!(spec.clip_seconds > 0.0) ||
      static_cast<long>(spec.clip_seconds * spec.sample_rate_hz) < 1) {
    throw ConfigError("clip_seconds too short for the sample rate");
  }
}

Eigen::VectorXd white_noise(Eigen::Index len, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd noise(len);
  for (Eigen::Index i = 0; i < len; ++i) noise[i] = gauss(rng);
  return noise;
}

// 1/f shaping of white noise in the frequency domain.
Eigen::VectorXd pink_noise(Eigen::Index len, std::mt19937_64& rng) {
  std::vector<double> white(len);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (auto& v : white) v = gauss(rng);

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<std::complex<double>> bins;
  fft.fwd(bins, white);
  bins[0] = 0.0;
  for (size_t k = 1; k < bins.size(); ++k) bins[k] /= std::sqrt(static_cast<double>(k));
  std::vector<double> shaped;
  fft.inv(shaped, bins, static_cast<int>(len));
  return Eigen::Map<const Eigen::VectorXd>(shaped.data(), len);
}

double rms(const Eigen::VectorXd& v) { return std::sqrt(v.squaredNorm() / v.size()); }

}  // namespace

ClipPair synth_clip(const SynthSpec& spec, uint64_t clip_seed) {
  validate_synth_spec(spec);

  const Eigen::Index len = static_cast<Eigen::Index>(spec.clip_seconds * spec.sample_rate_hz);
  std::mt19937_64 rng(clip_seed);
  std::uniform_real_distribution<double> freq_dist(spec.tone_band_low_hz,
                                                   spec.tone_band_high_hz);
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);

  ClipPair pair;
  pair.target_snr_db = spec.target_snr_db;
  pair.clip_id = "clip";
  pair.tone_hz.reserve(spec.num_tones);

  Eigen::VectorXd clean = Eigen::VectorXd::Zero(len);
  const double amplitude = kCleanRms * std::sqrt(2.0 / spec.num_tones);
  for (int tone = 0; tone < spec.num_tones; ++tone) {
    const double f = freq_dist(rng);
    const double phi = phase_dist(rng);
    pair.tone_hz.push_back(f);
    const double omega = 2.0 * std::numbers::pi * f / spec.sample_rate_hz;
    for (Eigen::Index n = 0; n < len; ++n) clean[n] += amplitude * std::sin(omega * n + phi);
  }
  std::sort(pair.tone_hz.begin(), pair.tone_hz.end());

  const double clean_rms = rms(clean);
  if (!(clean_rms > 0.0)) throw ConfigError("degenerate clip: clean signal has no energy");
  clean *= kCleanRms / clean_rms;

  Eigen::VectorXd noise = spec.noise_kind == SynthSpec::NoiseKind::kPink
                              ? pink_noise(len, rng)
                              : white_noise(len, rng);
  const double noise_rms = rms(noise);
  if (!(noise_rms > 0.0)) throw ConfigError("degenerate clip: noise has no energy");
  const double scale =
      (kCleanRms / noise_rms) * std::pow(10.0, -spec.target_snr_db / 20.0);

  pair.clean.samples = clean;
  pair.clean.sample_rate_hz = spec.sample_rate_hz;
  pair.noisy.samples = clean + scale * noise;
  pair.noisy.sample_rate_hz = spec.sample_rate_hz;
  return pair;
}

Corpus build_corpus(const SynthSpec& spec, uint64_t seed) {
  validate_synth_spec(spec);
  if (spec.num_clips < 1) throw ConfigError("num_clips must be >= 1");

  Corpus corpus;
  corpus.seed = seed;
  corpus.generation_config = spec;
  corpus.pairs.reserve(spec.num_clips);
  for (int i = 0; i < spec.num_clips; ++i) {
    ClipPair pair = synth_clip(spec, derive_seed(seed, i));
    char id[16];
    std::snprintf(id, sizeof(id), "clip-%04d", i);
    pair.clip_id = id;
    corpus.pairs.push_back(std::move(pair));
  }
  return corpus;
}

std::string corpus_save(const Corpus& corpus, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw IoError("cannot create directory: " + dir);

  nlohmann::ordered_json manifest;
  manifest["seed"] = corpus.seed;
  manifest["config"] = to_json(corpus.generation_config);
  manifest["clips"] = nlohmann::ordered_json::array();
  for (size_t i = 0; i < corpus.pairs.size(); ++i) {
    const ClipPair& pair = corpus.pairs[i];
    const std::string clean_name = pair.clip_id + "-clean.wav";
    const std::string noisy_name = pair.clip_id + "-noisy.wav";
    write_wav(pair.clean, (fs::path(dir) / clean_name).string());
    write_wav(pair.noisy, (fs::path(dir) / noisy_name).string());
    nlohmann::ordered_json row;
    row["clip_id"] = pair.clip_id;
    row["seed"] = derive_seed(corpus.seed, i);
    row["target_snr_db"] = pair.target_snr_db;
    row["tone_hz"] = pair.tone_hz;
    row["clean"] = clean_name;
    row["noisy"] = noisy_name;
    manifest["clips"].push_back(std::move(row));
  }

  const std::string manifest_path = (fs::path(dir) / "manifest.json").string();
  write_text_file(manifest_path, manifest.dump(2) + "\n");
  return manifest_path;
}

Corpus corpus_load(const std::string& manifest_path) {
  namespace fs = std::filesystem;
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_text_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad corpus manifest " + manifest_path + ": " + e.what());
  }

  Corpus corpus;
  try {
    corpus.seed = manifest.at("seed").get<uint64_t>();
    corpus.generation_config = synth_spec_from_json(manifest.at("config"));
    const fs::path dir = fs::path(manifest_path).parent_path();
    for (const auto& row : manifest.at("clips")) {
      ClipPair pair;
      pair.clip_id = row.at("clip_id").get<std::string>();
      pair.target_snr_db = row.at("target_snr_db").get<double>();
      pair.tone_hz = row.at("tone_hz").get<std::vector<double>>();
      pair.clean = read_wav((dir / row.at("clean").get<std::string>()).string());
      pair.noisy = read_wav((dir / row.at("noisy").get<std::string>()).string());
      if (pair.clean.samples.size() != pair.noisy.samples.size() ||
          pair.clean.sample_rate_hz != pair.noisy.sample_rate_hz) {
        throw FormatError("clip " + pair.clip_id + ": clean/noisy shape mismatch");
      }
      corpus.pairs.push_back(std::move(pair));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad corpus manifest " + manifest_path + ": " + e.what());
  }
  if (corpus.pairs.empty()) throw FormatError("corpus manifest lists no clips");
  return corpus;
}

}  // namespace nase
