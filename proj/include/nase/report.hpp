#pragma once

#include <string>

#include <json.hpp>

#include "nase/pipeline.hpp"

namespace nase {

// JSON echo of every config type, used by reports and checkpoints.
nlohmann::ordered_json to_json(const StftParams& p);
nlohmann::ordered_json to_json(const LifParams& p);
nlohmann::ordered_json to_json(const SynthSpec& s);
nlohmann::ordered_json to_json(const AttackSpec& a);
nlohmann::ordered_json to_json(const DetectorConfig& d);
nlohmann::ordered_json to_json(const DenoiserConfig& d);
nlohmann::ordered_json to_json(const PipelineConfig& c);

StftParams stft_params_from_json(const nlohmann::json& j);
LifParams lif_params_from_json(const nlohmann::json& j);
SynthSpec synth_spec_from_json(const nlohmann::json& j);

// Full report. Non-finite numbers serialize as null; key order is fixed so
// identical runs produce identical bytes.
nlohmann::ordered_json report_to_json(const RunReport& report);

// One row per clip: clip_id, attacked_truth, verdict, snr_in, snr_out,
// spike_rate, latency_ms.
std::string report_to_csv(const RunReport& report);

// Copy of a report JSON with every wall-clock field removed, for
// determinism comparisons.
nlohmann::ordered_json strip_wall_clock(const nlohmann::ordered_json& report_json);

// Plot data: SNR histogram per truth class, and a detection ROC obtained by
// sweeping the decision threshold over the recorded SNR estimates.
std::string snr_histogram_csv(const RunReport& report, double bin_width_db = 0.5);
std::string roc_csv(const RunReport& report);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace nase
