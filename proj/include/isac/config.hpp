#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "isac/detect_track.hpp"
#include "isac/fft.hpp"
#include "isac/microdoppler.hpp"
#include "isac/radar_params.hpp"

namespace isac {

/// Thresholds are offsets above the noise floor calibrated on a target-free CPI.
struct DetectionSettings {
  double scope_min_m = 1.0;
  double scope_max_m = 10.0;
  std::size_t guard_bins = 1;
  double threshold_up_db = 20.0;
  double threshold_down_db = 16.0;
};

struct MicroDopplerSettings {
  std::size_t roi_halfwidth_bins = 8;
  std::size_t roi_guard_bins = 3;
  double threshold_db = -15.0;
  bool relative_threshold = true;
  // Cells must also exceed floor + noise_gate_db; empty disables the gate.
  std::optional<double> noise_gate_db = 16.0;
  double smoothing_window_s = 0.5;
  double drift_window_s = 0.5;
  FsmThresholds fsm;
};

struct RuntimeSettings {
  // measure: plans are timed once per process (about a second) and run about
  // twice as fast. Results depend on the chosen plan in the last bits, so runs
  // compared bit for bit across processes should share fft_wisdom.
  FftPlanning fft_planning = FftPlanning::measure;
  // FFTW wisdom file, read before planning and rewritten after; empty = none.
  std::string fft_wisdom;
  bool pipelined = true;  // overlap synthesis, DSP and decision stages on separate threads
};

struct PipelineConfig {
  SystemConfig system;
  DetectionSettings detection;
  KalmanSettings tracking;
  MicroDopplerSettings microdoppler;
  RuntimeSettings runtime;
};

/// Parses a config JSON document; missing keys keep their defaults, unknown keys
/// and invalid values throw ConfigError with the key path.
PipelineConfig parse_config(std::string_view text, std::string_view source_name = "<config>");
PipelineConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const PipelineConfig& config);

/// Cross-field checks (threshold ordering, scope inside the unambiguous range, ...).
void validate(const PipelineConfig& config);

}  // namespace isac
