#pragma once

#include <cstddef>
#include <deque>
#include <limits>

#include "isac/detect_track.hpp"
#include "isac/rd_processing.hpp"
#include "isac/scene.hpp"

namespace isac {

/// Region of interest for micro-Doppler extraction: +-range_halfwidth bins around
/// the track, full Doppler axis minus the zero-Doppler guard.
struct RoiSpec {
  std::size_t range_halfwidth = 8;
  std::size_t zero_doppler_guard = 3;
  double threshold_db = -15.0;
  bool relative_threshold = true;  // threshold relative to the ROI peak, else absolute dB
  // Absolute floor a cell must also exceed; the pipeline sets it from the noise calibration.
  double min_power_db = -std::numeric_limits<double>::infinity();
};

/// Largest |velocity| among ROI cells above the threshold, 0 if none qualify.
/// Throws std::invalid_argument if the ROI is empty after clipping.
double microdoppler_velocity(const RangeDopplerMap& map, const TargetTrack& track,
                             const RoiSpec& roi);

struct MicroDopplerSample {
  double time = 0;
  double v_abs_max = 0;
};

/// Moving average over the most recent `window_seconds` of micro-Doppler samples.
struct MicroDopplerTrace {
  std::size_t capacity = 5;
  double window_seconds = 0.5;
  std::deque<MicroDopplerSample> samples;
  double smoothed = 0;
};

/// capacity = ceil(window / cpi).
MicroDopplerTrace make_trace(const DerivedParams& params, double window_seconds = 0.5);

MicroDopplerTrace smooth(MicroDopplerTrace trace, double time, double v_abs_max);

/// |range(now) - range(t)| for the newest entry at or before now - window; 0 when
/// the history does not reach back that far.
double drift(const std::deque<TrackHistoryEntry>& history, double window_seconds = 0.5);

struct FsmThresholds {
  double walking_drift_m = 0.10;
  double waving_enter_mps = 0.6;
  double waving_exit_mps = 0.4;
};

struct ActivityState {
  Activity activity = Activity::absent;
  bool waving_latch = false;  // micro-Doppler hysteresis memory

  bool operator==(const ActivityState&) const = default;
};

/// absent unless detected; walking while the drift exceeds the limit; otherwise
/// waving/standing from the micro-Doppler hysteresis. The latch only moves when
/// the micro-Doppler comparison is reached and is cleared by absence.
ActivityState fsm_step(const ActivityState& prev, bool detected, double drift_m, double v_md,
                       const FsmThresholds& thresholds = {});

}  // namespace isac
