#include "isac/microdoppler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace isac {

double microdoppler_velocity(const RangeDopplerMap& map, const TargetTrack& track,
                             const RoiSpec& roi) {
  const double center_f = std::round(track.state(0) / map.range_bin);
  const double hw = static_cast<double>(roi.range_halfwidth);
  const double lo_f = std::max(0.0, center_f - hw);
  const double hi_f = std::min(static_cast<double>(map.cols) - 1.0, center_f + hw);
  if (!(lo_f <= hi_f) || !std::isfinite(center_f)) {
    throw std::invalid_argument("micro-Doppler ROI is empty after clipping to the map");
  }
  const auto lo = static_cast<std::size_t>(lo_f);
  const auto hi = static_cast<std::size_t>(hi_f);
  const std::size_t zero = map.zero_doppler_row();

  auto outside_guard = [&](std::size_t row) {
    const std::size_t d = row > zero ? row - zero : zero - row;
    return d > roi.zero_doppler_guard;
  };

  float peak = -std::numeric_limits<float>::infinity();
  for (std::size_t row = 0; row < map.rows; ++row) {
    if (!outside_guard(row)) continue;
    for (std::size_t col = lo; col <= hi; ++col) {
      peak = std::max(peak, map.at(row, col));
    }
  }
  if (peak == -std::numeric_limits<float>::infinity()) {
    throw std::invalid_argument("micro-Doppler ROI has no rows outside the zero-Doppler guard");
  }

  // Cells clamped at the map floor carry no energy and never qualify.
  const double cut = std::max({roi.relative_threshold ? peak + roi.threshold_db : roi.threshold_db,
                               roi.min_power_db, static_cast<double>(kMapFloorDb)});
  double v_max = 0.0;
  for (std::size_t row = 0; row < map.rows; ++row) {
    if (!outside_guard(row)) continue;
    const double v = std::abs(map.velocity_of_row(row));
    if (v <= v_max) continue;
    for (std::size_t col = lo; col <= hi; ++col) {
      if (map.at(row, col) > cut) {
        v_max = v;
        break;
      }
    }
  }
  return v_max;
}

MicroDopplerTrace make_trace(const DerivedParams& params, double window_seconds) {
  MicroDopplerTrace t;
  t.window_seconds = window_seconds;
  t.capacity = static_cast<std::size_t>(std::ceil(window_seconds / params.cpi - 1e-9));
  t.capacity = std::max<std::size_t>(t.capacity, 1);
  return t;
}

MicroDopplerTrace smooth(MicroDopplerTrace trace, double time, double v_abs_max) {
  trace.samples.push_back({time, v_abs_max});
  while (trace.samples.size() > trace.capacity) {
    trace.samples.pop_front();
  }
  while (!trace.samples.empty() && trace.samples.front().time < time - trace.window_seconds) {
    trace.samples.pop_front();
  }
  double sum = 0.0;
  for (const auto& s : trace.samples) sum += s.v_abs_max;
  trace.smoothed = sum / static_cast<double>(trace.samples.size());
  return trace;
}

double drift(const std::deque<TrackHistoryEntry>& history, double window_seconds) {
  if (history.empty()) {
    return 0.0;
  }
  const TrackHistoryEntry& now = history.back();
  const double cutoff = now.time - window_seconds;
  // Small tolerance so frames exactly one window apart count despite rounding.
  const double eps = 1e-9 * std::max(1.0, std::abs(now.time));
  for (auto it = history.rbegin(); it != history.rend(); ++it) {
    if (it->time <= cutoff + eps) {
      return std::abs(now.range - it->range);
    }
  }
  return 0.0;
}

ActivityState fsm_step(const ActivityState& prev, bool detected, double drift_m, double v_md,
                       const FsmThresholds& thresholds) {
  if (!detected) {
    return {};
  }
  ActivityState next = prev;
  if (drift_m > thresholds.walking_drift_m) {
    next.activity = Activity::walking;
    return next;
  }
  if (next.waving_latch) {
    next.waving_latch = !(v_md < thresholds.waving_exit_mps);
  } else {
    next.waving_latch = v_md > thresholds.waving_enter_mps;
  }
  next.activity = next.waving_latch ? Activity::waving : Activity::standing;
  return next;
}

}  // namespace isac
