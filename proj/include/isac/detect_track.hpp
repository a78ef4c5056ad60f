#pragma once

#include <cstddef>
#include <deque>
#include <optional>

#include <Eigen/Core>

#include "isac/radar_params.hpp"
#include "isac/rd_processing.hpp"

namespace isac {

/// Range window [min_range_bin, max_range_bin) searched for the target, minus
/// `zero_doppler_guard` Doppler rows on each side of zero Doppler.
struct DetectionScope {
  std::size_t min_range_bin = 0;
  std::size_t max_range_bin = 0;
  std::size_t zero_doppler_guard = 1;
};

DetectionScope make_scope(const DerivedParams& params, double min_range_m, double max_range_m,
                          std::size_t guard_bins);

struct Detection {
  float power_db = kMapFloorDb;
  double range = 0;     // m
  double velocity = 0;  // m/s
  std::size_t range_bin = 0;
  std::size_t doppler_bin = 0;  // map row
};

/// Strongest cell in the scope; ties go to the lowest range bin, then the lowest
/// Doppler row. Throws std::invalid_argument if the scope is empty.
Detection scope_max(const RangeDopplerMap& map, const DetectionScope& scope);

/// Median power of the scope cells; the noise reference for fixed thresholds.
double scope_median_db(const RangeDopplerMap& map, const DetectionScope& scope);

struct HysteresisState {
  bool active = false;
  double upper_db = 15.0;
  double lower_db = 10.0;
};

/// Rises strictly above upper_db, falls strictly below lower_db.
HysteresisState hysteresis_step(HysteresisState state, double power_db);

struct TrackHistoryEntry {
  double time = 0;   // s
  double range = 0;  // m, filtered
};

struct TargetTrack {
  Eigen::Vector2d state = Eigen::Vector2d::Zero();       // [range m, velocity m/s]
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Identity();
  std::size_t last_update_frame = 0;
  std::size_t consecutive_misses = 0;  // gated-out measurements since the last update
  std::deque<TrackHistoryEntry> history;
};

struct KalmanSettings {
  double accel_sigma = 1.0;         // m/s^2, white-noise acceleration
  double range_sigma_bins = 1.0;    // measurement std, range bins
  double velocity_sigma_bins = 1.0; // measurement std, Doppler bins
  double init_sigma_bins = 10.0;    // initial std in both coordinates, bins
  double history_seconds = 2.0;     // filtered-range history kept for drift
  // Validation gate on the normalized innovation squared; 0 disables gating.
  // 13.82 is the 99.9% point of chi-square with 2 degrees of freedom.
  double gate_nis = 13.82;
  std::size_t max_coast_frames = 3;  // re-initialize on the measurement after this many misses
};

/// y^T S^-1 y for the innovation of `z` against a predicted track.
double normalized_innovation(const TargetTrack& predicted, const Detection& z,
                             const Eigen::Matrix2d& R);

/// Constant-velocity prediction with discrete white-noise acceleration.
TargetTrack kalman_predict(const TargetTrack& track, double dt, double accel_sigma);

/// Measurement update with H = I and Joseph-form covariance.
/// Throws std::invalid_argument if P or R is not symmetric positive definite.
TargetTrack kalman_update(const TargetTrack& track, const Detection& z, const Eigen::Matrix2d& R);

/// R = diag((range_sigma_bins * range_bin)^2, (velocity_sigma_bins * velocity_bin)^2).
Eigen::Matrix2d measurement_covariance(const DerivedParams& params, const KalmanSettings& settings);

/// Strongest scope cell whose innovation against `predicted` lies inside the gate.
std::optional<Detection> gated_scope_max(const RangeDopplerMap& map, const DetectionScope& scope,
                                         const TargetTrack& predicted, const Eigen::Matrix2d& R,
                                         double gate_nis);

/// Lets the tracker look past a gated-out global maximum for a weaker in-gate cell.
struct GatedSearch {
  const RangeDopplerMap* map = nullptr;
  DetectionScope scope;
  double min_power_db = 0;  // in-gate cells below this do not count as measurements
};

/// Start a track on the first active frame, predict+update while active, drop on release.
/// When the detection falls outside the gate, the strongest in-gate cell from
/// `search` (if given and above its floor) is used instead; failing that the track
/// coasts on its prediction, restarting on the detection after max_coast_frames
/// consecutive misses.
std::optional<TargetTrack> track_lifecycle(const std::optional<TargetTrack>& track,
                                           const HysteresisState& hysteresis,
                                           const Detection& detection, double dt,
                                           std::size_t frame_index, double frame_time,
                                           const DerivedParams& params,
                                           const KalmanSettings& settings,
                                           const GatedSearch* search = nullptr);

}  // namespace isac
