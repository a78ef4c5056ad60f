#include "isac/detect_track.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace isac {

namespace {

bool in_guard(std::size_t row, std::size_t zero_row, std::size_t guard) {
  const std::size_t d = row > zero_row ? row - zero_row : zero_row - row;
  return d <= guard;
}

void check_scope(const RangeDopplerMap& map, const DetectionScope& scope) {
  if (scope.min_range_bin >= scope.max_range_bin || scope.max_range_bin > map.cols) {
    throw std::invalid_argument("detection scope [" + std::to_string(scope.min_range_bin) + ", " +
                                std::to_string(scope.max_range_bin) + ") invalid for " +
                                std::to_string(map.cols) + " range bins");
  }
  if (2 * scope.zero_doppler_guard + 1 >= map.rows) {
    throw std::invalid_argument("zero-Doppler guard leaves no Doppler rows in scope");
  }
}

bool symmetric_positive_definite(const Eigen::Matrix2d& m) {
  if (!m.allFinite() ||
      std::abs(m(0, 1) - m(1, 0)) > 1e-9 * (std::abs(m(0, 0)) + std::abs(m(1, 1)))) {
    return false;
  }
  return m(0, 0) > 0.0 && m.determinant() > 0.0;
}

}  // namespace

DetectionScope make_scope(const DerivedParams& params, double min_range_m, double max_range_m,
                          std::size_t guard_bins) {
  if (!(min_range_m >= 0.0) || !(max_range_m > min_range_m)) {
    throw ConfigError("detection scope must satisfy 0 <= min < max");
  }
  DetectionScope s;
  s.min_range_bin = static_cast<std::size_t>(std::floor(min_range_m / params.range_bin));
  s.max_range_bin = std::min<std::size_t>(
      params.sequence_length(),
      static_cast<std::size_t>(std::ceil(max_range_m / params.range_bin)) + 1);
  s.zero_doppler_guard = guard_bins;
  if (guard_bins < 1) {
    throw ConfigError("zero-Doppler guard must be at least 1 bin");
  }
  if (s.min_range_bin >= s.max_range_bin) {
    throw ConfigError("detection scope lies beyond the unambiguous range");
  }
  return s;
}

Detection scope_max(const RangeDopplerMap& map, const DetectionScope& scope) {
  check_scope(map, scope);
  const std::size_t zero = map.zero_doppler_row();
  bool found = false;
  std::size_t best_row = 0, best_col = 0;
  float best = 0;
  for (std::size_t row = 0; row < map.rows; ++row) {
    if (in_guard(row, zero, scope.zero_doppler_guard)) {
      continue;
    }
    const float* line = map.power_db.data() + row * map.cols;
    for (std::size_t col = scope.min_range_bin; col < scope.max_range_bin; ++col) {
      const float v = line[col];
      // Rows ascend, so on a tie only a lower range bin may replace the incumbent.
      if (!found || v > best || (v == best && col < best_col)) {
        found = true;
        best = v;
        best_row = row;
        best_col = col;
      }
    }
  }
  Detection d;
  d.power_db = best;
  d.range_bin = best_col;
  d.doppler_bin = best_row;
  d.range = map.range_of_col(best_col);
  d.velocity = map.velocity_of_row(best_row);
  return d;
}

double scope_median_db(const RangeDopplerMap& map, const DetectionScope& scope) {
  check_scope(map, scope);
  const std::size_t zero = map.zero_doppler_row();
  std::vector<float> cells;
  cells.reserve(map.rows * (scope.max_range_bin - scope.min_range_bin));
  for (std::size_t row = 0; row < map.rows; ++row) {
    if (in_guard(row, zero, scope.zero_doppler_guard)) continue;
    for (std::size_t col = scope.min_range_bin; col < scope.max_range_bin; ++col) {
      cells.push_back(map.at(row, col));
    }
  }
  auto mid = cells.begin() + static_cast<std::ptrdiff_t>(cells.size() / 2);
  std::nth_element(cells.begin(), mid, cells.end());
  return *mid;
}

HysteresisState hysteresis_step(HysteresisState state, double power_db) {
  if (!state.active && power_db > state.upper_db) {
    state.active = true;
  } else if (state.active && power_db < state.lower_db) {
    state.active = false;
  }
  return state;
}

TargetTrack kalman_predict(const TargetTrack& track, double dt, double accel_sigma) {
  if (!(dt > 0.0)) {
    throw std::invalid_argument("prediction interval must be positive");
  }
  Eigen::Matrix2d F;
  F << 1.0, dt, 0.0, 1.0;
  const double q = accel_sigma * accel_sigma;
  Eigen::Matrix2d Q;
  Q << q * dt * dt * dt * dt / 4.0, q * dt * dt * dt / 2.0, q * dt * dt * dt / 2.0, q * dt * dt;
  TargetTrack out = track;
  out.state = F * track.state;
  out.covariance = F * track.covariance * F.transpose() + Q;
  return out;
}

TargetTrack kalman_update(const TargetTrack& track, const Detection& z, const Eigen::Matrix2d& R) {
  if (!symmetric_positive_definite(track.covariance)) {
    throw std::invalid_argument("track covariance is not symmetric positive definite");
  }
  if (!symmetric_positive_definite(R)) {
    throw std::invalid_argument("measurement covariance is not symmetric positive definite");
  }
  const Eigen::Vector2d meas(z.range, z.velocity);
  const Eigen::Matrix2d& P = track.covariance;
  const Eigen::Matrix2d S = P + R;
  const Eigen::Matrix2d K = P * S.inverse();
  const Eigen::Matrix2d I_K = Eigen::Matrix2d::Identity() - K;

  TargetTrack out = track;
  out.state = track.state + K * (meas - track.state);
  Eigen::Matrix2d joseph = I_K * P * I_K.transpose() + K * R * K.transpose();
  out.covariance = 0.5 * (joseph + joseph.transpose());
  return out;
}

Eigen::Matrix2d measurement_covariance(const DerivedParams& params, const KalmanSettings& settings) {
  const double sr = settings.range_sigma_bins * params.range_bin;
  const double sv = settings.velocity_sigma_bins * params.velocity_bin;
  Eigen::Matrix2d R = Eigen::Matrix2d::Zero();
  R(0, 0) = sr * sr;
  R(1, 1) = sv * sv;
  return R;
}

double normalized_innovation(const TargetTrack& predicted, const Detection& z,
                             const Eigen::Matrix2d& R) {
  const Eigen::Vector2d y = Eigen::Vector2d(z.range, z.velocity) - predicted.state;
  const Eigen::Matrix2d S = predicted.covariance + R;
  return y.dot(S.ldlt().solve(y));
}

std::optional<Detection> gated_scope_max(const RangeDopplerMap& map, const DetectionScope& scope,
                                         const TargetTrack& predicted, const Eigen::Matrix2d& R,
                                         double gate_nis) {
  check_scope(map, scope);
  const Eigen::Matrix2d S = predicted.covariance + R;
  const Eigen::Matrix2d S_inv = S.inverse();
  // The gate ellipse lies inside |dr| <= sqrt(g S_rr), |dv| <= sqrt(g S_vv).
  const double half_r = std::sqrt(gate_nis * S(0, 0));
  const double half_v = std::sqrt(gate_nis * S(1, 1));
  const double r0 = predicted.state(0);
  const double v0 = predicted.state(1);
  const double zero = static_cast<double>(map.zero_doppler_row());
  const auto clamp_index = [](double x, double lo, double hi) {
    return static_cast<std::size_t>(std::clamp(x, lo, hi));
  };
  const std::size_t col_lo = clamp_index(std::ceil((r0 - half_r) / map.range_bin),
                                         static_cast<double>(scope.min_range_bin),
                                         static_cast<double>(scope.max_range_bin));
  const std::size_t col_hi = clamp_index(std::floor((r0 + half_r) / map.range_bin) + 1,
                                         static_cast<double>(col_lo),
                                         static_cast<double>(scope.max_range_bin));
  const std::size_t row_lo = clamp_index(std::ceil((v0 - half_v) / map.velocity_bin + zero), 0.0,
                                         static_cast<double>(map.rows));
  const std::size_t row_hi = clamp_index(std::floor((v0 + half_v) / map.velocity_bin + zero) + 1,
                                         static_cast<double>(row_lo),
                                         static_cast<double>(map.rows));

  std::optional<Detection> best;
  for (std::size_t row = row_lo; row < row_hi; ++row) {
    if (in_guard(row, map.zero_doppler_row(), scope.zero_doppler_guard)) continue;
    const double dv = map.velocity_of_row(row) - v0;
    for (std::size_t col = col_lo; col < col_hi; ++col) {
      const double dr = map.range_of_col(col) - r0;
      const double nis = S_inv(0, 0) * dr * dr + 2.0 * S_inv(0, 1) * dr * dv + S_inv(1, 1) * dv * dv;
      if (nis > gate_nis) continue;
      const float p = map.at(row, col);
      if (!best || p > best->power_db || (p == best->power_db && col < best->range_bin)) {
        best = Detection{p, map.range_of_col(col), map.velocity_of_row(row), col, row};
      }
    }
  }
  return best;
}

std::optional<TargetTrack> track_lifecycle(const std::optional<TargetTrack>& track,
                                           const HysteresisState& hysteresis,
                                           const Detection& detection, double dt,
                                           std::size_t frame_index, double frame_time,
                                           const DerivedParams& params,
                                           const KalmanSettings& settings,
                                           const GatedSearch* search) {
  if (!hysteresis.active) {
    return std::nullopt;
  }
  auto initialize = [&] {
    TargetTrack t;
    t.state = Eigen::Vector2d(detection.range, detection.velocity);
    const double sr = settings.init_sigma_bins * params.range_bin;
    const double sv = settings.init_sigma_bins * params.velocity_bin;
    t.covariance = Eigen::Matrix2d::Zero();
    t.covariance(0, 0) = sr * sr;
    t.covariance(1, 1) = sv * sv;
    t.last_update_frame = frame_index;
    return t;
  };
  TargetTrack next;
  if (!track) {
    next = initialize();
  } else {
    const Eigen::Matrix2d R = measurement_covariance(params, settings);
    TargetTrack predicted = kalman_predict(*track, dt, settings.accel_sigma);
    std::optional<Detection> measurement = detection;
    if (settings.gate_nis > 0.0 &&
        normalized_innovation(predicted, detection, R) > settings.gate_nis) {
      measurement.reset();
      if (search != nullptr && search->map != nullptr) {
        measurement =
            gated_scope_max(*search->map, search->scope, predicted, R, settings.gate_nis);
        if (measurement && measurement->power_db < search->min_power_db) {
          measurement.reset();
        }
      }
    }
    if (measurement) {
      next = kalman_update(predicted, *measurement, R);
      next.consecutive_misses = 0;
      next.last_update_frame = frame_index;
    } else if (track->consecutive_misses < settings.max_coast_frames) {
      next = std::move(predicted);
      ++next.consecutive_misses;
    } else {
      next = initialize();
      next.history = track->history;
    }
  }
  next.history.push_back({frame_time, next.state(0)});
  while (!next.history.empty() &&
         next.history.front().time < frame_time - settings.history_seconds) {
    next.history.pop_front();
  }
  return next;
}

}  // namespace isac
