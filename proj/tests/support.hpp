#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <random>
#include <vector>

#include "isac/radar_params.hpp"
#include "isac/rd_processing.hpp"
#include "isac/scene.hpp"
#include "isac/waveform.hpp"

namespace isac::test {

inline const DerivedParams& default_params() {
  static const DerivedParams p = derive(SystemConfig{});
  return p;
}

inline const ComplexSequence& default_reference() {
  static const ComplexSequence r = zadoff_chu(8192, 1);
  return r;
}

inline const PulseSynthesizer& default_synth() {
  static const PulseSynthesizer s(default_reference(), default_params(), FftPlanning::estimate);
  return s;
}

inline const Correlator& default_correlator() {
  static const Correlator c(default_reference(), FftPlanning::estimate);
  return c;
}

/// Constant-velocity point scatterer for CPI-level tests; `range` holds at the CPI centre.
struct Mover {
  double range = 5.0;
  double velocity = 0.0;
  double amplitude = 1.0;
};

/// One CPI of correlated range profiles, pulse p at p * pri.
inline ProfileMatrix cpi_profiles(const std::vector<Mover>& movers,
                                  std::optional<double> snr_db = std::nullopt,
                                  std::uint64_t seed = 1) {
  const DerivedParams& params = default_params();
  ProfileMatrix m(params.cpi_pulses(), params.sequence_length());
  std::vector<ScattererState> s(movers.size());
  for (std::size_t p = 0; p < params.cpi_pulses(); ++p) {
    const double t = (static_cast<double>(p) - 0.5 * static_cast<double>(params.cpi_pulses())) * params.pri;
    for (std::size_t i = 0; i < movers.size(); ++i) {
      s[i] = {movers[i].range + movers[i].velocity * t, movers[i].velocity, movers[i].amplitude};
    }
    auto rng = pulse_rng(seed, 0, p);
    default_synth().synthesize_into(m.row(p), s, snr_db, rng);
    default_correlator().correlate_in_place(m.row(p));
  }
  return m;
}

/// Row/column of the strongest map cell.
struct Peak {
  std::size_t row = 0;
  std::size_t col = 0;
  float db = kMapFloorDb;
};

inline Peak map_peak(const RangeDopplerMap& map) {
  Peak best;
  for (std::size_t r = 0; r < map.rows; ++r) {
    for (std::size_t c = 0; c < map.cols; ++c) {
      if (map.at(r, c) > best.db) best = {r, c, map.at(r, c)};
    }
  }
  return best;
}

inline std::size_t argmax_abs(std::span<const Complex> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (std::abs(v[i]) > std::abs(v[best])) best = i;
  }
  return best;
}

/// Blank map with the default axes.
inline RangeDopplerMap floor_map(std::size_t rows = 512, std::size_t cols = 8192) {
  RangeDopplerMap m;
  m.rows = rows;
  m.cols = cols;
  m.range_bin = default_params().range_bin;
  m.velocity_bin = default_params().velocity_bin;
  m.power_db.assign(rows * cols, kMapFloorDb);
  return m;
}

}  // namespace isac::test
