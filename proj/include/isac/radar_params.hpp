#pragma once

#include <cstddef>

#include "isac/types.hpp"

namespace isac {

/// Waveform and frame numerology of the testbed.
struct SystemConfig {
  double carrier_frequency = 160e9;  // Hz
  double sample_rate = 4e9;          // Hz, complex baseband
  std::size_t sequence_length = 8192;
  std::size_t zc_root = 1;
  std::size_t pri_sequences = 100;  // sequence periods per pulse repetition interval
  std::size_t cpi_pulses = 512;
  double speed_of_light = 299'792'458.0;

  bool operator==(const SystemConfig&) const = default;
};

/// Physical quantities that follow from a SystemConfig. Produced only by derive().
struct DerivedParams {
  SystemConfig config;
  double wavelength = 0;                // m
  double range_bin = 0;                 // m per correlation lag
  double sequence_duration = 0;         // s
  double pri = 0;                       // s
  double cpi = 0;                       // s
  double velocity_bin = 0;              // m/s per Doppler bin
  double max_unambiguous_velocity = 0;  // m/s
  double max_unambiguous_range = 0;     // m
  double frame_rate = 0;                // Hz, non-overlapping CPIs

  std::size_t sequence_length() const { return config.sequence_length; }
  std::size_t cpi_pulses() const { return config.cpi_pulses; }
};

/// Throws ConfigError naming the first violated rule.
void validate(const SystemConfig& config);

DerivedParams derive(const SystemConfig& config);

}  // namespace isac
