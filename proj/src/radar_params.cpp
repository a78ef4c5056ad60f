#include "isac/radar_params.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace isac {

namespace {

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw ConfigError(std::string(name) + " must be a finite positive value, got " +
                      std::to_string(value));
  }
}

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

}  // namespace

void validate(const SystemConfig& config) {
  require_positive(config.carrier_frequency, "carrier_frequency");
  require_positive(config.sample_rate, "sample_rate");
  require_positive(config.speed_of_light, "speed_of_light");
  if (config.sequence_length < 2) {
    throw ConfigError("sequence_length must be at least 2");
  }
  if (config.zc_root == 0 || std::gcd(config.zc_root, config.sequence_length) != 1) {
    throw ConfigError("zc_root " + std::to_string(config.zc_root) +
                      " must be positive and coprime with sequence_length " +
                      std::to_string(config.sequence_length));
  }
  if (config.pri_sequences < 1) {
    throw ConfigError("pri_sequences must be at least 1");
  }
  if (!is_power_of_two(config.cpi_pulses) || config.cpi_pulses < 2) {
    throw ConfigError("cpi_pulses must be a power of two >= 2, got " +
                      std::to_string(config.cpi_pulses));
  }
}

DerivedParams derive(const SystemConfig& config) {
  validate(config);
  DerivedParams p;
  p.config = config;
  const double c = config.speed_of_light;
  const auto n = static_cast<double>(config.sequence_length);
  p.wavelength = c / config.carrier_frequency;
  p.range_bin = c / (2.0 * config.sample_rate);
  p.sequence_duration = n / config.sample_rate;
  p.pri = static_cast<double>(config.pri_sequences) * p.sequence_duration;
  p.cpi = static_cast<double>(config.cpi_pulses) * p.pri;
  p.velocity_bin = p.wavelength / (2.0 * p.cpi);
  p.max_unambiguous_velocity = p.wavelength / (4.0 * p.pri);
  p.max_unambiguous_range = n * p.range_bin;
  p.frame_rate = 1.0 / p.cpi;
  return p;
}

}  // namespace isac
