#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "isac/fft.hpp"
#include "isac/radar_params.hpp"
#include "isac/types.hpp"
#include "isac/waveform.hpp"

namespace isac {

enum class Activity { absent, standing, walking, waving };

std::string_view to_string(Activity activity);
std::optional<Activity> parse_activity(std::string_view name);

struct Segment {
  double start_time = 0;                // s
  std::optional<double> duration;       // s; open-ended segments last until the next one
  Activity activity = Activity::absent;
  double start_range = 5.0;             // m
  double walk_speed = 0;                // m/s, signed, walking only
  double wave_amplitude = 0.15;         // m
  double wave_frequency = 1.5;          // Hz

  bool operator==(const Segment&) const = default;
};

struct ClutterPoint {
  double range = 0;      // m
  double amplitude = 0;  // linear

  bool operator==(const ClutterPoint&) const = default;
};

/// Point-scatterer human: one torso plus, while waving, one limb.
struct HumanModel {
  double torso_amplitude = 1.0;
  double limb_ratio = 0.25;
  double sway_amplitude = 0.005;  // m
  double sway_frequency = 0.3;    // Hz
  bool range_falloff = false;     // scale by (reference / r)^2
  double falloff_reference_range = 5.0;

  bool operator==(const HumanModel&) const = default;
};

struct ScenarioScript {
  std::vector<Segment> segments;
  std::optional<double> snr_db = 20.0;  // post-correlation SNR of a unit echo; empty = noise-free
  std::vector<ClutterPoint> clutter;
  std::uint64_t seed = 1;
  double duration = 10.0;  // s
  HumanModel human;

  bool operator==(const ScenarioScript&) const = default;
};

struct ScattererState {
  double range = 0;            // m
  double radial_velocity = 0;  // m/s, positive = receding
  double amplitude = 0;
};

struct PulseBlock {
  ComplexVector samples;
  double pulse_time = 0;
};

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Segment active at time t, or nullptr when t falls in a gap.
const Segment* segment_at(const ScenarioScript& script, double t);

/// Ground-truth activity at time t.
Activity activity_at(const ScenarioScript& script, double t);

/// Human scatterers (torso first, then limb) followed by clutter.
std::vector<ScattererState> scatterers_at(const ScenarioScript& script, double t);

/// Checks every script invariant against the radar limits; throws ScenarioError
/// naming the offending field.
void validate(const ScenarioScript& script, const DerivedParams& params);

/// Noise-stream generator for one pulse. Streams are keyed by (seed, stream, pulse)
/// so pulses can be synthesized in any order with identical output.
std::mt19937_64 pulse_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t pulse_index);

/// Per-sample complex noise variance giving `snr_db` at the correlation peak of a unit echo.
double noise_variance(double snr_db, std::size_t sequence_length);

/// Synthesizes receive blocks as a sum of delayed, phase-rotated copies of the
/// reference plus complex white Gaussian noise (stop-and-hop).
///
/// Delays are applied as a linear phase ramp on the reference spectrum, using
/// signed frequency indices, so sub-sample delays interpolate band-limited.
class PulseSynthesizer {
 public:
  PulseSynthesizer(const ComplexSequence& reference, const DerivedParams& params,
                   FftPlanning planning = default_fft_planning());

  /// Writes one block into `out` (64-byte aligned, sequence_length samples).
  void synthesize_into(std::span<Complex> out, std::span<const ScattererState> scatterers,
                       std::optional<double> snr_db, std::mt19937_64& rng) const;

  PulseBlock synthesize(std::span<const ScattererState> scatterers, std::optional<double> snr_db,
                        std::mt19937_64& rng, double pulse_time = 0) const;

 private:
  DerivedParams params_;
  ComplexVector spectrum_;  // FFT(reference), unnormalized
  FftPlan backward_;
};

PulseBlock synthesize_pulse(const ComplexSequence& reference,
                            std::span<const ScattererState> scatterers, const DerivedParams& params,
                            std::optional<double> snr_db, std::mt19937_64& rng,
                            double pulse_time = 0);

}  // namespace isac
