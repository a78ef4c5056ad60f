#include "isac/scene.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include <boost/random/normal_distribution.hpp>

namespace isac {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string fmt_double(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

std::string segment_field(std::size_t i, const char* field) {
  return "segments[" + std::to_string(i) + "]." + field;
}

// End of segment i: explicit duration, next start, or end of script.
double segment_end(const ScenarioScript& script, std::size_t i) {
  double end = script.duration;
  if (i + 1 < script.segments.size()) {
    end = std::min(end, script.segments[i + 1].start_time);
  }
  if (script.segments[i].duration) {
    end = std::min(end, script.segments[i].start_time + *script.segments[i].duration);
  }
  return end;
}

double human_amplitude(const HumanModel& human, double range) {
  double a = human.torso_amplitude;
  if (human.range_falloff) {
    const double ratio = human.falloff_reference_range / range;
    a *= ratio * ratio;
  }
  return a;
}

}  // namespace

std::string_view to_string(Activity activity) {
  switch (activity) {
    case Activity::absent:
      return "absent";
    case Activity::standing:
      return "standing";
    case Activity::walking:
      return "walking";
    case Activity::waving:
      return "waving";
  }
  return "absent";
}

std::optional<Activity> parse_activity(std::string_view name) {
  for (auto a : {Activity::absent, Activity::standing, Activity::walking, Activity::waving}) {
    if (to_string(a) == name) {
      return a;
    }
  }
  return std::nullopt;
}

const Segment* segment_at(const ScenarioScript& script, double t) {
  const Segment* found = nullptr;
  for (const auto& seg : script.segments) {
    if (seg.start_time <= t) {
      found = &seg;
    } else {
      break;
    }
  }
  if (found != nullptr && found->duration && t >= found->start_time + *found->duration) {
    return nullptr;
  }
  return found;
}

Activity activity_at(const ScenarioScript& script, double t) {
  const Segment* seg = segment_at(script, t);
  return seg == nullptr ? Activity::absent : seg->activity;
}

std::vector<ScattererState> scatterers_at(const ScenarioScript& script, double t) {
  std::vector<ScattererState> out;
  out.reserve(script.clutter.size() + 2);
  const Segment* seg = segment_at(script, t);
  if (seg != nullptr && seg->activity != Activity::absent) {
    const HumanModel& human = script.human;
    const double dt = t - seg->start_time;
    ScattererState torso;
    if (seg->activity == Activity::walking) {
      torso.range = seg->start_range + seg->walk_speed * dt;
      torso.radial_velocity = seg->walk_speed;
    } else {
      const double w = kTwoPi * human.sway_frequency;
      torso.range = seg->start_range + human.sway_amplitude * std::sin(w * dt);
      torso.radial_velocity = human.sway_amplitude * w * std::cos(w * dt);
    }
    torso.amplitude = human_amplitude(human, torso.range);
    out.push_back(torso);

    if (seg->activity == Activity::waving) {
      const double w = kTwoPi * seg->wave_frequency;
      ScattererState limb;
      limb.range = torso.range + seg->wave_amplitude * std::sin(w * dt);
      limb.radial_velocity = torso.radial_velocity + seg->wave_amplitude * w * std::cos(w * dt);
      limb.amplitude = human.limb_ratio * human_amplitude(human, limb.range);
      out.push_back(limb);
    }
  }
  for (const auto& c : script.clutter) {
    out.push_back({c.range, 0.0, c.amplitude});
  }
  return out;
}

void validate(const ScenarioScript& script, const DerivedParams& params) {
  const double r_max = params.max_unambiguous_range;
  const double v_max = params.max_unambiguous_velocity;
  auto fail = [](const std::string& field, const std::string& rule) {
    throw ScenarioError(field + ": " + rule);
  };
  auto check_range = [&](const std::string& field, double r) {
    if (!(r > 0.0 && r < r_max)) {
      fail(field, "range " + fmt_double(r) + " m outside (0, " + fmt_double(r_max) +
                      ") m unambiguous interval");
    }
  };

  if (!(script.duration > 0.0) || !std::isfinite(script.duration)) {
    fail("duration", "must be a finite positive number of seconds");
  }
  if (script.snr_db && !std::isfinite(*script.snr_db)) {
    fail("snr_db", "must be finite (use null for a noise-free scene)");
  }

  const HumanModel& h = script.human;
  if (!(h.torso_amplitude >= 0.0)) fail("human.torso_amplitude", "must be >= 0");
  if (!(h.limb_ratio >= 0.0)) fail("human.limb_ratio", "must be >= 0");
  if (!(h.sway_amplitude >= 0.0)) fail("human.sway_amplitude", "must be >= 0");
  if (!(h.sway_frequency >= 0.0)) fail("human.sway_frequency", "must be >= 0");
  if (h.range_falloff && !(h.falloff_reference_range > 0.0)) {
    fail("human.falloff_reference_range", "must be > 0");
  }
  if (kTwoPi * h.sway_frequency * h.sway_amplitude >= v_max) {
    fail("human.sway_amplitude", "peak sway speed exceeds max unambiguous velocity " +
                                     fmt_double(v_max) + " m/s");
  }

  for (std::size_t i = 0; i < script.clutter.size(); ++i) {
    const std::string base = "clutter[" + std::to_string(i) + "]";
    check_range(base + ".range", script.clutter[i].range);
    if (!(script.clutter[i].amplitude >= 0.0)) fail(base + ".amplitude", "must be >= 0");
  }

  for (std::size_t i = 0; i < script.segments.size(); ++i) {
    const Segment& s = script.segments[i];
    if (!(s.start_time >= 0.0) || !std::isfinite(s.start_time)) {
      fail(segment_field(i, "start_time"), "must be a finite time >= 0");
    }
    if (s.duration && !(*s.duration > 0.0)) {
      fail(segment_field(i, "duration"), "must be > 0");
    }
    if (i > 0) {
      const Segment& prev = script.segments[i - 1];
      if (s.start_time < prev.start_time) {
        fail(segment_field(i, "start_time"),
             "segments must be sorted by start_time (segment " + std::to_string(i) +
                 " starts before segment " + std::to_string(i - 1) + ")");
      }
      const bool same_start = s.start_time == prev.start_time;
      const bool runs_into = prev.duration && s.start_time < prev.start_time + *prev.duration;
      if (same_start || runs_into) {
        fail(segment_field(i, "start_time"), "segments " + std::to_string(i - 1) + " and " +
                                                 std::to_string(i) + " overlap");
      }
    }
    if (s.activity == Activity::absent) {
      continue;
    }
    check_range(segment_field(i, "start_range"), s.start_range);
    if (std::abs(s.walk_speed) >= v_max) {
      fail(segment_field(i, "walk_speed"), "|" + fmt_double(s.walk_speed) +
                                               "| m/s exceeds max unambiguous velocity " +
                                               fmt_double(v_max) + " m/s");
    }
    if (s.activity == Activity::walking) {
      const double end_range = s.start_range + s.walk_speed * (segment_end(script, i) - s.start_time);
      check_range(segment_field(i, "walk_speed") + " (range at segment end)", end_range);
    }
    if (s.activity == Activity::waving) {
      if (!(s.wave_amplitude >= 0.0)) fail(segment_field(i, "wave_amplitude"), "must be >= 0");
      if (!(s.wave_frequency >= 0.0)) fail(segment_field(i, "wave_frequency"), "must be >= 0");
      if (kTwoPi * s.wave_frequency * s.wave_amplitude >= v_max) {
        fail(segment_field(i, "wave_amplitude"),
             "peak wave speed " + fmt_double(kTwoPi * s.wave_frequency * s.wave_amplitude) +
                 " m/s exceeds max unambiguous velocity " + fmt_double(v_max) + " m/s");
      }
      check_range(segment_field(i, "wave_amplitude") + " (limb range)",
                  s.start_range - s.wave_amplitude - h.sway_amplitude);
      check_range(segment_field(i, "wave_amplitude") + " (limb range)",
                  s.start_range + s.wave_amplitude + h.sway_amplitude);
    }
  }
}

std::mt19937_64 pulse_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t pulse_index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    static_cast<std::uint32_t>(pulse_index),
                    static_cast<std::uint32_t>(pulse_index >> 32)};
  return std::mt19937_64(seq);
}

double noise_variance(double snr_db, std::size_t sequence_length) {
  // Correlation divides by N and sums N unit-modulus terms: bin variance = sigma^2 / N.
  return static_cast<double>(sequence_length) * std::pow(10.0, -snr_db / 10.0);
}

PulseSynthesizer::PulseSynthesizer(const ComplexSequence& reference, const DerivedParams& params,
                                   FftPlanning planning)
    : params_(params),
      spectrum_(reference.samples),
      backward_(reference.size(), FftDirection::backward, true, planning) {
  if (reference.size() != params.sequence_length()) {
    throw std::invalid_argument("reference length does not match sequence_length");
  }
  FftPlan forward(reference.size(), FftDirection::forward, true, planning);
  forward.execute_in_place(spectrum_);
}

void PulseSynthesizer::synthesize_into(std::span<Complex> out,
                                       std::span<const ScattererState> scatterers,
                                       std::optional<double> snr_db,
                                       std::mt19937_64& rng) const {
  const std::size_t n = spectrum_.size();
  if (out.size() != n) {
    throw std::invalid_argument("pulse buffer length mismatch");
  }
  std::fill(out.begin(), out.end(), Complex{});
  const double nd = static_cast<double>(n);
  constexpr std::size_t kAnchor = 64;

  for (const auto& s : scatterers) {
    if (s.amplitude == 0.0) {
      continue;
    }
    const double delay = 2.0 * s.range / params_.config.speed_of_light * params_.config.sample_rate;
    const double carrier_phase =
        -2.0 * kTwoPi * std::fmod(s.range / params_.wavelength, 1.0);
    const Complex gain = std::polar(s.amplitude, carrier_phase);
    // Negative-frequency half uses k - N, i.e. an extra factor exp(+j 2 pi delay).
    const Complex wrap = std::polar(1.0, kTwoPi * std::fmod(delay, 1.0));
    const Complex step = std::polar(1.0, -kTwoPi * delay / nd);
    const Complex gain_wrapped = gain * wrap;
    // An even-length Nyquist bin is shared by +N/2 and -N/2; averaging the two keeps
    // the delayed reference's correlation phase-exact at integer lags.
    const Complex nyquist = gain * std::cos(std::numbers::pi * std::fmod(delay, 2.0));
    Complex ramp;
    for (std::size_t k = 0; k < n; ++k) {
      if (k % kAnchor == 0) {
        const double cycles = std::fmod(delay * static_cast<double>(k) / nd, 1.0);
        ramp = std::polar(1.0, -kTwoPi * cycles);
      } else {
        ramp = cmul(ramp, step);
      }
      if (2 * k < n) {
        out[k] += cmul(gain, ramp);
      } else if (2 * k > n) {
        out[k] += cmul(gain_wrapped, ramp);
      } else {
        out[k] += nyquist;
      }
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    out[k] = cmul(out[k], spectrum_[k]) / nd;
  }
  backward_.execute_in_place(out);

  if (snr_db) {
    boost::random::normal_distribution<double> normal(0.0,
                                                      std::sqrt(noise_variance(*snr_db, n) / 2.0));
    for (auto& x : out) {
      const double re = normal(rng);
      const double im = normal(rng);
      x += Complex(re, im);
    }
  }
}

PulseBlock PulseSynthesizer::synthesize(std::span<const ScattererState> scatterers,
                                        std::optional<double> snr_db, std::mt19937_64& rng,
                                        double pulse_time) const {
  PulseBlock block;
  block.pulse_time = pulse_time;
  block.samples.resize(spectrum_.size());
  synthesize_into(block.samples, scatterers, snr_db, rng);
  return block;
}

PulseBlock synthesize_pulse(const ComplexSequence& reference,
                            std::span<const ScattererState> scatterers, const DerivedParams& params,
                            std::optional<double> snr_db, std::mt19937_64& rng, double pulse_time) {
  return PulseSynthesizer(reference, params, FftPlanning::estimate)
      .synthesize(scatterers, snr_db, rng, pulse_time);
}

}  // namespace isac
