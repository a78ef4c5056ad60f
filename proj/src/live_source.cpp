#include "isac/live_source.hpp"

#include <algorithm>
#include <thread>

namespace isac {

namespace {

Segment make_segment(Activity activity, double start_time, double range, double speed) {
  Segment s;
  s.start_time = start_time;
  s.activity = activity;
  s.start_range = range;
  s.walk_speed = activity == Activity::walking ? speed : 0.0;
  return s;
}

}  // namespace

LiveSource::LiveSource(ScenarioScript base, const DerivedParams& params,
                       std::shared_ptr<const PulseSynthesizer> synth, LiveState initial,
                       Options options)
    : script_(std::move(base)),
      params_(params),
      synth_(std::move(synth)),
      options_(options),
      state_(initial) {
  script_.duration = std::numeric_limits<double>::max();
  script_.snr_db = state_.snr_db;
  state_.range = std::clamp(state_.range, options_.limits.min_range_m, options_.limits.max_range_m);
  script_.segments = {make_segment(state_.activity, 0.0, state_.range, state_.speed)};
}

void LiveSource::submit(const ControlMessage& msg) {
  {
    std::lock_guard lock(mutex_);
    pending_.push_back(msg);
  }
  cv_.notify_all();
}

void LiveSource::stop() {
  stopped_.store(true);
  cv_.notify_all();
}

LiveState LiveSource::state() const {
  std::lock_guard lock(mutex_);
  return state_;
}

double LiveSource::torso_range(double t) const {
  const Segment& s = script_.segments.front();
  if (s.activity == Activity::walking) {
    return s.start_range + s.walk_speed * (t - s.start_time);
  }
  return s.start_range;
}

void LiveSource::reanchor(double t) {
  state_.range = torso_range(t);
  script_.segments = {make_segment(state_.activity, t, state_.range, state_.speed)};
}

void LiveSource::apply(const ControlMessage& msg, double t) {
  switch (msg.kind) {
    case ControlKind::set_activity:
      state_.activity = msg.activity;
      reanchor(t);
      break;
    case ControlKind::set_range:
      state_.activity = script_.segments.front().activity;
      script_.segments = {make_segment(state_.activity, t, msg.value, state_.speed)};
      state_.range = msg.value;
      break;
    case ControlKind::set_speed:
      state_.range = torso_range(t);
      state_.speed = msg.value;
      reanchor(t);
      break;
    case ControlKind::set_snr:
      state_.snr_db = msg.value;
      script_.snr_db = msg.value;
      break;
    case ControlKind::pause:
      state_.paused = true;
      break;
    case ControlKind::resume:
      state_.paused = false;
      break;
  }
}

std::optional<SynthFrame> LiveSource::next() {
  std::size_t index = 0;
  ScenarioScript frozen;
  {
    std::unique_lock lock(mutex_);
    for (;;) {
      if (stopped_) return std::nullopt;
      const double t0 =
          static_cast<double>(state_.next_frame * params_.cpi_pulses()) * params_.pri;
      while (!pending_.empty()) {
        apply(pending_.front(), t0);
        pending_.pop_front();
      }
      if (!state_.paused) {
        // Turn around if this CPI would carry a walker past a range limit.
        if (state_.activity == Activity::walking) {
          const double r0 = torso_range(t0);
          const double r1 = torso_range(t0 + params_.cpi);
          if (r1 > options_.limits.max_range_m || r1 < options_.limits.min_range_m) {
            state_.speed = -state_.speed;
            reanchor(t0);
          }
          state_.range = r0;
        } else {
          state_.range = torso_range(t0);
        }
        break;
      }
      wall_started_ = false;
      cv_.wait_for(lock, std::chrono::milliseconds(100));
    }
    index = state_.next_frame++;
    frozen = script_;
  }

  if (options_.pace) {
    const auto now = std::chrono::steady_clock::now();
    if (!wall_started_) {
      next_wall_ = now;
      wall_started_ = true;
    }
    std::this_thread::sleep_until(next_wall_);
    next_wall_ += std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(params_.cpi));
  }
  return synthesize_frame(frozen, index, *synth_, params_);
}

}  // namespace isac
