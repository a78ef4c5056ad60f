#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>

#include "isac/pipeline.hpp"
#include "isac/protocol.hpp"
#include "isac/scene.hpp"

namespace isac {

/// Scene parameters as seen by the operator.
struct LiveState {
  Activity activity = Activity::standing;
  double range = 5.0;   // torso range at the last frame boundary, m
  double speed = 0.5;   // walking speed, m/s (sign = direction)
  std::optional<double> snr_db = 20.0;
  bool paused = false;
  std::size_t next_frame = 0;
};

/// Endless frame source steered by control messages.
///
/// Controls are queued from any thread and applied together at the next frame
/// boundary, so each CPI is synthesized from one consistent scene. A walking
/// target reverses direction at the range limits. While paused, next() blocks
/// until resume or stop.
class LiveSource : public FrameSource {
 public:
  struct Options {
    ControlLimits limits;
    bool pace = true;  // emit frames no faster than one per CPI of wall time
  };

  LiveSource(ScenarioScript base, const DerivedParams& params,
             std::shared_ptr<const PulseSynthesizer> synth, LiveState initial, Options options);

  void submit(const ControlMessage& msg);
  void stop();
  bool stopped() const { return stopped_.load(); }

  std::optional<SynthFrame> next() override;

  LiveState state() const;

 private:
  void apply(const ControlMessage& msg, double t);
  void reanchor(double t);
  double torso_range(double t) const;

  ScenarioScript script_;  // one open segment describing the current motion
  DerivedParams params_;
  std::shared_ptr<const PulseSynthesizer> synth_;
  Options options_;

  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<ControlMessage> pending_;
  LiveState state_;
  std::atomic<bool> stopped_{false};
  std::chrono::steady_clock::time_point next_wall_;
  bool wall_started_ = false;
};

}  // namespace isac
