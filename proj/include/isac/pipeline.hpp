#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "isac/config.hpp"
#include "isac/detect_track.hpp"
#include "isac/microdoppler.hpp"
#include "isac/rd_processing.hpp"
#include "isac/scene.hpp"
#include "isac/waveform.hpp"

namespace isac {

/// One CPI of receive blocks handed from synthesis to DSP.
struct SynthFrame {
  std::size_t index = 0;
  double start_time = 0;  // time of the first pulse
  double frame_time = 0;  // CPI centre
  Activity ground_truth = Activity::absent;
  ProfileMatrix pulses;
};

/// Per-CPI telemetry.
struct FrameEvent {
  std::size_t frame_index = 0;
  double frame_time = 0;
  bool detected = false;
  double power_db = kMapFloorDb;
  std::optional<double> track_range;
  std::optional<double> track_velocity;
  double v_md = 0;
  double drift = 0;
  Activity state = Activity::absent;
  Activity ground_truth = Activity::absent;
  double compute_time = 0;  // s, DSP + decision
};

class PipelineError : public std::runtime_error {
 public:
  PipelineError(std::size_t frame_index, const std::string& what)
      : std::runtime_error("frame " + std::to_string(frame_index) + ": " + what),
        frame_index_(frame_index) {}
  std::size_t frame_index() const { return frame_index_; }

 private:
  std::size_t frame_index_;
};

class FrameSource {
 public:
  virtual ~FrameSource() = default;
  /// Next CPI, or nullopt when the source is exhausted or stopped.
  virtual std::optional<SynthFrame> next() = 0;
};

/// Number of complete CPIs in a script: floor(floor(duration / pri) / cpi_pulses).
std::size_t frame_count(const ScenarioScript& script, const DerivedParams& params);

/// Synthesizes CPI `index` of a script. Pulse g = index * P + p is sent at g * pri
/// and draws noise from pulse_rng(seed, stream, g).
SynthFrame synthesize_frame(const ScenarioScript& script, std::size_t index,
                            const PulseSynthesizer& synth, const DerivedParams& params,
                            std::uint64_t stream = 0);

class ScriptedSource : public FrameSource {
 public:
  ScriptedSource(ScenarioScript script, const DerivedParams& params,
                 std::shared_ptr<const PulseSynthesizer> synth);
  std::optional<SynthFrame> next() override;
  std::size_t total_frames() const { return total_; }

 private:
  ScenarioScript script_;
  DerivedParams params_;
  std::shared_ptr<const PulseSynthesizer> synth_;
  std::size_t next_ = 0;
  std::size_t total_ = 0;
};

/// Stages (i)-(ii): correlation of every pulse and the range-Doppler map.
class DspStage {
 public:
  DspStage(const ComplexSequence& reference, const DerivedParams& params, FftPlanning planning);
  /// Correlates the frame's pulses in place and returns the map.
  RangeDopplerMap process(SynthFrame& frame) const;

 private:
  Correlator correlator_;
  RangeDopplerProcessor doppler_;
};

/// Stages (iii)-(v) and the activity state machine, advanced once per CPI.
class DecisionEngine {
 public:
  DecisionEngine(const PipelineConfig& config, const DerivedParams& params, double noise_floor_db);

  FrameEvent step(const RangeDopplerMap& map, Activity ground_truth);

  double noise_floor_db() const { return noise_floor_db_; }
  const HysteresisState& hysteresis() const { return hysteresis_; }
  const std::optional<TargetTrack>& track() const { return track_; }
  const DetectionScope& scope() const { return scope_; }

 private:
  PipelineConfig config_;
  DerivedParams params_;
  double noise_floor_db_;
  DetectionScope scope_;
  RoiSpec roi_;
  HysteresisState hysteresis_;
  std::optional<TargetTrack> track_;
  MicroDopplerTrace trace_;
  ActivityState activity_;
  std::optional<double> last_time_;
};

/// Median scope power of a target-free CPI built from the script's clutter and noise.
double calibrate_noise_floor(const ScenarioScript& script, const PipelineConfig& config,
                             const DerivedParams& params, const PulseSynthesizer& synth,
                             const DspStage& dsp);

struct PipelineCallbacks {
  std::function<void(const FrameEvent&)> on_event;
  // Called on the decision thread before the map is released.
  std::function<void(const RangeDopplerMap&, const FrameEvent&)> on_map;
};

/// Frame loop. With `pipelined`, synthesis, DSP and decision run on three threads
/// linked by single-slot hand-offs; frames move between stages by ownership.
/// Events are delivered in frame order. Setting `stop` ends the run after the
/// current frame. Stage failures surface as PipelineError.
void run_frames(FrameSource& source, const DspStage& dsp, DecisionEngine& engine,
                const PipelineCallbacks& callbacks, bool pipelined,
                const std::atomic<bool>* stop = nullptr);

/// Everything needed to run a script end to end.
struct PipelineContext {
  explicit PipelineContext(const PipelineConfig& config);

  PipelineConfig config;
  DerivedParams params;
  ComplexSequence reference;
  std::shared_ptr<const PulseSynthesizer> synth;
  std::unique_ptr<DspStage> dsp;
};

std::vector<FrameEvent> run_pipeline(const ScenarioScript& script, const PipelineConfig& config,
                                     const PipelineCallbacks& callbacks = {});

/// Per-frame agreement between state and ground truth.
struct ClassificationScore {
  std::size_t scored = 0;   // frames outside the transition guards
  std::size_t agree = 0;
  std::size_t absent = 0;   // ground-truth absent frames, guards included
  std::size_t absent_active = 0;
  double accuracy() const { return scored ? static_cast<double>(agree) / scored : 0.0; }
};

/// Times where the scripted ground-truth activity changes.
std::vector<double> activity_transitions(const ScenarioScript& script);

/// Frames whose time lies within `guard_s` of a transition are left out of
/// `scored`/`agree`; absent frames are always counted.
ClassificationScore score_classification(const std::vector<FrameEvent>& events,
                                         const ScenarioScript& script, double guard_s = 0.5);

struct BenchReport {
  std::size_t frames = 0;
  double mean_s = 0;
  double p95_s = 0;
  double max_s = 0;
  double cpi_s = 0;
  double real_time_factor = 0;  // cpi / mean compute time; 0 for an empty run
};

/// Times DSP + decision per CPI; synthesis is excluded. Frames cycle through the
/// script if it is shorter than n_frames.
BenchReport bench(const ScenarioScript& script, const PipelineConfig& config, std::size_t n_frames,
                  const std::function<void(const RangeDopplerMap&, const FrameEvent&)>& observer = {});

BenchReport summarize_timings(std::vector<double> seconds, double cpi_s);

}  // namespace isac
