#include "isac/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <exception>
#include <filesystem>
#include <mutex>
#include <numeric>
#include <thread>

namespace isac {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

/// Single-slot hand-off between two stage threads. push blocks while the slot is
/// occupied; close() wakes everyone and makes further pushes fail.
template <typename T>
class HandoffSlot {
 public:
  bool push(T value) {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return !item_ || closed_; });
    if (closed_) return false;
    item_.emplace(std::move(value));
    cv_.notify_all();
    return true;
  }

  std::optional<T> pop() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return item_ || closed_; });
    if (!item_) return std::nullopt;
    std::optional<T> out = std::move(item_);
    item_.reset();
    cv_.notify_all();
    return out;
  }

  void close() {
    std::lock_guard lock(mutex_);
    closed_ = true;
    cv_.notify_all();
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  std::optional<T> item_;
  bool closed_ = false;
};

struct MappedFrame {
  std::size_t index = 0;
  Activity ground_truth = Activity::absent;
  RangeDopplerMap map;
  double dsp_seconds = 0;
};

struct FailureSlot {
  std::mutex mutex;
  std::exception_ptr error;
  std::size_t frame = 0;

  void record(std::size_t f) {
    std::lock_guard lock(mutex);
    if (!error) {
      error = std::current_exception();
      frame = f;
    }
  }
};

[[noreturn]] void rethrow_as_pipeline_error(const FailureSlot& failure) {
  try {
    std::rethrow_exception(failure.error);
  } catch (const PipelineError&) {
    throw;
  } catch (const std::exception& e) {
    throw PipelineError(failure.frame, e.what());
  }
}

}  // namespace

std::size_t frame_count(const ScenarioScript& script, const DerivedParams& params) {
  const double pulses = std::floor(script.duration / params.pri + 1e-9);
  if (pulses <= 0) return 0;
  return static_cast<std::size_t>(pulses) / params.cpi_pulses();
}

SynthFrame synthesize_frame(const ScenarioScript& script, std::size_t index,
                            const PulseSynthesizer& synth, const DerivedParams& params,
                            std::uint64_t stream) {
  const std::size_t pulses = params.cpi_pulses();
  SynthFrame frame;
  frame.index = index;
  frame.start_time = static_cast<double>(index * pulses) * params.pri;
  frame.frame_time = frame.start_time + 0.5 * params.cpi;
  frame.ground_truth = activity_at(script, frame.frame_time);
  frame.pulses = ProfileMatrix(pulses, params.sequence_length());
  for (std::size_t p = 0; p < pulses; ++p) {
    const std::uint64_t g = index * pulses + p;
    const double t = static_cast<double>(g) * params.pri;
    const auto scatterers = scatterers_at(script, t);
    auto rng = pulse_rng(script.seed, stream, g);
    synth.synthesize_into(frame.pulses.row(p), scatterers, script.snr_db, rng);
  }
  return frame;
}

ScriptedSource::ScriptedSource(ScenarioScript script, const DerivedParams& params,
                               std::shared_ptr<const PulseSynthesizer> synth)
    : script_(std::move(script)),
      params_(params),
      synth_(std::move(synth)),
      total_(frame_count(script_, params)) {}

std::optional<SynthFrame> ScriptedSource::next() {
  if (next_ >= total_) return std::nullopt;
  return synthesize_frame(script_, next_++, *synth_, params_);
}

DspStage::DspStage(const ComplexSequence& reference, const DerivedParams& params,
                   FftPlanning planning)
    : correlator_(reference, planning), doppler_(params, planning) {}

RangeDopplerMap DspStage::process(SynthFrame& frame) const {
  for (std::size_t p = 0; p < frame.pulses.pulses(); ++p) {
    correlator_.correlate_in_place(frame.pulses.row(p));
  }
  return doppler_.process(frame.pulses, frame.index, frame.frame_time);
}

DecisionEngine::DecisionEngine(const PipelineConfig& config, const DerivedParams& params,
                               double noise_floor_db)
    : config_(config),
      params_(params),
      noise_floor_db_(noise_floor_db),
      scope_(make_scope(params, config.detection.scope_min_m, config.detection.scope_max_m,
                        config.detection.guard_bins)),
      trace_(make_trace(params, config.microdoppler.smoothing_window_s)) {
  hysteresis_.upper_db = noise_floor_db + config.detection.threshold_up_db;
  hysteresis_.lower_db = noise_floor_db + config.detection.threshold_down_db;
  const auto& md = config.microdoppler;
  roi_.range_halfwidth = md.roi_halfwidth_bins;
  roi_.zero_doppler_guard = md.roi_guard_bins;
  roi_.threshold_db = md.threshold_db;
  roi_.relative_threshold = md.relative_threshold;
  if (md.noise_gate_db) {
    roi_.min_power_db = noise_floor_db + *md.noise_gate_db;
  }
}

FrameEvent DecisionEngine::step(const RangeDopplerMap& map, Activity ground_truth) {
  FrameEvent ev;
  ev.frame_index = map.frame_index;
  ev.frame_time = map.frame_time;
  ev.ground_truth = ground_truth;

  const Detection det = scope_max(map, scope_);
  hysteresis_ = hysteresis_step(hysteresis_, det.power_db);
  double dt = last_time_ ? map.frame_time - *last_time_ : params_.cpi;
  if (!(dt > 0.0)) dt = params_.cpi;
  last_time_ = map.frame_time;

  const GatedSearch search{&map, scope_, hysteresis_.lower_db};
  track_ = track_lifecycle(track_, hysteresis_, det, dt, map.frame_index, map.frame_time, params_,
                           config_.tracking, &search);
  double drift_m = 0.0;
  if (track_) {
    const double v = microdoppler_velocity(map, *track_, roi_);
    trace_ = smooth(std::move(trace_), map.frame_time, v);
    drift_m = drift(track_->history, config_.microdoppler.drift_window_s);
    ev.track_range = track_->state(0);
    ev.track_velocity = track_->state(1);
    ev.v_md = trace_.smoothed;
  } else {
    trace_ = make_trace(params_, config_.microdoppler.smoothing_window_s);
  }
  activity_ = fsm_step(activity_, hysteresis_.active, drift_m, ev.v_md, config_.microdoppler.fsm);

  ev.detected = hysteresis_.active;
  ev.power_db = det.power_db;
  ev.drift = drift_m;
  ev.state = activity_.activity;
  return ev;
}

double calibrate_noise_floor(const ScenarioScript& script, const PipelineConfig& config,
                             const DerivedParams& params, const PulseSynthesizer& synth,
                             const DspStage& dsp) {
  ScenarioScript empty = script;
  empty.segments.clear();
  SynthFrame frame = synthesize_frame(empty, 0, synth, params, /*stream=*/1);
  const RangeDopplerMap map = dsp.process(frame);
  const DetectionScope scope = make_scope(params, config.detection.scope_min_m,
                                          config.detection.scope_max_m, config.detection.guard_bins);
  return scope_median_db(map, scope);
}

void run_frames(FrameSource& source, const DspStage& dsp, DecisionEngine& engine,
                const PipelineCallbacks& callbacks, bool pipelined, const std::atomic<bool>* stop) {
  auto stopped = [&] { return stop != nullptr && stop->load(); };
  auto decide = [&](MappedFrame& mf) {
    const auto start = Clock::now();
    FrameEvent ev = engine.step(mf.map, mf.ground_truth);
    ev.compute_time = mf.dsp_seconds + seconds_since(start);
    if (callbacks.on_map) callbacks.on_map(mf.map, ev);
    if (callbacks.on_event) callbacks.on_event(ev);
  };
  auto map_frame = [&](SynthFrame& f) {
    const auto start = Clock::now();
    MappedFrame mf;
    mf.index = f.index;
    mf.ground_truth = f.ground_truth;
    mf.map = dsp.process(f);
    mf.dsp_seconds = seconds_since(start);
    return mf;
  };

  if (!pipelined) {
    std::size_t index = 0;
    try {
      while (!stopped()) {
        auto f = source.next();
        if (!f) break;
        index = f->index;
        MappedFrame mf = map_frame(*f);
        decide(mf);
      }
    } catch (const PipelineError&) {
      throw;
    } catch (const std::exception& e) {
      throw PipelineError(index, e.what());
    }
    return;
  }

  HandoffSlot<SynthFrame> synth_to_dsp;
  HandoffSlot<MappedFrame> dsp_to_decision;
  FailureSlot failure;
  auto abort_all = [&] {
    synth_to_dsp.close();
    dsp_to_decision.close();
  };

  std::thread synth_thread([&] {
    std::size_t index = 0;
    try {
      while (!stopped()) {
        auto f = source.next();
        if (!f) break;
        index = f->index;
        if (!synth_to_dsp.push(std::move(*f))) break;
      }
    } catch (...) {
      failure.record(index);
      abort_all();
    }
    synth_to_dsp.close();
  });

  std::thread dsp_thread([&] {
    std::size_t index = 0;
    try {
      while (auto f = synth_to_dsp.pop()) {
        index = f->index;
        if (!dsp_to_decision.push(map_frame(*f))) break;
      }
    } catch (...) {
      failure.record(index);
      abort_all();
    }
    dsp_to_decision.close();
  });

  std::size_t index = 0;
  try {
    while (auto mf = dsp_to_decision.pop()) {
      index = mf->index;
      decide(*mf);
      if (stopped()) break;
    }
  } catch (...) {
    failure.record(index);
  }
  abort_all();
  synth_thread.join();
  dsp_thread.join();
  if (failure.error) {
    rethrow_as_pipeline_error(failure);
  }
}

PipelineContext::PipelineContext(const PipelineConfig& cfg)
    : config(cfg), params(derive(cfg.system)) {
  validate(config);
  reference = zadoff_chu(config.system.sequence_length, config.system.zc_root);
  const std::filesystem::path wisdom = config.runtime.fft_wisdom;
  if (!wisdom.empty()) import_fft_wisdom(wisdom);
  synth = std::make_shared<PulseSynthesizer>(reference, params, config.runtime.fft_planning);
  dsp = std::make_unique<DspStage>(reference, params, config.runtime.fft_planning);
  if (!wisdom.empty()) export_fft_wisdom(wisdom);
}

std::vector<FrameEvent> run_pipeline(const ScenarioScript& script, const PipelineConfig& config,
                                     const PipelineCallbacks& callbacks) {
  PipelineContext ctx(config);
  validate(script, ctx.params);
  const double floor_db = calibrate_noise_floor(script, config, ctx.params, *ctx.synth, *ctx.dsp);
  DecisionEngine engine(config, ctx.params, floor_db);
  ScriptedSource source(script, ctx.params, ctx.synth);

  std::vector<FrameEvent> events;
  events.reserve(source.total_frames());
  PipelineCallbacks cb = callbacks;
  cb.on_event = [&](const FrameEvent& ev) {
    events.push_back(ev);
    if (callbacks.on_event) callbacks.on_event(ev);
  };
  run_frames(source, *ctx.dsp, engine, cb, config.runtime.pipelined);
  return events;
}

std::vector<double> activity_transitions(const ScenarioScript& script) {
  std::vector<double> candidates;
  for (const Segment& s : script.segments) {
    candidates.push_back(s.start_time);
    if (s.duration) candidates.push_back(s.start_time + *s.duration);
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  std::vector<double> out;
  for (double t : candidates) {
    if (!(t > 0.0 && t < script.duration)) continue;
    const double eps = 1e-9 * std::max(1.0, t);
    if (activity_at(script, t - eps) != activity_at(script, t + eps)) out.push_back(t);
  }
  return out;
}

ClassificationScore score_classification(const std::vector<FrameEvent>& events,
                                         const ScenarioScript& script, double guard_s) {
  const std::vector<double> transitions = activity_transitions(script);
  ClassificationScore score;
  for (const FrameEvent& ev : events) {
    if (ev.ground_truth == Activity::absent) {
      ++score.absent;
      if (ev.state != Activity::absent) ++score.absent_active;
    }
    const bool guarded = std::any_of(transitions.begin(), transitions.end(), [&](double t) {
      return std::abs(ev.frame_time - t) <= guard_s;
    });
    if (guarded) continue;
    ++score.scored;
    if (ev.state == ev.ground_truth) ++score.agree;
  }
  return score;
}

BenchReport summarize_timings(std::vector<double> seconds, double cpi_s) {
  BenchReport r;
  r.cpi_s = cpi_s;
  r.frames = seconds.size();
  if (seconds.empty()) return r;
  std::sort(seconds.begin(), seconds.end());
  r.mean_s = std::accumulate(seconds.begin(), seconds.end(), 0.0) / static_cast<double>(seconds.size());
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(seconds.size())));
  r.p95_s = seconds[std::max<std::size_t>(rank, 1) - 1];
  r.max_s = seconds.back();
  r.real_time_factor = r.mean_s > 0.0 ? cpi_s / r.mean_s : 0.0;
  return r;
}

BenchReport bench(const ScenarioScript& script, const PipelineConfig& config, std::size_t n_frames,
                  const std::function<void(const RangeDopplerMap&, const FrameEvent&)>& observer) {
  PipelineContext ctx(config);
  if (n_frames == 0) {
    return summarize_timings({}, ctx.params.cpi);
  }
  validate(script, ctx.params);
  const std::size_t available = std::max<std::size_t>(frame_count(script, ctx.params), 1);
  const double floor_db = calibrate_noise_floor(script, config, ctx.params, *ctx.synth, *ctx.dsp);
  DecisionEngine engine(config, ctx.params, floor_db);

  std::vector<double> timings;
  timings.reserve(n_frames);
  for (std::size_t i = 0; i < n_frames; ++i) {
    SynthFrame frame = synthesize_frame(script, i % available, *ctx.synth, ctx.params);
    frame.index = i;
    frame.frame_time = (static_cast<double>(i) + 0.5) * ctx.params.cpi;
    const auto start = Clock::now();
    const RangeDopplerMap map = ctx.dsp->process(frame);
    FrameEvent ev = engine.step(map, frame.ground_truth);
    const double elapsed = seconds_since(start);
    ev.compute_time = elapsed;
    timings.push_back(elapsed);
    if (observer) observer(map, ev);
  }
  return summarize_timings(std::move(timings), ctx.params.cpi);
}

}  // namespace isac
