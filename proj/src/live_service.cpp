#include "isac/live_service.hpp"

namespace isac {

LiveService::LiveService(const PipelineConfig& config, ScenarioScript base, Options options)
    : ctx_(config), options_(std::move(options)) {
  const auto& det = config.detection;
  const DetectionScope scope = make_scope(ctx_.params, det.scope_min_m, det.scope_max_m,
                                          det.guard_bins);
  base.snr_db = options_.initial.snr_db;
  const double floor_db = calibrate_noise_floor(base, config, ctx_.params, *ctx_.synth, *ctx_.dsp);
  engine_ = std::make_unique<DecisionEngine>(config, ctx_.params, floor_db);

  meta_.range_bin = ctx_.params.range_bin;
  meta_.velocity_bin = ctx_.params.velocity_bin;
  meta_.map_rows = ctx_.params.cpi_pulses();
  meta_.map_cols = ctx_.params.sequence_length();
  meta_.thumb_col_begin = scope.min_range_bin;
  meta_.thumb_col_end = scope.max_range_bin;
  meta_.cpi_s = ctx_.params.cpi;
  meta_.noise_floor_db = floor_db;
  meta_.upper_db = engine_->hysteresis().upper_db;
  meta_.lower_db = engine_->hysteresis().lower_db;
  meta_.limits.min_range_m = det.scope_min_m;
  meta_.limits.max_range_m = det.scope_max_m;
  meta_.limits.max_speed_mps = ctx_.params.max_unambiguous_velocity;

  LiveSource::Options src_opts;
  src_opts.limits = meta_.limits;
  src_opts.pace = options_.pace;
  source_ = std::make_unique<LiveSource>(std::move(base), ctx_.params, ctx_.synth,
                                         options_.initial, src_opts);

  RangeDopplerMap shape_map;
  shape_map.rows = meta_.map_rows;
  shape_map.cols = meta_.map_cols;
  shape_map.power_db.assign(shape_map.rows * shape_map.cols, kMapFloorDb);
  const Thumbnail shape =
      make_thumbnail(shape_map, meta_.thumb_col_begin, meta_.thumb_col_end);
  server_ = std::make_unique<GatewayServer>(
      options_.server, metadata_json(meta_, shape),
      [this](std::string_view text) { return handle_control(text); });
}

LiveService::~LiveService() {
  stop();
  if (loop_.joinable()) loop_.join();
}

std::string LiveService::handle_control(std::string_view text) {
  try {
    const ControlMessage msg = parse_control(text, meta_.limits);
    source_->submit(msg);
    return ack_json(msg);
  } catch (const ControlError& e) {
    return error_json(e.what());
  }
}

void LiveService::start() {
  server_->start();
  loop_ = std::thread([this] {
    PipelineCallbacks cb;
    std::size_t frames = 0;
    cb.on_map = [&](const RangeDopplerMap& map, const FrameEvent& ev) {
      const Thumbnail thumb = make_thumbnail(map, meta_.thumb_col_begin, meta_.thumb_col_end);
      server_->publish_frame(frame_json(ev, thumb, source_->state().paused), ev.frame_index);
    };
    cb.on_event = [&](const FrameEvent& ev) {
      {
        std::lock_guard lock(times_mutex_);
        times_.push_back(ev.compute_time);
      }
      if (options_.max_frames && ++frames >= *options_.max_frames) {
        stop_.store(true);
        source_->stop();
      }
    };
    try {
      run_frames(*source_, *ctx_.dsp, *engine_, cb, ctx_.config.runtime.pipelined, &stop_);
    } catch (...) {
      error_ = std::current_exception();
    }
  });
}

void LiveService::wait() {
  if (loop_.joinable()) loop_.join();
  if (error_) std::rethrow_exception(error_);
}

void LiveService::stop() {
  stop_.store(true);
  if (source_) source_->stop();
}

std::vector<double> LiveService::compute_times() const {
  std::lock_guard lock(times_mutex_);
  return times_;
}

}  // namespace isac
