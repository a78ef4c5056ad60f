#pragma once

#include <atomic>
#include <exception>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "isac/config.hpp"
#include "isac/gateway.hpp"
#include "isac/live_source.hpp"
#include "isac/pipeline.hpp"

namespace isac {

/// The simulator, pipeline and gateway wired together for `serve`.
class LiveService {
 public:
  struct Options {
    GatewayServer::Options server;
    LiveState initial;
    bool pace = true;
    std::optional<std::size_t> max_frames;  // stop after this many frames
  };

  /// `base` supplies the human model, clutter, seed and initial SNR.
  LiveService(const PipelineConfig& config, ScenarioScript base, Options options);
  ~LiveService();

  void start();
  /// Blocks until the frame loop ends (max_frames, stop(), or an error, which is rethrown).
  void wait();
  void stop();

  unsigned short port() const { return server_->port(); }
  std::size_t client_count() const { return server_->client_count(); }
  LiveSource& source() { return *source_; }
  const StreamMetadata& metadata() const { return meta_; }

  /// DSP + decision time of every processed frame so far.
  std::vector<double> compute_times() const;

 private:
  std::string handle_control(std::string_view text);

  PipelineContext ctx_;
  StreamMetadata meta_;
  std::unique_ptr<DecisionEngine> engine_;
  std::unique_ptr<LiveSource> source_;
  std::unique_ptr<GatewayServer> server_;
  Options options_;
  std::atomic<bool> stop_{false};
  std::thread loop_;
  std::exception_ptr error_;
  mutable std::mutex times_mutex_;
  std::vector<double> times_;
};

}  // namespace isac
