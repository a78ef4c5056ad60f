#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace isac {

/// WebSocket stream server. Plain HTTP GETs on the same port serve static files
/// from `ui_dir`; upgrade requests open a stream session.
///
/// Each session has an ordered queue for control-plane messages (metadata, ack,
/// error, heartbeat) and a single latest-wins slot for frames, so a slow client
/// only ever loses frames. publish_frame() never blocks on clients.
class GatewayServer {
 public:
  struct Options {
    std::string address = "0.0.0.0";
    unsigned short port = 8765;  // 0 picks a free port
    std::size_t max_clients = 8;
    std::optional<std::filesystem::path> ui_dir;
    std::chrono::milliseconds heartbeat{2000};
  };

  /// Handles one text message from a client and returns the reply (ack or error).
  using ControlHandler = std::function<std::string(std::string_view text)>;

  GatewayServer(Options options, std::string metadata, ControlHandler on_control);
  ~GatewayServer();
  GatewayServer(const GatewayServer&) = delete;
  GatewayServer& operator=(const GatewayServer&) = delete;

  /// Binds and starts the network thread. Throws std::runtime_error on bind failure.
  void start();
  void stop();

  unsigned short port() const;
  std::size_t client_count() const;

  void publish_frame(std::string message, std::size_t frame_index);

  struct Impl;  // opaque; shared with the session classes in the implementation

 private:
  std::unique_ptr<Impl> impl_;
};

/// MIME type for a static asset, by extension.
std::string_view mime_type(const std::filesystem::path& path);

/// Maps a request target onto a file under `root`; empty if the target escapes
/// the root or is malformed. "/" maps to index.html.
std::optional<std::filesystem::path> resolve_static_path(const std::filesystem::path& root,
                                                         std::string_view target);

}  // namespace isac
