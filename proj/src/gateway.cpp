#include "isac/gateway.hpp"

#include <atomic>
#include <deque>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

#include <boost/asio/dispatch.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/steady_timer.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "isac/protocol.hpp"

namespace isac {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

constexpr std::size_t kMaxControlBytes = 64 * 1024;
constexpr char kServerName[] = "isac-gateway";

class WsSession;

}  // namespace

struct GatewayServer::Impl {
  Impl(Options o, std::string meta, ControlHandler handler)
      : options(std::move(o)), metadata(std::move(meta)), on_control(std::move(handler)) {}

  bool try_reserve_slot() {
    std::size_t n = live_sessions.load();
    while (n < options.max_clients) {
      if (live_sessions.compare_exchange_weak(n, n + 1)) return true;
    }
    return false;
  }

  void add(const std::shared_ptr<WsSession>& s) {
    std::lock_guard lock(mutex);
    sessions.push_back(s);
  }

  std::optional<std::size_t> last_frame_index() const {
    std::lock_guard lock(mutex);
    return last_frame;
  }

  double uptime() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  }

  void do_accept();

  Options options;
  const std::string metadata;
  ControlHandler on_control;

  // Declared before the io_context so sessions torn down with it can still reach them.
  mutable std::mutex mutex;
  std::vector<std::weak_ptr<WsSession>> sessions;
  std::atomic<std::size_t> live_sessions{0};
  std::optional<std::size_t> last_frame;
  std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

  net::io_context ioc{1};
  tcp::acceptor acceptor{ioc};
  std::thread thread;
  bool running = false;
};

namespace {

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket&& socket, GatewayServer::Impl& server)
      : ws_(std::move(socket)), timer_(ws_.get_executor()), server_(server) {}

  ~WsSession() { server_.live_sessions.fetch_sub(1); }

  void run(http::request<http::string_body> req) {
    req_ = std::move(req);
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.set_option(websocket::stream_base::decorator(
        [](websocket::response_type& res) { res.set(http::field::server, kServerName); }));
    ws_.read_message_max(kMaxControlBytes);
    ws_.async_accept(req_, beast::bind_front_handler(&WsSession::on_accept, shared_from_this()));
  }

  void offer_frame(std::shared_ptr<const std::string> msg) {
    net::post(ws_.get_executor(), [self = shared_from_this(), msg = std::move(msg)]() mutable {
      self->frame_ = std::move(msg);
      self->maybe_write();
    });
  }

 private:
  struct Outgoing {
    std::shared_ptr<const std::string> text;
    bool heartbeat = false;
  };

  void on_accept(beast::error_code ec) {
    if (ec) return;
    enqueue(std::make_shared<const std::string>(server_.metadata));
    server_.add(shared_from_this());
    arm_heartbeat();
    do_read();
  }

  void enqueue(std::shared_ptr<const std::string> msg, bool heartbeat = false) {
    if (heartbeat) {
      // A stalled client gets at most one pending heartbeat.
      for (const auto& q : queue_) {
        if (q.heartbeat) return;
      }
    }
    queue_.push_back({std::move(msg), heartbeat});
    maybe_write();
  }

  void maybe_write() {
    if (writing_ || closed_) return;
    if (!queue_.empty()) {
      current_ = std::move(queue_.front().text);
      queue_.pop_front();
    } else if (frame_) {
      current_ = std::move(frame_);
      frame_.reset();
    } else {
      return;
    }
    writing_ = true;
    ws_.text(true);
    ws_.async_write(net::buffer(*current_),
                    beast::bind_front_handler(&WsSession::on_write, shared_from_this()));
  }

  void on_write(beast::error_code ec, std::size_t) {
    writing_ = false;
    current_.reset();
    if (ec) {
      close();
      return;
    }
    maybe_write();
  }

  void do_read() {
    ws_.async_read(buffer_, beast::bind_front_handler(&WsSession::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      close();
      return;
    }
    std::string reply;
    if (!ws_.got_text()) {
      reply = error_json("binary messages are not supported");
    } else {
      const std::string text = beast::buffers_to_string(buffer_.data());
      try {
        reply = server_.on_control(text);
      } catch (const std::exception& e) {
        reply = error_json(e.what());
      }
    }
    buffer_.consume(buffer_.size());
    enqueue(std::make_shared<const std::string>(std::move(reply)));
    do_read();
  }

  void arm_heartbeat() {
    timer_.expires_after(server_.options.heartbeat);
    timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
      if (ec || self->closed_) return;
      self->enqueue(std::make_shared<const std::string>(heartbeat_json(
                        self->server_.uptime(), self->server_.last_frame_index(),
                        self->server_.live_sessions.load())),
                    true);
      self->arm_heartbeat();
    });
  }

  void close() {
    closed_ = true;
    timer_.cancel();
    queue_.clear();
    frame_.reset();
  }

  websocket::stream<beast::tcp_stream> ws_;
  net::steady_timer timer_;
  GatewayServer::Impl& server_;
  http::request<http::string_body> req_;
  beast::flat_buffer buffer_;
  std::deque<Outgoing> queue_;
  std::shared_ptr<const std::string> frame_;
  std::shared_ptr<const std::string> current_;
  bool writing_ = false;
  bool closed_ = false;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket&& socket, GatewayServer::Impl& server)
      : stream_(std::move(socket)), server_(server) {}

  void run() {
    net::dispatch(stream_.get_executor(),
                  beast::bind_front_handler(&HttpSession::do_read, shared_from_this()));
  }

 private:
  void do_read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_,
                     beast::bind_front_handler(&HttpSession::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec == http::error::end_of_stream) {
      stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
      return;
    }
    if (ec) return;

    if (websocket::is_upgrade(req_)) {
      if (server_.try_reserve_slot()) {
        stream_.expires_never();
        std::make_shared<WsSession>(stream_.release_socket(), server_)->run(std::move(req_));
        return;
      }
      send(text_response(http::status::service_unavailable, "client limit reached\n"));
      return;
    }
    serve_static();
  }

  http::response<http::string_body> text_response(http::status status, std::string body) {
    http::response<http::string_body> res{status, req_.version()};
    res.set(http::field::server, kServerName);
    res.set(http::field::content_type, "text/plain");
    res.keep_alive(req_.keep_alive());
    res.body() = std::move(body);
    res.prepare_payload();
    return res;
  }

  void serve_static() {
    if (req_.method() != http::verb::get && req_.method() != http::verb::head) {
      send(text_response(http::status::method_not_allowed, "only GET and HEAD are supported\n"));
      return;
    }
    if (!server_.options.ui_dir) {
      send(text_response(http::status::not_found, "no UI directory configured (serve --ui-dir)\n"));
      return;
    }
    const auto path = resolve_static_path(*server_.options.ui_dir,
                                          std::string_view(req_.target().data(), req_.target().size()));
    if (!path) {
      send(text_response(http::status::bad_request, "illegal request target\n"));
      return;
    }
    beast::error_code ec;
    http::file_body::value_type body;
    body.open(path->string().c_str(), beast::file_mode::scan, ec);
    if (ec) {
      send(text_response(http::status::not_found, "not found\n"));
      return;
    }
    const auto size = body.size();
    if (req_.method() == http::verb::head) {
      http::response<http::empty_body> res{http::status::ok, req_.version()};
      res.set(http::field::server, kServerName);
      res.set(http::field::content_type, std::string(mime_type(*path)));
      res.content_length(size);
      res.keep_alive(req_.keep_alive());
      send(std::move(res));
      return;
    }
    http::response<http::file_body> res{std::piecewise_construct, std::make_tuple(std::move(body)),
                                        std::make_tuple(http::status::ok, req_.version())};
    res.set(http::field::server, kServerName);
    res.set(http::field::content_type, std::string(mime_type(*path)));
    res.content_length(size);
    res.keep_alive(req_.keep_alive());
    send(std::move(res));
  }

  template <class Message>
  void send(Message&& msg) {
    auto sp = std::make_shared<std::decay_t<Message>>(std::forward<Message>(msg));
    response_ = sp;
    http::async_write(stream_, *sp,
                      [self = shared_from_this(), close = sp->need_eof()](beast::error_code ec,
                                                                          std::size_t) {
                        self->response_.reset();
                        if (ec) return;
                        if (close) {
                          self->stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
                          return;
                        }
                        self->do_read();
                      });
  }

  beast::tcp_stream stream_;
  GatewayServer::Impl& server_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
  std::shared_ptr<void> response_;
};

}  // namespace

void GatewayServer::Impl::do_accept() {
  acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
    if (!ec) {
      std::make_shared<HttpSession>(std::move(socket), *this)->run();
    }
    if (acceptor.is_open()) do_accept();
  });
}

GatewayServer::GatewayServer(Options options, std::string metadata, ControlHandler on_control)
    : impl_(std::make_unique<Impl>(std::move(options), std::move(metadata), std::move(on_control))) {}

GatewayServer::~GatewayServer() { stop(); }

void GatewayServer::start() {
  if (impl_->running) return;
  beast::error_code ec;
  const auto address = net::ip::make_address(impl_->options.address, ec);
  if (ec) {
    throw std::runtime_error("invalid listen address " + impl_->options.address);
  }
  const tcp::endpoint endpoint(address, impl_->options.port);
  auto& acc = impl_->acceptor;
  auto check = [&](const char* what) {
    if (ec) {
      throw std::runtime_error(std::string(what) + " " + impl_->options.address + ":" +
                               std::to_string(impl_->options.port) + ": " + ec.message());
    }
  };
  acc.open(endpoint.protocol(), ec);
  check("cannot open");
  acc.set_option(net::socket_base::reuse_address(true), ec);
  check("cannot configure");
  acc.bind(endpoint, ec);
  check("cannot bind");
  acc.listen(net::socket_base::max_listen_connections, ec);
  check("cannot listen on");
  impl_->do_accept();
  impl_->running = true;
  impl_->thread = std::thread([impl = impl_.get()] { impl->ioc.run(); });
}

void GatewayServer::stop() {
  if (!impl_ || !impl_->running) return;
  impl_->ioc.stop();
  impl_->thread.join();
  impl_->running = false;
}

unsigned short GatewayServer::port() const {
  beast::error_code ec;
  const auto ep = impl_->acceptor.local_endpoint(ec);
  return ec ? impl_->options.port : ep.port();
}

std::size_t GatewayServer::client_count() const { return impl_->live_sessions.load(); }

void GatewayServer::publish_frame(std::string message, std::size_t frame_index) {
  auto msg = std::make_shared<const std::string>(std::move(message));
  std::vector<std::shared_ptr<WsSession>> targets;
  {
    std::lock_guard lock(impl_->mutex);
    impl_->last_frame = frame_index;
    auto& sessions = impl_->sessions;
    for (auto it = sessions.begin(); it != sessions.end();) {
      if (auto s = it->lock()) {
        targets.push_back(std::move(s));
        ++it;
      } else {
        it = sessions.erase(it);
      }
    }
  }
  for (auto& s : targets) s->offer_frame(msg);
}

std::string_view mime_type(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".html" || ext == ".htm") return "text/html";
  if (ext == ".js" || ext == ".mjs") return "application/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json" || ext == ".map") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  if (ext == ".ico") return "image/vnd.microsoft.icon";
  if (ext == ".wasm") return "application/wasm";
  if (ext == ".txt") return "text/plain";
  return "application/octet-stream";
}

std::optional<std::filesystem::path> resolve_static_path(const std::filesystem::path& root,
                                                         std::string_view target) {
  const auto cut = target.find_first_of("?#");
  if (cut != std::string_view::npos) target = target.substr(0, cut);
  if (target.empty() || target.front() != '/') return std::nullopt;

  std::string decoded;
  decoded.reserve(target.size());
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (target[i] != '%') {
      decoded.push_back(target[i]);
      continue;
    }
    if (i + 2 >= target.size()) return std::nullopt;
    const auto hex = [](char c) -> int {
      if (c >= '0' && c <= '9') return c - '0';
      if (c >= 'a' && c <= 'f') return c - 'a' + 10;
      if (c >= 'A' && c <= 'F') return c - 'A' + 10;
      return -1;
    };
    const int hi = hex(target[i + 1]);
    const int lo = hex(target[i + 2]);
    if (hi < 0 || lo < 0) return std::nullopt;
    decoded.push_back(static_cast<char>(hi * 16 + lo));
    i += 2;
  }
  if (decoded.find('\0') != std::string::npos || decoded.find('\\') != std::string::npos) {
    return std::nullopt;
  }
  std::filesystem::path rel;
  std::size_t start = 1;
  while (start <= decoded.size()) {
    const std::size_t end = std::min(decoded.find('/', start), decoded.size());
    const std::string part = decoded.substr(start, end - start);
    if (part == "..") return std::nullopt;
    if (!part.empty() && part != ".") rel /= part;
    start = end + 1;
  }
  if (rel.empty() || decoded.back() == '/') rel /= "index.html";
  return root / rel;
}

}  // namespace isac
