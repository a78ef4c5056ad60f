#include "doctest.h"

#include <random>

#include "json.hpp"

#include "isac/gateway.hpp"
#include "isac/protocol.hpp"
#include "support.hpp"

using namespace isac;
using nlohmann::json;

namespace {

std::string control_error(const std::string& text) {
  try {
    parse_control(text, ControlLimits{});
  } catch (const ControlError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_SUITE("protocol") {

TEST_CASE("-30 dB survives quantization") {
  const std::uint8_t q = quantize_db(-30.0);
  CHECK((q == 127 || q == 128));
  CHECK(std::abs(dequantize_db(q) + 30.0) <= 0.24);
}

TEST_CASE("quantization endpoints and clamping") {
  CHECK(quantize_db(-60.0) == 0);
  CHECK(quantize_db(0.0) == 255);
  CHECK(quantize_db(-120.0) == 0);
  CHECK(quantize_db(12.0) == 255);
  CHECK(dequantize_db(0) == -60.0);
  CHECK(dequantize_db(255) == 0.0);
}

TEST_CASE("quantization is monotone and within half a step") {
  const double step = 60.0 / 255.0;
  std::uint8_t prev = 0;
  for (double db = -70.0; db <= 10.0; db += 0.01) {
    const std::uint8_t q = quantize_db(db);
    REQUIRE(q >= prev);
    prev = q;
    if (db >= -60.0 && db <= 0.0) REQUIRE(std::abs(dequantize_db(q) - db) <= step / 2 + 1e-12);
  }
}

TEST_CASE("base64 known vectors and round trip") {
  auto bytes = [](std::string_view s) { return std::vector<std::uint8_t>(s.begin(), s.end()); };
  CHECK(base64_encode({}) == "");
  CHECK(base64_encode(bytes("f")) == "Zg==");
  CHECK(base64_encode(bytes("fo")) == "Zm8=");
  CHECK(base64_encode(bytes("foo")) == "Zm9v");
  CHECK(base64_encode(bytes("foobar")) == "Zm9vYmFy");
  CHECK(base64_decode("Zm9vYg==") == bytes("foob"));
  std::mt19937 rng(3);
  for (std::size_t n = 0; n < 70; ++n) {
    std::vector<std::uint8_t> v(n);
    for (auto& b : v) b = static_cast<std::uint8_t>(rng());
    CAPTURE(n);
    REQUIRE(base64_decode(base64_encode(v)) == v);
  }
}

TEST_CASE("thumbnail of a full map keeps narrow peaks") {
  RangeDopplerMap m = test::floor_map();
  m.at(301, 130) = -5.0f;  // single-cell streak
  const Thumbnail t = make_thumbnail(m, 26, 268);
  CHECK(t.rows == 256);
  CHECK(t.cols == 242);
  CHECK(t.row_factor == 2);
  CHECK(t.col_factor == 1);
  CHECK(t.col_offset == 26);
  CHECK(t.at(150, 104) == quantize_db(-5.0));
  std::size_t lit = 0;
  for (auto v : t.data) lit += v != 0;
  CHECK(lit == 1);
}

TEST_CASE("thumbnail equals a brute-force max pool") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<float> u(-80.0f, 5.0f);
  RangeDopplerMap m = test::floor_map(300, 700);
  for (auto& v : m.power_db) v = u(rng);
  const Thumbnail t = make_thumbnail(m, 10, 650, 64);
  CHECK(t.row_factor == 5);
  CHECK(t.col_factor == 10);
  CHECK(t.rows == 60);
  CHECK(t.cols == 64);
  for (std::size_t r = 0; r < t.rows; ++r) {
    for (std::size_t c = 0; c < t.cols; ++c) {
      float best = -1e9f;
      for (std::size_t i = r * 5; i < std::min<std::size_t>(r * 5 + 5, 300); ++i) {
        for (std::size_t j = 10 + c * 10; j < std::min<std::size_t>(10 + c * 10 + 10, 650); ++j) {
          best = std::max(best, m.at(i, j));
        }
      }
      REQUIRE(t.at(r, c) == quantize_db(best));
    }
  }
  CHECK_THROWS_AS(make_thumbnail(m, 700, 800), std::invalid_argument);
}

TEST_CASE("control messages parse") {
  const ControlLimits lim;
  auto msg = parse_control(R"({"type":"control","action":"set_activity","value":"waving"})", lim);
  CHECK(msg.kind == ControlKind::set_activity);
  CHECK(msg.activity == Activity::waving);
  msg = parse_control(R"({"type":"control","action":"set_range","value":7.5})", lim);
  CHECK(msg.kind == ControlKind::set_range);
  CHECK(msg.value == 7.5);
  msg = parse_control(R"({"type":"control","action":"set_speed","value":-1.5})", lim);
  CHECK(msg.value == -1.5);
  msg = parse_control(R"({"type":"control","action":"set_snr","value":10})", lim);
  CHECK(msg.kind == ControlKind::set_snr);
  CHECK(parse_control(R"({"type":"control","action":"pause"})", lim).kind == ControlKind::pause);
  CHECK(parse_control(R"({"type":"control","action":"resume"})", lim).kind == ControlKind::resume);
}

TEST_CASE("control round trip through JSON") {
  for (const char* text :
       {R"({"type":"control","action":"set_activity","value":"walking"})",
        R"({"type":"control","action":"set_speed","value":0.75})",
        R"({"type":"control","action":"pause"})"}) {
    const ControlMessage a = parse_control(text, ControlLimits{});
    const ControlMessage b = parse_control(control_to_json(a), ControlLimits{});
    CHECK(a.kind == b.kind);
    CHECK(a.activity == b.activity);
    CHECK(a.value == b.value);
  }
}

TEST_CASE("malformed controls explain themselves") {
  CHECK(control_error("{nope").find("not valid JSON") != std::string::npos);
  CHECK(control_error("[1]").find("JSON object") != std::string::npos);
  CHECK(control_error(R"({"action":"pause"})").find("\"type\"") != std::string::npos);
  CHECK(control_error(R"({"type":"control"})").find("action") != std::string::npos);
  CHECK(control_error(R"({"type":"control","action":"jump"})").find("unknown action") !=
        std::string::npos);
  CHECK(control_error(R"({"type":"control","action":"set_activity","value":"running"})")
            .find("unknown activity") != std::string::npos);
  CHECK(control_error(R"({"type":"control","action":"set_range","value":12})").find("set_range") !=
        std::string::npos);
  CHECK(control_error(R"({"type":"control","action":"set_range","value":0.5})") != "");
  CHECK(control_error(R"({"type":"control","action":"set_range"})").find("missing") !=
        std::string::npos);
  CHECK(control_error(R"({"type":"control","action":"set_speed","value":2.0})").find("below") !=
        std::string::npos);
  CHECK(control_error(R"({"type":"control","action":"set_snr","value":"loud"})")
            .find("must be a number") != std::string::npos);
  CHECK(control_error(R"({"type":"control","action":"set_snr","value":100})") != "");
}

TEST_CASE("metadata declares the thumbnail") {
  StreamMetadata meta;
  meta.range_bin = test::default_params().range_bin;
  meta.velocity_bin = test::default_params().velocity_bin;
  meta.map_rows = 512;
  meta.map_cols = 8192;
  meta.thumb_col_begin = 26;
  meta.thumb_col_end = 268;
  meta.cpi_s = test::default_params().cpi;
  meta.noise_floor_db = -40;
  meta.upper_db = -22;
  meta.lower_db = -28;
  const Thumbnail shape = make_thumbnail(test::floor_map(), 26, 268);
  const json j = json::parse(metadata_json(meta, shape));
  CHECK(j["type"] == "metadata");
  CHECK(j["protocol_version"] == kProtocolVersion);
  CHECK(j["thumbnail"]["rows"] == 256);
  CHECK(j["thumbnail"]["cols"] == 242);
  CHECK(j["thumbnail"]["min_db"] == -60.0);
  CHECK(j["thumbnail"]["max_db"] == 0.0);
  CHECK(j["thumbnail"]["levels"] == 256);
  CHECK(j["range_axis"]["start_m"].get<double>() == doctest::Approx(26 * meta.range_bin));
  CHECK(j["velocity_axis"]["step_mps"].get<double>() == doctest::Approx(2 * meta.velocity_bin));
  // Row 0 pools map rows 0 and 1: centre half a bin above -256.
  CHECK(j["velocity_axis"]["start_mps"].get<double>() ==
        doctest::Approx(-255.5 * meta.velocity_bin));
  CHECK(j["thresholds"]["upper_db"] == -22.0);
  CHECK(j["frame_rate_hz"].get<double>() == doctest::Approx(9.5367431640625));
}

TEST_CASE("frame message fields") {
  FrameEvent ev;
  ev.frame_index = 12;
  ev.frame_time = 1.25;
  ev.detected = true;
  ev.track_range = 4.5;
  ev.track_velocity = 0.5;
  ev.state = Activity::walking;
  ev.ground_truth = Activity::walking;
  RangeDopplerMap m = test::floor_map(16, 40);
  m.at(3, 5) = -30.0f;
  const Thumbnail t = make_thumbnail(m, 0, 40);
  json j = json::parse(frame_json(ev, t, false));
  CHECK(j["type"] == "frame");
  CHECK(j["frame_index"] == 12);
  CHECK(j["track"]["range_m"] == 4.5);
  CHECK(j["state"] == "walking");
  CHECK(j["paused"] == false);
  const auto data = base64_decode(j["thumbnail"]["data"].get<std::string>());
  CHECK(data == t.data);
  ev.track_range.reset();
  j = json::parse(frame_json(ev, t, true));
  CHECK(j["track"].is_null());
  CHECK(j["paused"] == true);
}

TEST_CASE("heartbeat, error and ack messages") {
  json hb = json::parse(heartbeat_json(3.5, std::nullopt, 2));
  CHECK(hb["type"] == "heartbeat");
  CHECK(hb["last_frame_index"].is_null());
  CHECK(hb["clients"] == 2);
  CHECK(json::parse(heartbeat_json(1, 9, 1))["last_frame_index"] == 9);
  CHECK(json::parse(error_json("bad"))["message"] == "bad");
  ControlMessage c;
  c.kind = ControlKind::set_snr;
  c.value = 15;
  const json ack = json::parse(ack_json(c));
  CHECK(ack["type"] == "ack");
  CHECK(ack["control"]["action"] == "set_snr");
  CHECK(ack["control"]["value"] == 15.0);
}

TEST_CASE("static paths stay under the root") {
  const std::filesystem::path root = "/srv/ui";
  CHECK(resolve_static_path(root, "/") == root / "index.html");
  CHECK(resolve_static_path(root, "/app.js?v=3") == root / "app.js");
  CHECK(resolve_static_path(root, "/assets/") == root / "assets" / "index.html");
  CHECK(resolve_static_path(root, "/a%20b.css") == root / "a b.css");
  CHECK(resolve_static_path(root, "/./x//y.js") == root / "x" / "y.js");
  CHECK_FALSE(resolve_static_path(root, "/../etc/passwd"));
  CHECK_FALSE(resolve_static_path(root, "/a/%2e%2e/%2E%2E/b"));
  CHECK_FALSE(resolve_static_path(root, "/a%5c..%5cb"));
  CHECK_FALSE(resolve_static_path(root, "/bad%zz"));
  CHECK_FALSE(resolve_static_path(root, "/trunc%2"));
  CHECK_FALSE(resolve_static_path(root, "relative"));
  CHECK_FALSE(resolve_static_path(root, ""));
}

TEST_CASE("MIME types") {
  CHECK(mime_type("index.html") == "text/html");
  CHECK(mime_type("a/b.js") == "application/javascript");
  CHECK(mime_type("s.css") == "text/css");
  CHECK(mime_type("x.wasm") == "application/wasm");
  CHECK(mime_type("blob") == "application/octet-stream");
}

}
