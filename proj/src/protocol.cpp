#include "isac/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/archive/iterators/base64_from_binary.hpp>
#include <boost/archive/iterators/binary_from_base64.hpp>
#include <boost/archive/iterators/transform_width.hpp>

#include "json.hpp"

namespace isac {

namespace {

using nlohmann::json;

double number_field(const json& j, const char* key) {
  if (!j.contains(key)) {
    throw ControlError(std::string("missing \"") + key + "\"");
  }
  const json& v = j.at(key);
  if (!v.is_number()) {
    throw ControlError(std::string("\"") + key + "\" must be a number");
  }
  const double x = v.get<double>();
  if (!std::isfinite(x)) {
    throw ControlError(std::string("\"") + key + "\" must be finite");
  }
  return x;
}

}  // namespace

std::uint8_t quantize_db(double db) {
  const double clamped = std::clamp(db, kThumbMinDb, kThumbMaxDb);
  const double scaled = (clamped - kThumbMinDb) / (kThumbMaxDb - kThumbMinDb) * 255.0;
  return static_cast<std::uint8_t>(std::lround(scaled));
}

double dequantize_db(std::uint8_t q) {
  return kThumbMinDb + static_cast<double>(q) * (kThumbMaxDb - kThumbMinDb) / 255.0;
}

Thumbnail make_thumbnail(const RangeDopplerMap& map, std::size_t col_begin, std::size_t col_end,
                         std::size_t max_dim) {
  col_end = std::min(col_end, map.cols);
  if (col_begin >= col_end || map.rows == 0 || max_dim == 0) {
    throw std::invalid_argument("empty thumbnail window");
  }
  const std::size_t width = col_end - col_begin;
  Thumbnail t;
  t.row_factor = (map.rows + max_dim - 1) / max_dim;
  t.col_factor = (width + max_dim - 1) / max_dim;
  t.rows = (map.rows + t.row_factor - 1) / t.row_factor;
  t.cols = (width + t.col_factor - 1) / t.col_factor;
  t.col_offset = col_begin;

  std::vector<float> pooled(t.rows * t.cols, -std::numeric_limits<float>::infinity());
  for (std::size_t row = 0; row < map.rows; ++row) {
    float* out = pooled.data() + (row / t.row_factor) * t.cols;
    const float* line = map.power_db.data() + row * map.cols + col_begin;
    for (std::size_t c = 0; c < width; ++c) {
      float& cell = out[c / t.col_factor];
      cell = std::max(cell, line[c]);
    }
  }
  t.data.resize(pooled.size());
  std::transform(pooled.begin(), pooled.end(), t.data.begin(),
                 [](float db) { return quantize_db(db); });
  return t;
}

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  using namespace boost::archive::iterators;
  using It = base64_from_binary<transform_width<std::vector<std::uint8_t>::const_iterator, 6, 8>>;
  std::string out(It(bytes.begin()), It(bytes.end()));
  out.append((3 - bytes.size() % 3) % 3, '=');
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  using namespace boost::archive::iterators;
  using It = transform_width<binary_from_base64<std::string_view::const_iterator>, 8, 6>;
  std::size_t pad = 0;
  while (!text.empty() && text.back() == '=') {
    text.remove_suffix(1);
    ++pad;
  }
  std::vector<std::uint8_t> out(It(text.begin()), It(text.end()));
  // Trailing partial sextets decode to junk bytes beyond the payload.
  const std::size_t expected = (text.size() + pad) / 4 * 3 - pad;
  if (pad > 0 && out.size() > expected) out.resize(expected);
  return out;
}

std::string_view to_string(ControlKind kind) {
  switch (kind) {
    case ControlKind::set_activity: return "set_activity";
    case ControlKind::set_range: return "set_range";
    case ControlKind::set_speed: return "set_speed";
    case ControlKind::set_snr: return "set_snr";
    case ControlKind::pause: return "pause";
    case ControlKind::resume: return "resume";
  }
  return "?";
}

ControlMessage parse_control(std::string_view text, const ControlLimits& limits) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error&) {
    throw ControlError("control message is not valid JSON");
  }
  if (!j.is_object()) {
    throw ControlError("control message must be a JSON object");
  }
  if (j.value("type", std::string()) != "control") {
    throw ControlError("expected \"type\": \"control\"");
  }
  if (!j.contains("action") || !j.at("action").is_string()) {
    throw ControlError("missing string field \"action\"");
  }
  const std::string action = j.at("action").get<std::string>();
  ControlMessage msg;
  if (action == "set_activity") {
    msg.kind = ControlKind::set_activity;
    if (!j.contains("value") || !j.at("value").is_string()) {
      throw ControlError("set_activity needs a string \"value\"");
    }
    const auto a = parse_activity(j.at("value").get<std::string>());
    if (!a) {
      throw ControlError("unknown activity \"" + j.at("value").get<std::string>() +
                         "\" (absent, standing, walking, waving)");
    }
    msg.activity = *a;
  } else if (action == "set_range") {
    msg.kind = ControlKind::set_range;
    msg.value = number_field(j, "value");
    if (msg.value < limits.min_range_m || msg.value > limits.max_range_m) {
      throw ControlError("set_range value outside [" + std::to_string(limits.min_range_m) + ", " +
                         std::to_string(limits.max_range_m) + "] m");
    }
  } else if (action == "set_speed") {
    msg.kind = ControlKind::set_speed;
    msg.value = number_field(j, "value");
    if (!(std::abs(msg.value) < limits.max_speed_mps)) {
      throw ControlError("set_speed |value| must be below " + std::to_string(limits.max_speed_mps) +
                         " m/s");
    }
  } else if (action == "set_snr") {
    msg.kind = ControlKind::set_snr;
    msg.value = number_field(j, "value");
    if (msg.value < limits.min_snr_db || msg.value > limits.max_snr_db) {
      throw ControlError("set_snr value outside [" + std::to_string(limits.min_snr_db) + ", " +
                         std::to_string(limits.max_snr_db) + "] dB");
    }
  } else if (action == "pause") {
    msg.kind = ControlKind::pause;
  } else if (action == "resume") {
    msg.kind = ControlKind::resume;
  } else {
    throw ControlError("unknown action \"" + action + "\"");
  }
  return msg;
}

std::string control_to_json(const ControlMessage& msg) {
  json j = {{"type", "control"}, {"action", to_string(msg.kind)}};
  switch (msg.kind) {
    case ControlKind::set_activity: j["value"] = to_string(msg.activity); break;
    case ControlKind::set_range:
    case ControlKind::set_speed:
    case ControlKind::set_snr: j["value"] = msg.value; break;
    default: break;
  }
  return j.dump();
}

std::string metadata_json(const StreamMetadata& m, const Thumbnail& shape) {
  // Axis values are the centres of the pooled blocks.
  const double range_step = m.range_bin * static_cast<double>(shape.col_factor);
  const double range_start =
      m.range_bin * (static_cast<double>(m.thumb_col_begin) +
                     0.5 * static_cast<double>(shape.col_factor - 1));
  const double velocity_step = m.velocity_bin * static_cast<double>(shape.row_factor);
  const double velocity_start =
      m.velocity_bin * (-static_cast<double>(m.map_rows / 2) +
                        0.5 * static_cast<double>(shape.row_factor - 1));
  json j = {
      {"type", "metadata"},
      {"protocol_version", kProtocolVersion},
      {"cpi_s", m.cpi_s},
      {"frame_rate_hz", 1.0 / m.cpi_s},
      {"map", {{"rows", m.map_rows}, {"cols", m.map_cols}, {"range_bin_m", m.range_bin},
               {"velocity_bin_mps", m.velocity_bin}}},
      {"thumbnail",
       {{"rows", shape.rows},
        {"cols", shape.cols},
        {"row_factor", shape.row_factor},
        {"col_factor", shape.col_factor},
        {"col_offset", shape.col_offset},
        {"encoding", "base64-u8"},
        {"min_db", kThumbMinDb},
        {"max_db", kThumbMaxDb},
        {"levels", 256}}},
      {"range_axis", {{"start_m", range_start}, {"step_m", range_step}, {"count", shape.cols}}},
      {"velocity_axis",
       {{"start_mps", velocity_start}, {"step_mps", velocity_step}, {"count", shape.rows}}},
      {"thresholds",
       {{"noise_floor_db", m.noise_floor_db}, {"upper_db", m.upper_db}, {"lower_db", m.lower_db}}},
      {"limits",
       {{"min_range_m", m.limits.min_range_m},
        {"max_range_m", m.limits.max_range_m},
        {"max_speed_mps", m.limits.max_speed_mps},
        {"min_snr_db", m.limits.min_snr_db},
        {"max_snr_db", m.limits.max_snr_db}}},
      {"activities", {"absent", "standing", "walking", "waving"}},
  };
  return j.dump();
}

std::string frame_json(const FrameEvent& ev, const Thumbnail& thumb, bool paused) {
  json track = nullptr;
  if (ev.track_range && ev.track_velocity) {
    track = {{"range_m", *ev.track_range}, {"velocity_mps", *ev.track_velocity}};
  }
  json j = {
      {"type", "frame"},
      {"frame_index", ev.frame_index},
      {"frame_time", ev.frame_time},
      {"detected", ev.detected},
      {"power_db", ev.power_db},
      {"track", track},
      {"state", to_string(ev.state)},
      {"ground_truth", to_string(ev.ground_truth)},
      {"v_md_mps", ev.v_md},
      {"drift_m", ev.drift},
      {"compute_time_s", ev.compute_time},
      {"paused", paused},
      {"thumbnail",
       {{"rows", thumb.rows},
        {"cols", thumb.cols},
        {"row_factor", thumb.row_factor},
        {"col_factor", thumb.col_factor},
        {"data", base64_encode(thumb.data)}}},
  };
  return j.dump();
}

std::string heartbeat_json(double server_time_s, std::optional<std::size_t> last_frame,
                           std::size_t clients) {
  json j = {{"type", "heartbeat"},
            {"server_time_s", server_time_s},
            {"last_frame_index", last_frame ? json(*last_frame) : json(nullptr)},
            {"clients", clients}};
  return j.dump();
}

std::string error_json(std::string_view message) {
  return json{{"type", "error"}, {"message", std::string(message)}}.dump();
}

std::string ack_json(const ControlMessage& msg) {
  return json{{"type", "ack"}, {"control", json::parse(control_to_json(msg))}}.dump();
}

}  // namespace isac
