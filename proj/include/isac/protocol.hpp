#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "isac/pipeline.hpp"
#include "isac/rd_processing.hpp"
#include "isac/scene.hpp"

namespace isac {

inline constexpr int kProtocolVersion = 1;
inline constexpr double kThumbMinDb = -60.0;
inline constexpr double kThumbMaxDb = 0.0;
inline constexpr std::size_t kThumbMaxDim = 256;

/// -60..0 dB onto 0..255, rounding to nearest; values outside are clamped.
std::uint8_t quantize_db(double db);
/// Centre of the quantization step.
double dequantize_db(std::uint8_t q);

/// Max-pooled, quantized window of a map. Row 0 is the most negative velocity.
struct Thumbnail {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t row_factor = 1;  // map rows per thumbnail row
  std::size_t col_factor = 1;  // map range bins per thumbnail column
  std::size_t col_offset = 0;  // first map range bin covered
  std::vector<std::uint8_t> data;  // rows * cols, row-major

  std::uint8_t at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

/// Decimation factors are ceil(extent / max_dim); each output cell is the maximum
/// over its (partial, at the edges) block of map cells in [col_begin, col_end).
Thumbnail make_thumbnail(const RangeDopplerMap& map, std::size_t col_begin, std::size_t col_end,
                         std::size_t max_dim = kThumbMaxDim);

std::string base64_encode(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

enum class ControlKind { set_activity, set_range, set_speed, set_snr, pause, resume };

std::string_view to_string(ControlKind kind);

struct ControlMessage {
  ControlKind kind = ControlKind::pause;
  Activity activity = Activity::absent;  // set_activity
  double value = 0;                      // set_range m, set_speed m/s, set_snr dB
};

class ControlError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bounds a control value must satisfy before it reaches the scene.
struct ControlLimits {
  double min_range_m = 1.0;
  double max_range_m = 10.0;
  double max_speed_mps = 2.0;  // exclusive
  double min_snr_db = -40.0;
  double max_snr_db = 80.0;
};

/// Parses {"type":"control","action":...,"value":...}. Throws ControlError with a
/// human-readable reason on malformed JSON, unknown actions or out-of-range values.
ControlMessage parse_control(std::string_view text, const ControlLimits& limits);
std::string control_to_json(const ControlMessage& msg);

/// Everything a client needs to interpret frame messages.
struct StreamMetadata {
  double range_bin = 0;
  double velocity_bin = 0;
  std::size_t map_rows = 0;
  std::size_t map_cols = 0;
  std::size_t thumb_col_begin = 0;
  std::size_t thumb_col_end = 0;
  double cpi_s = 0;
  double noise_floor_db = 0;
  double upper_db = 0;
  double lower_db = 0;
  ControlLimits limits;
};

std::string metadata_json(const StreamMetadata& meta, const Thumbnail& shape);
std::string frame_json(const FrameEvent& ev, const Thumbnail& thumb, bool paused);
std::string heartbeat_json(double server_time_s, std::optional<std::size_t> last_frame,
                           std::size_t clients);
std::string error_json(std::string_view message);
std::string ack_json(const ControlMessage& msg);

}  // namespace isac
