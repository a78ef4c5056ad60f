#include "isac/io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <stdexcept>
#include <vector>

#include "json.hpp"

namespace isac {

namespace {

template <typename T>
void put_le(std::string& buf, T value) {
  auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(value);
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes.begin(), bytes.end());
  }
  buf.append(bytes.data(), bytes.size());
}

template <typename T>
T get_le(const char* p) {
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes.begin(), bytes.end());
  }
  return std::bit_cast<T>(bytes);
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string event_csv_header(bool with_timing) {
  std::string h =
      "frame_index,frame_time_s,detected,power_db,track_range_m,track_velocity_mps,v_md_mps,"
      "drift_m,state,ground_truth";
  if (with_timing) h += ",compute_time_s";
  return h;
}

std::string event_csv_row(const FrameEvent& ev, bool with_timing) {
  std::string row = std::to_string(ev.frame_index);
  row += ',' + fixed(ev.frame_time, 6);
  row += ev.detected ? ",1" : ",0";
  row += ',' + fixed(ev.power_db, 3);
  row += ',' + (ev.track_range ? fixed(*ev.track_range, 6) : std::string());
  row += ',' + (ev.track_velocity ? fixed(*ev.track_velocity, 6) : std::string());
  row += ',' + fixed(ev.v_md, 6);
  row += ',' + fixed(ev.drift, 6);
  row += ',' + std::string(to_string(ev.state));
  row += ',' + std::string(to_string(ev.ground_truth));
  if (with_timing) row += ',' + fixed(ev.compute_time, 6);
  return row;
}

EventCsvWriter::EventCsvWriter(std::ostream& out, bool with_timing)
    : out_(out), with_timing_(with_timing) {
  out_ << event_csv_header(with_timing_) << '\n';
}

void EventCsvWriter::write(const FrameEvent& ev) {
  out_ << event_csv_row(ev, with_timing_) << '\n';
}

std::string event_json_line(const FrameEvent& ev) {
  nlohmann::json j = {
      {"frame_index", ev.frame_index},
      {"frame_time_s", ev.frame_time},
      {"detected", ev.detected},
      {"power_db", ev.power_db},
      {"track_range_m", ev.track_range ? nlohmann::json(*ev.track_range) : nlohmann::json(nullptr)},
      {"track_velocity_mps",
       ev.track_velocity ? nlohmann::json(*ev.track_velocity) : nlohmann::json(nullptr)},
      {"v_md_mps", ev.v_md},
      {"drift_m", ev.drift},
      {"state", to_string(ev.state)},
      {"ground_truth", to_string(ev.ground_truth)},
      {"compute_time_s", ev.compute_time},
  };
  return j.dump();
}

PulseFileWriter::PulseFileWriter(const std::filesystem::path& path, const DerivedParams& params,
                                 std::uint64_t pulse_count)
    : out_(path, std::ios::binary) {
  if (!out_) {
    throw std::runtime_error(path.string() + ": cannot open for writing");
  }
  std::string h(kPulseFileMagic, sizeof kPulseFileMagic);
  put_le<std::uint32_t>(h, 1);
  put_le<std::uint32_t>(h, static_cast<std::uint32_t>(params.sequence_length()));
  put_le<double>(h, params.config.sample_rate);
  put_le<std::uint64_t>(h, pulse_count);
  put_le<double>(h, params.config.carrier_frequency);
  put_le<double>(h, params.pri);
  put_le<std::uint32_t>(h, static_cast<std::uint32_t>(params.cpi_pulses()));
  put_le<std::uint32_t>(h, 1);
  put_le<std::uint64_t>(h, 0);
  out_.write(h.data(), static_cast<std::streamsize>(h.size()));
}

void PulseFileWriter::write_frame(const ProfileMatrix& pulses) {
  std::string buf;
  buf.reserve(pulses.bins() * 8);
  for (std::size_t p = 0; p < pulses.pulses(); ++p) {
    buf.clear();
    for (const Complex& x : pulses.row(p)) {
      put_le<float>(buf, static_cast<float>(x.real()));
      put_le<float>(buf, static_cast<float>(x.imag()));
    }
    out_.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    ++written_;
  }
  if (!out_) {
    throw std::runtime_error("pulse file write failed");
  }
}

PulseFileHeader read_pulse_file_header(std::istream& in) {
  char raw[64];
  if (!in.read(raw, sizeof raw) || std::memcmp(raw, kPulseFileMagic, 8) != 0) {
    throw std::runtime_error("not a pulse file (bad magic or short header)");
  }
  PulseFileHeader h;
  h.version = get_le<std::uint32_t>(raw + 8);
  h.sequence_length = get_le<std::uint32_t>(raw + 12);
  h.sample_rate = get_le<double>(raw + 16);
  h.pulse_count = get_le<std::uint64_t>(raw + 24);
  h.carrier_frequency = get_le<double>(raw + 32);
  h.pri = get_le<double>(raw + 40);
  h.cpi_pulses = get_le<std::uint32_t>(raw + 48);
  h.sample_format = get_le<std::uint32_t>(raw + 52);
  return h;
}

void write_rd_map(const std::filesystem::path& path, const RangeDopplerMap& map) {
  std::string h(kRdMapMagic, sizeof kRdMapMagic);
  put_le<std::uint32_t>(h, 1);
  put_le<std::uint32_t>(h, static_cast<std::uint32_t>(map.rows));
  put_le<std::uint32_t>(h, static_cast<std::uint32_t>(map.cols));
  put_le<std::uint32_t>(h, 0);
  put_le<std::uint64_t>(h, map.frame_index);
  put_le<double>(h, map.frame_time);
  put_le<double>(h, map.range_bin);
  put_le<double>(h, map.velocity_bin);
  put_le<float>(h, kMapFloorDb);
  put_le<std::uint32_t>(h, 0);
  std::string body;
  body.reserve(map.power_db.size() * 4);
  for (float v : map.power_db) put_le<float>(body, v);

  std::ofstream out(path, std::ios::binary);
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!out) {
    throw std::runtime_error(path.string() + ": range-Doppler dump write failed");
  }
}

RangeDopplerMap read_rd_map(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  char raw[64];
  if (!in.read(raw, sizeof raw) || std::memcmp(raw, kRdMapMagic, 8) != 0) {
    throw std::runtime_error(path.string() + ": not a range-Doppler dump");
  }
  RangeDopplerMap map;
  map.rows = get_le<std::uint32_t>(raw + 12);
  map.cols = get_le<std::uint32_t>(raw + 16);
  map.frame_index = get_le<std::uint64_t>(raw + 24);
  map.frame_time = get_le<double>(raw + 32);
  map.range_bin = get_le<double>(raw + 40);
  map.velocity_bin = get_le<double>(raw + 48);
  std::vector<char> body(map.rows * map.cols * 4);
  if (!in.read(body.data(), static_cast<std::streamsize>(body.size()))) {
    throw std::runtime_error(path.string() + ": truncated range-Doppler dump");
  }
  map.power_db.resize(map.rows * map.cols);
  for (std::size_t i = 0; i < map.power_db.size(); ++i) {
    map.power_db[i] = get_le<float>(body.data() + 4 * i);
  }
  return map;
}

void write_rd_png(const std::filesystem::path& path, const RangeDopplerMap& map,
                  std::size_t col_begin, std::size_t col_end) {
  col_end = std::min(col_end, map.cols);
  if (col_begin >= col_end) {
    throw std::invalid_argument("empty PNG column range");
  }
  const std::size_t width = col_end - col_begin;
  std::vector<png_byte> pixels(width * map.rows);
  for (std::size_t row = 0; row < map.rows; ++row) {
    const std::size_t y = map.rows - 1 - row;
    for (std::size_t c = 0; c < width; ++c) {
      const double db = std::clamp(static_cast<double>(map.at(row, col_begin + c)), -60.0, 0.0);
      pixels[y * width + c] = static_cast<png_byte>(std::lround((db + 60.0) / 60.0 * 255.0));
    }
  }
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(map.rows);
  image.format = PNG_FORMAT_GRAY;
  if (png_image_write_to_file(&image, path.string().c_str(), 0, pixels.data(), 0, nullptr) == 0) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw std::runtime_error(path.string() + ": PNG write failed: " + msg);
  }
}

}  // namespace isac
