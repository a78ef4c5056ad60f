#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>

#include "isac/pipeline.hpp"
#include "isac/radar_params.hpp"
#include "isac/rd_processing.hpp"

namespace isac {

// ---------------------------------------------------------------------------
// Event logs
// ---------------------------------------------------------------------------

/// CSV event log. Every column is a deterministic function of (script, config,
/// seed) unless `with_timing` appends the wall-clock compute_time_s column.
class EventCsvWriter {
 public:
  EventCsvWriter(std::ostream& out, bool with_timing = false);
  void write(const FrameEvent& ev);

 private:
  std::ostream& out_;
  bool with_timing_;
};

std::string event_csv_header(bool with_timing = false);
std::string event_csv_row(const FrameEvent& ev, bool with_timing = false);

/// One JSON object per line, including compute_time_s.
std::string event_json_line(const FrameEvent& ev);

// ---------------------------------------------------------------------------
// Raw pulse file: 64-byte little-endian header followed by interleaved float32 I/Q.
//
//   off  size  field
//     0     8  magic "ISACIQ01"
//     8     4  u32 version (1)
//    12     4  u32 sequence_length
//    16     8  f64 sample_rate (Hz)
//    24     8  u64 pulse_count
//    32     8  f64 carrier_frequency (Hz)
//    40     8  f64 pri (s)
//    48     4  u32 cpi_pulses
//    52     4  u32 sample_format (1 = complex float32, I then Q)
//    56     8  reserved, zero
// ---------------------------------------------------------------------------

inline constexpr char kPulseFileMagic[8] = {'I', 'S', 'A', 'C', 'I', 'Q', '0', '1'};

struct PulseFileHeader {
  std::uint32_t version = 1;
  std::uint32_t sequence_length = 0;
  double sample_rate = 0;
  std::uint64_t pulse_count = 0;
  double carrier_frequency = 0;
  double pri = 0;
  std::uint32_t cpi_pulses = 0;
  std::uint32_t sample_format = 1;
};

class PulseFileWriter {
 public:
  PulseFileWriter(const std::filesystem::path& path, const DerivedParams& params,
                  std::uint64_t pulse_count);
  /// Appends every pulse (row) of the frame.
  void write_frame(const ProfileMatrix& pulses);
  std::uint64_t pulses_written() const { return written_; }

 private:
  std::ofstream out_;
  std::uint64_t written_ = 0;
};

PulseFileHeader read_pulse_file_header(std::istream& in);

// ---------------------------------------------------------------------------
// Range-Doppler dumps: 64-byte header followed by rows x cols float32 dB values,
// row-major (Doppler rows, range columns).
//
//   off  size  field
//     0     8  magic "ISACRDM1"
//     8     4  u32 version (1)
//    12     4  u32 rows (Doppler bins, row rows/2 = zero Doppler)
//    16     4  u32 cols (range bins)
//    20     4  u32 reserved
//    24     8  u64 frame_index
//    32     8  f64 frame_time (s)
//    40     8  f64 range_bin (m)
//    48     8  f64 velocity_bin (m/s)
//    56     4  f32 floor_db
//    60     4  reserved
// ---------------------------------------------------------------------------

inline constexpr char kRdMapMagic[8] = {'I', 'S', 'A', 'C', 'R', 'D', 'M', '1'};

void write_rd_map(const std::filesystem::path& path, const RangeDopplerMap& map);
RangeDopplerMap read_rd_map(const std::filesystem::path& path);

/// 8-bit grayscale PNG of columns [col_begin, col_end), -60..0 dB mapped to 0..255,
/// positive velocities at the top.
void write_rd_png(const std::filesystem::path& path, const RangeDopplerMap& map,
                  std::size_t col_begin, std::size_t col_end);

}  // namespace isac
