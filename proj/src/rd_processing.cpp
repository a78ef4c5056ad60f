#include "isac/rd_processing.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace isac {

namespace {

constexpr std::size_t kTile = 64;  // range bins per Doppler batch

void check_shape(const ProfileMatrix& profiles, const DerivedParams& params) {
  if (profiles.pulses() != params.cpi_pulses() || profiles.bins() != params.sequence_length()) {
    throw std::invalid_argument("profile block is " + std::to_string(profiles.pulses()) + "x" +
                                std::to_string(profiles.bins()) + ", expected " +
                                std::to_string(params.cpi_pulses()) + "x" +
                                std::to_string(params.sequence_length()));
  }
}

}  // namespace

ComplexVector estimate_clutter(const ProfileMatrix& profiles) {
  if (profiles.pulses() == 0 || profiles.bins() == 0) {
    throw std::invalid_argument("clutter estimate needs at least one profile");
  }
  ComplexVector mean(profiles.bins());
  for (std::size_t p = 0; p < profiles.pulses(); ++p) {
    const auto row = profiles.row(p);
    for (std::size_t r = 0; r < row.size(); ++r) {
      mean[r] += row[r];
    }
  }
  const double inv = 1.0 / static_cast<double>(profiles.pulses());
  for (auto& m : mean) {
    m *= inv;
  }
  return mean;
}

std::vector<double> periodic_hann(std::size_t length) {
  std::vector<double> w(length);
  for (std::size_t p = 0; p < length; ++p) {
    w[p] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(p) /
                                 static_cast<double>(length)));
  }
  return w;
}

RangeDopplerProcessor::RangeDopplerProcessor(const DerivedParams& params, FftPlanning planning)
    : params_(params),
      window_(periodic_hann(params.cpi_pulses())),
      doppler_(params.cpi_pulses(), FftDirection::backward, true, planning,
               FftBatch{kTile, 1, params.cpi_pulses()}) {
  for (double w : window_) window_sum_ += w;
  // Window spectrum; a periodic Hann has only bins 0 and +-1, so the clutter
  // mean can be removed after the transform at a cost of three bins per column.
  ComplexVector spectrum(window_.begin(), window_.end());
  FftPlan(spectrum.size(), FftDirection::backward, true, FftPlanning::estimate)
      .execute_in_place(spectrum);
  for (std::size_t k = 0; k < spectrum.size(); ++k) {
    if (std::abs(spectrum[k]) > 1e-9 * window_sum_) window_bins_.push_back({k, spectrum[k]});
  }
}

RangeDopplerMap RangeDopplerProcessor::process(const ProfileMatrix& profiles,
                                               std::size_t frame_index, double frame_time) const {
  check_shape(profiles, params_);
  const std::size_t pulses = profiles.pulses();
  const std::size_t bins = profiles.bins();

  RangeDopplerMap map;
  map.rows = pulses;
  map.cols = bins;
  map.range_bin = params_.range_bin;
  map.velocity_bin = params_.velocity_bin;
  map.frame_index = frame_index;
  map.frame_time = frame_time;
  map.power_db.resize(pulses * bins);
  const ComplexVector clutter = estimate_clutter(profiles);

  // Phase exp(-j 4 pi r / lambda) rotates negatively for receding targets, so the
  // backward transform puts positive velocities at positive Doppler bins.
  // Each batch is a transposed tile of kTile range bins, [bin][pulse], so the
  // transforms run on contiguous memory while the profile rows are read in
  // 1 KiB runs. Clutter is the slow-time mean; FFT((x - m) w) = FFT(x w) - m W.
  ComplexVector tile(pulses * kTile);
  const std::size_t half = pulses / 2;
  for (std::size_t c0 = 0; c0 < bins; c0 += kTile) {
    const std::size_t width = std::min(kTile, bins - c0);
    if (width < kTile) std::fill(tile.begin(), tile.end(), Complex{});
    for (std::size_t p = 0; p < pulses; ++p) {
      const Complex* src = profiles.row(p).data() + c0;
      const double w = window_[p];
      for (std::size_t t = 0; t < width; ++t) {
        tile[t * pulses + p] = src[t] * w;
      }
    }
    doppler_.execute_in_place(tile);
    for (std::size_t t = 0; t < width; ++t) {
      const Complex mean = clutter[c0 + t];
      for (const auto& [k, value] : window_bins_) tile[t * pulses + k] -= cmul(mean, value);
    }
    for (std::size_t k = 0; k < pulses; ++k) {
      float* dst = map.power_db.data() + ((k + half) % pulses) * bins + c0;
      for (std::size_t t = 0; t < width; ++t) {
        dst[t] = static_cast<float>(std::norm(tile[t * pulses + k]));
      }
    }
  }
  const auto offset = static_cast<float>(-20.0 * std::log10(window_sum_));
  power_to_db(map.power_db, offset, kMapFloorDb);
  return map;
}

RangeDopplerMap range_doppler_map(const ProfileMatrix& profiles, const DerivedParams& params) {
  return RangeDopplerProcessor(params, FftPlanning::estimate).process(profiles);
}

}  // namespace isac
