#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "isac/fft.hpp"
#include "isac/radar_params.hpp"
#include "isac/types.hpp"

namespace isac {

inline constexpr float kMapFloorDb = -120.0f;

/// One CPI of complex samples, pulses as rows. Used both for receive blocks and,
/// after in-place correlation, for range profiles. Every row starts 64-byte aligned.
class ProfileMatrix {
 public:
  ProfileMatrix() = default;
  ProfileMatrix(std::size_t pulses, std::size_t bins)
      : pulses_(pulses), bins_(bins), stride_((bins + 3) & ~std::size_t{3}), data_(pulses * stride_) {}

  std::size_t pulses() const { return pulses_; }
  std::size_t bins() const { return bins_; }

  std::span<Complex> row(std::size_t p) { return {data_.data() + p * stride_, bins_}; }
  std::span<const Complex> row(std::size_t p) const { return {data_.data() + p * stride_, bins_}; }
  Complex& operator()(std::size_t p, std::size_t r) { return data_[p * stride_ + r]; }
  const Complex& operator()(std::size_t p, std::size_t r) const { return data_[p * stride_ + r]; }

 private:
  std::size_t pulses_ = 0;
  std::size_t bins_ = 0;
  std::size_t stride_ = 0;
  ComplexVector data_;
};

/// Power grid over (Doppler row, range column), 0 dB = unit echo amplitude.
/// Row cpi_pulses/2 is zero Doppler; positive rows are receding targets.
struct RangeDopplerMap {
  std::size_t rows = 0;  // Doppler bins
  std::size_t cols = 0;  // range bins
  std::vector<float> power_db;
  double range_bin = 0;
  double velocity_bin = 0;
  std::size_t frame_index = 0;
  double frame_time = 0;

  float at(std::size_t row, std::size_t col) const { return power_db[row * cols + col]; }
  float& at(std::size_t row, std::size_t col) { return power_db[row * cols + col]; }
  std::size_t zero_doppler_row() const { return rows / 2; }
  double velocity_of_row(std::size_t row) const {
    return (static_cast<double>(row) - static_cast<double>(rows / 2)) * velocity_bin;
  }
  double range_of_col(std::size_t col) const { return static_cast<double>(col) * range_bin; }
};

/// Slow-time mean of every range bin.
ComplexVector estimate_clutter(const ProfileMatrix& profiles);

/// Periodic Hann window 0.5 * (1 - cos(2 pi p / P)).
std::vector<double> periodic_hann(std::size_t length);

/// Clutter subtraction, slow-time Hann window, Doppler FFT, FFT shift and dB
/// conversion normalized by the window's coherent gain, clamped at kMapFloorDb.
class RangeDopplerProcessor {
 public:
  explicit RangeDopplerProcessor(const DerivedParams& params,
                                 FftPlanning planning = default_fft_planning());

  RangeDopplerMap process(const ProfileMatrix& profiles, std::size_t frame_index = 0,
                          double frame_time = 0) const;

 private:
  DerivedParams params_;
  std::vector<double> window_;
  double window_sum_ = 0;
  std::vector<std::pair<std::size_t, Complex>> window_bins_;  // nonzero window spectrum
  FftPlan doppler_;
};

RangeDopplerMap range_doppler_map(const ProfileMatrix& profiles, const DerivedParams& params);

/// In place: v <- max(10*log10(v) + offset_db, floor_db). Vectorized kernel.
void power_to_db(std::span<float> values, float offset_db, float floor_db);

}  // namespace isac
