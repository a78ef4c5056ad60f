#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <span>

#include "isac/types.hpp"

namespace isac {

enum class FftDirection { forward, backward };

enum class FftPlanning { estimate, measure };

/// Several transforms in one buffer: transform i, element k lives at i * dist + k * stride.
struct FftBatch {
  std::size_t count = 1;
  std::size_t stride = 1;
  std::size_t dist = 0;  // 0 = length
};

/// Owns one FFTW plan for a fixed length, direction and placement. Execution on
/// caller-provided 64-byte aligned buffers is reentrant; the transform is
/// unnormalized in both directions.
class FftPlan {
 public:
  FftPlan(std::size_t length, FftDirection direction, bool in_place,
          FftPlanning planning = FftPlanning::estimate, FftBatch batch = {});
  ~FftPlan();
  FftPlan(FftPlan&&) noexcept;
  FftPlan& operator=(FftPlan&&) noexcept;
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;

  std::size_t length() const { return length_; }

  void execute(const Complex* in, Complex* out) const;
  void execute_in_place(std::span<Complex> data) const;

  /// Elements spanned by the batch layout.
  std::size_t footprint() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::size_t length_ = 0;
  bool in_place_ = false;
  FftBatch batch_;
};

/// Sets the process-wide planning default used by pipeline components.
void set_default_fft_planning(FftPlanning planning);
FftPlanning default_fft_planning();

/// Merges FFTW wisdom from a file; false if it is missing or unreadable.
bool import_fft_wisdom(const std::filesystem::path& path);
/// Writes all accumulated wisdom. Throws std::runtime_error on failure.
void export_fft_wisdom(const std::filesystem::path& path);

}  // namespace isac
