#include "isac/fft.hpp"

#include <fftw3.h>

#include <atomic>
#include <cstdint>
#include <mutex>
#include <stdexcept>
#include <string>

namespace isac {

namespace {

// FFTW planning touches global state and is not thread-safe.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

std::atomic<FftPlanning> g_default_planning{FftPlanning::estimate};

bool aligned64(const void* p) { return reinterpret_cast<std::uintptr_t>(p) % 64 == 0; }

}  // namespace

struct FftPlan::Impl {
  fftw_plan plan = nullptr;
};

FftPlan::FftPlan(std::size_t length, FftDirection direction, bool in_place, FftPlanning planning,
                 FftBatch batch)
    : impl_(std::make_unique<Impl>()), length_(length), in_place_(in_place), batch_(batch) {
  if (length == 0 || batch_.count == 0 || batch_.stride == 0) {
    throw std::invalid_argument("FFT length, batch count and stride must be positive");
  }
  if (batch_.dist == 0) batch_.dist = length;
  const std::size_t span = footprint();
  ComplexVector a(span), b(in_place ? 0 : span);
  auto* in = reinterpret_cast<fftw_complex*>(a.data());
  auto* out = in_place ? in : reinterpret_cast<fftw_complex*>(b.data());
  const int sign = direction == FftDirection::forward ? FFTW_FORWARD : FFTW_BACKWARD;
  const unsigned flags = planning == FftPlanning::measure ? FFTW_MEASURE : FFTW_ESTIMATE;
  std::lock_guard lock(planner_mutex());
  const int n = static_cast<int>(length);
  impl_->plan = fftw_plan_many_dft(1, &n, static_cast<int>(batch_.count), in, nullptr,
                                   static_cast<int>(batch_.stride), static_cast<int>(batch_.dist),
                                   out, nullptr, static_cast<int>(batch_.stride),
                                   static_cast<int>(batch_.dist), sign, flags);
  if (impl_->plan == nullptr) {
    throw std::runtime_error("FFTW failed to create a plan");
  }
}

FftPlan::~FftPlan() {
  if (impl_ && impl_->plan != nullptr) {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(impl_->plan);
  }
}

FftPlan::FftPlan(FftPlan&&) noexcept = default;
FftPlan& FftPlan::operator=(FftPlan&& other) noexcept {
  if (this != &other) {
    if (impl_ && impl_->plan != nullptr) {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(impl_->plan);
    }
    impl_ = std::move(other.impl_);
    length_ = other.length_;
    in_place_ = other.in_place_;
    batch_ = other.batch_;
  }
  return *this;
}

void FftPlan::execute(const Complex* in, Complex* out) const {
  if (in_place_ != (in == out)) {
    throw std::logic_error("FFT placement does not match the plan");
  }
  if (!aligned64(in) || !aligned64(out)) {
    throw std::logic_error("FFT buffers must be 64-byte aligned");
  }
  // FFTW does not write to the input of an out-of-place complex DFT without FFTW_DESTROY_INPUT.
  fftw_execute_dft(impl_->plan, reinterpret_cast<fftw_complex*>(const_cast<Complex*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
}

std::size_t FftPlan::footprint() const {
  return (length_ - 1) * batch_.stride + (batch_.count - 1) * batch_.dist + 1;
}

void FftPlan::execute_in_place(std::span<Complex> data) const {
  if (data.size() != footprint()) {
    throw std::invalid_argument("FFT buffer length mismatch");
  }
  execute(data.data(), data.data());
}

void set_default_fft_planning(FftPlanning planning) { g_default_planning = planning; }

FftPlanning default_fft_planning() { return g_default_planning; }

bool import_fft_wisdom(const std::filesystem::path& path) {
  std::lock_guard lock(planner_mutex());
  return fftw_import_wisdom_from_filename(path.c_str()) != 0;
}

void export_fft_wisdom(const std::filesystem::path& path) {
  std::lock_guard lock(planner_mutex());
  if (fftw_export_wisdom_to_filename(path.c_str()) == 0) {
    throw std::runtime_error(path.string() + ": cannot write FFT wisdom");
  }
}

}  // namespace isac
