#pragma once

#include <cstddef>
#include <span>

#include "isac/fft.hpp"
#include "isac/types.hpp"

namespace isac {

/// Unit-modulus transmit reference.
struct ComplexSequence {
  ComplexVector samples;

  std::size_t size() const { return samples.size(); }
};

/// Correlation output for one pulse; bin d corresponds to d range bins.
struct RangeProfile {
  ComplexVector bins;
  std::size_t pulse_index = 0;
};

/// Zadoff-Chu sequence exp(-j*pi*root*n^2/L) for even L and
/// exp(-j*pi*root*n(n+1)/L) for odd L. Phases are reduced modulo 2L in integer
/// arithmetic so long sequences keep full precision.
/// Throws std::invalid_argument for length < 2 or gcd(root, length) != 1.
ComplexSequence zadoff_chu(std::size_t length, std::size_t root);

/// Frequency-domain circular correlator against a fixed reference.
///
/// Scaling: bins[d] = (1/N) * sum_n rx[n] * conj(ref[(n - d) mod N]), so a unit
/// echo delayed by an integer d gives |bins[d]| = 1. For a CAZAC reference the
/// spectrum is flat and sum |bins|^2 = sum |rx|^2 / N.
///
/// The reference spectrum and plans are immutable after construction; correlate
/// calls on distinct buffers may run concurrently.
class Correlator {
 public:
  explicit Correlator(const ComplexSequence& reference,
                      FftPlanning planning = default_fft_planning());

  std::size_t length() const { return kernel_.size(); }

  RangeProfile correlate(std::span<const Complex> rx, std::size_t pulse_index = 0) const;

  /// Replaces a receive block with its range profile. `block` must be 64-byte aligned.
  void correlate_in_place(std::span<Complex> block) const;

 private:
  ComplexVector kernel_;  // conj(FFT(reference)) / N^2
  FftPlan forward_;
  FftPlan backward_;
};

/// One-shot convenience wrapper around Correlator.
RangeProfile range_profile(std::span<const Complex> rx, const ComplexSequence& reference);

}  // namespace isac
