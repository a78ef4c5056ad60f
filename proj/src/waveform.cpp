#include "isac/waveform.hpp"

#include <algorithm>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace isac {

ComplexSequence zadoff_chu(std::size_t length, std::size_t root) {
  if (length < 2) {
    throw std::invalid_argument("Zadoff-Chu length must be at least 2");
  }
  if (root == 0 || std::gcd(root, length) != 1) {
    throw std::invalid_argument("Zadoff-Chu root " + std::to_string(root) +
                                " is not coprime with length " + std::to_string(length));
  }
  using u128 = unsigned __int128;
  const u128 modulus = 2 * static_cast<u128>(length);
  const u128 r = root % modulus;
  const bool odd = (length % 2) == 1;

  ComplexSequence seq;
  seq.samples.resize(length);
  for (std::size_t n = 0; n < length; ++n) {
    const u128 nn = odd ? static_cast<u128>(n) * (n + 1) : static_cast<u128>(n) * n;
    const auto m = static_cast<double>((r * (nn % modulus)) % modulus);
    seq.samples[n] = std::polar(1.0, -std::numbers::pi * m / static_cast<double>(length));
  }
  return seq;
}

Correlator::Correlator(const ComplexSequence& reference, FftPlanning planning)
    : kernel_(reference.samples),
      forward_(reference.size(), FftDirection::forward, true, planning),
      backward_(reference.size(), FftDirection::backward, true, planning) {
  if (reference.size() < 2) {
    throw std::invalid_argument("reference sequence too short");
  }
  forward_.execute_in_place(kernel_);
  const double n = static_cast<double>(kernel_.size());
  const double scale = 1.0 / (n * n);
  for (auto& k : kernel_) {
    k = std::conj(k) * scale;
  }
}

void Correlator::correlate_in_place(std::span<Complex> block) const {
  if (block.size() != kernel_.size()) {
    throw std::invalid_argument("receive block length " + std::to_string(block.size()) +
                                " does not match reference length " +
                                std::to_string(kernel_.size()));
  }
  forward_.execute_in_place(block);
  for (std::size_t k = 0; k < block.size(); ++k) {
    block[k] = cmul(block[k], kernel_[k]);
  }
  backward_.execute_in_place(block);
}

RangeProfile Correlator::correlate(std::span<const Complex> rx, std::size_t pulse_index) const {
  if (rx.size() != kernel_.size()) {
    throw std::invalid_argument("receive block length " + std::to_string(rx.size()) +
                                " does not match reference length " +
                                std::to_string(kernel_.size()));
  }
  RangeProfile profile;
  profile.pulse_index = pulse_index;
  profile.bins.assign(rx.begin(), rx.end());
  correlate_in_place(profile.bins);
  return profile;
}

RangeProfile range_profile(std::span<const Complex> rx, const ComplexSequence& reference) {
  return Correlator(reference, FftPlanning::estimate).correlate(rx);
}

}  // namespace isac
