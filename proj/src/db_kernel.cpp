// Built with -ffast-math so the loop maps onto the vector log10 from libmvec.
// Inputs are clamped away from zero first; no NaN/Inf reaches the log.

#include <algorithm>
#include <cmath>

#include "isac/rd_processing.hpp"

namespace isac {

void power_to_db(std::span<float> values, float offset_db, float floor_db) {
  constexpr float kTiny = 1e-30f;
  float* v = values.data();
  const std::size_t n = values.size();
  for (std::size_t i = 0; i < n; ++i) {
    const float db = 10.0f * std::log10(std::max(v[i], kTiny)) + offset_db;
    v[i] = std::max(db, floor_db);
  }
}

}  // namespace isac
