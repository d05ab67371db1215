#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace wptn {

// Simulation clock in integer microseconds. Integer time keeps timer and
// delivery ties exact so that event order depends only on insertion sequence.
using SimTime = std::int64_t;

inline constexpr SimTime kMicrosPerSecond = 1'000'000;
inline constexpr SimTime kSamplePeriod = 100'000;   // 0.1 s voltage sampling grid
inline constexpr SimTime kDeliveryDelay = 1'000;    // 1 ms processing epsilon

inline SimTime from_seconds(double s) {
  if (!std::isfinite(s)) throw std::invalid_argument("non-finite duration");
  return static_cast<SimTime>(std::llround(s * static_cast<double>(kMicrosPerSecond)));
}

inline double to_seconds(SimTime t) {
  return static_cast<double>(t) / static_cast<double>(kMicrosPerSecond);
}

}  // namespace wptn
