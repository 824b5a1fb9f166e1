#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace aggrate {

/// Simulation time in integer nanoseconds.
using SimTime = std::int64_t;

inline constexpr SimTime kNever = std::numeric_limits<SimTime>::max();
inline constexpr SimTime kNsPerUs = 1000;
inline constexpr SimTime kNsPerSec = 1'000'000'000;

inline SimTime from_seconds(double s) { return static_cast<SimTime>(std::llround(s * 1e9)); }
inline double to_seconds(SimTime t) { return static_cast<double>(t) * 1e-9; }

/// Truncating conversion to the microsecond grid used by MAC timestamps.
inline std::int64_t to_micros(SimTime t) { return t / kNsPerUs; }

}  // namespace aggrate
